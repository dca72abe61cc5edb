use std::f64::consts::PI;

use phaselab::diagnostics::{coarse_factor, coarse_grain, flux_deviation, negativity_volume, positivity_time};
use phaselab::dynamics::{
    diosi_propagate, run, run_with, stability_limit, DecoherenceSpec, EvolutionConfig, HamiltonianSpec, InitialState, Integrator,
    SolverKind,
};
use phaselab::states::StateSpec;
use phaselab::{make_grid, IndexBox, PhaseField, PhaseGrid, Tolerances};

fn max_diff(a: &PhaseField, b: &PhaseField) -> f64 {
    (a.values() - b.values()).iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// Largest step under the stability limit that lands on `t_end`.
fn config(grid: &PhaseGrid, h: &HamiltonianSpec, dec: &DecoherenceSpec, t_end: f64, snapshots: usize) -> EvolutionConfig {
    let per = t_end / snapshots as f64;
    let stride = (per / stability_limit(grid, h, dec)).ceil() as usize;
    EvolutionConfig::new(per / stride as f64, t_end, stride).unwrap()
}

/// Normalized Gaussian with standard deviations `sq`, `sp` at `(q0, p0)`.
fn gaussian(q: f64, p: f64, q0: f64, p0: f64, sq: f64, sp: f64) -> f64 {
    let (x, y) = ((q - q0) / sq, (p - p0) / sp);
    (-0.5 * (x * x + y * y)).exp() / (2.0 * PI * sq * sp)
}

#[test]
fn free_motion_shears_the_field() {
    let grid = make_grid(256, 128, (-12.0, 12.0), (-6.0, 6.0), 1.0).unwrap();
    let (m, t) = (2.0, 1.5);
    let h = HamiltonianSpec::free(m).unwrap();
    let dec = DecoherenceSpec::none();
    let (q0, p0, sq, sp) = (-2.0, 1.0, 0.8, 0.9);
    let state = StateSpec::Gaussian { q0, p0, sigma_q: sq, sigma_p: sp };
    for kind in [SolverKind::Quantum, SolverKind::Classical] {
        let traj = run(state.initial(&grid, m, kind).unwrap(), &h, &dec, &config(&grid, &h, &dec, t, 3)).unwrap();
        let exact = PhaseField::from_fn(grid, t, |q, p| gaussian(q - p * t / m, p, q0, p0, sq, sp)).unwrap();
        let d = max_diff(traj.last(), &exact);
        assert!(d < 1e-8, "{kind:?}: {d}");
    }
}

/// Mean and covariance `(⟨q⟩, ⟨p⟩, var q, cov qp, var p)` by quadrature.
fn moments(f: &PhaseField) -> [f64; 5] {
    let g = f.grid();
    let mut s = [0.0; 6];
    for ((i, j), &w) in f.values().indexed_iter() {
        let (q, p) = (g.q(i), g.p(j));
        for (k, x) in [1.0, q, p, q * q, q * p, p * p].into_iter().enumerate() {
            s[k] += w * x;
        }
    }
    let (mq, mp) = (s[1] / s[0], s[2] / s[0]);
    [mq, mp, s[3] / s[0] - mq * mq, s[4] / s[0] - mq * mp, s[5] / s[0] - mp * mp]
}

/// Moment equations of a harmonic oscillator with momentum diffusion, by RK4.
fn moment_oracle(start: [f64; 5], m: f64, omega: f64, d: f64, t: f64) -> [f64; 5] {
    let k = m * omega * omega;
    let rhs = |y: [f64; 5]| [y[1] / m, -k * y[0], 2.0 * y[3] / m, y[4] / m - k * y[2], -2.0 * k * y[3] + d];
    let n = 20_000;
    let h = t / n as f64;
    let mut y = start;
    let add = |a: [f64; 5], b: [f64; 5], s: f64| std::array::from_fn(|i| a[i] + s * b[i]);
    for _ in 0..n {
        let k1 = rhs(y);
        let k2 = rhs(add(y, k1, h / 2.0));
        let k3 = rhs(add(y, k2, h / 2.0));
        let k4 = rhs(add(y, k3, h));
        y = std::array::from_fn(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
    }
    y
}

#[test]
fn gaussian_moments_under_diffusion() {
    let grid = make_grid(256, 256, (-12.0, 12.0), (-12.0, 12.0), 1.0).unwrap();
    let (m, omega, d) = (1.0, 1.0, 0.5);
    let h = HamiltonianSpec::harmonic(m, omega).unwrap();
    let dec = DecoherenceSpec::with_rate(d).unwrap();
    let state = StateSpec::Coherent { q0: 2.0, p0: 0.5, sigma: 1.0 };
    for kind in [SolverKind::Quantum, SolverKind::Classical] {
        let traj = run(state.initial(&grid, m, kind).unwrap(), &h, &dec, &config(&grid, &h, &dec, 2.0, 4)).unwrap();
        let start = moments(&traj.snapshots()[0]);
        for s in &traj.snapshots()[1..] {
            let got = moments(s);
            let want = moment_oracle(start, m, omega, d, s.time());
            for k in 0..5 {
                assert!((got[k] - want[k]).abs() < 1e-6, "{kind:?} t = {} moment {k}: {} vs {}", s.time(), got[k], want[k]);
            }
        }
    }
}

/// Wigner function of the even cat at `±a` with unit widths and `ħ = 1`.
fn cat_wigner(q: f64, p: f64, a: f64) -> f64 {
    let n = 1.0 / (2.0 * (1.0 + (-a * a).exp()));
    let e = |x: f64| (-x * x - p * p).exp();
    n * (e(q - a) + e(q + a) + 2.0 * e(q) * (2.0 * a * p).cos()) / PI
}

#[test]
fn harmonic_rotation_keeps_negativity() {
    let grid = make_grid(256, 256, (-10.0, 10.0), (-10.0, 10.0), 1.0).unwrap();
    let h = HamiltonianSpec::harmonic(1.0, 1.0).unwrap();
    let dec = DecoherenceSpec::none();
    let t = PI / 3.0;
    let w0 = StateSpec::Cat { offset: 3.0, sigma: 1.0, sign: 1.0 }.wigner(&grid, 1.0).unwrap();
    let traj = run(InitialState::Quantum(w0), &h, &dec, &config(&grid, &h, &dec, t, 6)).unwrap();
    let (c, s) = (t.cos(), t.sin());
    let exact = PhaseField::from_fn(grid, t, |q, p| cat_wigner(q * c - p * s, p * c + q * s, 3.0)).unwrap();
    let d = max_diff(traj.last(), &exact);
    // Strang splitting leaves an O(dt²) phase error of a few 1e-7 here.
    assert!(d < 1e-6, "{d}");
    // Rotation preserves ∫|W|; on the grid the sum of |W| over its kinks moves by ~1e-4,
    // so compare with the rotated closed form sampled the same way.
    let n0 = negativity_volume(&traj.snapshots()[0]);
    for snap in traj.snapshots() {
        let (c, s) = (snap.time().cos(), snap.time().sin());
        let exact = PhaseField::from_fn(grid, 0.0, |q, p| cat_wigner(q * c - p * s, p * c + q * s, 3.0)).unwrap();
        let n = negativity_volume(snap);
        assert!((n - negativity_volume(&exact)).abs() < 1e-6 * n0, "t = {}", snap.time());
        assert!((n - n0).abs() < 1e-3 * n0, "t = {}: {n} vs {n0}", snap.time());
    }
    assert_eq!(positivity_time(&traj), None);
}

#[test]
fn integrators_agree_with_the_free_closed_form() {
    let grid = make_grid(256, 128, (-16.0, 16.0), (-8.0, 8.0), 1.0).unwrap();
    let h = HamiltonianSpec::free(1.0).unwrap();
    let dec = DecoherenceSpec::with_rate(1.0).unwrap();
    let w0 = StateSpec::Cat { offset: 3.0, sigma: 1.0, sign: 1.0 }.wigner(&grid, 1.0).unwrap();
    let exact = diosi_propagate(&w0, 1.0, 1.0, 1.0).unwrap();
    for integrator in [Integrator::SplitStepSpectral, Integrator::Rk4Spectral] {
        let cfg = config(&grid, &h, &dec, 1.0, 2).with_integrator(integrator);
        let traj = run(InitialState::Quantum(w0.clone()), &h, &dec, &cfg).unwrap();
        let d = max_diff(traj.last(), &exact);
        assert!(d < 1e-6, "{integrator}: {d}");
    }
}

#[test]
fn classical_diffusion_stays_positive() {
    let grid = make_grid(128, 128, (-8.0, 8.0), (-10.0, 10.0), 1.0).unwrap();
    let h = HamiltonianSpec::quartic(1.0, -1.0, 0.05).unwrap();
    let dec = DecoherenceSpec::with_rate(1.0).unwrap();
    let state = StateSpec::CatMixture { offset: 3.0, sigma: f64::sqrt(0.5) };
    let traj = run(state.initial(&grid, 1.0, SolverKind::Classical).unwrap(), &h, &dec, &config(&grid, &h, &dec, 1.0, 5)).unwrap();
    for s in traj.snapshots() {
        assert!(s.min() >= -1e-9, "t = {}: {}", s.time(), s.min());
        assert!((s.norm() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn coarse_graining_hides_cat_negativity() {
    let grid = make_grid(256, 128, (-10.0, 10.0), (-8.0, 8.0), 1.0).unwrap();
    let cat = StateSpec::Cat { offset: 3.0, sigma: 1.0, sign: 1.0 }.wigner(&grid, 1.0).unwrap();
    let factor = coarse_factor(&grid, 4.0).unwrap();
    let coarse = coarse_grain(&cat, factor).unwrap();
    assert!(coarse.grid().cell_area_hbar() >= 4.0);
    let (fine, blurred) = (negativity_volume(&cat), negativity_volume(&coarse));
    assert!(blurred * 10.0 <= fine, "fine {fine}, coarse {blurred}");
}

#[test]
fn zero_duration_returns_the_initial_field() {
    let grid = make_grid(128, 128, (-8.0, 8.0), (-8.0, 8.0), 1.0).unwrap();
    let h = HamiltonianSpec::harmonic(1.0, 1.0).unwrap();
    let dec = DecoherenceSpec::none();
    let w0 = StateSpec::Coherent { q0: 1.5, p0: 0.0, sigma: 1.0 }.wigner(&grid, 1.0).unwrap();
    let traj = run(InitialState::Quantum(w0.clone()), &h, &dec, &EvolutionConfig::new(0.001, 0.0, 1).unwrap()).unwrap();
    assert_eq!(traj.snapshots().len(), 1);
    assert_eq!(traj.last().values(), w0.field().values());
}

#[test]
fn quadratic_potential_has_no_flux_deviation() {
    let grid = make_grid(128, 128, (-8.0, 8.0), (-8.0, 8.0), 1.0).unwrap();
    let h = HamiltonianSpec::harmonic(1.0, 1.0).unwrap();
    let dec = DecoherenceSpec::none();
    let region = IndexBox::new(64..80, 56..72);
    let state = StateSpec::Coherent { q0: 1.5, p0: 0.0, sigma: 1.0 };
    let cfg = config(&grid, &h, &dec, 1.0, 50);
    let traj = run_with(
        state.initial(&grid, 1.0, SolverKind::Quantum).unwrap(),
        &h,
        &dec,
        &cfg,
        std::slice::from_ref(&region),
        &Tolerances::default(),
    )
    .unwrap();
    let worst = flux_deviation(&traj, &region).unwrap().into_iter().filter(|v| v.is_finite()).fold(0.0_f64, |m, v| m.max(v.abs()));
    assert!(worst < 1e-5, "{worst}");
}

#[test]
fn norm_holds_over_a_thousand_steps() {
    let grid = make_grid(128, 128, (-8.0, 8.0), (-10.0, 10.0), 1.0).unwrap();
    let h = HamiltonianSpec::quartic(1.0, -1.0, 0.05).unwrap();
    let state = StateSpec::Gaussian { q0: 1.0, p0: 0.0, sigma_q: f64::sqrt(0.5), sigma_p: f64::sqrt(0.5) };
    for d in [0.0, 1.0] {
        let dec = if d > 0.0 { DecoherenceSpec::with_rate(d).unwrap() } else { DecoherenceSpec::none() };
        let dt = stability_limit(&grid, &h, &dec);
        let cfg = EvolutionConfig::new(dt, 1000.0 * dt, 100).unwrap();
        assert_eq!(cfg.n_steps(), 1000);
        for kind in [SolverKind::Quantum, SolverKind::Classical] {
            let traj = run(state.initial(&grid, 1.0, kind).unwrap(), &h, &dec, &cfg).unwrap();
            let n0 = traj.snapshots()[0].norm();
            for s in traj.snapshots() {
                assert!((s.norm() - n0).abs() < 1e-7, "{kind:?} D = {d} t = {}: {}", s.time(), s.norm() - n0);
            }
        }
    }
}
