use std::f64::consts::PI;

use phaselab::diagnostics::{
    coarse_grain, effective_support_area, ehrenfest_check, negativity_volume, positivity_time, uniform_partition, validate_measure,
    StructureClass,
};
use phaselab::dynamics::{
    diosi_propagate, diosi_trajectory, run, stability_limit, DecoherenceSpec, EvolutionConfig, HamiltonianSpec, InitialState, SolverKind,
};
use phaselab::states::StateSpec;
use phaselab::{make_grid, PhaseField, PhaseGrid};

fn max_diff(a: &PhaseField, b: &PhaseField) -> f64 {
    (a.values() - b.values()).iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

fn config(grid: &PhaseGrid, h: &HamiltonianSpec, dec: &DecoherenceSpec, t_end: f64, snapshots: usize) -> EvolutionConfig {
    let per = t_end / snapshots as f64;
    let stride = (per / stability_limit(grid, h, dec)).ceil() as usize;
    EvolutionConfig::new(per / stride as f64, t_end, stride).unwrap()
}

fn free_cat_grid() -> PhaseGrid {
    make_grid(512, 128, (-20.0, 20.0), (-14.0, 14.0), 1.0).unwrap()
}

#[test]
fn decohered_cat_is_classical_after_three_timescales() {
    let grid = free_cat_grid();
    let w0 = StateSpec::Cat { offset: 3.0, sigma: 1.0, sign: 1.0 }.wigner(&grid, 1.0).unwrap();
    let t0 = DecoherenceSpec::with_rate(1.0).unwrap().timescale(1.0).unwrap();
    let w = diosi_propagate(&w0, 1.0, 1.0, 3.0 * t0).unwrap();
    let r = validate_measure(w.field(), &uniform_partition(&grid, 8, 4).unwrap()).unwrap();
    assert!(r.positive, "min {}", r.min_value);
    assert_eq!(r.classification, StructureClass::ClassicalProbability);
    assert!(r.normalized && r.finitely_additive);
}

#[test]
fn closed_form_negativity_never_grows() {
    let grid = free_cat_grid();
    let w0 = StateSpec::Cat { offset: 3.0, sigma: 1.0, sign: 1.0 }.wigner(&grid, 1.0).unwrap();
    let traj = diosi_trajectory(&w0, 1.0, 1.0, 2.0, 40).unwrap();
    let neg: Vec<f64> = traj.snapshots().iter().map(negativity_volume).collect();
    assert!(neg[0] > 0.5);
    for w in neg.windows(2) {
        assert!(w[1] <= w[0] + 1e-12, "{} -> {}", w[0], w[1]);
    }
    assert!(*neg.last().unwrap() < 1e-10);
}

#[test]
fn split_step_matches_closed_form_over_mass_and_rate() {
    for m in [0.5, 2.0] {
        for d in [0.5, 2.0] {
            let grid = make_grid(512, 256, (-24.0, 24.0), (-12.0, 12.0), 1.0).unwrap();
            let h = HamiltonianSpec::free(m).unwrap();
            let dec = DecoherenceSpec::with_rate(d).unwrap();
            let t0 = dec.timescale(m).unwrap();
            let w0 = StateSpec::Cat { offset: 3.0, sigma: 1.0, sign: 1.0 }.wigner(&grid, m).unwrap();
            let traj = run(InitialState::Quantum(w0.clone()), &h, &dec, &config(&grid, &h, &dec, t0, 2)).unwrap();
            for snap in &traj.snapshots()[1..] {
                let d_max = max_diff(snap, &diosi_propagate(&w0, m, d, snap.time()).unwrap());
                assert!(d_max <= 1e-4, "m = {m} D = {d} t = {}: {d_max}", snap.time());
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
fn free_flow_preserves_negativity() {
    let grid = make_grid(512, 128, (-20.0, 20.0), (-8.0, 8.0), 1.0).unwrap();
    let h = HamiltonianSpec::free(1.0).unwrap();
    let dec = DecoherenceSpec::none();
    let w0 = StateSpec::Cat { offset: 3.0, sigma: 1.0, sign: 1.0 }.wigner(&grid, 1.0).unwrap();
    let traj = run(InitialState::Quantum(w0), &h, &dec, &config(&grid, &h, &dec, 1.0, 5)).unwrap();
    let n0 = negativity_volume(&traj.snapshots()[0]);
    // The shear moves the sign changes across cells, which shifts the grid sum of |W| by ~1e-4;
    // against the sheared closed form sampled on the same grid the agreement is exact.
    for s in traj.snapshots() {
        let t = s.time();
        let exact = PhaseField::from_fn(grid, t, |q, p| cat_wigner(q - p * t, p, 3.0)).unwrap();
        let n = negativity_volume(s);
        assert!((n - negativity_volume(&exact)).abs() < 1e-10, "t = {t}");
        assert!((n - n0).abs() < 1e-3 * n0, "t = {t}: {n} vs {n0}");
    }
}

#[test]
fn free_momentum_is_constant_under_diffusion() {
    let grid = make_grid(256, 256, (-16.0, 16.0), (-12.0, 12.0), 1.0).unwrap();
    let h = HamiltonianSpec::free(1.0).unwrap();
    let dec = DecoherenceSpec::with_rate(1.0).unwrap();
    let state = StateSpec::Coherent { q0: -1.0, p0: 0.8, sigma: 1.0 };
    let traj = run(state.initial(&grid, 1.0, SolverKind::Quantum).unwrap(), &h, &dec, &config(&grid, &h, &dec, 1.0, 10)).unwrap();
    let report = ehrenfest_check(&traj, &h).unwrap();
    for p in &report.mean_p {
        assert!((p - report.mean_p[0]).abs() < 1e-8, "{:?}", report.mean_p);
    }
    assert!(report.max_momentum_residual() < 1e-8);
}

#[test]
fn quadratic_moments_agree_between_solvers() {
    let grid = make_grid(128, 128, (-8.0, 8.0), (-8.0, 8.0), 1.0).unwrap();
    let h = HamiltonianSpec::harmonic(1.0, 1.0).unwrap();
    let dec = DecoherenceSpec::none();
    let state = StateSpec::Coherent { q0: 1.5, p0: 0.5, sigma: 1.0 };
    let cfg = config(&grid, &h, &dec, PI, 40);
    let q = ehrenfest_check(&run(state.initial(&grid, 1.0, SolverKind::Quantum).unwrap(), &h, &dec, &cfg).unwrap(), &h).unwrap();
    let c = ehrenfest_check(&run(state.initial(&grid, 1.0, SolverKind::Classical).unwrap(), &h, &dec, &cfg).unwrap(), &h).unwrap();
    for k in 0..q.times.len() {
        assert!((q.mean_q[k] - c.mean_q[k]).abs() < 1e-3);
        assert!((q.mean_p[k] - c.mean_p[k]).abs() < 1e-3);
    }
}

#[test]
fn positive_initial_state_decoheres_at_time_zero() {
    let grid = make_grid(128, 128, (-8.0, 8.0), (-8.0, 8.0), 1.0).unwrap();
    let h = HamiltonianSpec::harmonic(1.0, 1.0).unwrap();
    for d in [0.0, 0.5] {
        let dec = if d > 0.0 { DecoherenceSpec::with_rate(d).unwrap() } else { DecoherenceSpec::none() };
        let state = StateSpec::Coherent { q0: 1.0, p0: 0.0, sigma: 1.0 };
        let traj = run(state.initial(&grid, 1.0, SolverKind::Quantum).unwrap(), &h, &dec, &config(&grid, &h, &dec, 1.0, 20)).unwrap();
        assert_eq!(positivity_time(&traj), Some(0.0), "D = {d}");
    }
}

#[test]
fn support_areas() {
    let grid = make_grid(256, 256, (-10.0, 10.0), (-10.0, 10.0), 1.0).unwrap();
    for state in [
        StateSpec::Coherent { q0: 0.5, p0: -0.5, sigma: 0.7 },
        StateSpec::Cat { offset: 2.0, sigma: 1.0, sign: -1.0 },
        StateSpec::CatMixture { offset: 2.0, sigma: 1.0 },
    ] {
        let area = effective_support_area(&state.wigner(&grid, 1.0).unwrap());
        assert!(area >= 0.9, "{state:?}: {area}");
    }
    let spike =
        PhaseField::from_fn(grid, 0.0, |q, p| if q == grid.q(40) && p == grid.p(70) { 1.0 / grid.cell_area() } else { 0.0 }).unwrap();
    assert!((effective_support_area(&spike) - grid.cell_area_hbar()).abs() < 1e-12);
}

#[test]
fn unit_coarse_graining_is_the_identity() {
    let grid = make_grid(128, 128, (-10.0, 10.0), (-8.0, 8.0), 1.0).unwrap();
    let w = StateSpec::Cat { offset: 2.0, sigma: 1.0, sign: 1.0 }.wigner(&grid, 1.0).unwrap();
    let c = coarse_grain(&w, 1).unwrap();
    assert_eq!(c.values(), w.field().values());
    assert_eq!(c.grid(), w.field().grid());
}
