//! Closed-form solution of the free-particle Fokker–Planck equation.
//!
//! For `V = 0` the equation is solved exactly by shearing the initial field along the
//! free flow and smoothing with a Gaussian of covariance
//!
//! ```text
//! C(t) = D t [[t²/3m², t/2m], [t/2m, 1]]
//! ```

use ndarray::{Array2, Axis as NdAxis};
use num_complex::Complex64;

use super::run::{SolverKind, Trajectory};
use super::{DecoherenceSpec, HamiltonianSpec};
use crate::error::{Error, Result};
use crate::phase_grid::{PhaseField, WignerField};
use crate::spectral::{half_wavenumbers, real_at_nyquist, Spectral};
use crate::tolerance::Tolerances;

/// `W(t)` for the free particle of mass `m` with localisation rate `d`, starting from `w0`.
pub fn diosi_propagate(w0: &WignerField, m: f64, d: f64, t: f64) -> Result<WignerField> {
    let h = HamiltonianSpec::free(m)?;
    let dec = DecoherenceSpec::with_rate(d)?;
    diosi_propagate_for(w0, &h, &dec, t)
}

/// As [`diosi_propagate`], refusing Hamiltonians with a force.
pub fn diosi_propagate_for(w0: &WignerField, h: &HamiltonianSpec, dec: &DecoherenceSpec, t: f64) -> Result<WignerField> {
    if !h.is_free() {
        return Err(Error::InvalidHamiltonian(format!("the closed-form propagator needs V' = 0, got V = {}", h.potential())));
    }
    let mut spectral = Spectral::new(w0.grid());
    let field = propagate(&mut spectral, w0.field(), h.mass(), dec.effective_rate(), t)?;
    WignerField::from_evolved(field, &Tolerances::default())
}

fn propagate(spectral: &mut Spectral, w0: &PhaseField, m: f64, d: f64, t: f64) -> Result<PhaseField> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidArgument(format!("propagation time must be non-negative, got {t}")));
    }
    if t == 0.0 {
        return Ok(w0.clone());
    }
    let grid = *w0.grid();
    let mut values = w0.values().clone();

    let kq = half_wavenumbers(grid.q_axis());
    let mut shear = Array2::from_shape_fn((grid.n_p(), kq.len()), |(j, k)| Complex64::from_polar(1.0, -kq[k] * grid.p(j) * t / m));
    real_at_nyquist(&mut shear, grid.q_axis(), NdAxis(1));
    spectral.apply_q(&mut values, &shear);

    if d > 0.0 {
        let kq = grid.q_axis().wavenumbers();
        let kp = grid.p_axis().wavenumbers();
        let (cqq, cqp, cpp) = (d * t * t * t / (3.0 * m * m), d * t * t / (2.0 * m), d * t);
        let smooth = Array2::from_shape_fn(grid.shape(), |(a, b)| {
            let (x, y) = (kq[a], kp[b]);
            Complex64::new((-0.5 * (cqq * x * x + 2.0 * cqp * x * y + cpp * y * y)).exp(), 0.0)
        });
        spectral.apply_2d(&mut values, &smooth);
    }
    PhaseField::new(grid, values, w0.time() + t)
}

/// Closed-form trajectory sampled at `n_intervals + 1` equally spaced times in `[0, t_end]`.
pub fn diosi_trajectory(w0: &WignerField, m: f64, d: f64, t_end: f64, n_intervals: usize) -> Result<Trajectory> {
    if n_intervals == 0 {
        return Err(Error::InvalidArgument("need at least one interval".into()));
    }
    let h = HamiltonianSpec::free(m)?;
    let dec = DecoherenceSpec::with_rate(d)?;
    let mut spectral = Spectral::new(w0.grid());
    let tol = Tolerances::default();
    let snapshots = (0..=n_intervals)
        .map(|k| {
            let t = t_end * k as f64 / n_intervals as f64;
            let f = propagate(&mut spectral, w0.field(), m, d, t)?;
            Ok(WignerField::from_evolved(f, &tol)?.into_field())
        })
        .collect::<Result<Vec<_>>>()?;
    Trajectory::assemble(SolverKind::Quantum, h, dec, t_end / n_intervals as f64, 1, snapshots, Vec::new(), 0.0, tol)
}
