use super::split::{checked_norm, SplitStep};
use super::{check_stability, DecoherenceSpec, HamiltonianSpec, Integrator};
use crate::error::{Error, Result};
use crate::phase_grid::{PhaseField, PhaseGrid, WignerField};
use crate::tolerance::Tolerances;

/// Advances Wigner fields on one grid with fixed `H`, `D` and `dt`.
pub struct QuantumStepper {
    grid: PhaseGrid,
    engine: SplitStep,
    integrator: Integrator,
    tol: Tolerances,
}

impl QuantumStepper {
    pub fn new(
        grid: &PhaseGrid,
        h: &HamiltonianSpec,
        dec: &DecoherenceSpec,
        dt: f64,
        integrator: Integrator,
        tol: Tolerances,
    ) -> Result<Self> {
        check_stability(dt, grid, h, dec)?;
        let engine = SplitStep::new(grid, h, dec.effective_rate(), false, dt);
        if integrator == Integrator::Rk4Spectral {
            engine.check_rk4()?;
        }
        Ok(Self { grid: *grid, engine, integrator, tol })
    }

    pub fn dt(&self) -> f64 {
        self.engine.dt()
    }

    /// `n` steps in place; `field.time()` advances by `n·dt`.
    ///
    /// The norm is checked after every step, the `2/ħ` bound only at the end.
    pub(crate) fn advance(&mut self, field: &mut PhaseField, n: usize) -> Result<()> {
        let (grid, dt, abort) = (self.grid, self.engine.dt(), self.tol.norm_abort);
        let t0 = field.time();
        let mut prev = field.norm();
        let mut k = 0;
        let mut check = |v: &ndarray::Array2<f64>| {
            k += 1;
            let after = checked_norm(v, &grid)?;
            let drift = (after - prev).abs();
            if drift > abort {
                return Err(Error::NormDrift { drift, time: t0 + k as f64 * dt });
            }
            prev = after;
            Ok(())
        };
        let values = field.values_mut();
        match self.integrator {
            Integrator::SplitStepSpectral => self.engine.steps(values, n, check)?,
            Integrator::Rk4Spectral => {
                for _ in 0..n {
                    self.engine.step_rk4(values);
                    check(values)?;
                }
            }
        }
        field.set_time(t0 + n as f64 * dt);
        let bound = self.tol.wigner_bound(self.grid.hbar());
        let max_abs = field.max_abs();
        if max_abs > bound {
            return Err(Error::BoundViolation { max_abs, bound });
        }
        Ok(())
    }

    pub fn step(&mut self, w: &WignerField) -> Result<WignerField> {
        self.grid.ensure_same(w.grid())?;
        check_edge(w, &self.tol)?;
        let mut field = w.field().clone();
        self.advance(&mut field, 1)?;
        WignerField::from_evolved(field, &self.tol)
    }
}

pub(crate) fn check_edge(field: &PhaseField, tol: &Tolerances) -> Result<()> {
    let ratio = field.boundary_ratio();
    if ratio > tol.boundary_evolve {
        return Err(Error::BoundaryReached { ratio, time: field.time() });
    }
    Ok(())
}

/// One step of `∂W/∂t = {{H, W}} + (D/2) ∂²W/∂p²`.
pub fn step_quantum(w: &WignerField, h: &HamiltonianSpec, dec: &DecoherenceSpec, dt: f64) -> Result<WignerField> {
    step_quantum_with(w, h, dec, dt, Integrator::default(), &Tolerances::default())
}

pub fn step_quantum_with(
    w: &WignerField,
    h: &HamiltonianSpec,
    dec: &DecoherenceSpec,
    dt: f64,
    integrator: Integrator,
    tol: &Tolerances,
) -> Result<WignerField> {
    QuantumStepper::new(w.grid(), h, dec, dt, integrator, *tol)?.step(w)
}
