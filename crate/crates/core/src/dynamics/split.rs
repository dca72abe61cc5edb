//! Spectral engine shared by the quantum and the smooth classical solver.

use ndarray::{Array2, Axis as NdAxis};
use num_complex::Complex64;

use super::HamiltonianSpec;
use crate::error::{Error, Result};
use crate::phase_grid::PhaseGrid;
use crate::spectral::{half_wavenumbers, real_at_nyquist, Spectral};

/// Largest `dt·|generator|` accepted by the RK4 fallback (its stability region reaches 2.78).
const RK4_SPECTRAL_RADIUS: f64 = 2.5;

pub(crate) struct SplitStep {
    spectral: Spectral,
    /// `[j, k_q]`: `exp(−i k_q p_j dt/2m)`.
    half_shear: Array2<Complex64>,
    /// `[j, k_q]`: `exp(−i k_q p_j dt/m)`.
    full_shear: Array2<Complex64>,
    /// `[i, k_p]`: `exp(iΘ(q_i, k_p) dt − (D/2) k_p² dt)`.
    kick: Array2<Complex64>,
    /// Generators for the RK4 path.
    shear_gen: Array2<Complex64>,
    kick_gen: Array2<Complex64>,
    dt: f64,
}

impl SplitStep {
    pub fn new(grid: &PhaseGrid, h: &HamiltonianSpec, diffusion: f64, classical: bool, dt: f64) -> Self {
        let kq = half_wavenumbers(grid.q_axis());
        let kp = half_wavenumbers(grid.p_axis());
        let m = h.mass();

        let mut shear_gen = Array2::from_shape_fn((grid.n_p(), kq.len()), |(j, k)| Complex64::new(0.0, -kq[k] * grid.p(j) / m));
        real_at_nyquist(&mut shear_gen, grid.q_axis(), NdAxis(1));
        let mut half_shear = shear_gen.mapv(|g| (g * 0.5 * dt).exp());
        real_at_nyquist(&mut half_shear, grid.q_axis(), NdAxis(1));
        let mut full_shear = shear_gen.mapv(|g| (g * dt).exp());
        real_at_nyquist(&mut full_shear, grid.q_axis(), NdAxis(1));

        let terms: Vec<(u32, Vec<f64>)> = h
            .kick_terms(grid.hbar(), classical)
            .into_iter()
            .map(|(n, c)| (n, (0..grid.n_q()).map(|i| c.eval(grid.q(i), 0.0)).collect()))
            .collect();
        let mut kick_gen = Array2::from_shape_fn((grid.n_q(), kp.len()), |(i, k)| {
            let theta: f64 = terms.iter().map(|(n, c)| c[i] * kp[k].powi(*n as i32)).sum();
            Complex64::new(-0.5 * diffusion * kp[k] * kp[k], theta)
        });
        real_at_nyquist(&mut kick_gen, grid.p_axis(), NdAxis(1));
        let mut kick = kick_gen.mapv(|g| (g * dt).exp());
        real_at_nyquist(&mut kick, grid.p_axis(), NdAxis(1));

        Self { spectral: Spectral::new(grid), half_shear, full_shear, kick, shear_gen, kick_gen, dt }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// `n` Strang steps with adjacent half shears merged.
    ///
    /// `after_kick` sees the field after each kick; shears leave the norm unchanged,
    /// so that is where per-step norm checks go.
    pub fn steps(&mut self, values: &mut Array2<f64>, n: usize, mut after_kick: impl FnMut(&Array2<f64>) -> Result<()>) -> Result<()> {
        if n == 0 {
            return Ok(());
        }
        self.spectral.apply_q(values, &self.half_shear);
        for s in 0..n {
            self.spectral.apply_p(values, &self.kick);
            after_kick(values)?;
            let shear = if s + 1 == n { &self.half_shear } else { &self.full_shear };
            self.spectral.apply_q(values, shear);
        }
        Ok(())
    }

    /// Refuses step sizes outside the RK4 stability region.
    pub fn check_rk4(&self) -> Result<()> {
        let radius = |t: &Array2<Complex64>| t.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
        let total = radius(&self.shear_gen) + radius(&self.kick_gen);
        let limit = RK4_SPECTRAL_RADIUS / total;
        if self.dt > limit {
            return Err(Error::Unstable { dt: self.dt, limit });
        }
        Ok(())
    }

    fn rhs(&mut self, values: &Array2<f64>) -> Array2<f64> {
        let mut a = values.clone();
        self.spectral.apply_q(&mut a, &self.shear_gen);
        let mut b = values.clone();
        self.spectral.apply_p(&mut b, &self.kick_gen);
        a + b
    }

    /// Classical fourth-order Runge–Kutta step on the spectral right-hand side.
    pub fn step_rk4(&mut self, values: &mut Array2<f64>) {
        let h = self.dt;
        let k1 = self.rhs(values);
        let k2 = self.rhs(&(&*values + &(&k1 * (0.5 * h))));
        let k3 = self.rhs(&(&*values + &(&k2 * (0.5 * h))));
        let k4 = self.rhs(&(&*values + &(&k3 * h)));
        values.zip_mut_with(&(k1 + (k2 + k3) * 2.0 + k4), |v, k| *v += k * h / 6.0);
    }
}

/// `Σ values · cell area`, also reporting the first non-finite entry.
pub(crate) fn checked_norm(values: &Array2<f64>, grid: &PhaseGrid) -> Result<f64> {
    if let Some(((i, j), _)) = values.indexed_iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinite(i, j));
    }
    let rows: Vec<f64> = values.rows().into_iter().map(|r| crate::phase_grid::pairwise_sum(r.as_slice().expect("layout"))).collect();
    Ok(crate::phase_grid::pairwise_sum(&rows) * grid.cell_area())
}
