//! Time evolution of Wigner fields and classical densities.
//!
//! Both solvers integrate
//!
//! ```text
//! ∂W/∂t = −(p/m) ∂W/∂q + Σ_ℓ (−1)^ℓ (ħ/2)^{2ℓ}/(2ℓ+1)! V^{(2ℓ+1)}(q) ∂^{2ℓ+1}W/∂p^{2ℓ+1} + (D/2) ∂²W/∂p²
//! ```
//!
//! The classical solver keeps only `ℓ = 0` (Liouville plus Fokker–Planck); the quantum
//! solver keeps every term, which for a polynomial potential is a finite sum. In the
//! `p`-Fourier variable `k` the potential terms add up to the phase
//! `Θ(q, k) = [V(q + ħk/2) − V(q − ħk/2)]/ħ`, so the kick is exact.

mod classical;
mod diosi;
mod quantum;
mod run;
mod split;

pub use classical::{step_classical, step_classical_with, ClassicalStepper};
pub use diosi::{diosi_propagate, diosi_propagate_for, diosi_trajectory};
pub use quantum::{step_quantum, step_quantum_with, QuantumStepper};
pub use run::{run, run_with, InitialState, SolverKind, Trajectory};

use crate::error::{Error, Result};
use crate::moyal::{polynomial::factorial, PolynomialSymbol};
use crate::phase_grid::PhaseGrid;

/// Largest potential degree accepted by the solvers.
pub const MAX_POTENTIAL_DEGREE: u32 = 6;

/// Safety factor in the stability rule.
pub const STABILITY_FACTOR: f64 = 0.2;

/// `H = p²/2m + V(q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianSpec {
    mass: f64,
    potential: PolynomialSymbol,
}

impl HamiltonianSpec {
    pub fn new(mass: f64, potential: PolynomialSymbol) -> Result<Self> {
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::InvalidHamiltonian(format!("mass must be positive, got {mass}")));
        }
        if potential.depends_on_p() {
            return Err(Error::InvalidHamiltonian(format!("potential depends on p: {potential}")));
        }
        if potential.degree() > MAX_POTENTIAL_DEGREE {
            return Err(Error::InvalidHamiltonian(format!("potential degree {} exceeds {MAX_POTENTIAL_DEGREE}", potential.degree())));
        }
        Ok(Self { mass, potential })
    }

    pub fn free(mass: f64) -> Result<Self> {
        Self::new(mass, PolynomialSymbol::zero())
    }

    /// `V = ½ m ω² q²`.
    pub fn harmonic(mass: f64, omega: f64) -> Result<Self> {
        Self::new(mass, PolynomialSymbol::potential(&[0.0, 0.0, 0.5 * mass * omega * omega])?)
    }

    /// `V = a q² + b q⁴`.
    pub fn quartic(mass: f64, a: f64, b: f64) -> Result<Self> {
        Self::new(mass, PolynomialSymbol::potential(&[0.0, 0.0, a, 0.0, b])?)
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn potential(&self) -> &PolynomialSymbol {
        &self.potential
    }

    /// The full symbol `p²/2m + V(q)`.
    pub fn symbol(&self) -> PolynomialSymbol {
        PolynomialSymbol::raw([((0, 2), 0.5 / self.mass)]).add(&self.potential)
    }

    /// `V'(q)`.
    pub fn force_gradient(&self) -> PolynomialSymbol {
        self.potential.derivative(1, 0)
    }

    /// True when `V'` vanishes identically.
    pub fn is_free(&self) -> bool {
        self.force_gradient().is_zero()
    }

    /// True when the Moyal bracket with `H` reduces to the Poisson bracket.
    pub fn is_quadratic(&self) -> bool {
        self.potential.degree() <= 2
    }

    /// `max |V'(q_i)|` over the grid positions.
    pub fn max_force(&self, grid: &PhaseGrid) -> f64 {
        let dv = self.force_gradient();
        (0..grid.n_q()).map(|i| dv.eval(grid.q(i), 0.0).abs()).fold(0.0, f64::max)
    }

    /// Terms of `Θ(q, k) = Σ c_n(q) k^n`: pairs `(n, c_n)` with odd `n`.
    ///
    /// `c_{2ℓ+1}(q) = (ħ/2)^{2ℓ} V^{(2ℓ+1)}(q)/(2ℓ+1)!`; with `classical` set only `n = 1` is kept.
    pub(crate) fn kick_terms(&self, hbar: f64, classical: bool) -> Vec<(u32, PolynomialSymbol)> {
        let mut terms = Vec::new();
        let mut l = 0u32;
        loop {
            let n = 2 * l + 1;
            let d = self.potential.derivative(n, 0);
            if d.is_zero() || (classical && l > 0) {
                break;
            }
            let weight = (hbar / 2.0).powi(2 * l as i32) / factorial(n);
            terms.push((n, d.scale(weight)));
            l += 1;
        }
        terms
    }
}

/// Momentum diffusion from position-measuring scattering.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoherenceSpec {
    rate: f64,
    enabled: bool,
}

impl DecoherenceSpec {
    pub fn new(rate: f64, enabled: bool) -> Result<Self> {
        if !(rate.is_finite() && rate >= 0.0) {
            return Err(Error::InvalidArgument(format!("localisation rate must be non-negative, got {rate}")));
        }
        Ok(Self { rate, enabled })
    }

    pub fn none() -> Self {
        Self { rate: 0.0, enabled: false }
    }

    pub fn with_rate(rate: f64) -> Result<Self> {
        Self::new(rate, true)
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn enabled(&self) -> bool {
        self.enabled
    }

    /// The diffusion constant actually applied.
    pub fn effective_rate(&self) -> f64 {
        if self.enabled {
            self.rate
        } else {
            0.0
        }
    }

    /// `t₀ = √(m/D)`, when diffusion is on.
    pub fn timescale(&self, mass: f64) -> Option<f64> {
        let d = self.effective_rate();
        (d > 0.0).then(|| (mass / d).sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Integrator {
    #[default]
    SplitStepSpectral,
    Rk4Spectral,
}

impl std::str::FromStr for Integrator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "split-step-spectral" => Ok(Self::SplitStepSpectral),
            "rk4-spectral" => Ok(Self::Rk4Spectral),
            _ => Err(Error::InvalidArgument(format!("unknown integrator {s:?}"))),
        }
    }
}

impl std::fmt::Display for Integrator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::SplitStepSpectral => "split-step-spectral",
            Self::Rk4Spectral => "rk4-spectral",
        })
    }
}

/// Discretization used by the classical solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClassicalScheme {
    /// Same split-step spectral scheme as the quantum solver, with a mass-conserving
    /// positivity floor.
    #[default]
    Spectral,
    /// Positivity-preserving finite-volume advection (van Leer limiter) with explicit
    /// diffusion; suited to densities concentrated on a few cells.
    FluxLimited,
}

impl std::str::FromStr for ClassicalScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spectral" => Ok(Self::Spectral),
            "flux-limited" => Ok(Self::FluxLimited),
            _ => Err(Error::InvalidArgument(format!("unknown classical scheme {s:?}"))),
        }
    }
}

impl std::fmt::Display for ClassicalScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Spectral => "spectral",
            Self::FluxLimited => "flux-limited",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Steps between stored snapshots.
    pub stride: usize,
    pub integrator: Integrator,
    pub classical_scheme: ClassicalScheme,
}

impl EvolutionConfig {
    pub fn new(dt: f64, t_end: f64, stride: usize) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
        }
        if !(t_end.is_finite() && t_end >= 0.0) {
            return Err(Error::InvalidArgument(format!("t_end must be non-negative, got {t_end}")));
        }
        if stride == 0 {
            return Err(Error::InvalidArgument("stride must be at least 1".into()));
        }
        Ok(Self { dt, t_end, stride, integrator: Integrator::default(), classical_scheme: ClassicalScheme::default() })
    }

    pub fn with_integrator(mut self, integrator: Integrator) -> Self {
        self.integrator = integrator;
        self
    }

    pub fn with_classical_scheme(mut self, scheme: ClassicalScheme) -> Self {
        self.classical_scheme = scheme;
        self
    }

    /// Number of steps; `dt` is shortened slightly so they land exactly on `t_end`.
    pub fn n_steps(&self) -> usize {
        if self.t_end == 0.0 {
            0
        } else {
            (self.t_end / self.dt - 1e-9).ceil().max(1.0) as usize
        }
    }

    pub fn step_size(&self) -> f64 {
        match self.n_steps() {
            0 => self.dt,
            n => self.t_end / n as f64,
        }
    }
}

/// `0.2·min(dq·m/p_max, dp/max|V'|, dp²/D)`.
pub fn stability_limit(grid: &PhaseGrid, h: &HamiltonianSpec, dec: &DecoherenceSpec) -> f64 {
    let mut limit = grid.dq() * h.mass() / grid.p_axis().max_abs();
    let force = h.max_force(grid);
    if force > 0.0 {
        limit = limit.min(grid.dp() / force);
    }
    let d = dec.effective_rate();
    if d > 0.0 {
        limit = limit.min(grid.dp() * grid.dp() / d);
    }
    STABILITY_FACTOR * limit
}

pub fn check_stability(dt: f64, grid: &PhaseGrid, h: &HamiltonianSpec, dec: &DecoherenceSpec) -> Result<()> {
    let limit = stability_limit(grid, h, dec);
    if dt > limit * (1.0 + 1e-12) {
        return Err(Error::Unstable { dt, limit });
    }
    Ok(())
}
