//! Initial states on a grid.

use std::f64::consts::PI;

use crate::dynamics::{InitialState, SolverKind};
use crate::error::{Error, Result};
use crate::phase_grid::{ClassicalDensity, DensityMatrix, PhaseField, PhaseGrid, WaveFunction, WignerField};
use crate::tolerance::Tolerances;
use crate::weyl::{wigner_of_density, wigner_of_pure};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StateSpec {
    /// Minimum-uncertainty packet of position width `sigma` centred at `(q0, p0)`.
    Coherent { q0: f64, p0: f64, sigma: f64 },
    /// Superposition of packets at `±offset` with relative sign `sign`.
    Cat { offset: f64, sigma: f64, sign: f64 },
    /// Equal-weight incoherent mixture of the two packets of a cat.
    CatMixture { offset: f64, sigma: f64 },
    /// Gaussian Wigner function with independent widths; needs `σ_q σ_p ≥ ħ/2`.
    Gaussian { q0: f64, p0: f64, sigma_q: f64, sigma_p: f64 },
    /// Harmonic-oscillator eigenstate `n` for frequency `omega` (mass taken from `H`).
    Oscillator { n: usize, omega: f64 },
    /// All mass in the cell nearest `(q, p)`; admissible only as a classical density.
    SingleCell { q: f64, p: f64 },
}

impl StateSpec {
    pub fn wigner(&self, grid: &PhaseGrid, mass: f64) -> Result<WignerField> {
        let axis = *grid.q_axis();
        let hbar = grid.hbar();
        match *self {
            Self::Coherent { q0, p0, sigma } => wigner_of_pure(&WaveFunction::gaussian(axis, q0, p0, sigma, hbar)?, grid),
            Self::Cat { offset, sigma, sign } => wigner_of_pure(&WaveFunction::cat(axis, offset, sigma, hbar, sign)?, grid),
            Self::CatMixture { offset, sigma } => {
                let a = WaveFunction::gaussian(axis, offset, 0.0, sigma, hbar)?;
                let b = WaveFunction::gaussian(axis, -offset, 0.0, sigma, hbar)?;
                wigner_of_density(&DensityMatrix::mixture(&[(0.5, &a), (0.5, &b)])?, grid)
            }
            Self::Gaussian { q0, p0, sigma_q, sigma_p } => gaussian_wigner(grid, q0, p0, sigma_q, sigma_p),
            Self::Oscillator { n, omega } => wigner_of_pure(&WaveFunction::oscillator(axis, n, mass, omega, hbar)?, grid),
            Self::SingleCell { q, p } => {
                let rho = single_cell(grid, q, p)?;
                WignerField::new(rho.into_field(), &Tolerances::default())
            }
        }
    }

    /// The classical counterpart: the same field for positive states, the packet
    /// mixture for a cat.
    pub fn classical(&self, grid: &PhaseGrid, mass: f64) -> Result<ClassicalDensity> {
        match *self {
            Self::SingleCell { q, p } => single_cell(grid, q, p),
            Self::Cat { offset, sigma, .. } => Self::CatMixture { offset, sigma }.classical(grid, mass),
            _ => classical_density(self.wigner(grid, mass)?.into_field()),
        }
    }

    pub fn initial(&self, grid: &PhaseGrid, mass: f64, kind: SolverKind) -> Result<InitialState> {
        Ok(match kind {
            SolverKind::Quantum => InitialState::Quantum(self.wigner(grid, mass)?),
            SolverKind::Classical => InitialState::Classical(self.classical(grid, mass)?),
        })
    }
}

/// `exp(−(q−q0)²/2σ_q² − (p−p0)²/2σ_p²)/(2π σ_q σ_p)`, renormalized on the grid.
pub fn gaussian_wigner(grid: &PhaseGrid, q0: f64, p0: f64, sigma_q: f64, sigma_p: f64) -> Result<WignerField> {
    if !(sigma_q > 0.0 && sigma_p > 0.0) {
        return Err(Error::InvalidArgument("Gaussian widths must be positive".into()));
    }
    if sigma_q * sigma_p < 0.5 * grid.hbar() * (1.0 - 1e-12) {
        return Err(Error::InvalidArgument(format!(
            "σ_q σ_p = {} is below ħ/2 = {}: not a quantum state",
            sigma_q * sigma_p,
            0.5 * grid.hbar()
        )));
    }
    let f = PhaseField::from_fn(*grid, 0.0, |q, p| {
        let (x, y) = ((q - q0) / sigma_q, (p - p0) / sigma_p);
        (-0.5 * (x * x + y * y)).exp() / (2.0 * PI * sigma_q * sigma_p)
    })?;
    let norm = f.norm();
    let values = f.values().mapv(|v| v / norm);
    WignerField::new(PhaseField::new(*grid, values, 0.0)?, &Tolerances::default())
}

/// Wraps a non-negative normalized field as a classical density.
pub fn classical_density(field: PhaseField) -> Result<ClassicalDensity> {
    ClassicalDensity::new(field, &Tolerances::default())
}

fn single_cell(grid: &PhaseGrid, q: f64, p: f64) -> Result<ClassicalDensity> {
    let nearest = |x: f64, a: &crate::phase_grid::Axis| ((x - a.min) / a.step()).round();
    let (i, j) = (nearest(q, grid.q_axis()), nearest(p, grid.p_axis()));
    if i < 0.0 || j < 0.0 {
        return Err(Error::InvalidArgument(format!("({q}, {p}) lies outside {grid}")));
    }
    ClassicalDensity::single_cell(*grid, i as usize, j as usize)
}
