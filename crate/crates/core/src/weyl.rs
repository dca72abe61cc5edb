//! Weyl–Wigner correspondence between position-space operators and phase-space symbols.
//!
//! The Wigner function of a density matrix is
//!
//! ```text
//! W(q, p) = 1/(πħ) ∫ dy ρ(q + y, q − y) e^{−2ipy/ħ}
//! ```
//!
//! which integrates to one and has `∫W dp = ρ(q, q)`. On the grid the offset `y`
//! runs over multiples of `dq`, so `ρ(q_j + y, q_j − y)` is read directly from the
//! matrix entries `ρ[j+m, j−m]`. The sum is evaluated at the grid momenta directly
//! (not by FFT), so any momentum range inside the alias-free band
//! `|p| < πħ/(2 dq)` is allowed.
//!
//! Weyl symbols use the unnormalized transform, `A(q,p) = 2πħ · (Wigner transform of Â)`,
//! so `Tr[ÂB̂] = 1/(2πħ) ∫∫ A B` and `⟨A⟩ = ∫∫ W A`.

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::moyal::{self, PolynomialSymbol, SymbolRef, MAX_STAR_ORDER};
use crate::phase_grid::{quadrature, Axis, DensityMatrix, PhaseField, PhaseGrid, WaveFunction, WignerField};
use crate::spectral::{real_at_nyquist, Spectral};
use crate::tolerance::Tolerances;

/// Phase-space symbol of an observable.
#[derive(Debug, Clone, PartialEq)]
pub struct WeylSymbol {
    field: PhaseField,
    poly: Option<PolynomialSymbol>,
}

impl WeylSymbol {
    pub fn from_polynomial(poly: PolynomialSymbol, grid: &PhaseGrid) -> Result<Self> {
        let field = PhaseField::new(*grid, poly.sample(grid), 0.0)?;
        Ok(Self { field, poly: Some(poly) })
    }

    pub fn from_field(field: PhaseField) -> Self {
        Self { field, poly: None }
    }

    /// The symbol of the density operator itself, `2πħ·W`.
    pub fn from_wigner(w: &WignerField) -> Self {
        let scale = 2.0 * PI * w.grid().hbar();
        let values = w.values().mapv(|v| v * scale);
        Self { field: PhaseField::new(*w.grid(), values, w.time()).expect("finite"), poly: None }
    }

    /// Weyl symbol of a position-space operator kernel `A(x, x')`.
    pub fn from_operator(kernel: &Array2<Complex64>, grid: &PhaseGrid, tol: &Tolerances) -> Result<Self> {
        check_axis(grid, kernel.dim().0)?;
        check_alias_free(grid)?;
        let (values, residue) = transform_rows(kernel, grid, 2.0 * grid.dq());
        if residue > tol.imaginary_residue * values.iter().fold(1.0_f64, |m, v| m.max(v.abs())) {
            return Err(Error::ImaginaryResidue(residue));
        }
        Ok(Self::from_field(PhaseField::new(*grid, values, 0.0)?))
    }

    pub fn field(&self) -> &PhaseField {
        &self.field
    }

    pub fn polynomial(&self) -> Option<&PolynomialSymbol> {
        self.poly.as_ref()
    }

    pub fn grid(&self) -> &PhaseGrid {
        self.field.grid()
    }

    fn as_symbol_ref(&self) -> SymbolRef<'_> {
        match &self.poly {
            Some(p) => SymbolRef::Poly(p),
            None => SymbolRef::Field(&self.field),
        }
    }
}

fn check_axis(grid: &PhaseGrid, n: usize) -> Result<()> {
    if n != grid.n_q() {
        return Err(Error::GridMismatch(format!("{n}-point operator on a {}-point q axis", grid.n_q())));
    }
    Ok(())
}

/// The transform samples `y` every `dq`, so `W(q, ·)` is periodic in `p` with period
/// `πħ/dq`; the grid momenta must fit inside one period.
fn check_alias_free(grid: &PhaseGrid) -> Result<()> {
    let limit = PI * grid.hbar() / (2.0 * grid.dq());
    let p_abs = grid.p_axis().max_abs();
    if p_abs >= limit {
        return Err(Error::GridMismatch(format!("momentum range reaches |p| = {p_abs}, beyond the alias-free limit πħ/(2dq) = {limit}")));
    }
    Ok(())
}

/// `prefactor · Σ_m K[j+m, j−m] e^{−2i p_k m dq/ħ}` for every row `j`; also returns the
/// largest imaginary part encountered.
fn transform_rows(kernel: &Array2<Complex64>, grid: &PhaseGrid, prefactor: f64) -> (Array2<f64>, f64) {
    let n = grid.n_q();
    let n_p = grid.n_p();
    let dq = grid.dq();
    let hbar = grid.hbar();
    let p = grid.p_axis().points();
    // phase[m][k] = e^{−2i p_k m dq/ħ}
    let phase: Vec<Vec<Complex64>> =
        (0..n).map(|m| p.iter().map(|&pk| Complex64::from_polar(1.0, -2.0 * pk * m as f64 * dq / hbar)).collect()).collect();
    let rows: Vec<(Vec<f64>, f64)> = (0..n)
        .into_par_iter()
        .map(|j| {
            let reach = j.min(n - 1 - j);
            let mut acc = vec![Complex64::new(0.0, 0.0); n_p];
            let centre = kernel[[j, j]];
            acc.iter_mut().for_each(|a| *a = centre);
            for m in 1..=reach {
                let fwd = kernel[[j + m, j - m]];
                let bwd = kernel[[j - m, j + m]];
                for (a, ph) in acc.iter_mut().zip(&phase[m]) {
                    *a += fwd * ph + bwd * ph.conj();
                }
            }
            let residue = acc.iter().fold(0.0_f64, |r, a| r.max(a.im.abs())) * prefactor;
            (acc.iter().map(|a| a.re * prefactor).collect(), residue)
        })
        .collect();
    let residue = rows.iter().fold(0.0_f64, |r, (_, x)| r.max(*x));
    let flat: Vec<f64> = rows.into_iter().flat_map(|(r, _)| r).collect();
    (Array2::from_shape_vec((n, n_p), flat).expect("shape"), residue)
}

pub fn wigner_of_density(rho: &DensityMatrix, grid: &PhaseGrid) -> Result<WignerField> {
    wigner_of_density_with(rho, grid, &Tolerances::default())
}

pub fn wigner_of_density_with(rho: &DensityMatrix, grid: &PhaseGrid, tol: &Tolerances) -> Result<WignerField> {
    if rho.axis() != grid.q_axis() {
        return Err(Error::GridMismatch(format!("density matrix axis {:?} differs from grid q axis {:?}", rho.axis(), grid.q_axis())));
    }
    check_alias_free(grid)?;
    let residue = rho.hermitian_residue();
    if residue > tol.hermitian {
        return Err(Error::NonHermitian(residue));
    }
    let ratio = rho.boundary_ratio();
    if ratio > tol.boundary_decay {
        return Err(Error::BoundaryDecay { ratio });
    }
    let (values, imag) = transform_rows(rho.entries(), grid, grid.dq() / (PI * grid.hbar()));
    if imag > tol.imaginary_residue {
        return Err(Error::ImaginaryResidue(imag));
    }
    let field = PhaseField::new(*grid, values, 0.0)?;
    let ratio = field.boundary_ratio();
    if ratio > tol.boundary_decay {
        return Err(Error::BoundaryDecay { ratio });
    }
    WignerField::new(field, tol)
}

pub fn wigner_of_pure(psi: &WaveFunction, grid: &PhaseGrid) -> Result<WignerField> {
    wigner_of_pure_with(psi, grid, &Tolerances::default())
}

pub fn wigner_of_pure_with(psi: &WaveFunction, grid: &PhaseGrid, tol: &Tolerances) -> Result<WignerField> {
    let ratio = psi.boundary_ratio();
    if ratio > tol.boundary_decay {
        return Err(Error::BoundaryDecay { ratio });
    }
    wigner_of_density_with(&DensityMatrix::pure(psi), grid, tol)
}

/// Inverse transform: the position-space kernel whose Wigner function is `w`.
///
/// Entries with `a + b` even are read from the rows of `w`; the others need `W` at
/// half-cell positions, obtained by spectral interpolation along `q`.
pub fn density_of_wigner(w: &PhaseField) -> Array2<Complex64> {
    kernel_of_symbol(w, 1.0)
}

/// Inverse of [`WeylSymbol::from_operator`].
pub fn operator_of_symbol(symbol: &WeylSymbol) -> Array2<Complex64> {
    let f = symbol.field();
    kernel_of_symbol(f, 1.0 / (2.0 * PI * f.grid().hbar()))
}

fn kernel_of_symbol(f: &PhaseField, scale: f64) -> Array2<Complex64> {
    let grid = *f.grid();
    let n = grid.n_q();
    let dq = grid.dq();
    let dp = grid.dp();
    let hbar = grid.hbar();
    let p = grid.p_axis().points();

    let mut half = f.values().clone();
    let kq = crate::spectral::half_wavenumbers(grid.q_axis());
    let mut table = Array2::from_shape_fn((grid.n_p(), kq.len()), |(_, i)| Complex64::from_polar(1.0, 0.5 * kq[i] * dq));
    real_at_nyquist(&mut table, grid.q_axis(), ndarray::Axis(1));
    Spectral::new(&grid).apply_q(&mut half, &table);

    let rows: Vec<Vec<Complex64>> = (0..n)
        .into_par_iter()
        .map(|a| {
            (0..n)
                .map(|b| {
                    let (row, src) = if (a + b) % 2 == 0 { ((a + b) / 2, f.values()) } else { ((a + b - 1) / 2, &half) };
                    let y = 0.5 * (a as f64 - b as f64) * dq;
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (k, &pk) in p.iter().enumerate() {
                        acc += src[[row, k]] * Complex64::from_polar(1.0, 2.0 * pk * y / hbar);
                    }
                    acc * dp * scale
                })
                .collect()
        })
        .collect();
    Array2::from_shape_vec((n, n), rows.into_iter().flatten().collect()).expect("shape")
}

/// Position and momentum densities `(∫W dp, ∫W dq)`.
pub fn marginals(w: &PhaseField) -> (Vec<f64>, Vec<f64>) {
    let g = w.grid();
    let (dq, dp) = (g.dq(), g.dp());
    let v = w.values();
    let position = v.rows().into_iter().map(|r| crate::phase_grid::pairwise_sum(r.as_slice().expect("layout")) * dp).collect();
    let momentum = v.columns().into_iter().map(|c| crate::phase_grid::pairwise_sum(&c.to_vec()) * dq).collect();
    (position, momentum)
}

/// `⟨A⟩ = ∫∫ A·W`, or `Re ∫∫ A ⋆ W` when `use_star` is set.
pub fn expectation(a: &WeylSymbol, w: &PhaseField, use_star: bool) -> Result<f64> {
    w.grid().ensure_same(a.grid())?;
    if use_star {
        let s = moyal::star_product(a.as_symbol_ref(), SymbolRef::Field(w), w.grid(), MAX_STAR_ORDER)?;
        return quadrature(&s.re, &w.grid().whole());
    }
    let product = PhaseField::new(*w.grid(), a.field().values() * w.values(), w.time())?;
    quadrature(&product, &w.grid().whole())
}

/// `Tr[ÂB̂] = 1/(2πħ) ∫∫ A B`.
pub fn trace_pairing(a: &WeylSymbol, b: &WeylSymbol) -> Result<f64> {
    a.grid().ensure_same(b.grid())?;
    let product = PhaseField::new(*a.grid(), a.field().values() * b.field().values(), 0.0)?;
    Ok(quadrature(&product, &a.grid().whole())? / (2.0 * PI * a.grid().hbar()))
}

/// `Tr ρ̂² = 2πħ ∫∫ W²`.
pub fn purity(w: &PhaseField) -> f64 {
    let g = w.grid();
    w.sum_rows(&g.whole(), |v| v * v) * g.cell_area() * 2.0 * PI * g.hbar()
}

/// Convenience for building a density-matrix axis matching a grid.
pub fn position_axis(grid: &PhaseGrid) -> Axis {
    *grid.q_axis()
}
