//! Star product, Moyal bracket and Poisson bracket.
//!
//! With the bidifferential operator `Λ = ←∂_q →∂_p − ←∂_p →∂_q`,
//!
//! ```text
//! A ⋆ B     = Σ_n (iħ/2)^n / n! · A Λ^n B
//! {{A, B}}  = (A ⋆ B − B ⋆ A)/(iħ) = Σ_ℓ (−1)^ℓ (ħ/2)^{2ℓ} / (2ℓ+1)! · A Λ^{2ℓ+1} B
//! ```
//!
//! so that `(q ⋆ p − p ⋆ q)/(iħ) = 1` and the `ℓ = 0` term of the bracket is the
//! Poisson bracket `{A, B} = ∂_qA ∂_pB − ∂_pA ∂_qB`.
//!
//! Two evaluation paths exist. Polynomial symbols are handled by exact coefficient
//! algebra, where every series terminates. Grid fields are differentiated spectrally,
//! which requires them to decay at the boundary; polynomial factors of a mixed
//! product are still differentiated exactly.

pub(crate) mod polynomial;

pub use polynomial::{PolynomialSymbol, MAX_DEGREE};

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::phase_grid::{PhaseField, PhaseGrid};
use crate::spectral::Spectral;
use crate::tolerance::Tolerances;
use polynomial::{binomial, factorial};

/// Highest power of `ħ` kept by [`star_product`].
pub const MAX_STAR_ORDER: usize = 6;

/// `A Λ^n B` for polynomials.
fn lambda_power(a: &PolynomialSymbol, b: &PolynomialSymbol, n: u32) -> PolynomialSymbol {
    let mut acc = PolynomialSymbol::zero();
    for s in 0..=n {
        let da = a.derivative(n - s, s);
        let db = b.derivative(s, n - s);
        if da.is_zero() || db.is_zero() {
            continue;
        }
        let sign = if s % 2 == 0 { 1.0 } else { -1.0 };
        acc = acc.add(&da.mul(&db).scale(sign * binomial(n, s)));
    }
    acc
}

pub fn poisson_bracket(a: &PolynomialSymbol, b: &PolynomialSymbol) -> PolynomialSymbol {
    lambda_power(a, b, 1)
}

/// The Moyal bracket split into its `ħ`-orders.
#[derive(Debug, Clone, PartialEq)]
pub struct BracketExpansion {
    pub hbar: f64,
    /// `terms[ℓ]` already carries the factor `(−1)^ℓ (ħ/2)^{2ℓ}/(2ℓ+1)!`.
    pub terms: Vec<PolynomialSymbol>,
}

impl BracketExpansion {
    pub fn poisson(&self) -> &PolynomialSymbol {
        &self.terms[0]
    }

    pub fn sum(&self) -> PolynomialSymbol {
        self.terms.iter().fold(PolynomialSymbol::zero(), |acc, t| acc.add(t))
    }

    /// Everything beyond the Poisson term.
    pub fn correction(&self) -> PolynomialSymbol {
        self.terms[1..].iter().fold(PolynomialSymbol::zero(), |acc, t| acc.add(t))
    }
}

fn bracket_coefficient(l: u32, hbar: f64) -> f64 {
    let sign = if l.is_multiple_of(2) { 1.0 } else { -1.0 };
    sign * (0.5 * hbar).powi(2 * l as i32) / factorial(2 * l + 1)
}

/// Exact Moyal bracket of two polynomial symbols; the series stops at the last
/// order that can be non-zero.
pub fn moyal_bracket(a: &PolynomialSymbol, b: &PolynomialSymbol, hbar: f64) -> Result<BracketExpansion> {
    a.check_degree()?;
    b.check_degree()?;
    let top = a.degree().min(b.degree());
    let mut terms = vec![poisson_bracket(a, b)];
    let mut l = 1;
    while 2 * l < top {
        terms.push(lambda_power(a, b, 2 * l + 1).scale(bracket_coefficient(l, hbar)));
        l += 1;
    }
    Ok(BracketExpansion { hbar, terms })
}

/// `A ⋆ B = re + i·im`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexPolynomial {
    pub re: PolynomialSymbol,
    pub im: PolynomialSymbol,
}

/// Exact star product of polynomials, truncated after `ħ^order`.
pub fn star_product_poly(a: &PolynomialSymbol, b: &PolynomialSymbol, hbar: f64, order: usize) -> Result<ComplexPolynomial> {
    if order > MAX_STAR_ORDER {
        return Err(Error::OrderOverflow { order, limit: MAX_STAR_ORDER });
    }
    a.check_degree()?;
    b.check_degree()?;
    let mut re = PolynomialSymbol::zero();
    let mut im = PolynomialSymbol::zero();
    for n in 0..=order as u32 {
        let term = lambda_power(a, b, n).scale((0.5 * hbar).powi(n as i32) / factorial(n));
        // i^n
        match n % 4 {
            0 => re = re.add(&term),
            1 => im = im.add(&term),
            2 => re = re.sub(&term),
            _ => im = im.sub(&term),
        }
    }
    Ok(ComplexPolynomial { re, im })
}

/// A symbol on the grid: either an exact polynomial or sampled values.
#[derive(Debug, Clone, Copy)]
pub enum SymbolRef<'a> {
    Poly(&'a PolynomialSymbol),
    Field(&'a PhaseField),
}

impl<'a> From<&'a PolynomialSymbol> for SymbolRef<'a> {
    fn from(p: &'a PolynomialSymbol) -> Self {
        SymbolRef::Poly(p)
    }
}

impl<'a> From<&'a PhaseField> for SymbolRef<'a> {
    fn from(f: &'a PhaseField) -> Self {
        SymbolRef::Field(f)
    }
}

impl SymbolRef<'_> {
    fn check(&self, grid: &PhaseGrid, tol: &Tolerances) -> Result<()> {
        if let SymbolRef::Field(f) = self {
            grid.ensure_same(f.grid())?;
            let ratio = f.boundary_ratio();
            if ratio > tol.boundary_decay {
                return Err(Error::BoundaryDecay { ratio });
            }
        }
        Ok(())
    }

    fn derivative(&self, grid: &PhaseGrid, spectral: &mut Spectral, a: u32, b: u32) -> Array2<f64> {
        match self {
            SymbolRef::Poly(p) => p.derivative(a, b).sample(grid),
            SymbolRef::Field(f) => spectral.derivative(f.values(), grid, a, b),
        }
    }
}

fn field_lambda_power(a: SymbolRef<'_>, b: SymbolRef<'_>, n: u32, grid: &PhaseGrid, spectral: &mut Spectral) -> Array2<f64> {
    let mut acc = Array2::zeros(grid.shape());
    for s in 0..=n {
        if let (SymbolRef::Poly(pa), SymbolRef::Poly(pb)) = (a, b) {
            if pa.derivative(n - s, s).is_zero() || pb.derivative(s, n - s).is_zero() {
                continue;
            }
        }
        let da = a.derivative(grid, spectral, n - s, s);
        let db = b.derivative(grid, spectral, s, n - s);
        let w = if s % 2 == 0 { 1.0 } else { -1.0 } * binomial(n, s);
        ndarray::Zip::from(&mut acc).and(&da).and(&db).for_each(|o, x, y| *o += w * x * y);
    }
    acc
}

/// Real and imaginary parts of a star product on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    pub re: PhaseField,
    pub im: PhaseField,
}

/// Spectral star product truncated after `ħ^order`; order 0 is the pointwise product.
pub fn star_product(a: SymbolRef<'_>, b: SymbolRef<'_>, grid: &PhaseGrid, order: usize) -> Result<ComplexField> {
    if order > MAX_STAR_ORDER {
        return Err(Error::OrderOverflow { order, limit: MAX_STAR_ORDER });
    }
    let tol = Tolerances::default();
    a.check(grid, &tol)?;
    b.check(grid, &tol)?;
    let mut spectral = Spectral::new(grid);
    let hbar = grid.hbar();
    let mut re = Array2::zeros(grid.shape());
    let mut im = Array2::zeros(grid.shape());
    for n in 0..=order as u32 {
        let term = field_lambda_power(a, b, n, grid, &mut spectral);
        let c = (0.5 * hbar).powi(n as i32) / factorial(n);
        let (target, sign) = match n % 4 {
            0 => (&mut re, 1.0),
            1 => (&mut im, 1.0),
            2 => (&mut re, -1.0),
            _ => (&mut im, -1.0),
        };
        target.scaled_add(sign * c, &term);
    }
    Ok(ComplexField { re: PhaseField::new(*grid, re, 0.0)?, im: PhaseField::new(*grid, im, 0.0)? })
}

/// Moyal bracket of grid symbols, one field per `ħ`-order.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldBracketExpansion {
    pub terms: Vec<PhaseField>,
    pub sum: PhaseField,
}

pub fn poisson_bracket_field(a: SymbolRef<'_>, b: SymbolRef<'_>, grid: &PhaseGrid) -> Result<PhaseField> {
    let tol = Tolerances::default();
    a.check(grid, &tol)?;
    b.check(grid, &tol)?;
    let mut spectral = Spectral::new(grid);
    PhaseField::new(*grid, field_lambda_power(a, b, 1, grid, &mut spectral), 0.0)
}

/// Spectral Moyal bracket keeping terms `ℓ = 0..=max_l`.
pub fn moyal_bracket_field(a: SymbolRef<'_>, b: SymbolRef<'_>, grid: &PhaseGrid, max_l: usize) -> Result<FieldBracketExpansion> {
    if 2 * max_l + 1 > MAX_STAR_ORDER + 1 {
        return Err(Error::OrderOverflow { order: 2 * max_l + 1, limit: MAX_STAR_ORDER + 1 });
    }
    let tol = Tolerances::default();
    a.check(grid, &tol)?;
    b.check(grid, &tol)?;
    let mut spectral = Spectral::new(grid);
    let mut sum = Array2::zeros(grid.shape());
    let mut terms = Vec::with_capacity(max_l + 1);
    for l in 0..=max_l as u32 {
        let mut t = field_lambda_power(a, b, 2 * l + 1, grid, &mut spectral);
        t *= bracket_coefficient(l, grid.hbar());
        sum += &t;
        terms.push(PhaseField::new(*grid, t, 0.0)?);
    }
    Ok(FieldBracketExpansion { terms, sum: PhaseField::new(*grid, sum, 0.0)? })
}
