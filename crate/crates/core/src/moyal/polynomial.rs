use std::collections::BTreeMap;
use std::fmt;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::phase_grid::PhaseGrid;

/// Largest total degree accepted for a symbol entering a bracket or star product.
pub const MAX_DEGREE: u32 = 8;

/// A real polynomial `Σ c_jk q^j p^k` on phase space.
///
/// Coefficients are kept sparse and exact; zero coefficients are never stored.
/// Symbols built by the user are limited to [`MAX_DEGREE`]; products and brackets
/// of such symbols may exceed it.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PolynomialSymbol {
    terms: BTreeMap<(u32, u32), f64>,
}

impl PolynomialSymbol {
    pub fn new(terms: impl IntoIterator<Item = ((u32, u32), f64)>) -> Result<Self> {
        let s = Self::raw(terms);
        if s.degree() > MAX_DEGREE {
            return Err(Error::DegreeOverflow { degree: s.degree(), limit: MAX_DEGREE });
        }
        if let Some(c) = s.terms.values().find(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite coefficient {c}")));
        }
        Ok(s)
    }

    pub(crate) fn raw(terms: impl IntoIterator<Item = ((u32, u32), f64)>) -> Self {
        let mut map = BTreeMap::new();
        for (key, c) in terms {
            *map.entry(key).or_insert(0.0) += c;
        }
        map.retain(|_, c| *c != 0.0);
        Self { terms: map }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self::raw([((0, 0), c)])
    }

    pub fn monomial(j: u32, k: u32, c: f64) -> Result<Self> {
        Self::new([((j, k), c)])
    }

    pub fn q() -> Self {
        Self::raw([((1, 0), 1.0)])
    }

    pub fn p() -> Self {
        Self::raw([((0, 1), 1.0)])
    }

    /// `V(q) = Σ_j coeffs[j]·q^j`.
    pub fn potential(coeffs: &[f64]) -> Result<Self> {
        Self::new(coeffs.iter().enumerate().map(|(j, &c)| ((j as u32, 0), c)))
    }

    pub fn terms(&self) -> impl Iterator<Item = ((u32, u32), f64)> + '_ {
        self.terms.iter().map(|(&k, &c)| (k, c))
    }

    pub fn coefficient(&self, j: u32, k: u32) -> f64 {
        self.terms.get(&(j, k)).copied().unwrap_or(0.0)
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|(j, k)| j + k).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn depends_on_p(&self) -> bool {
        self.terms.keys().any(|&(_, k)| k > 0)
    }

    /// `∂_q^a ∂_p^b`.
    pub fn derivative(&self, a: u32, b: u32) -> Self {
        Self::raw(
            self.terms().filter(|&((j, k), _)| j >= a && k >= b).map(|((j, k), c)| ((j - a, k - b), c * falling(j, a) * falling(k, b))),
        )
    }

    pub fn eval(&self, q: f64, p: f64) -> f64 {
        self.terms().map(|((j, k), c)| c * q.powi(j as i32) * p.powi(k as i32)).sum()
    }

    pub fn sample(&self, grid: &PhaseGrid) -> Array2<f64> {
        Array2::from_shape_fn(grid.shape(), |(i, j)| self.eval(grid.q(i), grid.p(j)))
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::raw(self.terms().map(|(k, c)| (k, c * s)))
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::raw(self.terms().chain(other.terms()))
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Vec::with_capacity(self.terms.len() * other.terms.len());
        for ((j1, k1), c1) in self.terms() {
            for ((j2, k2), c2) in other.terms() {
                out.push(((j1 + j2, k1 + k2), c1 * c2));
            }
        }
        Self::raw(out)
    }

    /// Largest coefficient magnitude of `self - other`.
    pub fn max_coefficient_diff(&self, other: &Self) -> f64 {
        self.sub(other).terms().fold(0.0_f64, |m, (_, c)| m.max(c.abs()))
    }

    pub(crate) fn check_degree(&self) -> Result<()> {
        if self.degree() > MAX_DEGREE {
            return Err(Error::DegreeOverflow { degree: self.degree(), limit: MAX_DEGREE });
        }
        Ok(())
    }

    /// Parses `j,k,coefficient` lines; blank lines and `#` comments are skipped.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut terms = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let bad = || Error::InvalidArgument(format!("line {}: expected j,k,coefficient, got {line:?}", n + 1));
            if fields.len() != 3 {
                return Err(bad());
            }
            let j: u32 = fields[0].parse().map_err(|_| bad())?;
            let k: u32 = fields[1].parse().map_err(|_| bad())?;
            let c: f64 = fields[2].parse().map_err(|_| bad())?;
            terms.push(((j, k), c));
        }
        Self::new(terms)
    }

    pub fn to_csv(&self) -> String {
        self.terms().map(|((j, k), c)| format!("{j},{k},{c:?}\n")).collect()
    }
}

impl fmt::Display for PolynomialSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms()
            .map(|((j, k), c)| {
                let mut s = format!("{c}");
                if j > 0 {
                    s += &if j == 1 { "·q".to_string() } else { format!("·q^{j}") };
                }
                if k > 0 {
                    s += &if k == 1 { "·p".to_string() } else { format!("·p^{k}") };
                }
                s
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// `n (n-1) ... (n-a+1)`.
fn falling(n: u32, a: u32) -> f64 {
    (0..a).map(|i| (n - i) as f64).product()
}

pub(crate) fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

pub(crate) fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}
