//! Uniform discretization of the single-particle phase space `(q, p)`.
//!
//! Samples sit at `q_i = q_min + i*dq` with `dq = (q_max - q_min)/n_q` (and likewise
//! for `p`). A sample is treated as the centre of a cell of area `dq*dp`, so the
//! Riemann sum of a region is the midpoint rule over the union of its cells.

pub(crate) mod field;
pub mod io;
mod state;

pub use field::{quadrature, ClassicalDensity, PhaseField, WignerField};
pub use state::{DensityMatrix, WaveFunction};

use std::fmt;
use std::ops::Range;

use crate::error::{Error, Result};

/// Smallest number of samples along either axis.
pub const MIN_SAMPLES: usize = 8;

/// A uniform grid along one axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub n: usize,
    pub min: f64,
    pub max: f64,
}

impl Axis {
    pub fn new(n: usize, min: f64, max: f64) -> Result<Self> {
        if n < MIN_SAMPLES {
            return Err(Error::InvalidGrid(format!("{n} samples, need at least {MIN_SAMPLES}")));
        }
        if !(min.is_finite() && max.is_finite()) || max <= min {
            return Err(Error::InvalidGrid(format!("unordered bounds ({min}, {max})")));
        }
        Ok(Self { n, min, max })
    }

    #[inline]
    pub fn step(&self) -> f64 {
        (self.max - self.min) / self.n as f64
    }

    #[inline]
    pub fn length(&self) -> f64 {
        self.max - self.min
    }

    #[inline]
    pub fn point(&self, i: usize) -> f64 {
        self.min + i as f64 * self.step()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.point(i)).collect()
    }

    /// Largest `|x|` over the sample points.
    pub fn max_abs(&self) -> f64 {
        self.min.abs().max(self.point(self.n - 1).abs())
    }

    /// Angular wavenumbers in FFT order: `2*pi/L * (0, 1, .., n/2 - 1, -n/2, .., -1)`.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.n as isize;
        let scale = 2.0 * std::f64::consts::PI / self.length();
        (0..n).map(|i| if i < (n + 1) / 2 { i } else { i - n }).map(|i| scale * i as f64).collect()
    }

    /// Index of the unpaired Nyquist mode, if the axis has one.
    pub fn nyquist(&self) -> Option<usize> {
        self.n.is_multiple_of(2).then_some(self.n / 2)
    }
}

/// Discretized phase space with its action scale `hbar`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseGrid {
    q: Axis,
    p: Axis,
    hbar: f64,
}

impl PhaseGrid {
    pub fn new(n_q: usize, n_p: usize, q_bounds: (f64, f64), p_bounds: (f64, f64), hbar: f64) -> Result<Self> {
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(Error::InvalidGrid(format!("hbar must be positive, got {hbar}")));
        }
        Ok(Self { q: Axis::new(n_q, q_bounds.0, q_bounds.1)?, p: Axis::new(n_p, p_bounds.0, p_bounds.1)?, hbar })
    }

    pub fn q_axis(&self) -> &Axis {
        &self.q
    }

    pub fn p_axis(&self) -> &Axis {
        &self.p
    }

    pub fn n_q(&self) -> usize {
        self.q.n
    }

    pub fn n_p(&self) -> usize {
        self.p.n
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.q.n, self.p.n)
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn dq(&self) -> f64 {
        self.q.step()
    }

    pub fn dp(&self) -> f64 {
        self.p.step()
    }

    pub fn q(&self, i: usize) -> f64 {
        self.q.point(i)
    }

    pub fn p(&self, j: usize) -> f64 {
        self.p.point(j)
    }

    pub fn cell_area(&self) -> f64 {
        self.dq() * self.dp()
    }

    /// Cell area measured in units of `hbar`.
    pub fn cell_area_hbar(&self) -> f64 {
        self.cell_area() / self.hbar
    }

    /// Same sampling with a different action scale.
    pub fn with_hbar(&self, hbar: f64) -> Result<Self> {
        Self::new(self.q.n, self.p.n, (self.q.min, self.q.max), (self.p.min, self.p.max), hbar)
    }

    /// The grid obtained by merging `factor x factor` blocks of cells.
    pub fn decimated(&self, factor: usize) -> Result<Self> {
        if factor == 0 || !self.q.n.is_multiple_of(factor) || !self.p.n.is_multiple_of(factor) {
            return Err(Error::InvalidArgument(format!("cell factor {factor} does not divide {}x{}", self.q.n, self.p.n)));
        }
        let n_q = self.q.n / factor;
        let n_p = self.p.n / factor;
        // Coarse cell centres are the centres of the merged blocks.
        let shift_q = 0.5 * (factor as f64 - 1.0) * self.dq();
        let shift_p = 0.5 * (factor as f64 - 1.0) * self.dp();
        Ok(Self {
            q: Axis { n: n_q, min: self.q.min + shift_q, max: self.q.max + shift_q },
            p: Axis { n: n_p, min: self.p.min + shift_p, max: self.p.max + shift_p },
            hbar: self.hbar,
        })
    }

    /// The whole grid as a region.
    pub fn whole(&self) -> IndexBox {
        IndexBox::new(0..self.q.n, 0..self.p.n)
    }

    pub fn check_region(&self, region: &IndexBox) -> Result<()> {
        if region.q.end > self.q.n || region.p.end > self.p.n {
            return Err(Error::RegionOutOfBounds { region: region.to_string(), n_q: self.q.n, n_p: self.p.n });
        }
        Ok(())
    }

    pub fn ensure_same(&self, other: &PhaseGrid) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!("{self} vs {other}")));
        }
        Ok(())
    }
}

/// Builds a grid; same as [`PhaseGrid::new`].
pub fn make_grid(n_q: usize, n_p: usize, q_bounds: (f64, f64), p_bounds: (f64, f64), hbar: f64) -> Result<PhaseGrid> {
    PhaseGrid::new(n_q, n_p, q_bounds, p_bounds, hbar)
}

impl fmt::Display for PhaseGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}x{} over [{}, {}) x [{}, {}), hbar = {}",
            self.q.n, self.p.n, self.q.min, self.q.max, self.p.min, self.p.max, self.hbar
        )
    }
}

/// A rectangular block of cells, half-open in both indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IndexBox {
    pub q: Range<usize>,
    pub p: Range<usize>,
}

impl IndexBox {
    pub fn new(q: Range<usize>, p: Range<usize>) -> Self {
        Self { q, p }
    }

    pub fn empty() -> Self {
        Self { q: 0..0, p: 0..0 }
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty() || self.p.is_empty()
    }

    pub fn cells(&self) -> usize {
        self.q.len() * self.p.len()
    }

    pub fn overlaps(&self, other: &IndexBox) -> bool {
        !self.is_empty()
            && !other.is_empty()
            && self.q.start < other.q.end
            && other.q.start < self.q.end
            && self.p.start < other.p.end
            && other.p.start < self.p.end
    }

    /// Physical extent `((q_lo, q_hi), (p_lo, p_hi))` of the union of the cells.
    pub fn extent(&self, grid: &PhaseGrid) -> ((f64, f64), (f64, f64)) {
        let (dq, dp) = (grid.dq(), grid.dp());
        (
            (grid.q(self.q.start) - 0.5 * dq, grid.q(self.q.start) + (self.q.len() as f64 - 0.5) * dq),
            (grid.p(self.p.start) - 0.5 * dp, grid.p(self.p.start) + (self.p.len() as f64 - 0.5) * dp),
        )
    }
}

impl fmt::Display for IndexBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}..{}, {}..{}]", self.q.start, self.q.end, self.p.start, self.p.end)
    }
}

/// Fixed-order pairwise summation; the result depends only on the slice contents.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 16;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacings_follow_definitions() {
        let g = PhaseGrid::new(64, 64, (-8.0, 8.0), (-8.0, 8.0), 1.0).unwrap();
        assert_eq!(g.dq(), 0.25);
        assert_eq!(g.dp(), 0.25);
        assert_eq!(g.cell_area_hbar(), 0.0625);
        assert_eq!(g.q(0), -8.0);
        assert_eq!(g.q(63), 7.75);
    }

    #[test]
    fn minimal_grid() {
        let g = PhaseGrid::new(8, 8, (0.0, 1.0), (0.0, 1.0), 1.0).unwrap();
        assert_eq!(g.dq(), 0.125);
        assert_eq!(g.dp(), 0.125);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(matches!(PhaseGrid::new(64, 64, (-8.0, 8.0), (8.0, -8.0), 1.0), Err(Error::InvalidGrid(_))));
        assert!(PhaseGrid::new(7, 64, (-8.0, 8.0), (-8.0, 8.0), 1.0).is_err());
        assert!(PhaseGrid::new(64, 64, (-8.0, 8.0), (-8.0, 8.0), 0.0).is_err());
        assert!(PhaseGrid::new(64, 64, (-8.0, 8.0), (-8.0, 8.0), -1.0).is_err());
    }

    #[test]
    fn wavenumbers_in_fft_order() {
        let a = Axis::new(8, 0.0, 2.0 * std::f64::consts::PI).unwrap();
        let k: Vec<f64> = a.wavenumbers().iter().map(|k| k.round()).collect();
        assert_eq!(k, vec![0.0, 1.0, 2.0, 3.0, -4.0, -3.0, -2.0, -1.0]);
        assert_eq!(a.nyquist(), Some(4));
    }

    #[test]
    fn decimated_grid_keeps_bounds_of_cells() {
        let g = PhaseGrid::new(16, 16, (0.0, 16.0), (0.0, 16.0), 1.0).unwrap();
        let c = g.decimated(4).unwrap();
        assert_eq!(c.shape(), (4, 4));
        assert_eq!(c.dq(), 4.0);
        assert_eq!(c.q(0), 1.5);
        assert!(g.decimated(3).is_err());
    }

    #[test]
    fn box_extent_covers_cells() {
        let g = PhaseGrid::new(16, 16, (0.0, 16.0), (0.0, 16.0), 1.0).unwrap();
        let b = IndexBox::new(2..6, 0..16);
        assert_eq!(b.extent(&g), ((1.5, 5.5), (-0.5, 15.5)));
    }
}
