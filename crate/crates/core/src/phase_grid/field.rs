use std::ops::Deref;

use ndarray::Array2;

use super::{pairwise_sum, IndexBox, PhaseGrid};
use crate::error::{Error, Result};
use crate::tolerance::Tolerances;

/// A real function sampled on a [`PhaseGrid`] at one instant.
///
/// Values are stored row-major with `q` as the outer index and `p` inner.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseField {
    grid: PhaseGrid,
    values: Array2<f64>,
    time: f64,
}

impl PhaseField {
    pub fn new(grid: PhaseGrid, values: Array2<f64>, time: f64) -> Result<Self> {
        if values.dim() != grid.shape() {
            return Err(Error::GridMismatch(format!("values have shape {:?}, grid is {:?}", values.dim(), grid.shape())));
        }
        if let Some(((i, j), _)) = values.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite(i, j));
        }
        Ok(Self { grid, values: values.as_standard_layout().into_owned(), time })
    }

    pub fn from_fn(grid: PhaseGrid, time: f64, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let values = Array2::from_shape_fn(grid.shape(), |(i, j)| f(grid.q(i), grid.p(j)));
        Self::new(grid, values, time)
    }

    pub fn zeros(grid: PhaseGrid, time: f64) -> Self {
        Self { grid, values: Array2::zeros(grid.shape()), time }
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn into_values(self) -> Array2<f64> {
        self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut Array2<f64> {
        &mut self.values
    }

    pub(crate) fn set_time(&mut self, time: f64) {
        self.time = time;
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    /// Whole-grid quadrature.
    pub fn norm(&self) -> f64 {
        self.sum_rows(&self.grid.whole(), |v| v) * self.grid.cell_area()
    }

    /// Quadrature of `|values|`.
    pub fn abs_integral(&self) -> f64 {
        self.sum_rows(&self.grid.whole(), f64::abs) * self.grid.cell_area()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Largest `|value|` on the outermost rows and columns relative to the largest overall.
    pub fn boundary_ratio(&self) -> f64 {
        let (n_q, n_p) = self.grid.shape();
        let v = &self.values;
        let mut edge = 0.0_f64;
        for i in 0..n_q {
            edge = edge.max(v[[i, 0]].abs()).max(v[[i, n_p - 1]].abs());
        }
        for j in 0..n_p {
            edge = edge.max(v[[0, j]].abs()).max(v[[n_q - 1, j]].abs());
        }
        let peak = self.max_abs();
        if peak == 0.0 {
            0.0
        } else {
            edge / peak
        }
    }

    /// Area, in units of `hbar`, of the fewest cells carrying `fraction` of `∫|field|`.
    pub fn support_area(&self, fraction: f64) -> f64 {
        let mut mags: Vec<f64> = self.values.iter().map(|v| v.abs()).collect();
        mags.sort_by(|a, b| b.total_cmp(a));
        let total = pairwise_sum(&mags);
        if total == 0.0 {
            return 0.0;
        }
        let target = fraction * total;
        let mut acc = 0.0;
        let mut count = 0usize;
        for m in mags {
            acc += m;
            count += 1;
            if acc >= target {
                break;
            }
        }
        count as f64 * self.grid.cell_area_hbar()
    }

    /// Fixed-order sum of `f(value)` over a region: pairwise within rows, then across rows.
    pub(crate) fn sum_rows(&self, region: &IndexBox, f: impl Fn(f64) -> f64) -> f64 {
        if region.is_empty() {
            return 0.0;
        }
        let mut scratch = Vec::with_capacity(region.p.len());
        let rows: Vec<f64> = region
            .q
            .clone()
            .map(|i| {
                scratch.clear();
                let row = self.values.row(i);
                let row = row.as_slice().expect("standard layout");
                scratch.extend(row[region.p.clone()].iter().map(|&v| f(v)));
                pairwise_sum(&scratch)
            })
            .collect();
        pairwise_sum(&rows)
    }
}

/// Riemann sum `Σ_region values·dq·dp`; the whole-grid region gives the norm.
pub fn quadrature(field: &PhaseField, region: &IndexBox) -> Result<f64> {
    field.grid.check_region(region)?;
    Ok(field.sum_rows(region, |v| v) * field.grid.cell_area())
}

/// A Wigner quasi-probability field.
///
/// Construction checks finiteness, normalization, the `|W| <= 2/hbar` bound and that
/// the field is not concentrated on less than one `hbar` of phase-space area.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerField(PhaseField);

/// Mass fraction used to define the effective support.
pub(crate) const SUPPORT_FRACTION: f64 = 0.99;

impl WignerField {
    pub fn new(field: PhaseField, tol: &Tolerances) -> Result<Self> {
        let norm = field.norm();
        if (norm - 1.0).abs() > tol.normalization {
            return Err(Error::NotNormalized { norm, tol: tol.normalization });
        }
        check_bound(&field, tol)?;
        let area = field.support_area(SUPPORT_FRACTION);
        if area < 1.0 {
            return Err(Error::SubPlanckSupport { area });
        }
        Ok(Self(field))
    }

    /// Wrap a field produced by a norm-preserving evolution; only the bound is rechecked.
    pub(crate) fn from_evolved(field: PhaseField, tol: &Tolerances) -> Result<Self> {
        check_bound(&field, tol)?;
        Ok(Self(field))
    }

    pub fn field(&self) -> &PhaseField {
        &self.0
    }

    pub fn into_field(self) -> PhaseField {
        self.0
    }
}

fn check_bound(field: &PhaseField, tol: &Tolerances) -> Result<()> {
    let bound = tol.wigner_bound(field.grid.hbar());
    let max_abs = field.max_abs();
    if max_abs > bound {
        return Err(Error::BoundViolation { max_abs, bound });
    }
    Ok(())
}

impl Deref for WignerField {
    type Target = PhaseField;

    fn deref(&self) -> &PhaseField {
        &self.0
    }
}

/// A classical phase-space probability density.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalDensity(PhaseField);

impl ClassicalDensity {
    pub fn new(field: PhaseField, tol: &Tolerances) -> Result<Self> {
        if let Some(((i, j), &value)) = field.values.indexed_iter().find(|(_, &v)| v < -tol.classical_floor) {
            return Err(Error::NegativeDensity { i, j, value });
        }
        let norm = field.norm();
        if (norm - 1.0).abs() > tol.normalization {
            return Err(Error::NotNormalized { norm, tol: tol.normalization });
        }
        Ok(Self(field))
    }

    /// All mass in one cell: the discrete stand-in for a phase-space point.
    pub fn single_cell(grid: PhaseGrid, i: usize, j: usize) -> Result<Self> {
        grid.check_region(&IndexBox::new(i..i + 1, j..j + 1))?;
        let mut values = Array2::zeros(grid.shape());
        values[[i, j]] = 1.0 / grid.cell_area();
        Ok(Self(PhaseField { grid, values, time: 0.0 }))
    }

    pub(crate) fn from_evolved(field: PhaseField) -> Self {
        Self(field)
    }

    pub fn field(&self) -> &PhaseField {
        &self.0
    }

    pub fn into_field(self) -> PhaseField {
        self.0
    }
}

impl Deref for ClassicalDensity {
    type Target = PhaseField;

    fn deref(&self) -> &PhaseField {
        &self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> PhaseGrid {
        PhaseGrid::new(16, 16, (-2.0, 2.0), (-2.0, 2.0), 1.0).unwrap()
    }

    #[test]
    fn uniform_field_integrates_to_one() {
        // 4x4 area = 16 hbar.
        let f = PhaseField::from_fn(grid(), 0.0, |_, _| 1.0 / 16.0).unwrap();
        assert!((quadrature(&f, &f.grid().whole()).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(quadrature(&f, &IndexBox::empty()).unwrap(), 0.0);
        assert_eq!(quadrature(&f, &IndexBox::new(3..3, 0..16)).unwrap(), 0.0);
    }

    #[test]
    fn region_outside_grid_is_rejected() {
        let f = PhaseField::zeros(grid(), 0.0);
        assert!(matches!(quadrature(&f, &IndexBox::new(0..17, 0..4)), Err(Error::RegionOutOfBounds { .. })));
    }

    #[test]
    fn non_finite_values_are_rejected() {
        let mut v = Array2::zeros((16, 16));
        v[[3, 4]] = f64::NAN;
        assert!(matches!(PhaseField::new(grid(), v, 0.0), Err(Error::NonFinite(3, 4))));
    }

    #[test]
    fn single_cell_density_is_admissible_classically_but_not_as_wigner() {
        let rho = ClassicalDensity::single_cell(grid(), 5, 7).unwrap();
        assert!((rho.norm() - 1.0).abs() < 1e-14);
        assert!((rho.support_area(0.99) - grid().cell_area_hbar()).abs() < 1e-15);
        let err = WignerField::new(rho.field().clone(), &Tolerances::default()).unwrap_err();
        assert!(matches!(err, Error::BoundViolation { .. }));
    }

    #[test]
    fn sub_planck_support_is_refused() {
        // Four cells of 1/16 hbar each stay under the bound but cover only 1/4 hbar.
        let g = grid();
        let mut v = Array2::zeros(g.shape());
        for (i, j) in [(7, 7), (7, 8), (8, 7), (8, 8)] {
            v[[i, j]] = 1.0 / (4.0 * g.cell_area());
        }
        let f = PhaseField::new(g, v, 0.0).unwrap();
        let tol = Tolerances { bound_rel: 10.0, ..Tolerances::default() };
        assert!(matches!(WignerField::new(f, &tol), Err(Error::SubPlanckSupport { .. })));
    }
}
