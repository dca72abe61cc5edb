//! The set function `μ(B) = ∫_B W` induced on boxes, checked against the measure axioms.

use std::fmt;

use crate::error::{Error, Result};
use crate::phase_grid::{quadrature, IndexBox, PhaseField, PhaseGrid};
use crate::tolerance::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StructureClass {
    /// Normalized and additive, but signed.
    QuasiProbability,
    /// Normalized, additive and non-negative.
    ClassicalProbability,
}

impl fmt::Display for StructureClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::QuasiProbability => "quasi-probability",
            Self::ClassicalProbability => "classical-probability",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasureReport {
    pub normalized: bool,
    pub empty_is_zero: bool,
    pub finitely_additive: bool,
    pub positive: bool,
    /// `max |field|`: the density bound.
    pub bounded_by: f64,
    /// `μ(Ω)`.
    pub total: f64,
    /// Largest relative additivity defect found.
    pub additivity_error: f64,
    pub min_value: f64,
    pub classification: StructureClass,
}

impl MeasureReport {
    /// `key=value` lines in a fixed order.
    pub fn to_key_values(&self) -> String {
        format!(
            "classification={}\nnormalized={}\nempty_is_zero={}\nfinitely_additive={}\npositive={}\nbounded_by={:?}\ntotal={:?}\nadditivity_error={:?}\nmin_value={:?}\n",
            self.classification,
            self.normalized,
            self.empty_is_zero,
            self.finitely_additive,
            self.positive,
            self.bounded_by,
            self.total,
            self.additivity_error,
            self.min_value
        )
    }
}

fn check_partition(grid: &PhaseGrid, partition: &[IndexBox]) -> Result<()> {
    if partition.is_empty() {
        return Err(Error::InvalidPartition("no boxes".into()));
    }
    for b in partition {
        grid.check_region(b)?;
        if b.is_empty() {
            return Err(Error::InvalidPartition(format!("empty box {b}")));
        }
    }
    for (k, a) in partition.iter().enumerate() {
        if let Some(b) = partition[k + 1..].iter().find(|b| a.overlaps(b)) {
            return Err(Error::InvalidPartition(format!("boxes {a} and {b} overlap")));
        }
    }
    let covered: usize = partition.iter().map(IndexBox::cells).sum();
    if covered != grid.n_q() * grid.n_p() {
        return Err(Error::InvalidPartition(format!("boxes cover {covered} of {} cells", grid.n_q() * grid.n_p())));
    }
    Ok(())
}

/// The union of two boxes when it is itself a box.
fn union(a: &IndexBox, b: &IndexBox) -> Option<IndexBox> {
    if a.p == b.p && (a.q.end == b.q.start || b.q.end == a.q.start) {
        return Some(IndexBox::new(a.q.start.min(b.q.start)..a.q.end.max(b.q.end), a.p.clone()));
    }
    if a.q == b.q && (a.p.end == b.p.start || b.p.end == a.p.start) {
        return Some(IndexBox::new(a.q.clone(), a.p.start.min(b.p.start)..a.p.end.max(b.p.end)));
    }
    None
}

pub fn validate_measure(field: &PhaseField, partition: &[IndexBox]) -> Result<MeasureReport> {
    validate_measure_with(field, partition, &Tolerances::default())
}

/// Checks normalization, `μ(∅) = 0`, finite additivity (the whole against the sum of
/// the parts, and every pair of boxes whose union is a box) and positivity.
pub fn validate_measure_with(field: &PhaseField, partition: &[IndexBox], tol: &Tolerances) -> Result<MeasureReport> {
    let grid = field.grid();
    check_partition(grid, partition)?;
    let mu = |b: &IndexBox| quadrature(field, b);
    let total = mu(&grid.whole())?;
    let empty = mu(&IndexBox::empty())?;
    let parts = partition.iter().map(mu).collect::<Result<Vec<f64>>>()?;

    let relative = |defect: f64, scale: f64| defect.abs() / scale.max(f64::MIN_POSITIVE);
    let abs_sum: f64 = parts.iter().map(|v| v.abs()).sum();
    let mut additivity_error = relative(parts.iter().sum::<f64>() - total, abs_sum.max(total.abs()));
    for (k, a) in partition.iter().enumerate() {
        for (l, b) in partition.iter().enumerate().skip(k + 1) {
            if let Some(u) = union(a, b) {
                let scale = parts[k].abs() + parts[l].abs();
                if scale > 0.0 {
                    additivity_error = additivity_error.max(relative(mu(&u)? - parts[k] - parts[l], scale));
                }
            }
        }
    }

    let min_value = field.min();
    let normalized = (total - 1.0).abs() <= tol.normalization;
    let empty_is_zero = empty == 0.0;
    let finitely_additive = additivity_error <= tol.additivity;
    let positive = min_value > -tol.positivity_threshold(grid.hbar());
    let classification = if positive && normalized && finitely_additive && empty_is_zero {
        StructureClass::ClassicalProbability
    } else {
        StructureClass::QuasiProbability
    };
    Ok(MeasureReport {
        normalized,
        empty_is_zero,
        finitely_additive,
        positive,
        bounded_by: field.max_abs(),
        total,
        additivity_error,
        min_value,
        classification,
    })
}

/// `blocks_q x blocks_p` boxes of near-equal size covering the grid.
pub fn uniform_partition(grid: &PhaseGrid, blocks_q: usize, blocks_p: usize) -> Result<Vec<IndexBox>> {
    if blocks_q == 0 || blocks_p == 0 || blocks_q > grid.n_q() || blocks_p > grid.n_p() {
        return Err(Error::InvalidPartition(format!("{blocks_q}x{blocks_p} blocks on {grid}")));
    }
    let cuts = |n: usize, k: usize| (0..=k).map(|i| i * n / k).collect::<Vec<_>>();
    let (cq, cp) = (cuts(grid.n_q(), blocks_q), cuts(grid.n_p(), blocks_p));
    Ok(cq.windows(2).flat_map(|a| cp.windows(2).map(move |b| IndexBox::new(a[0]..a[1], b[0]..b[1]))).collect())
}

/// `uniform:NQxNP`, or boxes `q0:q1,p0:p1` separated by `;` (half-open index ranges).
pub fn parse_partition(spec: &str, grid: &PhaseGrid) -> Result<Vec<IndexBox>> {
    let bad = || Error::InvalidPartition(format!("cannot parse {spec:?}"));
    let spec = spec.trim();
    if let Some(rest) = spec.strip_prefix("uniform:") {
        let (a, b) = rest.split_once('x').ok_or_else(bad)?;
        return uniform_partition(grid, a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
    }
    let range = |s: &str| -> Result<std::ops::Range<usize>> {
        let (a, b) = s.split_once(':').ok_or_else(bad)?;
        Ok(a.trim().parse().map_err(|_| bad())?..b.trim().parse().map_err(|_| bad())?)
    };
    spec.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|b| {
            let (q, p) = b.split_once(',').ok_or_else(bad)?;
            Ok(IndexBox::new(range(q)?, range(p)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> PhaseGrid {
        PhaseGrid::new(16, 16, (-4.0, 4.0), (-4.0, 4.0), 1.0).unwrap()
    }

    #[test]
    fn overlapping_boxes_are_rejected() {
        let g = grid();
        let part = vec![IndexBox::new(0..10, 0..16), IndexBox::new(8..16, 0..16)];
        assert!(matches!(validate_measure(&PhaseField::zeros(g, 0.0), &part), Err(Error::InvalidPartition(_))));
    }

    #[test]
    fn gaps_are_rejected() {
        let g = grid();
        let part = vec![IndexBox::new(0..8, 0..16)];
        assert!(matches!(validate_measure(&PhaseField::zeros(g, 0.0), &part), Err(Error::InvalidPartition(_))));
    }

    #[test]
    fn parse_forms() {
        let g = grid();
        assert_eq!(parse_partition("uniform:2x4", &g).unwrap().len(), 8);
        let boxes = parse_partition("0:8,0:16; 8:16,0:16", &g).unwrap();
        assert_eq!(boxes[1], IndexBox::new(8..16, 0..16));
        assert!(parse_partition("0-8,0:16", &g).is_err());
    }

    #[test]
    fn signed_field_is_quasi() {
        let g = grid();
        let f = PhaseField::from_fn(g, 0.0, |q, p| {
            let r2 = q * q + p * p;
            (2.0 * r2 - 1.0) * (-r2).exp() / std::f64::consts::PI
        })
        .unwrap();
        let r = validate_measure(&f, &uniform_partition(&g, 4, 4).unwrap()).unwrap();
        assert!(!r.positive);
        assert!(r.finitely_additive);
        assert_eq!(r.classification, StructureClass::QuasiProbability);
    }
}
