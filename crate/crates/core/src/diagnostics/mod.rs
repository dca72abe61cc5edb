//! Measurements on fields and trajectories.

mod flux;
mod measure;

pub(crate) use flux::{check_flux_region, time_derivative};
pub use flux::{
    coarse_factor, coarse_flux_comparison, flux_deviation, lattice_residuals, tiled_flux_deviation, FluxComparison, TileLattice,
    MIN_REGION_CELLS,
};
pub use measure::{parse_partition, uniform_partition, validate_measure, validate_measure_with, MeasureReport, StructureClass};

use std::io::Write;

use ndarray::Array2;
use rayon::prelude::*;

use crate::dynamics::{HamiltonianSpec, Trajectory};
use crate::error::{Error, Result};
use crate::moyal::PolynomialSymbol;
use crate::phase_grid::{field::SUPPORT_FRACTION, PhaseField};
use crate::tolerance::Tolerances;
use crate::weyl::{self, WeylSymbol};

/// One row of the diagnostics time series.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRecord {
    pub time: f64,
    pub norm: f64,
    pub min_value: f64,
    pub negativity_volume: f64,
    pub purity: f64,
    pub mean_q: f64,
    pub mean_p: f64,
    pub var_q: f64,
    pub var_p: f64,
    /// One entry per tracked region; `NaN` when the trajectory is too short for a time derivative.
    pub flux_deviation: Vec<f64>,
    /// In units of `ħ`.
    pub support_area: f64,
    pub positive: bool,
}

impl DiagnosticsRecord {
    pub fn of_field(field: &PhaseField, tol: &Tolerances) -> Self {
        let g = field.grid();
        let v = field.values();
        let (mut m0, mut mq, mut mp, mut mqq, mut mpp) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (i, row) in v.rows().into_iter().enumerate() {
            let q = g.q(i);
            let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
            for (j, &w) in row.iter().enumerate() {
                let p = g.p(j);
                s0 += w;
                s1 += p * w;
                s2 += p * p * w;
            }
            m0 += s0;
            mq += q * s0;
            mqq += q * q * s0;
            mp += s1;
            mpp += s2;
        }
        let cell = g.cell_area();
        let (mean_q, mean_p) = (mq * cell, mp * cell);
        let min_value = field.min();
        Self {
            time: field.time(),
            norm: m0 * cell,
            min_value,
            negativity_volume: negativity_volume(field),
            purity: weyl::purity(field),
            mean_q,
            mean_p,
            var_q: mqq * cell - mean_q * mean_q,
            var_p: mpp * cell - mean_p * mean_p,
            flux_deviation: Vec::new(),
            support_area: effective_support_area(field),
            positive: min_value > -tol.positivity_threshold(g.hbar()),
        }
    }

    pub fn csv_row(&self) -> String {
        let mut cols = vec![
            self.time,
            self.norm,
            self.min_value,
            self.negativity_volume,
            self.purity,
            self.mean_q,
            self.mean_p,
            self.var_q,
            self.var_p,
        ];
        cols.extend(&self.flux_deviation);
        cols.push(self.support_area);
        let mut row: Vec<String> = cols.iter().map(|c| format!("{c:?}")).collect();
        row.push(self.positive.to_string());
        row.join(",")
    }
}

pub fn csv_header(n_regions: usize) -> String {
    let mut cols: Vec<String> = ["time", "norm", "min_value", "negativity_volume", "purity", "mean_q", "mean_p", "var_q", "var_p"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    cols.extend((0..n_regions).map(|k| format!("flux_dev_region{k}")));
    cols.push("support_area".into());
    cols.push("positive".into());
    cols.join(",")
}

pub fn write_diagnostics_csv(mut out: impl Write, records: &[DiagnosticsRecord]) -> Result<()> {
    let n = records.first().map_or(0, |r| r.flux_deviation.len());
    writeln!(out, "{}", csv_header(n))?;
    for r in records {
        writeln!(out, "{}", r.csv_row())?;
    }
    Ok(())
}

pub(crate) fn trajectory_records(traj: &Trajectory) -> Result<Vec<DiagnosticsRecord>> {
    let tol = traj.tolerances();
    let mut records: Vec<DiagnosticsRecord> = traj.snapshots().par_iter().map(|s| DiagnosticsRecord::of_field(s, tol)).collect();
    for region in traj.regions() {
        let series = match flux_deviation(traj, region) {
            Ok(s) => s,
            Err(Error::InsufficientData(_)) => vec![f64::NAN; records.len()],
            Err(e) => return Err(e),
        };
        for (r, f) in records.iter_mut().zip(series) {
            r.flux_deviation.push(f);
        }
    }
    Ok(records)
}

/// `∫|W| − ∫W`, i.e. twice the negative mass; equals `∫|W| − 1` for a normalized field.
pub fn negativity_volume(field: &PhaseField) -> f64 {
    field.abs_integral() - field.norm()
}

/// Area, in units of `ħ`, of the fewest cells carrying 99% of `∫|field|`.
pub fn effective_support_area(field: &PhaseField) -> f64 {
    field.support_area(SUPPORT_FRACTION)
}

/// First snapshot time from which the field stays positive for the sustain count.
pub fn positivity_time(traj: &Trajectory) -> Option<f64> {
    let sustain = traj.tolerances().positivity_sustain.max(1);
    let records = traj.records();
    let mut run = 0;
    for (k, r) in records.iter().enumerate() {
        run = if r.positive { run + 1 } else { 0 };
        if run == sustain {
            return Some(records[k + 1 - sustain].time);
        }
    }
    None
}

/// Block averages over `factor x factor` cells, on the grid with merged cells.
pub fn coarse_grain(field: &PhaseField, factor: usize) -> Result<PhaseField> {
    let grid = field.grid().decimated(factor)?;
    let v = field.values();
    let scale = 1.0 / (factor * factor) as f64;
    let values = Array2::from_shape_fn(grid.shape(), |(a, b)| {
        let block = v.slice(ndarray::s![a * factor..(a + 1) * factor, b * factor..(b + 1) * factor]);
        block.rows().into_iter().map(|r| r.sum()).sum::<f64>() * scale
    });
    PhaseField::new(grid, values, field.time())
}

/// Finite-difference moment equations compared with their right-hand sides.
#[derive(Debug, Clone, PartialEq)]
pub struct EhrenfestReport {
    pub times: Vec<f64>,
    pub mean_q: Vec<f64>,
    pub mean_p: Vec<f64>,
    /// `⟨V'(q)⟩`.
    pub mean_force_gradient: Vec<f64>,
    /// `d⟨q⟩/dt − ⟨p⟩/m`.
    pub position_residual: Vec<f64>,
    /// `d⟨p⟩/dt + ⟨V'⟩`.
    pub momentum_residual: Vec<f64>,
}

impl EhrenfestReport {
    pub fn max_position_residual(&self) -> f64 {
        self.position_residual.iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    pub fn max_momentum_residual(&self) -> f64 {
        self.momentum_residual.iter().fold(0.0, |m, r| m.max(r.abs()))
    }
}

/// `d⟨q⟩/dt = ⟨p⟩/m` and `d⟨p⟩/dt = −⟨V'⟩`, checked on any trajectory.
///
/// Quantum and classical trajectories go through exactly the same code: the
/// snapshots are weighted by the same symbols through [`weyl::expectation`].
pub fn ehrenfest_check(traj: &Trajectory, h: &HamiltonianSpec) -> Result<EhrenfestReport> {
    let grid = traj.grid();
    let q = WeylSymbol::from_polynomial(PolynomialSymbol::q(), grid)?;
    let p = WeylSymbol::from_polynomial(PolynomialSymbol::p(), grid)?;
    let force = WeylSymbol::from_polynomial(h.force_gradient(), grid)?;
    let moments = traj
        .snapshots()
        .par_iter()
        .map(|s| Ok((weyl::expectation(&q, s, false)?, weyl::expectation(&p, s, false)?, weyl::expectation(&force, s, false)?)))
        .collect::<Result<Vec<_>>>()?;
    let times = traj.times();
    let mean_q: Vec<f64> = moments.iter().map(|m| m.0).collect();
    let mean_p: Vec<f64> = moments.iter().map(|m| m.1).collect();
    let mean_force_gradient: Vec<f64> = moments.iter().map(|m| m.2).collect();
    let dq = time_derivative(&times, &mean_q)?;
    let dp = time_derivative(&times, &mean_p)?;
    let m = h.mass();
    Ok(EhrenfestReport {
        position_residual: dq.iter().zip(&mean_p).map(|(d, p)| d - p / m).collect(),
        momentum_residual: dp.iter().zip(&mean_force_gradient).map(|(d, f)| d + f).collect(),
        times,
        mean_q,
        mean_p,
        mean_force_gradient,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase_grid::PhaseGrid;

    #[test]
    fn coarse_grain_preserves_norm() {
        let g = PhaseGrid::new(32, 16, (-4.0, 4.0), (-4.0, 4.0), 1.0).unwrap();
        let f = PhaseField::from_fn(g, 0.0, |q, p| (-(q - 0.3) * (q - 0.3) - p * p).exp() / std::f64::consts::PI).unwrap();
        let c = coarse_grain(&f, 4).unwrap();
        assert_eq!(c.grid().shape(), (8, 4));
        assert!((c.norm() - f.norm()).abs() < 1e-14);
        assert_eq!(coarse_grain(&f, 1).unwrap().values(), f.values());
        assert!(coarse_grain(&f, 3).is_err());
    }

    #[test]
    fn csv_header_column_order() {
        assert_eq!(
            csv_header(2),
            "time,norm,min_value,negativity_volume,purity,mean_q,mean_p,var_q,var_p,flux_dev_region0,flux_dev_region1,support_area,positive"
        );
    }
}
