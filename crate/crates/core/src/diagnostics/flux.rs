//! Continuity residuals of phase-space regions.
//!
//! For a region `S`, the residual is `d/dt ∫_S W + ∮_∂S J·n` with the classical
//! current `J = (p/m W, −V' W − (D/2) ∂W/∂p)`. It vanishes for Liouville and
//! Fokker–Planck flow and picks up the `ħ²` Moyal terms for quantum flow.
//!
//! Region masses and edge fluxes are exact integrals of the trigonometric
//! interpolant of each snapshot, so the only discretization left is the time
//! derivative, taken with five-point finite differences across snapshots.

use std::f64::consts::PI;

use ndarray::{Array1, Array2};
use rayon::prelude::*;

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::phase_grid::{Axis, IndexBox, PhaseGrid};

/// Smallest region side, in cells.
pub const MIN_REGION_CELLS: usize = 4;

/// Snapshots needed for a five-point time derivative.
const FD_POINTS: usize = 5;

/// Weights `w_n` with `f(x) = Σ f_n w_n(x)`, `f'(x)`, or `∫_a^b f`, for the periodic
/// trigonometric interpolant through the samples of `axis`.
struct Interpolant<'a> {
    axis: &'a Axis,
    /// Positive wavenumbers paired with their multiplicity (2, or 1 for Nyquist).
    modes: Vec<(f64, f64)>,
}

impl<'a> Interpolant<'a> {
    fn new(axis: &'a Axis) -> Self {
        let n = axis.n;
        let period = axis.length();
        let mut modes: Vec<(f64, f64)> = (1..=(n - 1) / 2).map(|m| (2.0 * PI * m as f64 / period, 2.0)).collect();
        if n.is_multiple_of(2) {
            modes.push((PI / axis.step(), 1.0));
        }
        Self { axis, modes }
    }

    fn weights(&self, f: impl Fn(f64) -> f64 + Sync) -> Vec<f64> {
        (0..self.axis.n).map(|i| f(self.axis.point(i)) / self.axis.n as f64).collect()
    }

    fn point(&self, x: f64) -> Vec<f64> {
        self.weights(|xn| 1.0 + self.modes.iter().map(|&(k, c)| c * (k * (x - xn)).cos()).sum::<f64>())
    }

    fn derivative(&self, x: f64) -> Vec<f64> {
        self.weights(|xn| -self.modes.iter().map(|&(k, c)| c * k * (k * (x - xn)).sin()).sum::<f64>())
    }

    fn integral(&self, a: f64, b: f64) -> Vec<f64> {
        self.weights(|xn| (b - a) + self.modes.iter().map(|&(k, c)| c * ((k * (b - xn)).sin() - (k * (a - xn)).sin()) / k).sum::<f64>())
    }

    /// Position of the cell edge before sample `e`.
    fn edge(&self, e: usize) -> f64 {
        self.axis.min + (e as f64 - 0.5) * self.axis.step()
    }
}

/// A rectangular array of adjacent boxes, given by the cell indices of its edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TileLattice {
    q_edges: Vec<usize>,
    p_edges: Vec<usize>,
}

impl TileLattice {
    pub fn new(q_edges: Vec<usize>, p_edges: Vec<usize>) -> Result<Self> {
        for edges in [&q_edges, &p_edges] {
            if edges.len() < 2 || edges.windows(2).any(|w| w[1] < w[0] + MIN_REGION_CELLS) {
                return Err(Error::RegionTooSmall(format!("tile edges {edges:?}")));
            }
        }
        Ok(Self { q_edges, p_edges })
    }

    pub fn single(region: &IndexBox) -> Result<Self> {
        Self::new(vec![region.q.start, region.q.end], vec![region.p.start, region.p.end])
    }

    /// Tiles of `tile x tile` cells covering `window`.
    pub fn uniform(window: &IndexBox, tile: usize) -> Result<Self> {
        if tile == 0 || !window.q.len().is_multiple_of(tile) || !window.p.len().is_multiple_of(tile) {
            return Err(Error::InvalidArgument(format!("tile size {tile} does not divide {window}")));
        }
        Self::new(
            window.q.clone().step_by(tile).chain([window.q.end]).collect(),
            window.p.clone().step_by(tile).chain([window.p.end]).collect(),
        )
    }

    pub fn tiles(&self) -> usize {
        (self.q_edges.len() - 1) * (self.p_edges.len() - 1)
    }

    fn check(&self, grid: &PhaseGrid) -> Result<()> {
        let outer = IndexBox::new(self.q_edges[0]..*self.q_edges.last().unwrap(), self.p_edges[0]..*self.p_edges.last().unwrap());
        grid.check_region(&outer)
    }
}

pub(crate) fn check_flux_region(grid: &PhaseGrid, region: &IndexBox) -> Result<()> {
    grid.check_region(region)?;
    if region.q.len() < MIN_REGION_CELLS || region.p.len() < MIN_REGION_CELLS {
        return Err(Error::RegionTooSmall(region.to_string()));
    }
    Ok(())
}

/// Precomputed weight matrices for one lattice on one grid.
struct FluxOperator {
    /// `[tile_q, i]` integration weights along q.
    iq: Array2<f64>,
    /// `[tile_p, j]` integration weights along p.
    ip: Array2<f64>,
    /// `[edge_q, i]` evaluation weights at q edges.
    eq: Array2<f64>,
    /// `[edge_p, j]` evaluation and derivative weights at p edges.
    ep: Array2<f64>,
    dp: Array2<f64>,
    velocity_q: Array1<f64>,
    velocity_p: Array1<f64>,
    diffusion: f64,
}

fn stack(rows: Vec<Vec<f64>>) -> Array2<f64> {
    let n = rows[0].len();
    Array2::from_shape_vec((rows.len(), n), rows.into_iter().flatten().collect()).expect("rectangular")
}

impl FluxOperator {
    fn new(traj: &Trajectory, lattice: &TileLattice) -> Result<Self> {
        let grid = traj.grid();
        lattice.check(grid)?;
        let (fq, fp) = (Interpolant::new(grid.q_axis()), Interpolant::new(grid.p_axis()));
        let intervals =
            |f: &Interpolant, edges: &[usize]| stack(edges.windows(2).map(|w| f.integral(f.edge(w[0]), f.edge(w[1]))).collect());
        let h = traj.hamiltonian();
        let force = h.force_gradient();
        Ok(Self {
            iq: intervals(&fq, &lattice.q_edges),
            ip: intervals(&fp, &lattice.p_edges),
            eq: stack(lattice.q_edges.iter().map(|&e| fq.point(fq.edge(e))).collect()),
            ep: stack(lattice.p_edges.iter().map(|&e| fp.point(fp.edge(e))).collect()),
            dp: stack(lattice.p_edges.iter().map(|&e| fp.derivative(fp.edge(e))).collect()),
            velocity_q: (0..grid.n_p()).map(|j| grid.p(j) / h.mass()).collect(),
            velocity_p: (0..grid.n_q()).map(|i| -force.eval(grid.q(i), 0.0)).collect(),
            diffusion: traj.decoherence().effective_rate(),
        })
    }

    /// `(mass, outward classical flux)` of every tile, each `[tile_q, tile_p]`.
    fn evaluate(&self, w: &Array2<f64>) -> (Array2<f64>, Array2<f64>) {
        let mass = self.iq.dot(w).dot(&self.ip.t());

        // Flux through q edges, integrated over each tile's p interval: [edge_q, tile_p].
        let mut at_q_edges = self.eq.dot(w);
        at_q_edges *= &self.velocity_q;
        let fq = at_q_edges.dot(&self.ip.t());

        // Flux through p edges, integrated over each tile's q interval: [tile_q, edge_p].
        let mut current = w.dot(&self.ep.t());
        for (mut row, v) in current.rows_mut().into_iter().zip(self.velocity_p.iter()) {
            row *= *v;
        }
        if self.diffusion > 0.0 {
            current.scaled_add(-0.5 * self.diffusion, &w.dot(&self.dp.t()));
        }
        let fp = self.iq.dot(&current);

        let (tq, tp) = mass.dim();
        let out = Array2::from_shape_fn((tq, tp), |(a, b)| fq[[a + 1, b]] - fq[[a, b]] + fp[[a, b + 1]] - fp[[a, b]]);
        (mass, out)
    }
}

/// Weights for `f'(z)` from samples at `x` (Fornberg's recursion).
pub(crate) fn first_derivative_weights(z: f64, x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut c = vec![[0.0_f64; 2]; n];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    for i in 1..n {
        let mn = i.min(1);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.iter().map(|w| w[1]).collect()
}

/// Time derivative of a sampled series at every sample, five points at a time.
pub(crate) fn time_derivative<T>(times: &[f64], values: &[T]) -> Result<Vec<T>>
where
    T: Clone + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
{
    let n = times.len();
    if n < FD_POINTS {
        return Err(Error::InsufficientData(format!("{n} snapshots; a time derivative needs {FD_POINTS}")));
    }
    Ok((0..n)
        .map(|k| {
            let start = k.saturating_sub(FD_POINTS / 2).min(n - FD_POINTS);
            let window = start..start + FD_POINTS;
            let w = first_derivative_weights(times[k], &times[window.clone()]);
            window.zip(w).map(|(i, wi)| values[i].clone() * wi).reduce(|a, b| a + b).expect("five points")
        })
        .collect())
}

/// Residual of every tile at every snapshot.
pub fn lattice_residuals(traj: &Trajectory, lattice: &TileLattice) -> Result<Vec<Array2<f64>>> {
    let op = FluxOperator::new(traj, lattice)?;
    let parts: Vec<(Array2<f64>, Array2<f64>)> = traj.snapshots().par_iter().map(|s| op.evaluate(s.values())).collect();
    let masses: Vec<Array2<f64>> = parts.iter().map(|p| p.0.clone()).collect();
    let rates = time_derivative(&traj.times(), &masses)?;
    Ok(rates.into_iter().zip(parts).map(|(rate, (_, out))| rate + out).collect())
}

/// Continuity residual of one region at every snapshot.
pub fn flux_deviation(traj: &Trajectory, region: &IndexBox) -> Result<Vec<f64>> {
    check_flux_region(traj.grid(), region)?;
    Ok(lattice_residuals(traj, &TileLattice::single(region)?)?.into_iter().map(|r| r[[0, 0]]).collect())
}

/// `Σ_tiles |residual|` at every snapshot.
pub fn tiled_flux_deviation(traj: &Trajectory, lattice: &TileLattice) -> Result<Vec<f64>> {
    Ok(lattice_residuals(traj, lattice)?.into_iter().map(|r| r.iter().map(|v| v.abs()).sum()).collect())
}

/// Aggregate flux deviation of a trajectory measured on fine tiles and on coarse cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxComparison {
    /// Largest over snapshots of `Σ|residual|` on tiles of `MIN_REGION_CELLS` cells a side.
    pub fine: f64,
    /// The same on the cells of the grid decimated by `factor`.
    pub coarse: f64,
    pub factor: usize,
    /// Area of a coarse cell in units of `ħ`.
    pub coarse_cell_area_hbar: f64,
}

impl FluxComparison {
    pub fn reduction(&self) -> f64 {
        self.fine / self.coarse
    }
}

/// Compares the flux deviation seen at the finest admissible scale with that seen by
/// the coarse cells of `coarse_grain(·, factor)`, over the whole grid and over the
/// snapshots at or after `from_time`.
pub fn coarse_flux_comparison(traj: &Trajectory, factor: usize, from_time: f64) -> Result<FluxComparison> {
    let grid = traj.grid();
    if !factor.is_multiple_of(MIN_REGION_CELLS) {
        return Err(Error::InvalidArgument(format!("cell factor {factor} is not a multiple of {MIN_REGION_CELLS}")));
    }
    let first = traj
        .times()
        .iter()
        .position(|&t| t >= from_time)
        .ok_or_else(|| Error::InsufficientData(format!("no snapshot at or after t = {from_time}")))?;
    let whole = grid.whole();
    let fine = TileLattice::uniform(&whole, MIN_REGION_CELLS)?;
    let coarse = TileLattice::uniform(&whole, factor)?;
    let peak = |v: Vec<f64>| v[first..].iter().fold(0.0_f64, |m, x| m.max(*x));
    Ok(FluxComparison {
        fine: peak(tiled_flux_deviation(traj, &fine)?),
        coarse: peak(tiled_flux_deviation(traj, &coarse)?),
        factor,
        coarse_cell_area_hbar: grid.cell_area_hbar() * (factor * factor) as f64,
    })
}

/// Smallest multiple of `MIN_REGION_CELLS` dividing both grid dimensions whose merged
/// cells cover at least `area_hbar·ħ`.
pub fn coarse_factor(grid: &PhaseGrid, area_hbar: f64) -> Option<usize> {
    let (n_q, n_p) = grid.shape();
    (MIN_REGION_CELLS..=n_q.min(n_p))
        .step_by(MIN_REGION_CELLS)
        .find(|&f| n_q % f == 0 && n_p % f == 0 && grid.cell_area_hbar() * (f * f) as f64 >= area_hbar)
}
