//! FFT plumbing for periodic grid fields.
//!
//! One-axis multipliers act on real-to-complex spectra and are tables indexed
//! `[line, k]` with `k` running over the `n/2 + 1` non-negative wavenumbers of
//! [`half_wavenumbers`]. Two-axis multipliers are full tables indexed `[k_q, k_p]`.
//! Tables for operators that map real fields to real fields must be real at the
//! unpaired Nyquist mode; [`real_at_nyquist`] takes care of that.

use std::sync::Arc;

use ndarray::{Array2, Axis as NdAxis};
use num_complex::Complex64;
use rayon::prelude::*;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::{Fft, FftPlanner};

use crate::phase_grid::{Axis, PhaseGrid};

/// Rows handed to one worker at a time.
const ROWS_PER_TASK: usize = 8;

struct RealPair {
    fwd: Arc<dyn RealToComplex<f64>>,
    inv: Arc<dyn ComplexToReal<f64>>,
}

impl RealPair {
    fn new(planner: &mut RealFftPlanner<f64>, n: usize) -> Self {
        Self { fwd: planner.plan_fft_forward(n), inv: planner.plan_fft_inverse(n) }
    }

    /// Multiplies the spectrum of every row of `data` by the matching row of `table`.
    fn apply_rows(&self, data: &mut [f64], table: &Array2<Complex64>) {
        let n = self.fwd.len();
        let half = n / 2 + 1;
        let table = table.as_slice().expect("standard layout");
        let scale = 1.0 / n as f64;
        data.par_chunks_mut(n * ROWS_PER_TASK).zip(table.par_chunks(half * ROWS_PER_TASK)).for_each_init(
            || (self.fwd.make_output_vec(), self.fwd.make_scratch_vec(), self.inv.make_scratch_vec()),
            |(spec, s_fwd, s_inv), (rows, trows)| {
                for (row, trow) in rows.chunks_mut(n).zip(trows.chunks(half)) {
                    self.fwd.process_with_scratch(row, spec, s_fwd).expect("lengths match the plan");
                    spec.iter_mut().zip(trow).for_each(|(a, b)| *a *= b * scale);
                    // The DC and Nyquist bins of a real-preserving product are real up to rounding.
                    spec[0].im = 0.0;
                    if n % 2 == 0 {
                        spec[half - 1].im = 0.0;
                    }
                    self.inv.process_with_scratch(spec, row, s_inv).expect("lengths match the plan");
                }
            },
        );
    }
}

pub(crate) struct Spectral {
    n_q: usize,
    n_p: usize,
    real_q: RealPair,
    real_p: RealPair,
    fwd_q: Arc<dyn Fft<f64>>,
    inv_q: Arc<dyn Fft<f64>>,
    fwd_p: Arc<dyn Fft<f64>>,
    inv_p: Arc<dyn Fft<f64>>,
    transposed: Vec<f64>,
    buf: Vec<Complex64>,
    tmp: Vec<Complex64>,
}

/// Transform every row of `data` (rows of `fft.len()` samples) in place.
fn transform_rows(fft: &Arc<dyn Fft<f64>>, data: &mut [Complex64]) {
    let len = fft.len();
    let scratch_len = fft.get_inplace_scratch_len();
    data.par_chunks_mut(len * ROWS_PER_TASK)
        .for_each_init(|| vec![Complex64::default(); scratch_len], |scratch, chunk| fft.process_with_scratch(chunk, scratch));
}

fn transpose<T: Copy + Send + Sync>(src: &[T], dst: &mut [T], rows: usize, cols: usize) {
    dst.par_chunks_mut(rows).enumerate().for_each(|(c, out)| {
        for (r, o) in out.iter_mut().enumerate() {
            *o = src[r * cols + c];
        }
    });
}

impl Spectral {
    pub fn new(grid: &PhaseGrid) -> Self {
        let (n_q, n_p) = grid.shape();
        let mut planner = FftPlanner::new();
        let mut real_planner = RealFftPlanner::new();
        Self {
            n_q,
            n_p,
            real_q: RealPair::new(&mut real_planner, n_q),
            real_p: RealPair::new(&mut real_planner, n_p),
            fwd_q: planner.plan_fft_forward(n_q),
            inv_q: planner.plan_fft_inverse(n_q),
            fwd_p: planner.plan_fft_forward(n_p),
            inv_p: planner.plan_fft_inverse(n_p),
            transposed: vec![0.0; n_q * n_p],
            buf: vec![Complex64::default(); n_q * n_p],
            tmp: vec![Complex64::default(); n_q * n_p],
        }
    }

    /// For each row `i`, multiply the p-spectrum by `table[[i, k_p]]`.
    pub fn apply_p(&mut self, values: &mut Array2<f64>, table: &Array2<Complex64>) {
        debug_assert_eq!(table.dim(), (self.n_q, self.n_p / 2 + 1));
        self.real_p.apply_rows(values.as_slice_mut().expect("standard layout"), table);
    }

    /// For each column `j`, multiply the q-spectrum by `table[[j, k_q]]`.
    pub fn apply_q(&mut self, values: &mut Array2<f64>, table: &Array2<Complex64>) {
        debug_assert_eq!(table.dim(), (self.n_p, self.n_q / 2 + 1));
        let (n_q, n_p) = (self.n_q, self.n_p);
        let v = values.as_slice_mut().expect("standard layout");
        transpose(v, &mut self.transposed, n_q, n_p);
        self.real_q.apply_rows(&mut self.transposed, table);
        transpose(&self.transposed, v, n_p, n_q);
    }

    /// Multiply the full 2-D spectrum by `table[[k_q, k_p]]`.
    pub fn apply_2d(&mut self, values: &mut Array2<f64>, table: &Array2<Complex64>) {
        debug_assert_eq!(table.dim(), (self.n_q, self.n_p));
        let mut c = self.forward_2d(values);
        c.zip_mut_with(table, |a, b| *a *= b);
        self.inverse_2d_into(&c, values);
    }

    /// Unnormalized 2-D spectrum indexed `[k_q, k_p]`.
    pub fn forward_2d(&mut self, values: &Array2<f64>) -> Array2<Complex64> {
        let v = values.as_slice().expect("standard layout");
        self.buf.par_iter_mut().zip(v.par_iter()).for_each(|(b, x)| *b = Complex64::new(*x, 0.0));
        transform_rows(&self.fwd_p, &mut self.buf);
        transpose(&self.buf, &mut self.tmp, self.n_q, self.n_p);
        transform_rows(&self.fwd_q, &mut self.tmp);
        transpose(&self.tmp, &mut self.buf, self.n_p, self.n_q);
        Array2::from_shape_vec((self.n_q, self.n_p), self.buf.clone()).expect("shape")
    }

    /// Inverse of [`forward_2d`](Self::forward_2d), keeping the real part.
    pub fn inverse_2d_into(&mut self, spectrum: &Array2<Complex64>, values: &mut Array2<f64>) {
        let s = spectrum.as_slice().expect("standard layout");
        transpose(s, &mut self.tmp, self.n_q, self.n_p);
        transform_rows(&self.inv_q, &mut self.tmp);
        transpose(&self.tmp, &mut self.buf, self.n_p, self.n_q);
        transform_rows(&self.inv_p, &mut self.buf);
        let scale = 1.0 / (self.n_q * self.n_p) as f64;
        let v = values.as_slice_mut().expect("standard layout");
        v.par_iter_mut().zip(self.buf.par_iter()).for_each(|(x, b)| *x = b.re * scale);
    }

    /// Spectral `∂_q^a ∂_p^b` of a periodic field.
    pub fn derivative(&mut self, values: &Array2<f64>, grid: &PhaseGrid, a: u32, b: u32) -> Array2<f64> {
        let mut out = values.clone();
        if a == 0 && b == 0 {
            return out;
        }
        let table = derivative_table(grid, a, b);
        self.apply_2d(&mut out, &table);
        out
    }
}

/// The first `n/2 + 1` entries of [`Axis::wavenumbers`].
pub(crate) fn half_wavenumbers(axis: &Axis) -> Vec<f64> {
    let mut k = axis.wavenumbers();
    k.truncate(axis.n / 2 + 1);
    k
}

/// Table for `∂_q^a ∂_p^b`, i.e. `(i k_q)^a (i k_p)^b`.
pub(crate) fn derivative_table(grid: &PhaseGrid, a: u32, b: u32) -> Array2<Complex64> {
    // Nyquist handling applies to each one-axis factor, not to the product.
    let factor = |axis: &Axis, n: u32| -> Vec<Complex64> {
        let mut f: Vec<Complex64> = axis.wavenumbers().iter().map(|&k| Complex64::new(0.0, k).powu(n)).collect();
        if let Some(ny) = axis.nyquist() {
            f[ny].im = 0.0;
        }
        f
    };
    let (fq, fp) = (factor(grid.q_axis(), a), factor(grid.p_axis(), b));
    Array2::from_shape_fn(grid.shape(), |(i, j)| fq[i] * fp[j])
}

/// Replace the multiplier of an unpaired Nyquist mode along `dim` by its real part.
///
/// The Nyquist mode stands for `±k_N` at once; averaging the two multipliers keeps
/// real fields real.
pub(crate) fn real_at_nyquist(table: &mut Array2<Complex64>, axis: &Axis, dim: NdAxis) {
    if let Some(ny) = axis.nyquist() {
        table.index_axis_mut(dim, ny).mapv_inplace(|z| Complex64::new(z.re, 0.0));
    }
}
