use ndarray::Array2;
use num_complex::Complex64;

use super::Axis;
use crate::error::{Error, Result};
use crate::tolerance::Tolerances;

/// Position-representation wave function on a uniform axis.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    axis: Axis,
    amplitudes: Vec<Complex64>,
}

impl WaveFunction {
    /// Wraps samples that are already normalized (`Σ|ψ|²·dq = 1`).
    pub fn new(axis: Axis, amplitudes: Vec<Complex64>, tol: &Tolerances) -> Result<Self> {
        if amplitudes.len() != axis.n {
            return Err(Error::GridMismatch(format!("{} amplitudes on a {}-point axis", amplitudes.len(), axis.n)));
        }
        if let Some(i) = amplitudes.iter().position(|a| !(a.re.is_finite() && a.im.is_finite())) {
            return Err(Error::NonFinite(i, 0));
        }
        let psi = Self { axis, amplitudes };
        let norm = psi.norm();
        if (norm - 1.0).abs() > tol.normalization {
            return Err(Error::NotNormalized { norm, tol: tol.normalization });
        }
        Ok(psi)
    }

    /// Samples `f` and rescales so the discrete norm is exactly one.
    pub fn normalized_from_fn(axis: Axis, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let mut amplitudes: Vec<Complex64> = axis.points().into_iter().map(f).collect();
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * axis.step();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::InvalidArgument(format!("cannot normalize state with norm {norm}")));
        }
        let scale = norm.sqrt().recip();
        amplitudes.iter_mut().for_each(|a| *a *= scale);
        Ok(Self { axis, amplitudes })
    }

    /// `ψ(x) ∝ exp(-(x - q0)²/(2σ²) + i·p0·x/ħ)`.
    pub fn gaussian(axis: Axis, q0: f64, p0: f64, sigma: f64, hbar: f64) -> Result<Self> {
        if sigma.is_nan() || sigma <= 0.0 {
            return Err(Error::InvalidArgument(format!("sigma must be positive, got {sigma}")));
        }
        Self::normalized_from_fn(axis, |x| gaussian_amplitude(x, q0, p0, sigma, hbar))
    }

    /// Superposition of two Gaussian packets at `±offset`, with relative sign `+1` (even) or `-1` (odd).
    pub fn cat(axis: Axis, offset: f64, sigma: f64, hbar: f64, sign: f64) -> Result<Self> {
        if sigma.is_nan() || sigma <= 0.0 {
            return Err(Error::InvalidArgument(format!("sigma must be positive, got {sigma}")));
        }
        Self::normalized_from_fn(axis, |x| {
            gaussian_amplitude(x, offset, 0.0, sigma, hbar) + sign * gaussian_amplitude(x, -offset, 0.0, sigma, hbar)
        })
    }

    /// Harmonic-oscillator eigenstate `n` for mass `m` and frequency `omega`.
    pub fn oscillator(axis: Axis, n: usize, mass: f64, omega: f64, hbar: f64) -> Result<Self> {
        let alpha = (mass * omega / hbar).sqrt();
        Self::normalized_from_fn(axis, |x| {
            let xi = alpha * x;
            // Normalized Hermite functions by the stable three-term recurrence.
            let mut prev = 0.0;
            let mut cur = (-0.5 * xi * xi).exp();
            for k in 0..n {
                let next = (2.0 / (k as f64 + 1.0)).sqrt() * xi * cur - (k as f64 / (k as f64 + 1.0)).sqrt() * prev;
                prev = cur;
                cur = next;
            }
            Complex64::new(cur, 0.0)
        })
    }

    pub fn axis(&self) -> &Axis {
        &self.axis
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.axis.step()
    }

    /// Endpoint probability density relative to the peak.
    pub fn boundary_ratio(&self) -> f64 {
        let peak = self.amplitudes.iter().fold(0.0_f64, |m, a| m.max(a.norm_sqr()));
        let edge = self.amplitudes[0].norm_sqr().max(self.amplitudes[self.axis.n - 1].norm_sqr());
        if peak == 0.0 {
            0.0
        } else {
            edge / peak
        }
    }
}

fn gaussian_amplitude(x: f64, q0: f64, p0: f64, sigma: f64, hbar: f64) -> Complex64 {
    let d = x - q0;
    Complex64::from_polar((-d * d / (2.0 * sigma * sigma)).exp(), p0 * x / hbar)
}

/// Position-representation density matrix `ρ(x, x')`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    axis: Axis,
    entries: Array2<Complex64>,
}

impl DensityMatrix {
    pub fn new(axis: Axis, entries: Array2<Complex64>, tol: &Tolerances) -> Result<Self> {
        if entries.dim() != (axis.n, axis.n) {
            return Err(Error::GridMismatch(format!("density matrix is {:?}, axis has {} points", entries.dim(), axis.n)));
        }
        let rho = Self { axis, entries };
        let residue = rho.hermitian_residue();
        if residue > tol.hermitian {
            return Err(Error::NonHermitian(residue));
        }
        let trace = rho.trace();
        if (trace - 1.0).abs() > tol.normalization {
            return Err(Error::NotNormalized { norm: trace, tol: tol.normalization });
        }
        if let Some((index, value)) = (0..axis.n).map(|i| (i, rho.entries[[i, i]].re)).find(|&(_, v)| v < -tol.normalization) {
            return Err(Error::NegativeDiagonal { index, value });
        }
        Ok(rho)
    }

    pub fn pure(psi: &WaveFunction) -> Self {
        let a = psi.amplitudes();
        let entries = Array2::from_shape_fn((a.len(), a.len()), |(i, j)| a[i] * a[j].conj());
        Self { axis: *psi.axis(), entries }
    }

    /// Incoherent mixture `Σ w_k |ψ_k⟩⟨ψ_k|`; weights are normalized to sum to one.
    pub fn mixture(components: &[(f64, &WaveFunction)]) -> Result<Self> {
        let first = components.first().ok_or_else(|| Error::InvalidArgument("empty mixture".into()))?;
        let axis = *first.1.axis();
        let total: f64 = components.iter().map(|(w, _)| *w).sum();
        if components.iter().any(|(w, _)| *w < 0.0) || total.is_nan() || total <= 0.0 {
            return Err(Error::InvalidArgument("mixture weights must be non-negative".into()));
        }
        let mut entries = Array2::<Complex64>::zeros((axis.n, axis.n));
        for (w, psi) in components {
            if *psi.axis() != axis {
                return Err(Error::GridMismatch("mixture components on different axes".into()));
            }
            entries.scaled_add(Complex64::new(w / total, 0.0), &Self::pure(psi).entries);
        }
        Ok(Self { axis, entries })
    }

    pub fn axis(&self) -> &Axis {
        &self.axis
    }

    pub fn entries(&self) -> &Array2<Complex64> {
        &self.entries
    }

    /// `Σ ρ(x, x)·dq`.
    pub fn trace(&self) -> f64 {
        self.entries.diag().iter().map(|z| z.re).sum::<f64>() * self.axis.step()
    }

    /// `Tr ρ²` with the position-space measure.
    pub fn purity(&self) -> f64 {
        let dq = self.axis.step();
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>() * dq * dq
    }

    pub fn hermitian_residue(&self) -> f64 {
        let n = self.axis.n;
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.entries[[i, j]] - self.entries[[j, i]].conj()).norm());
            }
        }
        worst
    }

    /// Diagonal density relative to its peak at the two endpoints.
    pub fn boundary_ratio(&self) -> f64 {
        let n = self.axis.n;
        let peak = (0..n).fold(0.0_f64, |m, i| m.max(self.entries[[i, i]].re.abs()));
        let edge = self.entries[[0, 0]].re.abs().max(self.entries[[n - 1, n - 1]].re.abs());
        if peak == 0.0 {
            0.0
        } else {
            edge / peak
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn axis() -> Axis {
        Axis::new(128, -8.0, 8.0).unwrap()
    }

    #[test]
    fn oscillator_states_are_orthonormal() {
        let states: Vec<_> = (0..4).map(|n| WaveFunction::oscillator(axis(), n, 1.0, 1.0, 1.0).unwrap()).collect();
        let dq = axis().step();
        for (a, sa) in states.iter().enumerate() {
            for (b, sb) in states.iter().enumerate() {
                let overlap: Complex64 = sa.amplitudes().iter().zip(sb.amplitudes()).map(|(x, y)| x.conj() * y).sum::<Complex64>() * dq;
                let expected = if a == b { 1.0 } else { 0.0 };
                assert!((overlap.norm() - expected).abs() < 1e-12, "<{a}|{b}> = {overlap}");
            }
        }
    }

    #[test]
    fn pure_state_has_unit_purity() {
        let psi = WaveFunction::cat(axis(), 3.0, 1.0, 1.0, 1.0).unwrap();
        let rho = DensityMatrix::pure(&psi);
        assert!((rho.trace() - 1.0).abs() < 1e-12);
        assert!((rho.purity() - 1.0).abs() < 1e-12);
        assert!(DensityMatrix::new(*rho.axis(), rho.entries().clone(), &Tolerances::default()).is_ok());
    }

    #[test]
    fn mixture_is_mixed() {
        let a = WaveFunction::gaussian(axis(), 3.0, 0.0, 1.0, 1.0).unwrap();
        let b = WaveFunction::gaussian(axis(), -3.0, 0.0, 1.0, 1.0).unwrap();
        let rho = DensityMatrix::mixture(&[(0.5, &a), (0.5, &b)]).unwrap();
        assert!((rho.trace() - 1.0).abs() < 1e-12);
        assert!((rho.purity() - 0.5).abs() < 1e-6);
    }

    #[test]
    fn non_hermitian_input_is_rejected() {
        let psi = WaveFunction::gaussian(axis(), 0.0, 0.0, 1.0, 1.0).unwrap();
        let mut e = DensityMatrix::pure(&psi).entries().clone();
        e[[60, 70]] += Complex64::new(0.0, 1e-3);
        assert!(matches!(DensityMatrix::new(axis(), e, &Tolerances::default()), Err(Error::NonHermitian(_))));
    }

    #[test]
    fn plane_wave_does_not_decay() {
        let psi = WaveFunction::normalized_from_fn(axis(), |x| Complex64::from_polar(1.0, 2.0 * x)).unwrap();
        assert!(psi.boundary_ratio() > 0.5);
    }
}
