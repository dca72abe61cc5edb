//! Central numerical tolerances.
//!
//! Every check in the crate reads its threshold from a [`Tolerances`] value so
//! a single place decides what "normalized" or "positive" means on a grid.

/// Thresholds used by constructors, steppers and diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Absolute tolerance on whole-grid quadrature being one.
    pub normalization: f64,
    /// Absolute tolerance on `rho - rho^dagger`.
    pub hermitian: f64,
    /// Largest imaginary part tolerated in a Wigner transform before it is dropped.
    pub imaginary_residue: f64,
    /// Relative slack on the `|W| <= 2/hbar` bound.
    pub bound_rel: f64,
    /// Positivity threshold as a fraction of `2/hbar`.
    pub positivity_rel: f64,
    /// Floor below which a classical density counts as negative.
    pub classical_floor: f64,
    /// Boundary-to-peak ratio a state must decay to.
    pub boundary_decay: f64,
    /// Boundary-to-peak ratio an evolving field may reach before the run aborts.
    pub boundary_evolve: f64,
    /// Relative tolerance on finite additivity of the induced set function.
    pub additivity: f64,
    /// Per-step norm drift that aborts a run.
    pub norm_abort: f64,
    /// Number of consecutive positive snapshots that define the positivity time.
    pub positivity_sustain: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            normalization: 1e-8,
            hermitian: 1e-10,
            imaginary_residue: 1e-12,
            bound_rel: 1e-6,
            positivity_rel: 1e-6,
            classical_floor: 1e-10,
            boundary_decay: 1e-10,
            boundary_evolve: 1e-6,
            additivity: 1e-10,
            norm_abort: 1e-4,
            positivity_sustain: 10,
        }
    }
}

impl Tolerances {
    /// `|W| <= 2/hbar * (1 + bound_rel)`.
    pub fn wigner_bound(&self, hbar: f64) -> f64 {
        2.0 / hbar * (1.0 + self.bound_rel)
    }

    /// A Wigner field counts as positive when its minimum exceeds `-positivity_threshold`.
    pub fn positivity_threshold(&self, hbar: f64) -> f64 {
        self.positivity_rel * 2.0 / hbar
    }
}
