//! Quantum and classical phase-space dynamics on a uniform grid.
//!
//! The crate builds Wigner quasi-probability fields from wave functions and density
//! matrices, evolves them under the Moyal equation with optional momentum diffusion
//! (the phase-space form of the Joos–Zeh master equation), evolves classical densities
//! under the Liouville and Fokker–Planck equations, and measures what separates the
//! two: negativity, positivity times, continuity violations, localisability and the
//! probability-measure axioms of the induced set function.

pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod moyal;
pub mod phase_grid;
mod spectral;
pub mod states;
pub mod tolerance;
pub mod weyl;

pub use error::{Error, Result};
pub use phase_grid::{
    make_grid, quadrature, Axis, ClassicalDensity, DensityMatrix, IndexBox, PhaseField, PhaseGrid, WaveFunction, WignerField,
};
pub use tolerance::Tolerances;

/// Chapters of the guide in `book/`, compiled here so their listings run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/grids-and-states.md")]
    mod grids_and_states {}
    #[doc = include_str!("../../../book/src/moyal.md")]
    mod moyal {}
    #[doc = include_str!("../../../book/src/evolution.md")]
    mod evolution {}
    #[doc = include_str!("../../../book/src/diagnostics.md")]
    mod diagnostics {}
    #[doc = include_str!("../../../book/src/command-line.md")]
    mod command_line {}
}
