use std::fmt;

use super::classical::ClassicalStepper;
use super::quantum::{check_edge, QuantumStepper};
use super::{DecoherenceSpec, EvolutionConfig, HamiltonianSpec};
use crate::diagnostics::{self, DiagnosticsRecord};
use crate::error::Result;
use crate::phase_grid::{ClassicalDensity, IndexBox, PhaseField, PhaseGrid, WignerField};
use crate::tolerance::Tolerances;

#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    Quantum(WignerField),
    Classical(ClassicalDensity),
}

impl InitialState {
    pub fn field(&self) -> &PhaseField {
        match self {
            Self::Quantum(w) => w.field(),
            Self::Classical(r) => r.field(),
        }
    }

    pub fn kind(&self) -> SolverKind {
        match self {
            Self::Quantum(_) => SolverKind::Quantum,
            Self::Classical(_) => SolverKind::Classical,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Quantum,
    Classical,
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Quantum => "quantum",
            Self::Classical => "classical",
        })
    }
}

/// Stored snapshots of one run together with their diagnostics.
#[derive(Debug, Clone)]
pub struct Trajectory {
    kind: SolverKind,
    hamiltonian: HamiltonianSpec,
    decoherence: DecoherenceSpec,
    dt: f64,
    stride: usize,
    snapshots: Vec<PhaseField>,
    regions: Vec<IndexBox>,
    records: Vec<DiagnosticsRecord>,
    clipped_mass: f64,
    tolerances: Tolerances,
}

impl Trajectory {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn assemble(
        kind: SolverKind,
        hamiltonian: HamiltonianSpec,
        decoherence: DecoherenceSpec,
        dt: f64,
        stride: usize,
        snapshots: Vec<PhaseField>,
        regions: Vec<IndexBox>,
        clipped_mass: f64,
        tolerances: Tolerances,
    ) -> Result<Self> {
        let mut t = Self { kind, hamiltonian, decoherence, dt, stride, snapshots, regions, records: Vec::new(), clipped_mass, tolerances };
        t.records = diagnostics::trajectory_records(&t)?;
        Ok(t)
    }

    pub fn kind(&self) -> SolverKind {
        self.kind
    }

    pub fn hamiltonian(&self) -> &HamiltonianSpec {
        &self.hamiltonian
    }

    pub fn decoherence(&self) -> &DecoherenceSpec {
        &self.decoherence
    }

    /// The step size actually used.
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn snapshots(&self) -> &[PhaseField] {
        &self.snapshots
    }

    pub fn regions(&self) -> &[IndexBox] {
        &self.regions
    }

    pub fn records(&self) -> &[DiagnosticsRecord] {
        &self.records
    }

    /// Mass removed by the classical positivity floor over the whole run.
    pub fn clipped_mass(&self) -> f64 {
        self.clipped_mass
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tolerances
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(PhaseField::time).collect()
    }

    pub fn grid(&self) -> &PhaseGrid {
        self.snapshots[0].grid()
    }

    pub fn last(&self) -> &PhaseField {
        self.snapshots.last().expect("a trajectory holds at least the initial snapshot")
    }
}

/// Evolves `initial` to `cfg.t_end`, keeping every `cfg.stride`-th state and the final one.
pub fn run(initial: InitialState, h: &HamiltonianSpec, dec: &DecoherenceSpec, cfg: &EvolutionConfig) -> Result<Trajectory> {
    run_with(initial, h, dec, cfg, &[], &Tolerances::default())
}

/// As [`run`], also tracking the flux deviation of `regions`.
pub fn run_with(
    initial: InitialState,
    h: &HamiltonianSpec,
    dec: &DecoherenceSpec,
    cfg: &EvolutionConfig,
    regions: &[IndexBox],
    tol: &Tolerances,
) -> Result<Trajectory> {
    let grid = *initial.field().grid();
    for r in regions {
        diagnostics::check_flux_region(&grid, r)?;
    }
    let n = cfg.n_steps();
    let dt = cfg.step_size();
    let kind = initial.kind();
    let mut field = initial.field().clone();
    check_edge(&field, tol)?;

    #[allow(clippy::large_enum_variant)]
    enum Stepper {
        Quantum(QuantumStepper),
        Classical(ClassicalStepper),
    }
    let mut stepper = match kind {
        SolverKind::Quantum => Stepper::Quantum(QuantumStepper::new(&grid, h, dec, dt, cfg.integrator, *tol)?),
        SolverKind::Classical => Stepper::Classical(ClassicalStepper::new(&grid, h, dec, dt, cfg.classical_scheme, cfg.integrator, *tol)?),
    };

    let mut snapshots = vec![field.clone()];
    let mut done = 0;
    while done < n {
        let block = (cfg.stride - done % cfg.stride).min(n - done);
        match &mut stepper {
            Stepper::Quantum(s) => s.advance(&mut field, block)?,
            Stepper::Classical(s) => s.advance(&mut field, block)?,
        }
        done += block;
        // Index arithmetic rather than accumulation keeps snapshot times exact.
        field.set_time(initial.field().time() + done as f64 * dt);
        check_edge(&field, tol)?;
        snapshots.push(field.clone());
    }
    let clipped = match &stepper {
        Stepper::Classical(s) => s.clipped_mass(),
        Stepper::Quantum(_) => 0.0,
    };
    Trajectory::assemble(kind, h.clone(), *dec, dt, cfg.stride, snapshots, regions.to_vec(), clipped, *tol)
}
