use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("region {region} lies outside a {n_q}x{n_p} grid")]
    RegionOutOfBounds { region: String, n_q: usize, n_p: usize },

    #[error("region {0} is smaller than 4x4 cells")]
    RegionTooSmall(String),

    #[error("partition is invalid: {0}")]
    InvalidPartition(String),

    #[error("field contains a non-finite value at ({0}, {1})")]
    NonFinite(usize, usize),

    #[error("field is not normalized: quadrature = {norm} (tolerance {tol:e})")]
    NotNormalized { norm: f64, tol: f64 },

    #[error("matrix is not Hermitian: residue {0:e}")]
    NonHermitian(f64),

    #[error("density matrix has negative diagonal entry {value:e} at index {index}")]
    NegativeDiagonal { index: usize, value: f64 },

    #[error("classical density takes negative value {value:e} at ({i}, {j})")]
    NegativeDensity { i: usize, j: usize, value: f64 },

    #[error("state does not decay at the grid boundary: boundary/max ratio {ratio:e}")]
    BoundaryDecay { ratio: f64 },

    #[error("Wigner field violates |W| <= 2/hbar: max |W| = {max_abs}, bound = {bound}")]
    BoundViolation { max_abs: f64, bound: f64 },

    #[error("effective support area {area} hbar is below one hbar")]
    SubPlanckSupport { area: f64 },

    #[error("imaginary residue {0:e} in Wigner transform")]
    ImaginaryResidue(f64),

    #[error("polynomial degree {degree} exceeds limit {limit}")]
    DegreeOverflow { degree: u32, limit: u32 },

    #[error("star-product order {order} exceeds limit {limit}")]
    OrderOverflow { order: usize, limit: usize },

    #[error("invalid Hamiltonian: {0}")]
    InvalidHamiltonian(String),

    #[error("time step {dt} exceeds the stability limit {limit}")]
    Unstable { dt: f64, limit: f64 },

    #[error("field reached the grid edge at t = {time}: boundary/max ratio {ratio:e}")]
    BoundaryReached { ratio: f64, time: f64 },

    #[error("norm drifted by {drift:e} in one step at t = {time}")]
    NormDrift { drift: f64, time: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("malformed snapshot at byte {offset}: {reason}")]
    MalformedSnapshot { offset: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Errors raised by the numerics once a run is underway (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Unstable { .. }
                | Error::NormDrift { .. }
                | Error::BoundaryReached { .. }
                | Error::BoundViolation { .. }
                | Error::NonFinite(..)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
