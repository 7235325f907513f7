use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit count mismatch: {0} vs {1}")]
    QubitMismatch(usize, usize),

    #[error("qubit index {index} out of range for {n} qubits")]
    QubitOutOfRange { index: usize, n: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not Hermitian (deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("matrix has eigenvalue {0:.3e} below tolerance")]
    NegativeEigenvalue(f64),

    #[error("vector is not a unit vector (norm {0})")]
    NotUnit(f64),

    #[error("state norm underflow at step {step}; measurement strength per step is too large")]
    NormUnderflow { step: usize },

    #[error("step index {index} out of range for record of length {len}")]
    StepOutOfRange { index: usize, len: usize },

    #[error("partitions overlap on qubit {0}")]
    OverlappingPartition(usize),

    #[error("full Pauli enumeration requested for {0} qubits (limit 6)")]
    EnumerationTooLarge(usize),

    #[error("invalid Pauli label {0:?}")]
    InvalidLabel(String),

    #[error("shadow weight {weight:.3e} below floor {floor:.1e}; about {required_samples:.3e} records needed for precision {precision}")]
    WeightBelowFloor { weight: f64, floor: f64, required_samples: f64, precision: f64 },

    #[error("shadow norm diverges at t = 0")]
    ZeroTime,

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("prior is rank deficient: min eigenvalue {0:.3e} below floor")]
    RankDeficient(f64),

    #[error("tau quadrature not converged: node doubling changed the map by {0:.3e}")]
    QuadratureNotConverged(f64),

    #[error("trace drift {0:.3e} during recovery")]
    TraceDrift(f64),

    #[error("region of {region} qubits does not fit a {n}-qubit system")]
    RegionTooLarge { region: usize, n: usize },

    #[error("training diverged at epoch {epoch}: loss {loss:.6e} above initial {initial:.6e} for {patience} epochs")]
    Diverged { epoch: usize, loss: f64, initial: f64, patience: usize },

    #[error("negative density {0:.3e} on the sphere grid")]
    NegativeDensity(f64),

    #[error("time step {dt} exceeds the explicit stability bound {bound}")]
    Unstable { dt: f64, bound: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("serialization: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
