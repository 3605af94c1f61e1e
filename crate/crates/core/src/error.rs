use thiserror::Error;

/// Errors produced by the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid Hilbert space: {0}")]
    InvalidSpec(String),

    #[error("qubit index {index} out of range for {n_qubits} qubit(s)")]
    QubitIndex { index: usize, n_qubits: usize },

    #[error("Hilbert space mismatch: {0}")]
    SpecMismatch(String),

    #[error(
        "truncation risk: amplitude {amplitude:.4} needs n_max >= {required}, have {n_max}"
    )]
    TruncationRisk {
        amplitude: f64,
        required: usize,
        n_max: usize,
    },

    #[error("position r = {r:e} m lies outside the membrane of radius {radius:e} m")]
    OutsideDisc { r: f64, radius: f64 },

    #[error("no feasible cooling site: {0}")]
    InfeasibleCoolingSite(String),

    #[error("rate `{name}` is negative ({value})")]
    NegativeRate { name: &'static str, value: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("operator is not Hermitian (max deviation {0:e})")]
    NonHermitian(f64),

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error(
        "step size underflow at t = {t} (h = {h:e}); the problem is too stiff, \
         reduce the Hilbert space dimension or loosen the tolerance"
    )]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("steady state is not unique: {0}")]
    NonUniqueSteadyState(String),

    #[error("postselection branch has zero probability (p = {0:e})")]
    ZeroProbability(f64),

    #[error("target state is not normalized (norm deviates by {0:e})")]
    Unnormalized(f64),

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
