use thiserror::Error;

#[derive(Debug, Error)]
pub enum SeriesError {
    #[error("invalid monomial key: {0}")]
    InvalidKey(String),
    #[error("support out of range: site {site} exceeds N_max = {n_max}")]
    SupportOutOfRange { site: u32, n_max: u32 },
    #[error("invalid mass vector: {0}")]
    InvalidMass(String),
    #[error("invalid norm parameters: {0}")]
    InvalidNorm(String),
    #[error("series format error at line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum KamError {
    #[error("small divisor at A = {support:?}, l = {l:?}: |<xi_A, l>| = {value:.3e} below bound {bound:.3e}")]
    SmallDivisorViolation {
        support: Vec<u32>,
        l: Vec<i32>,
        value: f64,
        bound: f64,
    },
    #[error("caps exceeded: {0}")]
    CapsExceeded(String),
    #[error("frequency map is not a contraction: sup|v| = {sup:.3e} > h/4 = {limit:.3e}")]
    ContractionFailure { sup: f64, limit: f64 },
    #[error("iteration diverged at stage {stage}: norm {norm:.3e} > 10 eps_n = {limit:.3e}")]
    Divergence { stage: usize, norm: f64, limit: f64 },
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

#[derive(Debug, Error)]
pub enum DiophantineError {
    #[error("combinatorial budget exceeded: |A| = {support_len}, L_n = {cutoff}, about {estimate:.3e} pairs")]
    Budget {
        support_len: usize,
        cutoff: u32,
        estimate: f64,
    },
    #[error("invalid frequency data: {0}")]
    Invalid(String),
}

#[derive(Debug, Error)]
pub enum MechanicsError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("quadrature did not converge: {0}")]
    Tolerance(String),
    #[error("singular configuration: {0}")]
    Singular(String),
    #[error("FFT grid too coarse: tail coefficient {tail:.3e} above tolerance {tol:.3e}")]
    Aliasing { tail: f64, tol: f64 },
    #[error("unsupported model: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("fixed-point iteration did not converge at t = {t} after {sweeps} sweeps (residual {residual:.3e}); reduce the step size")]
    StepSize { t: f64, sweeps: usize, residual: f64 },
    #[error("invalid flow specification: {0}")]
    Invalid(String),
    #[error(transparent)]
    Kam(#[from] KamError),
}
