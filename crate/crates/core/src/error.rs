use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid well: {0}")]
    InvalidWell(String),
    #[error("no homoclinic profile: {0}")]
    NoHomoclinic(String),
    #[error("domain too small: |u0(L)+1| = {0:e} exceeds 1e-6")]
    DomainTooSmall(f64),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("not a bilayer: {0}")]
    NotABilayer(String),
    #[error("resonant solve: {0}")]
    Resonant(String),
    #[error("linear solve failed: {0}")]
    LinearSolve(String),
    #[error("no pearling: alpha0 = {0} is not positive")]
    NoPearling(f64),
    #[error("supercriticality bound violated: sqrt(eps)*|kappa| = {lhs} >= {rhs}")]
    Supercriticality { lhs: f64, rhs: f64 },
    #[error("integrator step underflow at t = {0}")]
    StepUnderflow(f64),
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("geometry: {0}")]
    Geometry(String),
    #[error("blow-up at t = {0}")]
    BlowUp(f64),
    #[error("no interface detected")]
    NoInterface,
    #[error("config error at `{key}`: {msg}")]
    Config { key: String, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
