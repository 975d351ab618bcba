use thiserror::Error;

/// Errors produced across the toolkit.
#[derive(Debug, Error)]
pub enum ContactError {
    #[error("chart coordinates invalid: {0}")]
    Domain(String),
    #[error("Hopf chart pole margin violated (eta = {eta}, margin = {margin})")]
    PoleSingularity { eta: f64, margin: f64 },
    #[error("trajectory entered the Hopf pole margin at t = {t}")]
    PoleCrossing { t: f64 },
    #[error("state norm exceeded {limit:e} at t = {t}")]
    StepExplosion { t: f64, limit: f64 },
    #[error("parse error at position {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),
    #[error("quadrature resolution too coarse: {0}")]
    ResolutionTooCoarse(String),
    #[error("generic contact system ill-conditioned (cond = {cond:e})")]
    SingularSystem { cond: f64 },
    #[error("pulled-back form not proportional to the contact form (spread = {spread:e})")]
    NotContact { spread: f64 },
    #[error("systems live on different manifolds")]
    ManifoldMismatch,
    #[error("flow map query failed: {0}")]
    FlowQueryFailure(String),
    #[error("map not invertible on the sampled region")]
    NotInvertible,
    #[error("reparameterization is not monotone")]
    NotMonotone,
    #[error("cutoff margin {c} is below the conformal factor bound {bound}")]
    CutoffTooTight { c: f64, bound: f64 },
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, ContactError>;
