use thiserror::Error;

/// Errors produced by the model, estimator and experiment layers.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside its mathematical domain.
    #[error("{name} = {value} outside domain {domain}")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },

    /// Model parameters violate a structural invariant (p >= 2, beta >= 0, n >= 1).
    #[error("invalid model parameters: {0}")]
    InvalidSpec(String),

    /// The free-energy landscape has no interior maximizer because beta is not
    /// above the estimation threshold beta*(p).
    #[error("beta = {beta} is not above the threshold beta*({p}) = {beta_star:.8}; no interior maximizer")]
    NoInteriorMaximizer { beta: f64, p: u32, beta_star: f64 },

    /// A root search did not reach its tolerance.
    #[error("root search failed to converge: {0}")]
    NonConvergence(String),

    /// The inefficiency window only exists for p >= 3; for p = 2 the slopes
    /// always agree.
    #[error("inefficiency window is undefined for p = 2")]
    WindowUndefined,

    /// Hypergraph generation would exceed the configured edge budget.
    #[error("expected edge count {expected:.3e} exceeds budget {budget:.3e}")]
    BudgetExceeded { expected: f64, budget: f64 },

    /// The closed-form and grid evaluations of the same supremum disagree;
    /// indicates a numerical defect rather than picking one side silently.
    #[error("closed-form/grid disagreement in {context}: {closed} vs {direct}")]
    Inconsistent {
        context: &'static str,
        closed: f64,
        direct: f64,
    },

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
