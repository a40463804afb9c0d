use thiserror::Error;

/// Errors shared across the solver library.
#[derive(Debug, Error)]
pub enum Error {
    /// No directed path exists between the two nodes in the base graph.
    #[error("no path from node {from} to node {to}")]
    Unreachable { from: usize, to: usize },

    /// Every edge on the current violating paths sits at its box bound, so no
    /// further increment can raise them. For the exact safeguard this is a
    /// proof that the instance is infeasible within its box.
    #[error("all candidate edges are at their box bound; infeasible within the box")]
    Saturated,

    /// The greedy exceeded its inner-step cap without converging.
    #[error("step cap of {0} inner increments exceeded")]
    NonTermination(u64),

    /// An exhaustive search would visit more candidates than the safety cap.
    #[error("search space too large: {0}")]
    TooLarge(String),

    /// Exhaustive search proved there is no feasible solution with total
    /// budget at most the requested cap.
    #[error("no feasible perturbation with total budget <= {0}")]
    InfeasibleWithinCap(u64),

    /// A ratio check was requested against an oracle solution that is not
    /// certified optimal.
    #[error("oracle solution is not certified optimal")]
    Uncertified,

    /// The requested operation only supports the linear cost family.
    #[error("operation requires the linear cost family, got {0}")]
    UnsupportedFamily(String),

    /// Structural validation of an instance or solution vector failed.
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    /// A text input (edge list, estimator descriptor, ...) failed to parse.
    #[error("parse error: {0}")]
    Parse(String),

    /// A generator could not sample the requested number of connected pairs.
    #[error("could not sample {wanted} connected pairs within {attempts} attempts")]
    Disconnected { wanted: usize, attempts: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable tag for structured error reporting.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Unreachable { .. } => "unreachable",
            Error::Saturated => "saturated",
            Error::NonTermination(_) => "non_termination",
            Error::TooLarge(_) => "too_large",
            Error::InfeasibleWithinCap(_) => "infeasible_within_cap",
            Error::Uncertified => "uncertified",
            Error::UnsupportedFamily(_) => "unsupported_family",
            Error::InvalidInstance(_) => "invalid_instance",
            Error::Parse(_) => "parse",
            Error::Disconnected { .. } => "disconnected",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
