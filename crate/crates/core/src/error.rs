use thiserror::Error;

/// Errors raised by model construction, fitting and the study drivers.
#[derive(Debug, Clone, Error)]
pub enum OgpError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("degenerate bound at j={index}: lower {lower} must be strictly below upper {upper}")]
    DegenerateBound { index: usize, lower: f64, upper: f64 },

    #[error("point outside domain at coordinate {index}: value {value} not in [{lower}, {upper}]")]
    OutOfDomain {
        index: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no closed form for {0}; use the quadrature orthogonalization mode")]
    NoClosedForm(String),

    #[error("quadrature node budget exceeded: order {order} in d={dim} needs {nodes} nodes (budget {budget})")]
    NodeBudget {
        order: usize,
        dim: usize,
        nodes: f64,
        budget: usize,
    },

    #[error("matrix not positive definite after maximum jitter {jitter:e} ({context}); consider reducing the basis")]
    NotPositiveDefinite { context: String, jitter: f64 },

    #[error("model matrix is rank deficient: columns {columns:?} depend on earlier columns")]
    RankDeficient { columns: Vec<usize> },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("numerical conditioning error: {0}")]
    Conditioning(String),

    #[error("optimization failed on every start: {0:?}")]
    OptimizationFailed(Vec<String>),

    #[error("surrogate evaluation failed at {input:?}: {message}")]
    Surrogate { input: Vec<f64>, message: String },
}

impl OgpError {
    /// True for failures caused by the numbers rather than by the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            OgpError::NotPositiveDefinite { .. }
                | OgpError::Conditioning(_)
                | OgpError::OptimizationFailed(_)
        )
    }
}

pub type Result<T, E = OgpError> = std::result::Result<T, E>;
