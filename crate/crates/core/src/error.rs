use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("target cooperativity {target} is unreachable: {reason}")]
    UnreachableTarget { target: f64, reason: &'static str },

    #[error("(-iω - M) is singular at ω = {omega} rad/s; the network sits on its instability boundary")]
    Singular { omega: f64 },

    #[error("closed-form elements diverge: 1 + C_em - C_om = {margin:e}")]
    Divergent { margin: f64 },

    #[error("reduced covariance is not in standard form (off-pattern residual {residual:e})")]
    NonStandardForm { residual: f64 },

    #[error("state is unphysical: minimum symplectic eigenvalue {min_symplectic}")]
    Unphysical { min_symplectic: f64 },

    #[error("network is unstable (max eigenvalue real part {max_real:e} rad/s)")]
    Unstable { max_real: f64 },

    #[error("probability table is not normalized (sum = {sum})")]
    Unnormalized { sum: f64 },

    #[error("all coincidence probabilities vanish; normalization undefined")]
    UndefinedNormalization,

    #[error("frequency grid too coarse: {points_per_linewidth:.2} points per narrowest linewidth (need >= {required})")]
    CoarseGrid { points_per_linewidth: f64, required: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("configuration error: {0}")]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}
