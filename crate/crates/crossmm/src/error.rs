use thiserror::Error;

/// Errors surfaced by model construction, pricing, analytics, and the oracle.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside its admissible range.
    #[error("domain error: {0}")]
    Domain(String),

    /// An instance is too large for an exact method.
    #[error("capacity error: {what} supports at most {limit} securities, got {n}")]
    Capacity {
        what: &'static str,
        n: usize,
        limit: usize,
    },

    /// The posterior normalizer underflowed; the prior puts (numerically) no
    /// mass on any state consistent with the conditioning orders.
    #[error("degenerate posterior: normalizer {normalizer:e} below 1e-300")]
    DegeneratePosterior { normalizer: f64 },

    /// mm_volume_share has no closed form at phi = 1/2: every state ties at
    /// the quotes, every order is split, and the market maker's share is 1/2.
    #[error("phi = 1/2 is the split-everywhere regime: every order is shared equally and the market maker's volume share is 1/2; the closed form applies only to phi != 1/2")]
    SplitRegime,

    /// A participation curve produced a value outside [0, 1].
    #[error("participation curve returned {value} at cost {cost}; outputs must lie in [0, 1]")]
    InvalidCurveOutput { value: f64, cost: f64 },

    /// Configuration parse or validation failure; the message names the key.
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
