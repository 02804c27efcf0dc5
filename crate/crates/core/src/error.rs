//! Crate-wide error type.

/// Errors reported by the precoding and simulation primitives.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Modulation order is not a power of two at least 4.
    #[error("unsupported modulation order {0}: must be a power of two and at least 4")]
    UnsupportedModulation(usize),

    /// Symbol index does not address a constellation point.
    #[error("symbol index {index} out of range for an {order}-point constellation")]
    SymbolIndexOutOfRange { index: usize, order: usize },

    /// Shapes of the supplied operands do not agree.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Channel input contained a NaN or infinity.
    #[error("channel matrix entries must be finite")]
    NonFiniteChannel,

    /// The Gram matrix of the channel is too ill-conditioned to invert.
    #[error("degenerate channel: Gram matrix condition estimate exceeds {limit:.0e}")]
    DegenerateChannel { limit: f64 },

    /// The two threshold bases of a symbol are collinear, so the scaling
    /// system is singular.
    #[error("collinear decomposition bases for user {user}")]
    CollinearBases { user: usize },

    /// An operation that needs at least one element received none.
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    /// A transmit vector handed to the refinement is not drawn from the
    /// 1-bit alphabet.
    #[error("transmit vector entry {index} is not in the 1-bit alphabet")]
    NotInAlphabet { index: usize },

    /// Exhaustive search was asked for more antennas than its cap allows.
    #[error("exhaustive search supports at most {max} antennas, got {got}")]
    ExhaustiveCapExceeded { got: usize, max: usize },

    /// A simulation configuration violates its invariants.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// The exhaustive-search audit found a refined objective above the
    /// global optimum, which indicates a metric or refinement bug.
    #[error("oracle audit failed: refined objective {refined} exceeds exhaustive optimum {oracle}")]
    OracleAuditFailed { refined: f64, oracle: f64 },
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
