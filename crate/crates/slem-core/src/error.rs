use alloc::boxed::Box;
use alloc::string::String;

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;

/// Errors raised by the core algorithms.
///
/// Variants carry enough context (cell position, class code, run index) for
/// the caller to report the failure without re-deriving it.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A grid violates a structural invariant (zero dimension, nonpositive
    /// cell size, value/mask length disagreement).
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    /// Two rasters do not share the same geometry.
    #[error("grid geometry mismatch: {0}")]
    ShapeMismatch(String),

    /// An operation needs a larger grid than it was given.
    #[error("grid too small: need at least {need_rows}x{need_cols}, got {rows}x{cols}")]
    GridTooSmall {
        need_rows: usize,
        need_cols: usize,
        rows: usize,
        cols: usize,
    },

    /// A valid cell holds a value outside the range its role permits.
    #[error("{role} value {value} at cell ({row}, {col}) outside [{lo}, {hi}]")]
    ValueOutOfRange {
        role: &'static str,
        row: usize,
        col: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },

    /// A land-cover class code has no entry in the cover table.
    #[error("land-cover class {0} missing from the cover table")]
    UnknownClass(i64),

    /// A scalar argument is outside the mathematical domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// Class partition edges are not strictly increasing or lie below the
    /// distribution support.
    #[error("invalid class partition: {0}")]
    Partition(String),

    /// A landslide footprint cannot be placed on the eligible region.
    #[error("placement error: {0}")]
    Placement(String),

    /// Rejection sampling failed to produce a value within the bound count.
    #[error("sampling error: {0}")]
    Sampling(String),

    /// Invalid simulation parameters.
    #[error("configuration error: {0}")]
    Config(String),

    /// The flow graph contains a cycle; the D-infinity construction should
    /// make this impossible.
    #[error("internal error: cycle in flow graph")]
    FlowCycle,

    /// A failure inside one Monte Carlo iteration, tagged with its run index.
    #[error("iteration {run_index} failed: {source}")]
    Iteration {
        run_index: u32,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Wrap an error with the Monte Carlo run index it occurred in.
    pub fn in_iteration(self, run_index: u32) -> Error {
        Error::Iteration {
            run_index,
            source: Box::new(self),
        }
    }
}
