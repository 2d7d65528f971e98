use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch for {what}: expected {expected}, got {actual}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("item index {index} out of range for a catalog of {n_items} items")]
    IndexOutOfRange { index: usize, n_items: usize },
    #[error("duplicate item index {0} in assortment")]
    DuplicateItem(usize),
    #[error("empty assortment where a nonempty one is required")]
    EmptyAssortment,
    #[error("empty dataset")]
    EmptyDataset,
    #[error("record {record}: {reason}")]
    InconsistentRecord { record: usize, reason: &'static str },
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
    #[error("starting parameter lies outside the confidence region")]
    InfeasibleStart,
    #[error("linear program is {0}")]
    LpStatus(&'static str),
    #[error("simplex did not terminate within {0} pivots")]
    IterationLimit(usize),
    #[error("degenerate LP solution: no-purchase weight {0:e}")]
    DegenerateSolution(f64),
    #[error("non-integral LP solution: gamma[{index}] = {value}")]
    NonIntegral { index: usize, value: f64 },
    #[error("too many items to enumerate ({0} > 20)")]
    TooManyItems(usize),
    #[error("rejection sampling exhausted {attempts} draws for item {item}")]
    RejectionLimit { item: usize, attempts: usize },
}
