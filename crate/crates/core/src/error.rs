use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("derivative order {order} exceeds the available order {max}")]
    OrderTooHigh { order: usize, max: usize },
    #[error("x = {x} lies outside the domain of the {family} family")]
    OutsideDomain { x: f64, family: &'static str },
    #[error("grid has {len} samples; at least {min} required")]
    GridTooShort { len: usize, min: usize },
    #[error("grid length {0} is even; an odd length is required")]
    EvenGrid(usize),
    #[error("unsupported derivative order {0} (expected 1 or 2)")]
    UnsupportedOrder(usize),
    #[error("anchor index {index} is outside a grid of length {len}")]
    AnchorOutOfRange { index: usize, len: usize },
    #[error("square root requested on the branch cut at z = {re} + {im}i")]
    BranchCut { re: f64, im: f64 },
    #[error("Im λ = 0 is degenerate for the pseudomode construction")]
    DegenerateBeta,
    #[error("α = {alpha} is below a(x_min) = {min}")]
    AlphaTooSmall { alpha: f64, min: f64 },
    #[error("profile is not strictly increasing near x = {x}")]
    NonMonotone { x: f64 },
    #[error("profile violates its invariant: {0}")]
    InvalidProfile(String),
    #[error("cut-off transition layer has {samples} samples; at least {min} required")]
    UnderResolved { samples: usize, min: usize },
    #[error("function support touches the grid boundary")]
    SupportTouchesBoundary,
    #[error("zero denominator: the function vanishes identically")]
    ZeroNorm,
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("matrix is not positive definite (pivot {index})")]
    NotPositiveDefinite { index: usize },
    #[error("dense solver failed: {0}")]
    Solver(String),
}

pub type Result<T> = core::result::Result<T, Error>;
