use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("mixture extension support [{ext_lower}, {ext_upper}] overlaps base support [{base_lower}, {base_upper}]")]
    MixtureOverlap {
        base_lower: f64,
        base_upper: f64,
        ext_lower: f64,
        ext_upper: f64,
    },

    #[error("mixture extension must lie to the right of the base support (extension upper {ext_upper} <= base lower {base_lower})")]
    MixtureSide { base_lower: f64, ext_upper: f64 },

    #[error("zero density at x' = {at}")]
    ZeroDensity { at: f64 },

    #[error("brute-force enumeration limited to {max} entries, got {len}")]
    SizeLimit { len: usize, max: usize },

    #[error("invalid r* = {r_star}: must not exceed {limit}")]
    InvalidRStar { r_star: usize, limit: usize },

    #[error("coefficient system for p = {p} is unsolvable under every scheme")]
    Unsolvable { p: usize },

    #[error("component of order {order} exceeds the model's declared derivative order {max}")]
    MissingDerivative { order: usize, max: usize },

    #[error("unsupported derivative request: {0}")]
    UnsupportedOrder(String),

    #[error("derivative requested on the kink set (input {input} = 0.5)")]
    Kink { input: usize },

    #[error("output variance estimate {0:e} is degenerate")]
    DegenerateVariance(f64),

    #[error("degenerate reference outputs: {0}")]
    DegenerateTruth(String),

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("non-finite model output at row {row}")]
    NonFinite { row: usize },

    #[error("Sobol generator supports at most {max} dimensions, requested {requested}")]
    DimensionLimit { requested: usize, max: usize },

    #[error("serialization: {0}")]
    Serialization(#[from] serde_json::Error),
}
