use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("arity mismatch: expected {expected}, found {found}")]
    ArityMismatch { expected: usize, found: usize },
    #[error("non-finite coordinate at index {0}")]
    NonFinite(usize),
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown variable `{name}` at byte {offset}")]
    UnknownVariable { name: String, offset: usize },
    #[error("exponent overflow at byte {0}")]
    ExponentOverflow(usize),
    #[error("total degree {degree} exceeds cap {cap}")]
    DegreeCap { degree: u32, cap: u32 },
    #[error("{0}")]
    InvalidProblem(String),
    #[error("missing parameter `{0}`")]
    MissingParameter(&'static str),
    #[error("parameter `{name}` out of range: {value}")]
    ParameterRange { name: &'static str, value: f64 },
    #[error("{0}")]
    Incompatible(String),
    #[error("boundary faces need a single-box outer region, found {0} boxes")]
    NotSingleBox(usize),
    #[error("empty region")]
    EmptyRegion,
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("start point {0:?} is not in X")]
    StartOutside(alloc::vec::Vec<f64>),
    #[error("lattice: {0}")]
    Lattice(String),
    #[error("template: {0}")]
    Template(String),
}
