use alloc::string::String;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("division by zero")]
    DivisionByZero,
    #[error("mismatched ground_q: {0} vs {1}")]
    MismatchedGround(u32, u32),
    #[error("q = {0} is not a non-square prime power")]
    BadGround(u32),
    #[error("zero binary form")]
    ZeroForm,
    #[error("cap exceeded: {0}")]
    CapExceeded(String),
    #[error("unsupported sector: {0}")]
    UnsupportedSector(String),
    #[error("invalid weight data: {0}")]
    BadWeights(String),
    #[error("object outside the perpendicular subcategory: {0}")]
    NotPerpendicular(String),
    #[error("unknown vertex: {0}")]
    UnknownVertex(String),
    #[error("internal inconsistency: {0}")]
    Inconsistent(String),
}

pub type Result<T> = core::result::Result<T, Error>;
