use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("modulus mismatch: {left} vs {right}")]
    ModulusMismatch { left: u32, right: u32 },

    #[error("matrix {0} is not invertible")]
    NotInvertible(String),

    #[error("moduli {0} and {1} are not coprime")]
    NotCoprime(u32, u32),

    #[error("{0} does not divide {1}")]
    NotDivisor(u32, u32),

    #[error("zero is not allowed here")]
    Zero,

    #[error("group closure exceeded the budget of {0} elements")]
    Budget(usize),

    #[error("strategy {strategy} cannot be used here: {why}")]
    Strategy { strategy: &'static str, why: String },

    #[error("determinant is not surjective onto (Z/{0}Z)^x")]
    DetNotSurjective(u32),

    #[error("unsupported input: {0}")]
    Unsupported(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("pole")]
    Pole,

    #[error("point {0} is not on {1}")]
    NotOnCurve(String, String),

    #[error("malformed descriptor: {0}")]
    Descriptor(String),
}

pub type Result<T> = std::result::Result<T, Error>;
