use alloc::string::String;
use core::fmt;

use crate::polynomial::Var;

#[derive(Debug, Clone, PartialEq, Eq)]
#[non_exhaustive]
pub enum Error {
    InvalidBid(String),
    InvalidDistribution(String),
    InvalidParameter(String),
    Parse(String),
    /// A bound polynomial mentions the integration variable.
    BoundMentionsVariable(Var),
    /// Evaluation needed a value for this variable.
    UnboundVariable(Var),
    ZeroPolynomial,
    NotUnivariate,
    KOutOfRange { k: usize, n_tilde: usize },
    EnumerationTooLarge { terms: u128, limit: u128 },
    UnsupportedDistribution(&'static str),
    /// Interpolated values disagree with direct evaluation at a held-out node.
    NotPolynomial,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidBid(m) => write!(f, "invalid bid: {m}"),
            Error::InvalidDistribution(m) => write!(f, "invalid distribution: {m}"),
            Error::InvalidParameter(m) => write!(f, "invalid parameter: {m}"),
            Error::Parse(m) => write!(f, "parse error: {m}"),
            Error::BoundMentionsVariable(v) => {
                write!(f, "integration bound mentions the integration variable {v}")
            }
            Error::UnboundVariable(v) => write!(f, "no value supplied for variable {v}"),
            Error::ZeroPolynomial => f.write_str("polynomial is identically zero"),
            Error::NotUnivariate => f.write_str("polynomial is not univariate"),
            Error::KOutOfRange { k, n_tilde } => {
                write!(f, "k = {k} outside 0..={n_tilde}")
            }
            Error::EnumerationTooLarge { terms, limit } => {
                write!(f, "enumeration needs {terms} terms, limit is {limit}")
            }
            Error::UnsupportedDistribution(m) => write!(f, "unsupported distribution: {m}"),
            Error::NotPolynomial => {
                f.write_str("interpolant failed held-out validation on this chamber")
            }
        }
    }
}

impl core::error::Error for Error {}
