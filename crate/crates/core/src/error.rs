use thiserror::Error;

use crate::model::Symbol;
use crate::oracle::ProbabilityBounds;

/// Errors raised by model construction, exact computations, the oracle and
/// the Monte Carlo estimators.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("mean block length diverges")]
    DivergentMean,

    #[error("moment diverges: {0}")]
    InfiniteMoment(String),

    #[error("degenerate level {level}: the exceedance is impossible or certain")]
    DegenerateLevel { level: Symbol },

    #[error("degenerate symbol {symbol}: {reason}")]
    DegenerateSymbol { symbol: Symbol, reason: String },

    #[error("degenerate pattern: symbol {symbol} repeated {length} times has zero probability")]
    DegeneratePattern { symbol: Symbol, length: u32 },

    #[error("oracle budget exceeded after {work} units (partial bounds [{}, {}])", partial.lower, partial.upper)]
    OracleBudgetExceeded { work: u64, partial: ProbabilityBounds },

    #[error("the conditioning event never occurred in {attempts} samples")]
    NoConditioningEvents { attempts: u64 },

    #[error("{exceeded} of {replicas} replicas exceeded the step cap {cap}")]
    BudgetExceeded { cap: u64, exceeded: u64, replicas: u64 },
}

pub type Result<T> = std::result::Result<T, Error>;
