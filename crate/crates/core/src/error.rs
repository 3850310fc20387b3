use crate::expr::ExprError;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("config error at line {line}: {msg}")]
    Config { line: usize, msg: String },
    #[error("unknown basis '{0}' (built-in: sr, dsr1, dual)")]
    UnknownBasis(String),
    #[error("unknown suite '{0}'")]
    UnknownSuite(String),
    #[error("generator '{0}' has no realization in this basis")]
    MissingGenerator(String),
    #[error("relation table has no entry for {{{0}, {1}}}")]
    MissingRelation(String, String),
    #[error("conflicting entries for {{{0}, {1}}} in relation table")]
    ConflictingRelation(String, String),
    #[error("relation rhs uses undeclared symbol '{0}'")]
    UndeclaredSymbol(String),
    #[error("function argument mixes non-commuting generators {0} and {1}")]
    NonCommuting(String, String),
    #[error("coproduct of {0} is not defined")]
    MissingCoproduct(String),
    #[error("exp({0}) is not group-like: its argument is not primitive")]
    NotGrouplike(String),
    #[error("coproduct is not of exponential-twist form: {0}")]
    NotTwist(String),
    #[error("inverse consistency failed: {0}")]
    Inverse(String),
    #[error("internal consistency tripwire on {relation}: symbolic pass contradicted by numeric oracle ({detail})")]
    Tripwire { relation: String, detail: String },
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
