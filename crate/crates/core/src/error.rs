use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("line {line}: {msg}")]
    GraphParse { line: usize, msg: String },
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("unknown function symbol `{0}`")]
    UnknownFunction(String),
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("unsupported formula shape: {0}")]
    Shape(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn shape<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Shape(msg.into()))
}
