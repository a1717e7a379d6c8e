use crate::value::Ref;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the engine can report. The `code` string is stable and is
/// what the script runner prints in `ERROR <Code>: ...` lines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("set `{0}` is already defined")]
    DuplicateSet(String),
    #[error("set `{0}` is not defined")]
    UnknownSet(String),
    #[error("function `{name}` is already defined on set `{input}`")]
    DuplicateFunction { input: String, name: String },
    #[error("function `{name}` is not defined on set `{input}`")]
    UnknownFunction { input: String, name: String },
    #[error("path segment `{segment}` does not name a function on set `{set}`")]
    UnknownPathSegment { set: String, segment: String },
    #[error("{0}")]
    InvalidInput(String),
    #[error("{0}")]
    TypeMismatch(String),
    #[error("dependency cycle: {}", .0.join(" -> "))]
    CycleDetected(Vec<String>),
    #[error("match list must not be empty")]
    EmptyMatchList,
    #[error("`{0}` is not an entity set")]
    NotEntitySet(String),
    #[error("reference {0} is not alive")]
    DeadRef(Ref),
    #[error("function `{0}` is not a base function")]
    NotBaseFunction(String),
    #[error("derived function `{0}` is stale; evaluate first")]
    StaleDerived(String),
    #[error("link `{function}` is ambiguous at {input}: more than one target matches")]
    LinkAmbiguous { function: String, input: Ref },
    #[error("lex error at {line}:{col}: {msg}")]
    LexError { line: u32, col: u32, msg: String },
    #[error("parse error at {line}:{col}: {msg}")]
    ParseError { line: u32, col: u32, msg: String },
    #[error("CSV format error at record {record}: {msg}")]
    CsvFormatError { record: u64, msg: String },
    #[error("snapshot format error at line {line}: {msg}")]
    SnapshotFormatError { line: u32, msg: String },
    #[error("unsupported snapshot version `{0}`")]
    VersionMismatch(String),
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable short code used in rendered error lines.
    pub fn code(&self) -> &'static str {
        match self {
            Error::DuplicateSet(_) => "DuplicateSet",
            Error::UnknownSet(_) => "UnknownSet",
            Error::DuplicateFunction { .. } => "DuplicateFunction",
            Error::UnknownFunction { .. } => "UnknownFunction",
            Error::UnknownPathSegment { .. } => "UnknownPathSegment",
            Error::InvalidInput(_) => "InvalidInput",
            Error::TypeMismatch(_) => "TypeMismatch",
            Error::CycleDetected(_) => "CycleDetected",
            Error::EmptyMatchList => "EmptyMatchList",
            Error::NotEntitySet(_) => "NotEntitySet",
            Error::DeadRef(_) => "DeadRef",
            Error::NotBaseFunction(_) => "NotBaseFunction",
            Error::StaleDerived(_) => "StaleDerived",
            Error::LinkAmbiguous { .. } => "LinkAmbiguous",
            Error::LexError { .. } => "LexError",
            Error::ParseError { .. } => "ParseError",
            Error::CsvFormatError { .. } => "CsvFormatError",
            Error::SnapshotFormatError { .. } => "SnapshotFormatError",
            Error::VersionMismatch(_) => "VersionMismatch",
            Error::Usage(_) => "Usage",
            Error::Io(_) => "Io",
        }
    }
}
