use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RefError {
    #[error("row 0 is not a valid row in `{0}`")]
    RowZero(String),
    #[error("missing column letters in `{0}`")]
    EmptyColumn(String),
    #[error("reference `{0}` is outside the sheet bounds")]
    OutOfRange(String),
    #[error("malformed reference `{0}`")]
    Malformed(String),
}

#[derive(Debug, Error)]
pub enum GridError {
    #[error("malformed grid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("sheet `{sheet}`: {source}")]
    BadRef {
        sheet: String,
        #[source]
        source: RefError,
    },
    #[error("sheet `{sheet}`: duplicate cell `{cell}`")]
    DuplicateCell { sheet: String, cell: String },
    #[error("sheet `{sheet}`: merged range {a} overlaps {b}")]
    OverlappingMerge { sheet: String, a: String, b: String },
    #[error("sheet `{sheet}`: cell `{cell}` is covered by merge {merge} but holds content")]
    CoveredContent { sheet: String, cell: String, merge: String },
    #[error("duplicate sheet name `{0}`")]
    DuplicateSheet(String),
    #[error("unknown value type `{0}`")]
    UnknownValueType(String),
    #[error("not a zip archive: {0}")]
    Zip(String),
    #[error("missing workbook part `{0}`")]
    MissingPart(String),
    #[error("malformed XML in `{part}`: {message}")]
    Xml { part: String, message: String },
    #[error("sheet `{sheet}`: cell `{cell}` refers to undeclared shared formula group {group}")]
    UndeclaredSharedGroup { sheet: String, cell: String, group: String },
    #[error("sheet `{sheet}`: cell `{cell}`: {source}")]
    SharedFormula {
        sheet: String,
        cell: String,
        #[source]
        source: ShiftError,
    },
}

/// A formula syntax error. `position` is a byte offset into the text that
/// was handed to the parser.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{message} at position {position}")]
pub struct ParseError {
    pub position: usize,
    pub message: String,
}

impl ParseError {
    pub(crate) fn new(position: usize, message: impl Into<String>) -> Self {
        ParseError {
            position,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ShiftError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("shifting `{0}` moves it off the sheet")]
    OffSheet(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MathmlError {
    #[error("malformed MathML: {0}")]
    Xml(String),
    #[error("unexpected MathML structure: {0}")]
    Structure(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IndexError {
    #[error("indexed terms may not contain query variables (found ?{0})")]
    QueryVariable(String),
}

#[derive(Debug, Error)]
pub enum SymbolTableError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: duplicate entry for `{key}`")]
    Duplicate { line: usize, key: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
