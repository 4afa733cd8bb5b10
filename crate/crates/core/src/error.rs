use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: not an ELF file")]
    NotElf { path: PathBuf },
    #[error("{path}: no dynamic symbol table (static-only or stripped build?)")]
    NoDynamicSymbols { path: PathBuf },
    #[error("{path}: no header files found (wrong install prefix?)")]
    EmptyHeaderSet { path: PathBuf },
    #[error("library `{library}`: no exported symbol appears in the installed headers")]
    EmptyCatalog { library: String },
    #[error("invalid library spec `{library}`: {reason}")]
    InvalidLibrarySpec { library: String, reason: String },

    #[error("line {line}: malformed tracefile directive `{text}`")]
    MalformedDirective { line: usize, text: String },
    #[error("augmented tracefile shares no source files with the baseline")]
    FileSetMismatch,
    #[error("no tracefiles given")]
    NoTracefiles,

    #[error("client root {path} does not exist")]
    MissingRoot { path: PathBuf },

    #[error("corpus contains no clients")]
    EmptyCorpus,
    #[error("tool and oracle results are keyed on different API sets: {detail}")]
    CatalogMismatch { detail: String },

    #[error("missing {artifact}: {path} (run `{stage}` first)")]
    MissingInputs {
        artifact: String,
        path: PathBuf,
        stage: String,
    },
    #[error("{path}: unsupported schema version {found} (expected major {expected})")]
    SchemaVersion {
        path: PathBuf,
        found: String,
        expected: u32,
    },
    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }
}
