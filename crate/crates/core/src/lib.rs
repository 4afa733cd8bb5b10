//! Build-free analysis of how client projects use a C library's public API
//! and how well the library's own tests cover that API.
//!
//! The pipeline has four stages, each persisting JSON artifacts:
//!
//! 1. [`catalog`]: exported functions of the shared objects that are also
//!    named in the public headers.
//! 2. [`coverage`]: LCOV tracefiles attributed to catalog entry functions.
//! 3. [`prep`] and [`scan`]: client checkouts with submodules and vendored
//!    library copies removed, then scanned for calls to catalog APIs.
//! 4. [`metrics`] and [`report`]: usage and coverage tables.

pub mod catalog;
pub mod cli;
pub mod coverage;
pub mod error;
pub mod lexer;
pub mod metrics;
pub mod prep;
pub mod report;
pub mod scan;
pub mod schema;
pub mod util;

pub use catalog::{build_catalog, ApiCatalog, ApiSymbol, LibrarySpec};
pub use coverage::{coverage_delta, parse_tracefile, ImprovementReport, Tracefile};
pub use error::{Error, Result};
pub use prep::{detect_vendored_dirs, prepare_client, ClientRecord, ExclusionRule, OverlapRule};
pub use scan::{corpus_scan, find_api_uses, scan_client, strip_comments, CorpusAggregate, UsageReport};
