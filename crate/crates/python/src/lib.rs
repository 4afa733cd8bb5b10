//! Python bindings for the `apiscope` analysis library.
//!
//! Structured results are returned as plain Python dicts and lists decoded
//! from the same JSON the command-line tool writes.

use std::collections::BTreeMap;
use std::path::PathBuf;

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;

use apiscope_core::catalog::{self, LibrarySpec};
use apiscope_core::coverage;
use apiscope_core::metrics;
use apiscope_core::prep::{self, OverlapRule};
use apiscope_core::scan::{self, MatchMode, ScanOptions, DEFAULT_FILE_CAP};
use apiscope_core::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } | Error::MissingRoot { .. } => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn json_to_py<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// Parsed LCOV coverage data.
#[pyclass(name = "Tracefile", module = "apiscope")]
struct PyTracefile {
    inner: coverage::Tracefile,
}

#[pymethods]
impl PyTracefile {
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(PyTracefile {
            inner: coverage::parse_tracefile(text).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyTracefile {
            inner: apiscope_core::cli::load_tracefile(&path).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn merge(runs: Vec<PyRef<'_, PyTracefile>>) -> Self {
        let runs: Vec<coverage::Tracefile> = runs.iter().map(|r| r.inner.clone()).collect();
        PyTracefile {
            inner: coverage::merge_tracefiles(&runs),
        }
    }

    /// The run with median overall line coverage (lower median on ties).
    #[staticmethod]
    fn select_median_run(runs: Vec<PyRef<'_, PyTracefile>>) -> PyResult<Self> {
        let runs: Vec<coverage::Tracefile> = runs.iter().map(|r| r.inner.clone()).collect();
        Ok(PyTracefile {
            inner: coverage::select_median_run(&runs).map_err(to_py)?,
        })
    }

    fn files(&self) -> Vec<String> {
        self.inner.records.iter().map(|r| r.path.clone()).collect()
    }

    #[pyo3(signature = (excludes = Vec::new()))]
    fn overall_coverage_pct(&self, excludes: Vec<String>) -> Option<f64> {
        self.inner.overall_coverage_pct(&excludes)
    }

    /// `{file: {function: (start, end)}}`.
    fn function_extents(&self) -> BTreeMap<String, BTreeMap<String, (u32, u32)>> {
        coverage::function_extents(&self.inner)
    }

    fn line_counts(&self, path: &str) -> Option<BTreeMap<u32, u64>> {
        self.inner.file(path).map(|f| f.line_counts.clone())
    }

    fn to_lcov(&self) -> String {
        self.inner.to_lcov()
    }

    fn __len__(&self) -> usize {
        self.inner.records.len()
    }
}

/// Public API set of one library.
#[pyclass(name = "ApiCatalog", module = "apiscope")]
struct PyApiCatalog {
    inner: catalog::ApiCatalog,
}

#[pymethods]
impl PyApiCatalog {
    #[staticmethod]
    fn from_names(library: &str, names: Vec<String>) -> Self {
        PyApiCatalog {
            inner: catalog::ApiCatalog::from_names(library, names),
        }
    }

    /// Exported functions of `shared_objects` that also occur in the headers
    /// under `header_root`.
    #[staticmethod]
    #[pyo3(signature = (name, shared_objects, header_root))]
    fn build(name: String, shared_objects: Vec<PathBuf>, header_root: PathBuf) -> PyResult<Self> {
        let spec = LibrarySpec {
            name,
            shared_objects,
            header_root,
            source_roots: Vec::new(),
            explicit_file_excludes: Vec::new(),
            coverage_excludes: Vec::new(),
        };
        Ok(PyApiCatalog {
            inner: catalog::build_catalog(&spec).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyApiCatalog {
            inner: catalog::ApiCatalog::load(&path).map_err(to_py)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(to_py)
    }

    #[getter]
    fn library(&self) -> String {
        self.inner.library.clone()
    }

    fn names(&self) -> Vec<String> {
        self.inner.names().map(str::to_string).collect()
    }

    /// Entry-function location, size and coverage of one API.
    fn api<'py>(&self, py: Python<'py>, name: &str) -> PyResult<Option<Bound<'py, PyAny>>> {
        self.inner.apis.get(name).map(|a| json_to_py(py, a)).transpose()
    }

    /// A copy with entry-function size and coverage taken from `tracefile`.
    fn annotate(&self, tracefile: &PyTracefile) -> Self {
        PyApiCatalog {
            inner: coverage::annotate_catalog_coverage(&self.inner, &tracefile.inner),
        }
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __contains__(&self, name: &str) -> bool {
        self.inner.contains(name)
    }
}

#[pyfunction]
fn strip_comments(source: &str) -> String {
    scan::strip_comments(source)
}

/// 1-based line of every call of `api` in `source`.
#[pyfunction]
#[pyo3(signature = (source, api, paper_faithful = false, loose_call_match = false))]
fn find_api_uses(source: &str, api: &str, paper_faithful: bool, loose_call_match: bool) -> Vec<u32> {
    let mode = MatchMode {
        paper_faithful,
        loose_call_match,
    };
    if paper_faithful {
        scan::find_api_uses_with(source, api, mode)
    } else {
        scan::find_api_uses_with(&scan::strip_comments(source), api, mode)
    }
}

#[pyfunction]
fn extract_exported_symbols(path: PathBuf) -> PyResult<Vec<String>> {
    Ok(catalog::extract_exported_symbols(&path).map_err(to_py)?.into_iter().collect())
}

#[pyfunction]
fn harvest_header_identifiers(path: PathBuf) -> PyResult<Vec<String>> {
    Ok(catalog::harvest_header_identifiers(&path).map_err(to_py)?.into_iter().collect())
}

#[pyfunction]
fn parse_submodule_manifest(content: &str) -> Vec<String> {
    prep::parse_submodule_manifest(content)
}

/// Client directories that look like a copy of a directory under one of
/// `library_roots`, relative to `client_root` (`"."` for the root itself).
#[pyfunction]
#[pyo3(signature = (client_root, library_roots, threshold = 0.8, min_lib_files = 3))]
fn detect_vendored_dirs(
    client_root: PathBuf,
    library_roots: Vec<PathBuf>,
    threshold: f64,
    min_lib_files: usize,
) -> Vec<String> {
    let inv = prep::build_library_inventory(&library_roots);
    prep::detect_vendored_dirs(
        &client_root,
        &inv,
        OverlapRule {
            threshold,
            min_lib_files,
        },
    )
    .into_iter()
    .map(|p| {
        if p.as_os_str().is_empty() {
            ".".to_string()
        } else {
            p.display().to_string()
        }
    })
    .collect()
}

/// Prepares a client checkout and counts its uses of the catalog APIs.
/// Returns `(usage report, preparation report)`.
#[pyfunction]
#[pyo3(signature = (
    client_id, root, catalog, library_roots = Vec::new(), explicit_file_excludes = Vec::new(),
    threshold = 0.8, min_lib_files = 3, paper_faithful = false, loose_call_match = false,
    file_cap_bytes = DEFAULT_FILE_CAP
))]
#[allow(clippy::too_many_arguments)]
fn scan_client<'py>(
    py: Python<'py>,
    client_id: &str,
    root: PathBuf,
    catalog: &PyApiCatalog,
    library_roots: Vec<PathBuf>,
    explicit_file_excludes: Vec<String>,
    threshold: f64,
    min_lib_files: usize,
    paper_faithful: bool,
    loose_call_match: bool,
    file_cap_bytes: u64,
) -> PyResult<(Bound<'py, PyAny>, Bound<'py, PyAny>)> {
    let spec = LibrarySpec {
        name: catalog.inner.library.clone(),
        shared_objects: Vec::new(),
        header_root: PathBuf::new(),
        source_roots: library_roots,
        explicit_file_excludes,
        coverage_excludes: Vec::new(),
    };
    let inv = prep::build_library_inventory(&spec.source_roots);
    let rec = prep::prepare_client(
        client_id,
        &root,
        &spec,
        &inv,
        OverlapRule {
            threshold,
            min_lib_files,
        },
    )
    .map_err(to_py)?;
    let opts = ScanOptions {
        mode: MatchMode {
            paper_faithful,
            loose_call_match,
        },
        file_cap_bytes,
    };
    let report = scan::scan_client(&rec, &catalog.inner, &opts);
    Ok((json_to_py(py, &report)?, json_to_py(py, &rec.report())?))
}

/// Coverage gained by `augmented` over `baseline` for the catalog APIs.
#[pyfunction]
fn coverage_delta<'py>(
    py: Python<'py>,
    baseline: &PyTracefile,
    augmented: &PyTracefile,
    catalog: &PyApiCatalog,
) -> PyResult<Bound<'py, PyAny>> {
    let report = coverage::coverage_delta(&baseline.inner, &augmented.inner, &catalog.inner, &[])
        .map_err(to_py)?;
    json_to_py(py, &report)
}

/// Distinct- and total-mode counts with precision and recall. Both maps
/// must have the same keys.
#[pyfunction]
fn precision_recall<'py>(
    py: Python<'py>,
    tool: BTreeMap<String, u64>,
    oracle: BTreeMap<String, u64>,
) -> PyResult<Bound<'py, PyAny>> {
    json_to_py(py, &metrics::precision_recall(&tool, &oracle).map_err(to_py)?)
}

#[pymodule]
fn apiscope(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTracefile>()?;
    m.add_class::<PyApiCatalog>()?;
    m.add_function(wrap_pyfunction!(strip_comments, m)?)?;
    m.add_function(wrap_pyfunction!(find_api_uses, m)?)?;
    m.add_function(wrap_pyfunction!(extract_exported_symbols, m)?)?;
    m.add_function(wrap_pyfunction!(harvest_header_identifiers, m)?)?;
    m.add_function(wrap_pyfunction!(parse_submodule_manifest, m)?)?;
    m.add_function(wrap_pyfunction!(detect_vendored_dirs, m)?)?;
    m.add_function(wrap_pyfunction!(scan_client, m)?)?;
    m.add_function(wrap_pyfunction!(coverage_delta, m)?)?;
    m.add_function(wrap_pyfunction!(precision_recall, m)?)?;
    m.add("SCHEMA_VERSION", apiscope_core::schema::VERSION)?;
    Ok(())
}
