//! Pipeline orchestration behind the `apiscope` binary.
//!
//! Every stage persists its results under the output directory and later
//! stages only read those artifacts, so any stage can be rerun on its own:
//!
//! ```text
//! <output>/<library>/catalog.json            catalog
//! <output>/<library>/catalog_annotated.json  coverage
//! <output>/<library>/improvement.json        coverage --baseline/--augmented
//! <output>/<library>/prep/<client>.json      scan
//! <output>/<library>/usage/<client>.json     scan
//! <output>/<library>/sites/<client>.txt      scan --sites
//! <output>/<library>/aggregate.json          scan
//! <output>/<library>/skipped.json            scan
//! <output>/reports/report_*.{json,csv}       report, eval
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::catalog::{build_catalog, ApiCatalog, LibrarySpec};
use crate::coverage::{
    annotate_detailed, coverage_delta, median_run_index, merge_tracefiles, parse_tracefile,
    ImprovementReport, Tracefile,
};
use crate::error::{Error, Result};
use crate::metrics;
use crate::prep::{build_library_inventory, prepare_client, OverlapRule};
use crate::report::{EvalRow, ReportBundle};
use crate::scan::{scan_client_detailed, CorpusAggregate, MatchMode, ScanOptions, DEFAULT_FILE_CAP};
use crate::schema;
use crate::util::{to_json_pretty, write_file, write_json};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    #[serde(default = "default_overlap")]
    pub overlap: f64,
    #[serde(default = "default_min_lib_files")]
    pub min_lib_files: usize,
    #[serde(default = "default_file_cap")]
    pub file_cap_bytes: u64,
}

fn default_overlap() -> f64 {
    0.8
}
fn default_min_lib_files() -> usize {
    3
}
fn default_file_cap() -> u64 {
    DEFAULT_FILE_CAP
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            overlap: default_overlap(),
            min_lib_files: default_min_lib_files(),
            file_cap_bytes: default_file_cap(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Flags {
    #[serde(default)]
    pub paper_faithful: bool,
    #[serde(default)]
    pub loose_call_match: bool,
}

/// Run configuration, read from TOML. Relative paths are resolved against
/// the directory containing the configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub libraries: Vec<LibrarySpec>,
    #[serde(default)]
    pub dependency_db: Option<PathBuf>,
    #[serde(default)]
    pub clients_root: Option<PathBuf>,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub flags: Flags,
}

fn default_output() -> PathBuf {
    PathBuf::from("apiscope-out")
}

impl RunConfig {
    pub fn from_toml(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, base)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for lib in &mut self.libraries {
            lib.shared_objects.iter_mut().for_each(fix);
            fix(&mut lib.header_root);
            lib.source_roots.iter_mut().for_each(fix);
        }
        if let Some(p) = self.dependency_db.as_mut() {
            fix(p);
        }
        if let Some(p) = self.clients_root.as_mut() {
            fix(p);
        }
        fix(&mut self.output_dir);
    }

    pub fn validate(&self) -> Result<()> {
        let t = &self.thresholds;
        if !(t.overlap > 0.0 && t.overlap <= 1.0) {
            return Err(Error::Config(format!("overlap threshold {} not in (0, 1]", t.overlap)));
        }
        if t.min_lib_files == 0 {
            return Err(Error::Config("min_lib_files must be at least 1".into()));
        }
        let mut seen = BTreeSet::new();
        for lib in &self.libraries {
            if !seen.insert(lib.name.as_str()) {
                return Err(Error::Config(format!("library `{}` configured twice", lib.name)));
            }
        }
        Ok(())
    }

    pub fn library(&self, name: &str) -> Result<&LibrarySpec> {
        self.libraries
            .iter()
            .find(|l| l.name == name)
            .ok_or_else(|| Error::Config(format!("library `{name}` is not configured")))
    }

    /// The named library, or every configured library.
    pub fn select(&self, name: Option<&str>) -> Result<Vec<&LibrarySpec>> {
        match name {
            Some(n) => Ok(vec![self.library(n)?]),
            None => Ok(self.libraries.iter().collect()),
        }
    }

    pub fn overlap_rule(&self) -> OverlapRule {
        OverlapRule {
            threshold: self.thresholds.overlap,
            min_lib_files: self.thresholds.min_lib_files,
        }
    }

    pub fn scan_options(&self) -> ScanOptions {
        ScanOptions {
            mode: MatchMode {
                paper_faithful: self.flags.paper_faithful,
                loose_call_match: self.flags.loose_call_match,
            },
            file_cap_bytes: self.thresholds.file_cap_bytes,
        }
    }

    pub fn library_dir(&self, library: &str) -> PathBuf {
        self.output_dir.join(file_stem(library))
    }

    pub fn catalog_path(&self, library: &str) -> PathBuf {
        self.library_dir(library).join("catalog.json")
    }

    pub fn annotated_catalog_path(&self, library: &str) -> PathBuf {
        self.library_dir(library).join("catalog_annotated.json")
    }

    pub fn aggregate_path(&self, library: &str) -> PathBuf {
        self.library_dir(library).join("aggregate.json")
    }

    pub fn improvement_path(&self, library: &str) -> PathBuf {
        self.library_dir(library).join("improvement.json")
    }

    pub fn reports_dir(&self) -> PathBuf {
        self.output_dir.join("reports")
    }
}

/// A client or library identifier made safe for use as a file name.
pub fn file_stem(id: &str) -> String {
    id.chars()
        .map(|c| match c {
            '/' | '\\' | ':' => '_',
            c => c,
        })
        .collect::<String>()
        .replace("..", "_")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DependencyEntry {
    pub client: String,
    /// Repository URL or local checkout path.
    pub source: String,
    pub library: String,
}

/// `(client, library)` pairs: client uses library.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DependencyDb {
    pub entries: Vec<DependencyEntry>,
}

impl DependencyDb {
    pub fn from_json(text: &str, origin: &Path) -> Result<Self> {
        let entries: Vec<DependencyEntry> =
            serde_json::from_str(text).map_err(|e| Error::json(origin, e))?;
        let mut seen = BTreeSet::new();
        for e in &entries {
            if !seen.insert((e.client.as_str(), e.library.as_str())) {
                return Err(Error::Config(format!(
                    "{}: duplicate entry for client `{}` and library `{}`",
                    origin.display(),
                    e.client,
                    e.library
                )));
            }
        }
        Ok(DependencyDb { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, path)
    }

    pub fn clients_of<'a>(&'a self, library: &'a str) -> impl Iterator<Item = &'a DependencyEntry> {
        self.entries.iter().filter(move |e| e.library == library)
    }
}

fn require(path: PathBuf, artifact: &str, stage: &str) -> Result<PathBuf> {
    if path.is_file() {
        Ok(path)
    } else {
        Err(Error::MissingInputs {
            artifact: artifact.to_string(),
            path,
            stage: stage.to_string(),
        })
    }
}

pub fn cmd_catalog(cfg: &RunConfig, library: Option<&str>) -> Result<Vec<(String, usize)>> {
    let mut out = Vec::new();
    for spec in cfg.select(library)? {
        let catalog = build_catalog(spec)?;
        catalog.save(&cfg.catalog_path(&spec.name))?;
        log::info!("{}: {} APIs", spec.name, catalog.len());
        out.push((spec.name.clone(), catalog.len()));
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedClient {
    pub client: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanSummary {
    pub library: String,
    pub scanned: Vec<String>,
    pub skipped: Vec<SkippedClient>,
    pub aggregate: CorpusAggregate,
}

fn locate_checkout(cfg: &RunConfig, entry: &DependencyEntry) -> Option<PathBuf> {
    let source = Path::new(&entry.source);
    let local = if source.is_absolute() {
        source.to_path_buf()
    } else {
        cfg.dependency_db
            .as_deref()
            .and_then(Path::parent)
            .unwrap_or(Path::new("."))
            .join(source)
    };
    if !entry.source.contains("://") && local.is_dir() {
        return Some(local);
    }
    let under_root = cfg.clients_root.as_ref()?.join(&entry.client);
    under_root.is_dir().then_some(under_root)
}

pub fn cmd_scan(cfg: &RunConfig, library: &str, write_sites: bool) -> Result<ScanSummary> {
    let spec = cfg.library(library)?;
    let catalog = ApiCatalog::load(&require(cfg.catalog_path(library), "catalog", "catalog")?)?;
    let db_path = cfg
        .dependency_db
        .clone()
        .ok_or_else(|| Error::Config("dependency_db is not set".into()))?;
    let db = DependencyDb::load(&db_path)?;
    let inventory = build_library_inventory(&spec.source_roots);
    let opts = cfg.scan_options();
    let dir = cfg.library_dir(library);

    let mut aggregate = CorpusAggregate::empty(&catalog);
    let mut scanned = Vec::new();
    let mut skipped = Vec::new();
    for entry in db.clients_of(library) {
        let Some(root) = locate_checkout(cfg, entry) else {
            log::warn!("{}: no local checkout; skipped", entry.client);
            skipped.push(SkippedClient {
                client: entry.client.clone(),
                reason: "checkout not found".into(),
            });
            continue;
        };
        let rec = prepare_client(&entry.client, &root, spec, &inventory, cfg.overlap_rule())?;
        let stem = file_stem(&entry.client);
        write_json(&dir.join("prep").join(format!("{stem}.json")), &rec.report())?;

        let result = scan_client_detailed(&rec, &catalog, &opts);
        write_file(
            &dir.join("usage").join(format!("{stem}.json")),
            result.report.to_json(),
        )?;
        if write_sites {
            let listing: String = result.sites.iter().map(|s| format!("{s}\n")).collect();
            write_file(&dir.join("sites").join(format!("{stem}.txt")), listing)?;
        }
        log::info!(
            "{}: {} files, {} distinct APIs, {} uses",
            entry.client,
            result.files_scanned,
            result.report.distinct_count,
            result.report.total_uses()
        );
        aggregate.add_report(result.report);
        scanned.push(entry.client.clone());
    }

    write_file(&cfg.aggregate_path(library), aggregate.to_json())?;
    #[derive(Serialize)]
    struct Skipped<'a> {
        schema_version: &'a str,
        skipped: &'a [SkippedClient],
    }
    write_json(
        &dir.join("skipped.json"),
        &Skipped {
            schema_version: schema::VERSION,
            skipped: &skipped,
        },
    )?;
    Ok(ScanSummary {
        library: library.to_string(),
        scanned,
        skipped,
        aggregate,
    })
}

#[derive(Debug, Clone, Default)]
pub struct CoverageRequest {
    pub tracefiles: Vec<PathBuf>,
    /// Pick the median run instead of merging the tracefiles.
    pub median: bool,
    pub baseline: Option<PathBuf>,
    pub augmented: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageSummary {
    pub catalog: ApiCatalog,
    pub selected_run: Option<PathBuf>,
    pub ambiguous: Vec<String>,
    pub improvement: Option<ImprovementReport>,
}

pub fn load_tracefile(path: &Path) -> Result<Tracefile> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_tracefile(&String::from_utf8_lossy(&bytes)).map_err(|e| match e {
        Error::MalformedDirective { line, text } => Error::MalformedDirective {
            line,
            text: format!("{text} (in {})", path.display()),
        },
        other => other,
    })
}

pub fn cmd_coverage(cfg: &RunConfig, library: &str, req: &CoverageRequest) -> Result<CoverageSummary> {
    let spec = cfg.library(library)?;
    let catalog = ApiCatalog::load(&require(cfg.catalog_path(library), "catalog", "catalog")?)?;

    let mut sources = req.tracefiles.clone();
    if sources.is_empty() {
        sources.extend(req.baseline.iter().cloned());
    }
    if sources.is_empty() {
        return Err(Error::NoTracefiles);
    }
    let runs: Vec<Tracefile> = sources.iter().map(|p| load_tracefile(p)).collect::<Result<_>>()?;
    let (tf, selected) = if req.median {
        let i = median_run_index(&runs)?;
        log::info!("{library}: median run is {}", sources[i].display());
        (runs[i].clone(), Some(sources[i].clone()))
    } else {
        (merge_tracefiles(&runs), None)
    };

    let (mut annotated, ambiguous) = annotate_detailed(&catalog, &tf);
    annotated.provenance.tracefiles = Some(match &selected {
        Some(p) => vec![p.display().to_string()],
        None => sources.iter().map(|p| p.display().to_string()).collect(),
    });
    annotated.provenance.total_coverage_pct = tf.overall_coverage_pct(&spec.coverage_excludes);
    annotated.save(&cfg.annotated_catalog_path(library))?;

    let improvement = match (&req.baseline, &req.augmented) {
        (Some(b), Some(a)) => {
            let report = coverage_delta(
                &load_tracefile(b)?,
                &load_tracefile(a)?,
                &catalog,
                &spec.coverage_excludes,
            )?;
            #[derive(Serialize)]
            struct Doc<'a> {
                schema_version: &'a str,
                #[serde(flatten)]
                report: &'a ImprovementReport,
            }
            write_json(
                &cfg.improvement_path(library),
                &Doc {
                    schema_version: schema::VERSION,
                    report: &report,
                },
            )?;
            Some(report)
        }
        (None, None) => None,
        _ => {
            return Err(Error::Config(
                "--baseline and --augmented must be given together".into(),
            ))
        }
    };

    Ok(CoverageSummary {
        catalog: annotated,
        selected_run: selected,
        ambiguous,
        improvement,
    })
}

fn load_improvement(path: &Path) -> Result<ImprovementReport> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    schema::check(&text, path)?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}

/// Computes every report for the selected libraries from persisted artifacts.
pub fn build_report_bundle(cfg: &RunConfig, library: Option<&str>) -> Result<ReportBundle> {
    let mut bundle = ReportBundle {
        unused: Some(Vec::new()),
        utilisation: Some(Vec::new()),
        use_distribution: Some(Vec::new()),
        cov_buckets: Some(Vec::new()),
        size_buckets: Some(Vec::new()),
        total_coverage: Some(Vec::new()),
        used_not_tested: Some(Vec::new()),
        improvement: None,
        eval: None,
    };
    let mut improvements = Vec::new();
    for spec in cfg.select(library)? {
        let name = spec.name.as_str();
        let agg_path = require(cfg.aggregate_path(name), "usage aggregate", "scan")?;
        let agg_text = fs::read_to_string(&agg_path).map_err(|e| Error::io(&agg_path, e))?;
        let agg = CorpusAggregate::from_json(&agg_text, &agg_path)?;
        let catalog = ApiCatalog::load(&require(
            cfg.annotated_catalog_path(name),
            "annotated catalog",
            "coverage",
        )?)?;

        bundle.unused.as_mut().unwrap().push(metrics::unused_apis(&agg, &catalog));
        match metrics::client_utilisation_distribution(&agg) {
            Ok(d) => bundle.utilisation.as_mut().unwrap().push(d),
            Err(Error::EmptyCorpus) => log::warn!("{name}: no scanned clients"),
            Err(e) => return Err(e),
        }
        bundle.use_distribution.as_mut().unwrap().push(metrics::use_distribution(&agg));
        bundle.cov_buckets.as_mut().unwrap().push(metrics::coverage_buckets(&catalog));
        bundle.size_buckets.as_mut().unwrap().extend(metrics::size_buckets(&catalog));
        bundle
            .total_coverage
            .as_mut()
            .unwrap()
            .push((name.to_string(), catalog.provenance.total_coverage_pct));
        bundle
            .used_not_tested
            .as_mut()
            .unwrap()
            .push(metrics::used_not_tested(&agg, &catalog));

        let imp = cfg.improvement_path(name);
        if imp.is_file() {
            improvements.push(load_improvement(&imp)?);
        }
    }
    metrics::sort_unused(bundle.unused.as_mut().unwrap());
    metrics::sort_used_not_tested(bundle.used_not_tested.as_mut().unwrap());
    if !improvements.is_empty() {
        bundle.improvement = Some(improvements);
    }
    Ok(bundle)
}

pub fn cmd_report(cfg: &RunConfig, library: Option<&str>) -> Result<Vec<PathBuf>> {
    build_report_bundle(cfg, library)?.emit(&cfg.reports_dir())
}

pub type ClientUses = BTreeMap<String, BTreeMap<String, u64>>;

pub fn load_client_uses(path: &Path) -> Result<ClientUses> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}

/// Per-client precision and recall of `tool` against `oracle`. Clients present
/// in only one of the inputs are reported with a warning and left out. Without
/// a catalog the API universe is the union of both inputs' keys per client.
pub fn evaluate(tool: &ClientUses, oracle: &ClientUses, catalog: Option<&ApiCatalog>) -> Result<Vec<EvalRow>> {
    let tool_clients: BTreeSet<&String> = tool.keys().collect();
    let oracle_clients: BTreeSet<&String> = oracle.keys().collect();
    for c in tool_clients.symmetric_difference(&oracle_clients) {
        log::warn!("client `{c}` is missing from one of the result sets; not evaluated");
    }
    let mut rows = Vec::new();
    for client in tool_clients.intersection(&oracle_clients) {
        let (t, o) = (&tool[*client], &oracle[*client]);
        let universe: Vec<String> = match catalog {
            Some(c) => c.names().map(str::to_string).collect(),
            None => t.keys().chain(o.keys()).cloned().collect::<BTreeSet<_>>().into_iter().collect(),
        };
        let evaluation = metrics::precision_recall(
            &metrics::densify(t, &universe)?,
            &metrics::densify(o, &universe)?,
        )?;
        rows.push(EvalRow {
            client: (*client).clone(),
            evaluation,
        });
    }
    Ok(rows)
}

pub fn cmd_eval(
    cfg: &RunConfig,
    tool: &ClientUses,
    oracle: &ClientUses,
    library: Option<&str>,
) -> Result<(Vec<EvalRow>, Vec<PathBuf>)> {
    let catalog = match library {
        Some(l) => Some(ApiCatalog::load(&require(cfg.catalog_path(l), "catalog", "catalog")?)?),
        None => None,
    };
    let rows = evaluate(tool, oracle, catalog.as_ref())?;
    let bundle = ReportBundle {
        eval: Some(rows.clone()),
        ..Default::default()
    };
    let written = bundle.emit(&cfg.reports_dir())?;
    Ok((rows, written))
}

/// Tool results taken from a previous `scan` of `library`.
pub fn client_uses_from_scan(cfg: &RunConfig, library: &str) -> Result<ClientUses> {
    let path = require(cfg.aggregate_path(library), "usage aggregate", "scan")?;
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let agg = CorpusAggregate::from_json(&text, &path)?;
    Ok(agg
        .reports
        .into_iter()
        .map(|(client, r)| (client, r.uses))
        .collect())
}

/// One JSON object per log event, written to stderr.
pub struct JsonLogger {
    level: log::LevelFilter,
}

impl JsonLogger {
    pub fn init(level: log::LevelFilter) {
        if log::set_boxed_logger(Box::new(JsonLogger { level })).is_ok() {
            log::set_max_level(level);
        }
    }
}

impl log::Log for JsonLogger {
    fn enabled(&self, metadata: &log::Metadata<'_>) -> bool {
        metadata.level() <= self.level
    }

    fn log(&self, record: &log::Record<'_>) {
        if !self.enabled(record.metadata()) {
            return;
        }
        let event = serde_json::json!({
            "ts": chrono::Utc::now().to_rfc3339(),
            "level": record.level().as_str().to_lowercase(),
            "target": record.target(),
            "message": record.args().to_string(),
        });
        eprintln!("{event}");
    }

    fn flush(&self) {}
}

pub fn render_eval_table(rows: &[EvalRow]) -> String {
    let f = |x: Option<f64>| x.map(|v| format!("{v:.2}")).unwrap_or_else(|| "-".into());
    let mut s = String::from("client\tP_D / R_D\tP_T / R_T\n");
    for r in rows {
        let e = &r.evaluation;
        s.push_str(&format!(
            "{}\t{} / {}\t{} / {}\n",
            r.client,
            f(e.distinct_pr.precision),
            f(e.distinct_pr.recall),
            f(e.total_pr.precision),
            f(e.total_pr.recall)
        ));
    }
    s
}

pub fn summary_json<T: Serialize>(value: &T) -> String {
    to_json_pretty(value)
}
