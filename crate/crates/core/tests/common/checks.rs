//! Fixture comparisons shared by the integration and acceptance targets.
//! Each returns a short summary on success and the first mismatch on failure.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use serde_json::Value;

use apiscope::catalog::ApiCatalog;
use apiscope::coverage::{
    annotate_catalog_coverage, coverage_delta, merge_tracefiles, parse_tracefile, ImprovementReport,
    Tracefile,
};
use apiscope::prep::{build_library_inventory, prepare_client, OverlapRule};
use apiscope::scan::{scan_client_detailed, CorpusAggregate, ScanOptions};

use super::{golden, golden_catalog, golden_source_spec, read_json};

macro_rules! ensure_eq {
    ($got:expr, $want:expr, $what:expr) => {{
        let (g, w) = (&$got, &$want);
        if g != w {
            return Err(format!("{}: got {:?}, expected {:?}", $what, g, w));
        }
    }};
}

fn counts(v: &Value) -> BTreeMap<String, u64> {
    serde_json::from_value(v.clone()).unwrap()
}

/// Prepares and scans every golden client and compares the result with the
/// hand-counted oracle file.
pub fn golden_corpus() -> Result<Duration, String> {
    let start = Instant::now();
    let oracle = read_json(&golden().join("expected_usage.json"));
    let spec = golden_source_spec();
    let inv = build_library_inventory(&spec.source_roots);
    let catalog = golden_catalog();
    let want_catalog: Vec<String> = serde_json::from_value(oracle["catalog"].clone()).unwrap();
    ensure_eq!(catalog.names().collect::<Vec<_>>(), want_catalog, "catalog");

    let mut agg = CorpusAggregate::empty(&catalog);
    let clients = oracle["clients"].as_object().unwrap();
    for (id, want) in clients {
        let root = golden().join("clients").join(id);
        let rec = prepare_client(id, &root, &spec, &inv, OverlapRule::default()).map_err(|e| e.to_string())?;
        let excluded: Vec<(String, String)> = rec
            .report()
            .excluded_dirs
            .iter()
            .map(|e| (e.path.clone(), serde_json::to_value(e.rule).unwrap().as_str().unwrap().to_string()))
            .collect();
        let want_excluded: Vec<(String, String)> = serde_json::from_value(want["excluded_dirs"].clone()).unwrap();
        ensure_eq!(excluded, want_excluded, format!("{id} exclusions"));
        ensure_eq!(rec.excluded_files.len(), 0, format!("{id} excluded files"));

        let scan = scan_client_detailed(&rec, &catalog, &ScanOptions::default());
        ensure_eq!(scan.report.uses, counts(&want["uses"]), format!("{id} uses"));
        ensure_eq!(scan.report.distinct_count as u64, want["distinct"].as_u64().unwrap(), format!("{id} distinct"));
        let pct = 100.0 * want["utilisation_num"].as_f64().unwrap() / want_catalog.len() as f64;
        ensure_eq!(scan.report.utilisation_pct, pct, format!("{id} utilisation"));
        let sites: Vec<String> = scan.sites.iter().map(ToString::to_string).collect();
        let want_sites: Vec<String> = serde_json::from_value(want["sites"].clone()).unwrap();
        ensure_eq!(sites, want_sites, format!("{id} sites"));
        agg.add_report(scan.report);
    }
    ensure_eq!(agg.client_counts, counts(&oracle["client_counts"]), "client counts");
    ensure_eq!(agg.total_uses, counts(&oracle["total_uses"]), "total uses");
    Ok(start.elapsed())
}

pub fn load_golden_trace(name: &str) -> Tracefile {
    parse_tracefile(&std::fs::read_to_string(golden().join(name)).unwrap()).unwrap()
}

type ApiCoverage = (Option<u64>, Option<u64>, Option<f64>);

fn per_api(cat: &ApiCatalog) -> BTreeMap<String, ApiCoverage> {
    cat.apis
        .iter()
        .map(|(n, a)| (n.clone(), (a.eloc, a.covered_lines, a.coverage_pct())))
        .collect()
}

/// Hand-counted attribution of the golden tracefile, self-merge and
/// self-delta.
pub fn coverage_attribution() -> Result<String, String> {
    let tf = load_golden_trace("minilib.info");
    let oracle = read_json(&golden().join("expected_coverage.json"));
    let annotated = annotate_catalog_coverage(&golden_catalog(), &tf);
    for (name, want) in oracle["apis"].as_object().unwrap() {
        let got = &annotated.apis[name];
        if want.is_null() {
            ensure_eq!((got.eloc, got.covered_lines, got.entry_start), (None, None, None), name);
            continue;
        }
        let got_v = serde_json::json!({
            "defining_file": got.defining_file, "entry_start": got.entry_start,
            "entry_end": got.entry_end, "eloc": got.eloc, "covered_lines": got.covered_lines,
        });
        ensure_eq!(got_v, *want, name);
    }
    let (covered, total) = tf.line_totals(&[]);
    ensure_eq!(total, oracle["total_lines"].as_u64().unwrap(), "total lines");
    ensure_eq!(covered, oracle["total_covered"].as_u64().unwrap(), "covered lines");

    let doubled = merge_tracefiles(&[tf.clone(), tf.clone()]);
    for rec in &tf.records {
        let d = doubled.file(&rec.path).ok_or("file lost in merge")?;
        let want: BTreeMap<u32, u64> = rec.line_counts.iter().map(|(l, c)| (*l, c * 2)).collect();
        ensure_eq!(d.line_counts, want, format!("doubled counts of {}", rec.path));
    }
    ensure_eq!(per_api(&annotate_catalog_coverage(&golden_catalog(), &doubled)), per_api(&annotated), "self-merge coverage");
    ensure_eq!(doubled.overall_coverage_pct(&[]), tf.overall_coverage_pct(&[]), "self-merge overall");

    let delta = coverage_delta(&tf, &tf, &golden_catalog(), &[]).map_err(|e| e.to_string())?;
    if !delta.is_zero() {
        return Err(format!("delta(x, x) is not zero: {delta:?}"));
    }
    Ok(format!("{} APIs attributed, {covered}/{total} lines", oracle["apis"].as_object().unwrap().len()))
}

/// Baseline and augmented tracefiles over `apis` functions of 5 lines each,
/// with the given covered-line counts per function.
pub fn synthetic_pair(base: &[u64], aug: &[u64]) -> (Tracefile, Tracefile, ApiCatalog) {
    let render = |covered: &[u64]| {
        let mut s = String::from("SF:/lib/api.c\n");
        for i in 0..covered.len() {
            s.push_str(&format!("FN:{},api_{i}\n", 10 * i + 1));
        }
        for (i, &c) in covered.iter().enumerate() {
            for l in 0..5u64 {
                s.push_str(&format!("DA:{},{}\n", 10 * i as u64 + 1 + l, u64::from(l < c)));
            }
        }
        s.push_str("end_of_record\n");
        parse_tracefile(&s).unwrap()
    };
    let catalog = ApiCatalog::from_names("synthetic", (0..base.len()).map(|i| format!("api_{i}")));
    (render(base), render(aug), catalog)
}

/// Four APIs go from uncovered to covered and four strictly improve.
pub fn improvement_shape() -> Result<ImprovementReport, String> {
    let base = [0, 0, 0, 0, 2, 2, 2, 1, 3, 5];
    let aug = [1, 2, 5, 3, 4, 3, 5, 5, 3, 5];
    let (b, a, cat) = synthetic_pair(&base, &aug);
    let r = coverage_delta(&b, &a, &cat, &[]).map_err(|e| e.to_string())?;

    let names = |range: std::ops::Range<usize>| range.map(|i| format!("api_{i}")).collect::<Vec<_>>();
    ensure_eq!(r.newly_covered_apis, names(0..4), "newly covered");
    ensure_eq!(r.improved_apis, names(4..8), "improved");
    let gained: u64 = base.iter().zip(&aug).map(|(b, a)| a - b).sum();
    ensure_eq!(r.new_api_lines_covered, gained, "new API lines");
    let lines = 5.0 * base.len() as f64;
    let extra = 100.0 * aug.iter().sum::<u64>() as f64 / lines - 100.0 * base.iter().sum::<u64>() as f64 / lines;
    if !(r.extra_total_coverage_pct > 0.0 && (r.extra_total_coverage_pct - extra).abs() < 1e-9) {
        return Err(format!("extra coverage {} expected {extra}", r.extra_total_coverage_pct));
    }
    Ok(r)
}
