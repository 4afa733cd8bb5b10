//! LCOV tracefiles and per-API line coverage.
//!
//! API size (ELOC) is the number of instrumented lines (`DA` records) inside
//! the API's entry function, and API coverage is the fraction of those lines
//! executed at least once. Callees are not included.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::catalog::ApiCatalog;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionRecord {
    pub name: String,
    pub start: u32,
    /// Present only when the tracefile declares it (`FN:<start>,<end>,<name>`).
    pub end: Option<u32>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileCoverage {
    pub path: String,
    pub functions: Vec<FunctionRecord>,
    pub line_counts: BTreeMap<u32, u64>,
}

impl FileCoverage {
    pub fn new(path: impl Into<String>) -> Self {
        FileCoverage {
            path: path.into(),
            ..Default::default()
        }
    }

    fn add_function(&mut self, f: FunctionRecord) {
        match self.functions.iter_mut().find(|g| g.name == f.name) {
            Some(existing) => {
                if existing.end.is_none() && f.end.is_some() {
                    *existing = f;
                }
            }
            None => self.functions.push(f),
        }
    }

    fn add_line(&mut self, line: u32, count: u64) {
        let slot = self.line_counts.entry(line).or_insert(0);
        *slot = slot.saturating_add(count);
    }

    /// `(covered, total)` instrumented lines within `[start, end]`.
    pub fn lines_in(&self, start: u32, end: u32) -> (u64, u64) {
        if start > end {
            return (0, 0);
        }
        self.line_counts
            .range(start..=end)
            .fold((0, 0), |(c, t), (_, &n)| (c + u64::from(n > 0), t + 1))
    }

    pub fn max_line(&self) -> Option<u32> {
        self.line_counts.keys().next_back().copied()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tracefile {
    pub records: Vec<FileCoverage>,
}

impl Tracefile {
    pub fn file(&self, path: &str) -> Option<&FileCoverage> {
        self.records.iter().find(|r| r.path == path)
    }

    /// `(covered, total)` instrumented lines over all files not under any of
    /// the `excludes` path prefixes.
    pub fn line_totals(&self, excludes: &[String]) -> (u64, u64) {
        self.records
            .iter()
            .filter(|r| !excludes.iter().any(|p| r.path.starts_with(p.as_str())))
            .flat_map(|r| r.line_counts.values())
            .fold((0, 0), |(c, t), &n| (c + u64::from(n > 0), t + 1))
    }

    /// Overall line coverage in percent; `None` without instrumented lines.
    pub fn overall_coverage_pct(&self, excludes: &[String]) -> Option<f64> {
        let (covered, total) = self.line_totals(excludes);
        (total > 0).then(|| 100.0 * covered as f64 / total as f64)
    }

    /// Serializes back to LCOV text.
    pub fn to_lcov(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&format!("SF:{}\n", r.path));
            for f in &r.functions {
                match f.end {
                    Some(end) => out.push_str(&format!("FN:{},{},{}\n", f.start, end, f.name)),
                    None => out.push_str(&format!("FN:{},{}\n", f.start, f.name)),
                }
            }
            for (line, count) in &r.line_counts {
                out.push_str(&format!("DA:{line},{count}\n"));
            }
            let (c, t) = r.lines_in(0, u32::MAX);
            out.push_str(&format!("LF:{t}\nLH:{c}\nend_of_record\n"));
        }
        out
    }
}

/// Parses LCOV tracefile text. Unknown `KEY:` directives are skipped with a
/// warning; a known directive with an unparsable payload, or a line that is
/// not a directive at all, is an error.
pub fn parse_tracefile(content: &str) -> Result<Tracefile> {
    let mut tf = Tracefile::default();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut current: Option<usize> = None;
    // FNL/FNA (lcov 2.x) declare locations and names separately.
    let mut fn_locations: HashMap<String, (u32, Option<u32>)> = HashMap::new();

    for (i, raw) in content.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim();
        let malformed = || Error::MalformedDirective {
            line: lineno,
            text: raw.to_string(),
        };
        if line.is_empty() {
            continue;
        }
        if line == "end_of_record" {
            current = None;
            fn_locations.clear();
            continue;
        }
        let Some((key, value)) = line.split_once(':') else {
            return Err(malformed());
        };

        let need_record = |cur: Option<usize>| cur.ok_or_else(malformed);

        match key {
            "SF" => {
                if value.is_empty() {
                    return Err(malformed());
                }
                let idx = *index.entry(value.to_string()).or_insert_with(|| {
                    tf.records.push(FileCoverage::new(value));
                    tf.records.len() - 1
                });
                current = Some(idx);
            }
            "FN" => {
                let idx = need_record(current)?;
                let f = parse_fn(value).ok_or_else(malformed)?;
                tf.records[idx].add_function(f);
            }
            "FNL" => {
                need_record(current)?;
                let mut parts = value.splitn(3, ',');
                let id = parts.next().filter(|s| !s.is_empty()).ok_or_else(malformed)?;
                let start = parts.next().and_then(parse_line_no).ok_or_else(malformed)?;
                let end = match parts.next() {
                    Some(e) => Some(parse_line_no(e).ok_or_else(malformed)?),
                    None => None,
                };
                fn_locations.insert(id.to_string(), (start, end));
            }
            "FNA" => {
                let idx = need_record(current)?;
                let mut parts = value.splitn(3, ',');
                let id = parts.next().ok_or_else(malformed)?;
                let _count = parts.next().ok_or_else(malformed)?;
                let name = parts.next().filter(|s| !s.is_empty()).ok_or_else(malformed)?;
                let &(start, end) = fn_locations.get(id).ok_or_else(malformed)?;
                tf.records[idx].add_function(FunctionRecord {
                    name: name.to_string(),
                    start,
                    end,
                });
            }
            "DA" => {
                let idx = need_record(current)?;
                let mut parts = value.splitn(3, ',');
                let line_no = parts.next().and_then(parse_line_no).ok_or_else(malformed)?;
                let count = parts.next().and_then(parse_count).ok_or_else(malformed)?;
                tf.records[idx].add_line(line_no, count);
            }
            "FNDA" | "FNF" | "FNH" | "LF" | "LH" | "BRDA" | "BRF" | "BRH" => {
                need_record(current)?;
            }
            "TN" | "VER" => {}
            other => {
                log::warn!("tracefile line {lineno}: skipping unknown directive `{other}`");
            }
        }
    }
    Ok(tf)
}

fn parse_line_no(s: &str) -> Option<u32> {
    s.trim().parse::<u32>().ok().filter(|&n| n >= 1)
}

/// Execution counts saturate at `u64::MAX`; negative counts (emitted by some
/// gcov versions on overflow) read as zero.
fn parse_count(s: &str) -> Option<u64> {
    let s = s.trim();
    let (neg, digits) = match s.strip_prefix('-') {
        Some(d) => (true, d),
        None => (false, s),
    };
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    if neg {
        return Some(0);
    }
    Some(digits.parse::<u64>().unwrap_or(u64::MAX))
}

fn parse_fn(value: &str) -> Option<FunctionRecord> {
    let (start, rest) = value.split_once(',')?;
    let start = parse_line_no(start)?;
    // FN:<start>,<end>,<name> when the second field is numeric.
    if let Some((maybe_end, name)) = rest.split_once(',') {
        if let Some(end) = parse_line_no(maybe_end) {
            if name.is_empty() {
                return None;
            }
            return Some(FunctionRecord {
                name: name.to_string(),
                start,
                end: Some(end),
            });
        }
    }
    if rest.is_empty() {
        return None;
    }
    Some(FunctionRecord {
        name: rest.to_string(),
        start,
        end: None,
    })
}

pub type Extents = BTreeMap<String, BTreeMap<String, (u32, u32)>>;

/// Line extent of each function. Without an explicit end line a function is
/// assumed to run until the line before the next function in the same file,
/// or to the last instrumented line for the final function. This
/// over-approximates entry functions followed by non-instrumented code.
pub fn function_extents(tf: &Tracefile) -> Extents {
    tf.records
        .iter()
        .map(|r| (r.path.clone(), file_extents(r)))
        .collect()
}

fn file_extents(r: &FileCoverage) -> BTreeMap<String, (u32, u32)> {
    let mut starts: Vec<u32> = r.functions.iter().map(|f| f.start).collect();
    starts.sort_unstable();
    starts.dedup();
    let max_line = r.max_line().unwrap_or(0);

    r.functions
        .iter()
        .map(|f| {
            let end = f.end.unwrap_or_else(|| {
                let next = starts.partition_point(|&s| s <= f.start);
                match starts.get(next) {
                    Some(&s) => s - 1,
                    None => max_line.max(f.start),
                }
            });
            (f.name.clone(), (f.start, end))
        })
        .collect()
}

/// Annotates every catalog API defined as a function in `tf` with its
/// location, ELOC and covered lines. APIs not found are left unmeasured.
pub fn annotate_catalog_coverage(catalog: &ApiCatalog, tf: &Tracefile) -> ApiCatalog {
    annotate_detailed(catalog, tf).0
}

/// Like [`annotate_catalog_coverage`], also returning the APIs found as
/// functions in more than one file. Those are attributed to the file where
/// the function has the most instrumented lines.
pub fn annotate_detailed(catalog: &ApiCatalog, tf: &Tracefile) -> (ApiCatalog, Vec<String>) {
    struct Candidate<'a> {
        path: &'a str,
        start: u32,
        end: u32,
        eloc: u64,
        covered: u64,
    }

    let mut found: BTreeMap<&str, Vec<Candidate<'_>>> = BTreeMap::new();
    for r in &tf.records {
        for (name, (start, end)) in file_extents(r) {
            let Some((key, _)) = catalog.apis.get_key_value(name.as_str()) else {
                continue;
            };
            let (covered, eloc) = r.lines_in(start, end);
            found.entry(key.as_str()).or_default().push(Candidate {
                path: &r.path,
                start,
                end,
                eloc,
                covered,
            });
        }
    }

    let mut out = catalog.clone();
    out.apis.values_mut().for_each(|a| a.clear_coverage());
    let mut ambiguous = Vec::new();
    for (name, mut cands) in found {
        if cands.len() > 1 {
            log::warn!(
                "API `{name}` is defined in {} files; attributing to the largest definition",
                cands.len()
            );
            ambiguous.push(name.to_string());
        }
        cands.sort_by(|a, b| b.eloc.cmp(&a.eloc).then_with(|| a.path.cmp(b.path)));
        let best = &cands[0];
        let api = out.apis.get_mut(name).expect("catalog API");
        api.defining_file = Some(best.path.to_string());
        api.entry_start = Some(best.start);
        api.entry_end = Some(best.end);
        api.eloc = Some(best.eloc);
        api.covered_lines = Some(best.covered);
    }
    (out, ambiguous)
}

/// Sums per-line counts across tracefiles. Files keep the order in which they
/// first appear; an explicit function end line takes precedence over none.
pub fn merge_tracefiles(tracefiles: &[Tracefile]) -> Tracefile {
    let mut out = Tracefile::default();
    let mut index: HashMap<String, usize> = HashMap::new();
    for tf in tracefiles {
        for r in &tf.records {
            let idx = *index.entry(r.path.clone()).or_insert_with(|| {
                out.records.push(FileCoverage::new(r.path.clone()));
                out.records.len() - 1
            });
            let target = &mut out.records[idx];
            for f in &r.functions {
                target.add_function(f.clone());
            }
            for (&line, &count) in &r.line_counts {
                target.add_line(line, count);
            }
        }
    }
    out
}

/// Index of the run with median overall coverage (lower median for an even
/// number of runs).
pub fn median_run_index(runs: &[Tracefile]) -> Result<usize> {
    if runs.is_empty() {
        return Err(Error::NoTracefiles);
    }
    let mut order: Vec<(f64, usize)> = runs
        .iter()
        .enumerate()
        .map(|(i, tf)| (tf.overall_coverage_pct(&[]).unwrap_or(0.0), i))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(order[(order.len() - 1) / 2].1)
}

pub fn select_median_run(runs: &[Tracefile]) -> Result<Tracefile> {
    Ok(runs[median_run_index(runs)?].clone())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImprovementReport {
    pub library: String,
    pub baseline_total_coverage_pct: f64,
    pub augmented_total_coverage_pct: f64,
    /// Percentage-point gain in overall library line coverage.
    pub extra_total_coverage_pct: f64,
    pub newly_covered_apis: Vec<String>,
    pub improved_apis: Vec<String>,
    pub new_api_lines_covered: u64,
    pub baseline_api_line_coverage_pct: Option<f64>,
    pub augmented_api_line_coverage_pct: Option<f64>,
}

impl ImprovementReport {
    pub fn is_zero(&self) -> bool {
        self.extra_total_coverage_pct == 0.0
            && self.newly_covered_apis.is_empty()
            && self.improved_apis.is_empty()
            && self.new_api_lines_covered == 0
    }
}

/// Coverage gained by running additional tests (`augmented`) on top of the
/// library's own test suite (`baseline`). Both must come from the same build.
pub fn coverage_delta(
    baseline: &Tracefile,
    augmented: &Tracefile,
    catalog: &ApiCatalog,
    coverage_excludes: &[String],
) -> Result<ImprovementReport> {
    if !baseline.records.is_empty()
        && !augmented.records.is_empty()
        && !augmented.records.iter().any(|r| baseline.file(&r.path).is_some())
    {
        return Err(Error::FileSetMismatch);
    }

    let base_ann = annotate_catalog_coverage(catalog, baseline);
    let aug_ann = annotate_catalog_coverage(catalog, augmented);

    let mut newly = Vec::new();
    let mut improved = Vec::new();
    let mut new_lines = 0u64;
    let (mut base_cov, mut base_eloc, mut aug_cov, mut aug_eloc) = (0u64, 0u64, 0u64, 0u64);

    for (name, base_api) in &base_ann.apis {
        let aug_api = &aug_ann.apis[name];
        // Baseline extent wins; both runs are expected to share one build.
        let located = if base_api.is_measured() { base_api } else { aug_api };
        let (Some(path), Some(start), Some(end)) =
            (&located.defining_file, located.entry_start, located.entry_end)
        else {
            continue;
        };
        let (b_cov, b_eloc) = baseline
            .file(path)
            .map_or((0, 0), |f| f.lines_in(start, end));
        let (a_cov, a_eloc) = augmented
            .file(path)
            .map_or((0, 0), |f| f.lines_in(start, end));
        base_cov += b_cov;
        base_eloc += b_eloc;
        aug_cov += a_cov;
        aug_eloc += a_eloc;

        if b_cov == 0 && a_cov > 0 {
            newly.push(name.clone());
        } else if b_cov > 0 && a_cov > b_cov {
            improved.push(name.clone());
        }
        if let Some(af) = augmented.file(path) {
            let bf = baseline.file(path);
            new_lines += af
                .line_counts
                .range(start..=end)
                .filter(|&(line, &n)| {
                    n > 0 && bf.and_then(|b| b.line_counts.get(line)).copied().unwrap_or(0) == 0
                })
                .count() as u64;
        }
    }

    let base_total = baseline.overall_coverage_pct(coverage_excludes).unwrap_or(0.0);
    let aug_total = augmented.overall_coverage_pct(coverage_excludes).unwrap_or(0.0);
    let pct = |c: u64, t: u64| (t > 0).then(|| 100.0 * c as f64 / t as f64);
    Ok(ImprovementReport {
        library: catalog.library.clone(),
        baseline_total_coverage_pct: base_total,
        augmented_total_coverage_pct: aug_total,
        extra_total_coverage_pct: aug_total - base_total,
        newly_covered_apis: newly,
        improved_apis: improved,
        new_api_lines_covered: new_lines,
        baseline_api_line_coverage_pct: pct(base_cov, base_eloc),
        augmented_api_line_coverage_pct: pct(aug_cov, aug_eloc),
    })
}
