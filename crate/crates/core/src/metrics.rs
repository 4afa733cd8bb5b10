//! Usage, coverage and evaluation metrics over catalogs and corpus aggregates.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::catalog::ApiCatalog;
use crate::error::{Error, Result};
use crate::scan::CorpusAggregate;
use crate::util::round_pct;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnusedRow {
    pub library: String,
    pub total: u64,
    pub unused: u64,
    /// Rounded to the nearest integer percent.
    pub unused_pct: u64,
    pub unused_apis: Vec<String>,
}

/// APIs that no client of the corpus uses.
pub fn unused_apis(agg: &CorpusAggregate, catalog: &ApiCatalog) -> UnusedRow {
    let unused_apis: Vec<String> = catalog
        .names()
        .filter(|n| agg.client_count(n) == 0)
        .map(str::to_string)
        .collect();
    let total = catalog.len() as u64;
    let unused = unused_apis.len() as u64;
    UnusedRow {
        library: catalog.library.clone(),
        total,
        unused,
        unused_pct: round_pct(unused, total).unwrap_or(0),
        unused_apis,
    }
}

/// Descending by unused percentage, ties by library name.
pub fn sort_unused(rows: &mut [UnusedRow]) {
    rows.sort_by(|a, b| {
        b.unused_pct
            .cmp(&a.unused_pct)
            .then_with(|| a.library.cmp(&b.library))
    });
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiveNumberSummary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl FiveNumberSummary {
    /// Quartiles by linear interpolation between order statistics.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let q = |p: f64| {
            let h = (v.len() - 1) as f64 * p;
            let lo = h.floor() as usize;
            let hi = h.ceil() as usize;
            v[lo] + (h - lo as f64) * (v[hi] - v[lo])
        };
        Some(FiveNumberSummary {
            min: v[0],
            q1: q(0.25),
            median: q(0.5),
            q3: q(0.75),
            max: v[v.len() - 1],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientUtilisation {
    pub client: String,
    pub distinct: usize,
    pub utilisation_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilisationDistribution {
    pub library: String,
    pub clients: Vec<ClientUtilisation>,
    pub summary: FiveNumberSummary,
}

/// Percentage of the catalog each client uses.
pub fn client_utilisation_distribution(agg: &CorpusAggregate) -> Result<UtilisationDistribution> {
    let clients: Vec<ClientUtilisation> = agg
        .reports
        .values()
        .map(|r| ClientUtilisation {
            client: r.client_id.clone(),
            distinct: r.distinct_count,
            utilisation_pct: r.utilisation_pct,
        })
        .collect();
    let pcts: Vec<f64> = clients.iter().map(|c| c.utilisation_pct).collect();
    let summary = FiveNumberSummary::of(&pcts).ok_or(Error::EmptyCorpus)?;
    Ok(UtilisationDistribution {
        library: agg.library.clone(),
        clients,
        summary,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiUse {
    pub api: String,
    pub client_count: u64,
    pub total_uses: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UseDistribution {
    pub library: String,
    pub apis: Vec<ApiUse>,
}

/// Clients and uses per used API, most used first.
pub fn use_distribution(agg: &CorpusAggregate) -> UseDistribution {
    let mut apis: Vec<ApiUse> = agg
        .total_uses
        .iter()
        .filter(|(_, &n)| n > 0)
        .map(|(api, &total_uses)| ApiUse {
            api: api.clone(),
            client_count: agg.client_count(api),
            total_uses,
        })
        .collect();
    apis.sort_by(|a, b| {
        b.total_uses
            .cmp(&a.total_uses)
            .then(b.client_count.cmp(&a.client_count))
            .then_with(|| a.api.cmp(&b.api))
    });
    UseDistribution {
        library: agg.library.clone(),
        apis,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverageBucket {
    /// `[0, 50)`
    Under50,
    /// `[50, 80)`
    From50To80,
    /// `[80, 100]`
    Over80,
}

impl CoverageBucket {
    pub const ALL: [CoverageBucket; 3] = [Self::Under50, Self::From50To80, Self::Over80];

    /// Bucket of `covered / eloc`, compared exactly in integers.
    pub fn of(covered: u64, eloc: u64) -> Option<Self> {
        if eloc == 0 {
            return None;
        }
        let scaled = 100 * covered as u128;
        let eloc = eloc as u128;
        Some(if scaled < 50 * eloc {
            Self::Under50
        } else if scaled < 80 * eloc {
            Self::From50To80
        } else {
            Self::Over80
        })
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::Under50 => "under_50",
            Self::From50To80 => "from_50_to_80",
            Self::Over80 => "over_80",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageBucketRow {
    pub library: String,
    pub bucket: CoverageBucket,
    pub api_count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageBuckets {
    pub library: String,
    pub rows: Vec<CoverageBucketRow>,
    /// APIs without coverage data, or whose entry function has no
    /// instrumented lines.
    pub unmeasured: u64,
}

pub fn coverage_buckets(catalog: &ApiCatalog) -> CoverageBuckets {
    let mut counts: BTreeMap<CoverageBucket, u64> =
        CoverageBucket::ALL.iter().map(|&b| (b, 0)).collect();
    let mut unmeasured = 0;
    for api in catalog.apis.values() {
        let bucket = match (api.eloc, api.covered_lines) {
            (Some(eloc), Some(cov)) => CoverageBucket::of(cov, eloc),
            _ => None,
        };
        match bucket {
            Some(b) => *counts.get_mut(&b).expect("bucket") += 1,
            None => unmeasured += 1,
        }
    }
    CoverageBuckets {
        library: catalog.library.clone(),
        rows: counts
            .into_iter()
            .map(|(bucket, api_count)| CoverageBucketRow {
                library: catalog.library.clone(),
                bucket,
                api_count,
            })
            .collect(),
        unmeasured,
    }
}

pub const SMALL_API_MAX_ELOC: u64 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SizeBucket {
    /// `eloc <= 20`
    Small,
    /// `eloc > 20`
    Large,
}

impl SizeBucket {
    pub fn of(eloc: u64) -> Self {
        if eloc <= SMALL_API_MAX_ELOC {
            Self::Small
        } else {
            Self::Large
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::Small => "eloc_le_20",
            Self::Large => "eloc_gt_20",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeBucketRow {
    pub library: String,
    pub bucket: SizeBucket,
    pub api_count: u64,
    pub eloc: u64,
    pub covered_lines: u64,
    /// `100 * covered_lines / eloc` over the bucket; absent for an empty bucket.
    pub combined_coverage_pct: Option<f64>,
    pub fully_covered_count: u64,
    pub fully_covered_pct: Option<f64>,
}

impl SizeBucketRow {
    fn new(library: &str, bucket: SizeBucket) -> Self {
        SizeBucketRow {
            library: library.to_string(),
            bucket,
            api_count: 0,
            eloc: 0,
            covered_lines: 0,
            combined_coverage_pct: None,
            fully_covered_count: 0,
            fully_covered_pct: None,
        }
    }

    fn finish(&mut self) {
        self.combined_coverage_pct =
            (self.eloc > 0).then(|| 100.0 * self.covered_lines as f64 / self.eloc as f64);
        self.fully_covered_pct = (self.api_count > 0)
            .then(|| 100.0 * self.fully_covered_count as f64 / self.api_count as f64);
    }
}

/// Coverage of measured APIs split by entry-function size.
pub fn size_buckets(catalog: &ApiCatalog) -> Vec<SizeBucketRow> {
    let mut small = SizeBucketRow::new(&catalog.library, SizeBucket::Small);
    let mut large = SizeBucketRow::new(&catalog.library, SizeBucket::Large);
    for api in catalog.apis.values() {
        let (Some(eloc), Some(cov)) = (api.eloc, api.covered_lines) else {
            continue;
        };
        let row = match SizeBucket::of(eloc) {
            SizeBucket::Small => &mut small,
            SizeBucket::Large => &mut large,
        };
        row.api_count += 1;
        row.eloc += eloc;
        row.covered_lines += cov;
        row.fully_covered_count += u64::from(eloc > 0 && cov == eloc);
    }
    small.finish();
    large.finish();
    vec![small, large]
}

/// Per-bucket totals over many libraries' rows.
pub fn size_bucket_totals(rows: &[SizeBucketRow]) -> Vec<SizeBucketRow> {
    [SizeBucket::Small, SizeBucket::Large]
        .into_iter()
        .map(|bucket| {
            let mut total = SizeBucketRow::new("all", bucket);
            for r in rows.iter().filter(|r| r.bucket == bucket) {
                total.api_count += r.api_count;
                total.eloc += r.eloc;
                total.covered_lines += r.covered_lines;
                total.fully_covered_count += r.fully_covered_count;
            }
            total.finish();
            total
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UsedNotTestedRow {
    pub library: String,
    /// Used by at least one client and measured with zero covered lines.
    pub api_count: u64,
    /// Rounded percentage of the whole catalog.
    pub pct_of_catalog: u64,
    pub apis: Vec<String>,
    /// Used APIs with no coverage data at all, reported separately.
    pub used_unmeasured: u64,
}

pub fn used_not_tested(agg: &CorpusAggregate, catalog: &ApiCatalog) -> UsedNotTestedRow {
    let mut apis = Vec::new();
    let mut used_unmeasured = 0;
    for (name, api) in &catalog.apis {
        if agg.client_count(name) == 0 {
            continue;
        }
        match api.covered_lines {
            Some(0) => apis.push(name.clone()),
            Some(_) => {}
            None => used_unmeasured += 1,
        }
    }
    let api_count = apis.len() as u64;
    UsedNotTestedRow {
        library: catalog.library.clone(),
        api_count,
        pct_of_catalog: round_pct(api_count, catalog.len() as u64).unwrap_or(0),
        apis,
        used_unmeasured,
    }
}

/// Descending by percentage, ties by library name.
pub fn sort_used_not_tested(rows: &mut [UsedNotTestedRow]) {
    rows.sort_by(|a, b| {
        b.pct_of_catalog
            .cmp(&a.pct_of_catalog)
            .then_with(|| a.library.cmp(&b.library))
    });
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalMode {
    Distinct,
    Total,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalCounts {
    pub mode: EvalMode,
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecisionRecall {
    pub precision: Option<f64>,
    pub recall: Option<f64>,
}

impl EvalCounts {
    pub fn precision_recall(&self) -> PrecisionRecall {
        let ratio = |num: u64, den: u64| (den > 0).then(|| num as f64 / den as f64);
        PrecisionRecall {
            precision: ratio(self.tp, self.tp + self.fp),
            recall: ratio(self.tp, self.tp + self.fn_),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub distinct: EvalCounts,
    pub distinct_pr: PrecisionRecall,
    pub total: EvalCounts,
    pub total_pr: PrecisionRecall,
}

/// Compares per-API use counts of a tool against an oracle. In distinct mode
/// an API counts once if positive; in total mode each API contributes
/// `min(tool, oracle)` true positives and its surplus or deficit as false
/// positives or false negatives. Both maps must be keyed on the same APIs.
pub fn precision_recall(
    tool: &BTreeMap<String, u64>,
    oracle: &BTreeMap<String, u64>,
) -> Result<Evaluation> {
    if !tool.keys().eq(oracle.keys()) {
        let only_tool: Vec<&str> = tool
            .keys()
            .filter(|k| !oracle.contains_key(*k))
            .map(String::as_str)
            .collect();
        let only_oracle: Vec<&str> = oracle
            .keys()
            .filter(|k| !tool.contains_key(*k))
            .map(String::as_str)
            .collect();
        return Err(Error::CatalogMismatch {
            detail: format!("only in tool: {only_tool:?}; only in oracle: {only_oracle:?}"),
        });
    }
    let mut d = EvalCounts {
        mode: EvalMode::Distinct,
        tp: 0,
        fp: 0,
        fn_: 0,
    };
    let mut t = EvalCounts {
        mode: EvalMode::Total,
        ..d
    };
    for (api, &a) in tool {
        let b = oracle[api];
        match (a > 0, b > 0) {
            (true, true) => d.tp += 1,
            (true, false) => d.fp += 1,
            (false, true) => d.fn_ += 1,
            (false, false) => {}
        }
        t.tp += a.min(b);
        t.fp += a.saturating_sub(b);
        t.fn_ += b.saturating_sub(a);
    }
    Ok(Evaluation {
        distinct: d,
        distinct_pr: d.precision_recall(),
        total: t,
        total_pr: t.precision_recall(),
    })
}

/// Expands a sparse `{api: count}` map to every catalog API, rejecting APIs
/// outside the catalog.
pub fn densify(
    counts: &BTreeMap<String, u64>,
    catalog: &[String],
) -> Result<BTreeMap<String, u64>> {
    if let Some(unknown) = counts.keys().find(|k| catalog.binary_search(k).is_err()) {
        return Err(Error::CatalogMismatch {
            detail: format!("`{unknown}` is not in the catalog"),
        });
    }
    Ok(catalog
        .iter()
        .map(|a| (a.clone(), counts.get(a).copied().unwrap_or(0)))
        .collect())
}
