//! Report bundle: one JSON document per table or figure plus CSV plot data.
//!
//! | file                          | contents                                   |
//! |-------------------------------|--------------------------------------------|
//! | `report_unused`               | unused APIs per library                    |
//! | `report_utilisation`          | catalog share used by each client          |
//! | `report_use_distribution`     | clients and uses per used API              |
//! | `report_cov_buckets`          | APIs per coverage bucket                   |
//! | `report_size_buckets`         | coverage by entry-function size            |
//! | `report_used_not_tested`      | used APIs with zero coverage               |
//! | `report_improvement`          | coverage gained from extra test suites     |
//! | `report_eval`                 | precision and recall against an oracle     |
//!
//! Each name exists as `.json` and `.csv`. Only computed reports are written.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::coverage::ImprovementReport;
use crate::error::Result;
use crate::metrics::{
    size_bucket_totals, CoverageBuckets, Evaluation, SizeBucketRow, UnusedRow, UseDistribution,
    UsedNotTestedRow, UtilisationDistribution,
};
use crate::schema;
use crate::util::{round2, write_file, write_json};

pub const COVERAGE_BUCKET_BOUNDS: &str = "under_50=[0,50) from_50_to_80=[50,80) over_80=[80,100]";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalRow {
    pub client: String,
    #[serde(flatten)]
    pub evaluation: Evaluation,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReportBundle {
    pub unused: Option<Vec<UnusedRow>>,
    pub utilisation: Option<Vec<UtilisationDistribution>>,
    pub use_distribution: Option<Vec<UseDistribution>>,
    pub cov_buckets: Option<Vec<CoverageBuckets>>,
    pub size_buckets: Option<Vec<SizeBucketRow>>,
    /// Overall line coverage per library, shown next to the size buckets.
    pub total_coverage: Option<Vec<(String, Option<f64>)>>,
    pub used_not_tested: Option<Vec<UsedNotTestedRow>>,
    pub improvement: Option<Vec<ImprovementReport>>,
    pub eval: Option<Vec<EvalRow>>,
}

#[derive(Serialize)]
struct Doc<'a, T: Serialize> {
    schema_version: &'static str,
    report: &'static str,
    #[serde(flatten)]
    body: &'a T,
}

struct Writer<'a> {
    dir: &'a Path,
    written: Vec<PathBuf>,
}

impl Writer<'_> {
    fn json<T: Serialize>(&mut self, name: &'static str, body: &T) -> Result<()> {
        let path = self.dir.join(format!("{name}.json"));
        write_json(
            &path,
            &Doc {
                schema_version: schema::VERSION,
                report: name,
                body,
            },
        )?;
        self.written.push(path);
        Ok(())
    }

    fn csv(&mut self, name: &'static str, header: &[&str], rows: Vec<Vec<String>>) -> Result<()> {
        let path = self.dir.join(format!("{name}.csv"));
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for r in rows {
            w.write_record(&r)?;
        }
        let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
        write_file(&path, bytes)?;
        self.written.push(path);
        Ok(())
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

impl ReportBundle {
    /// Writes every computed report into `dir` and returns the written paths.
    pub fn emit(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let mut w = Writer {
            dir,
            written: Vec::new(),
        };

        if let Some(rows) = &self.unused {
            #[derive(Serialize)]
            struct Body<'a> {
                rows: &'a [UnusedRow],
            }
            w.json("report_unused", &Body { rows })?;
            w.csv(
                "report_unused",
                &["library", "total", "unused", "unused_pct"],
                rows.iter()
                    .map(|r| {
                        vec![
                            r.library.clone(),
                            r.total.to_string(),
                            r.unused.to_string(),
                            r.unused_pct.to_string(),
                        ]
                    })
                    .collect(),
            )?;
        }

        if let Some(dists) = &self.utilisation {
            #[derive(Serialize)]
            struct Body<'a> {
                libraries: &'a [UtilisationDistribution],
            }
            w.json("report_utilisation", &Body { libraries: dists })?;
            w.csv(
                "report_utilisation",
                &["library", "client", "distinct", "utilisation_pct"],
                dists
                    .iter()
                    .flat_map(|d| {
                        d.clients.iter().map(|c| {
                            vec![
                                d.library.clone(),
                                c.client.clone(),
                                c.distinct.to_string(),
                                c.utilisation_pct.to_string(),
                            ]
                        })
                    })
                    .collect(),
            )?;
        }

        if let Some(dists) = &self.use_distribution {
            #[derive(Serialize)]
            struct Body<'a> {
                libraries: &'a [UseDistribution],
            }
            w.json("report_use_distribution", &Body { libraries: dists })?;
            w.csv(
                "report_use_distribution",
                &["library", "api", "client_count", "total_uses"],
                dists
                    .iter()
                    .flat_map(|d| {
                        d.apis.iter().map(|a| {
                            vec![
                                d.library.clone(),
                                a.api.clone(),
                                a.client_count.to_string(),
                                a.total_uses.to_string(),
                            ]
                        })
                    })
                    .collect(),
            )?;
        }

        if let Some(buckets) = &self.cov_buckets {
            #[derive(Serialize)]
            struct Body<'a> {
                bucket_bounds: &'static str,
                libraries: &'a [CoverageBuckets],
            }
            w.json(
                "report_cov_buckets",
                &Body {
                    bucket_bounds: COVERAGE_BUCKET_BOUNDS,
                    libraries: buckets,
                },
            )?;
            let mut rows = Vec::new();
            for b in buckets {
                for r in &b.rows {
                    rows.push(vec![b.library.clone(), r.bucket.label().to_string(), r.api_count.to_string()]);
                }
                rows.push(vec![b.library.clone(), "unmeasured".into(), b.unmeasured.to_string()]);
            }
            w.csv("report_cov_buckets", &["library", "bucket", "api_count"], rows)?;
        }

        if let Some(rows) = &self.size_buckets {
            #[derive(Serialize)]
            struct Tcov<'a> {
                library: &'a str,
                total_coverage_pct: Option<f64>,
            }
            #[derive(Serialize)]
            struct Body<'a> {
                rows: &'a [SizeBucketRow],
                totals: Vec<SizeBucketRow>,
                total_coverage: Vec<Tcov<'a>>,
            }
            let tcov = self
                .total_coverage
                .iter()
                .flatten()
                .map(|(l, p)| Tcov {
                    library: l,
                    total_coverage_pct: *p,
                })
                .collect();
            w.json(
                "report_size_buckets",
                &Body {
                    rows,
                    totals: size_bucket_totals(rows),
                    total_coverage: tcov,
                },
            )?;
            w.csv(
                "report_size_buckets",
                &[
                    "library",
                    "bucket",
                    "api_count",
                    "eloc",
                    "covered_lines",
                    "combined_coverage_pct",
                    "fully_covered_count",
                    "fully_covered_pct",
                ],
                rows.iter()
                    .map(|r| {
                        vec![
                            r.library.clone(),
                            r.bucket.label().to_string(),
                            r.api_count.to_string(),
                            r.eloc.to_string(),
                            r.covered_lines.to_string(),
                            opt(r.combined_coverage_pct),
                            r.fully_covered_count.to_string(),
                            opt(r.fully_covered_pct),
                        ]
                    })
                    .collect(),
            )?;
        }

        if let Some(rows) = &self.used_not_tested {
            #[derive(Serialize)]
            struct Body<'a> {
                rows: &'a [UsedNotTestedRow],
            }
            w.json("report_used_not_tested", &Body { rows })?;
            w.csv(
                "report_used_not_tested",
                &["library", "api_count", "pct_of_catalog", "used_unmeasured"],
                rows.iter()
                    .map(|r| {
                        vec![
                            r.library.clone(),
                            r.api_count.to_string(),
                            r.pct_of_catalog.to_string(),
                            r.used_unmeasured.to_string(),
                        ]
                    })
                    .collect(),
            )?;
        }

        if let Some(rows) = &self.improvement {
            #[derive(Serialize)]
            struct Body<'a> {
                rows: &'a [ImprovementReport],
            }
            w.json("report_improvement", &Body { rows })?;
            w.csv(
                "report_improvement",
                &["library", "extra_total_coverage_pct", "newly_covered", "improved", "new_api_lines_covered"],
                rows.iter()
                    .map(|r| {
                        vec![
                            r.library.clone(),
                            r.extra_total_coverage_pct.to_string(),
                            r.newly_covered_apis.len().to_string(),
                            r.improved_apis.len().to_string(),
                            r.new_api_lines_covered.to_string(),
                        ]
                    })
                    .collect(),
            )?;
        }

        if let Some(rows) = &self.eval {
            #[derive(Serialize)]
            struct Body<'a> {
                rows: &'a [EvalRow],
            }
            w.json("report_eval", &Body { rows })?;
            let r2 = |x: Option<f64>| x.map(|v| format!("{:.2}", round2(v))).unwrap_or_default();
            w.csv(
                "report_eval",
                &["client", "p_distinct", "r_distinct", "p_total", "r_total"],
                rows.iter()
                    .map(|r| {
                        let e = &r.evaluation;
                        vec![
                            r.client.clone(),
                            r2(e.distinct_pr.precision),
                            r2(e.distinct_pr.recall),
                            r2(e.total_pr.precision),
                            r2(e.total_pr.recall),
                        ]
                    })
                    .collect(),
            )?;
        }

        Ok(w.written)
    }
}
