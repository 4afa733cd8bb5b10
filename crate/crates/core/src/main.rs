use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use apiscope::cli::{self, CoverageRequest, JsonLogger, RunConfig};
use apiscope::Result;

#[derive(Parser)]
#[command(name = "apiscope", version, about = "C library API usage and test coverage analysis")]
struct Opts {
    /// Run configuration (TOML).
    #[arg(long, short, global = true, default_value = "apiscope.toml")]
    config: PathBuf,
    /// Override the configured output directory.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Worker threads (defaults to the number of CPUs).
    #[arg(long, short, global = true)]
    jobs: Option<usize>,
    #[command(flatten)]
    overrides: Overrides,
    /// Log debug events.
    #[arg(long, short, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Overrides {
    /// Line-based matching without literal or multi-line comment handling.
    #[arg(long, global = true)]
    paper_faithful: bool,
    /// Allow any whitespace, including newlines, between a name and `(`.
    #[arg(long, global = true)]
    loose_call_match: bool,
    #[arg(long, global = true)]
    overlap_threshold: Option<f64>,
    #[arg(long, global = true)]
    min_lib_files: Option<usize>,
    /// Skip client files larger than this many bytes.
    #[arg(long, global = true)]
    file_cap_bytes: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Build the API catalog of one or all configured libraries.
    Catalog {
        #[arg(long)]
        library: Option<String>,
    },
    /// Prepare and scan the clients of a library.
    Scan {
        #[arg(long)]
        library: String,
        /// Also write every use site as `file:line:api`.
        #[arg(long)]
        sites: bool,
    },
    /// Attribute LCOV coverage to the catalog of a library.
    Coverage {
        #[arg(long)]
        library: String,
        /// Tracefiles of one or more test runs.
        tracefiles: Vec<PathBuf>,
        /// Use the run with median overall coverage instead of merging.
        #[arg(long)]
        median: bool,
        #[arg(long, requires = "augmented")]
        baseline: Option<PathBuf>,
        #[arg(long, requires = "baseline")]
        augmented: Option<PathBuf>,
    },
    /// Emit all reports from persisted artifacts.
    Report {
        #[arg(long)]
        library: Option<String>,
    },
    /// Precision and recall of scan results against an oracle.
    Eval {
        /// Oracle counts as `{client: {api: count}}`.
        #[arg(long)]
        oracle: PathBuf,
        /// Tool counts in the same format; defaults to the scan of `--library`.
        #[arg(long)]
        tool: Option<PathBuf>,
        #[arg(long)]
        library: Option<String>,
    },
}

fn load_config(opts: &Opts) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(&opts.config)?;
    if let Some(out) = &opts.output {
        cfg.output_dir = out.clone();
    }
    let o = &opts.overrides;
    cfg.flags.paper_faithful |= o.paper_faithful;
    cfg.flags.loose_call_match |= o.loose_call_match;
    if let Some(t) = o.overlap_threshold {
        cfg.thresholds.overlap = t;
    }
    if let Some(n) = o.min_lib_files {
        cfg.thresholds.min_lib_files = n;
    }
    if let Some(c) = o.file_cap_bytes {
        cfg.thresholds.file_cap_bytes = c;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(opts: Opts) -> Result<()> {
    let cfg = load_config(&opts)?;
    match opts.command {
        Command::Catalog { library } => {
            for (name, n) in cli::cmd_catalog(&cfg, library.as_deref())? {
                println!("{name}: {n} APIs");
            }
        }
        Command::Scan { library, sites } => {
            let s = cli::cmd_scan(&cfg, &library, sites)?;
            println!(
                "{}: {} clients scanned, {} skipped, {} APIs used",
                s.library,
                s.scanned.len(),
                s.skipped.len(),
                s.aggregate.client_counts.values().filter(|&&c| c > 0).count()
            );
        }
        Command::Coverage {
            library,
            tracefiles,
            median,
            baseline,
            augmented,
        } => {
            let req = CoverageRequest {
                tracefiles,
                median,
                baseline,
                augmented,
            };
            let s = cli::cmd_coverage(&cfg, &library, &req)?;
            let measured = s.catalog.apis.values().filter(|a| a.is_measured()).count();
            println!("{library}: {measured}/{} APIs measured", s.catalog.len());
            if let Some(imp) = s.improvement {
                println!(
                    "{library}: +{}% overall, {} newly covered, {} improved",
                    imp.extra_total_coverage_pct,
                    imp.newly_covered_apis.len(),
                    imp.improved_apis.len()
                );
            }
        }
        Command::Report { library } => {
            for p in cli::cmd_report(&cfg, library.as_deref())? {
                println!("{}", p.display());
            }
        }
        Command::Eval { oracle, tool, library } => {
            let oracle = cli::load_client_uses(&oracle)?;
            let tool = match (&tool, &library) {
                (Some(t), _) => cli::load_client_uses(t)?,
                (None, Some(l)) => cli::client_uses_from_scan(&cfg, l)?,
                (None, None) => {
                    return Err(apiscope::Error::Config(
                        "eval needs --tool or --library".into(),
                    ))
                }
            };
            let (rows, _) = cli::cmd_eval(&cfg, &tool, &oracle, library.as_deref())?;
            print!("{}", cli::render_eval_table(&rows));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let opts = Opts::parse();
    JsonLogger::init(if opts.verbose {
        log::LevelFilter::Debug
    } else {
        log::LevelFilter::Info
    });
    if let Some(n) = opts.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("could not size the worker pool: {e}");
        }
    }
    match run(opts) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
