//! Randomized invariant suites shared by the `properties` and `acceptance`
//! test targets. Each suite runs `CASES` cases and reports the first
//! minimized counterexample on failure.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Debug;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

use apiscope::catalog::{
    build_catalog, extract_exported_symbols, harvest_header_identifiers, ApiCatalog, LibrarySpec,
};
use apiscope::coverage::{
    annotate_catalog_coverage, coverage_delta, merge_tracefiles, parse_tracefile, Tracefile,
};
use apiscope::metrics::{
    coverage_buckets, precision_recall, size_buckets, unused_apis, used_not_tested, CoverageBucket,
};
use apiscope::prep::{build_library_inventory, detect_vendored_dirs, ClientRecord, ExclusionRule, OverlapRule};
use apiscope::scan::{
    corpus_scan, find_api_uses, find_api_uses_with, scan_client, strip_comments, CorpusAggregate,
    MatchMode, ScanOptions, UsageReport,
};
use apiscope::schema;

pub const CASES: u32 = 256;

pub type Suite = (&'static str, fn() -> Result<u32, String>);

fn run<S>(strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<u32, String>
where
    S: Strategy,
    S::Value: Debug,
{
    let mut runner = TestRunner::new(Config {
        cases: CASES,
        failure_persistence: None,
        ..Config::default()
    });
    runner.run(&strategy, test).map_err(|e| e.to_string())?;
    Ok(CASES)
}

fn touch(root: &Path, rel: &str, contents: &str) {
    let p = root.join(rel);
    std::fs::create_dir_all(p.parent().unwrap()).unwrap();
    std::fs::write(p, contents).unwrap();
}

// ---------------------------------------------------------------- usage-scan

const FRAGMENTS: &[&str] = &[
    "//", "/*", "*/", "\"", "'", "\\", "\n", "\r\n", "R\"(", ")\"", "u8R\"d(", ")d\"", "x", "f(", " ",
    "1'000", "#define M ", "\t", "*", "/",
];

pub fn strip_preserves_lines() -> Result<u32, String> {
    let source = prop::collection::vec(prop::sample::select(FRAGMENTS), 0..60).prop_map(|v| v.concat());
    run(source, |src| {
        let out = strip_comments(&src);
        prop_assert_eq!(out.len(), src.len());
        prop_assert_eq!(out.lines().count(), src.lines().count());
        for (a, b) in src.bytes().zip(out.bytes()) {
            prop_assert!(a == b || b == b' ', "byte {:?} became {:?}", a as char, b as char);
            prop_assert_eq!(a == b'\n', b == b'\n');
        }
        Ok(())
    })
}

fn ident() -> impl Strategy<Value = String> {
    "[a-z_][a-z0-9_]{0,6}"
}

pub fn token_boundaries() -> Result<u32, String> {
    let affix = "[A-Za-z0-9_]{0,3}";
    let wrapped = prop::collection::vec((affix, affix, prop::bool::ANY), 1..8);
    run((ident(), wrapped), |(api, wraps)| {
        let mut src = String::new();
        for (pre, suf, space) in &wraps {
            let (pre, suf) = if pre.is_empty() && suf.is_empty() {
                ("z", "")
            } else {
                (pre.as_str(), suf.as_str())
            };
            src.push_str(&format!("{pre}{api}{suf}{}(x);\n", if *space { " " } else { "" }));
        }
        let stripped = strip_comments(&src);
        prop_assert!(find_api_uses(&stripped, &api).is_empty());
        let loose = MatchMode {
            loose_call_match: true,
            ..MatchMode::default()
        };
        prop_assert!(find_api_uses_with(&stripped, &api, loose).is_empty());
        let with_call = format!("{src}{api}(y);\n");
        prop_assert_eq!(find_api_uses(&strip_comments(&with_call), &api).len(), 1);
        Ok(())
    })
}

const APIS: [&str; 3] = ["a0", "a1", "a2"];
const LINES: &[&str] = &[
    "a0(1);", "a1 (2);", "a2(3); a0(4);", "// a0(5);", "s = \"a1(\";", "xa0(6);", "int a2;", "/* a1( */",
];

fn client_tree() -> impl Strategy<Value = Vec<Vec<Vec<&'static str>>>> {
    let file = prop::collection::vec(prop::sample::select(LINES), 0..6);
    let client = prop::collection::vec(file, 0..4);
    prop::collection::vec(client, 1..5)
}

fn write_clients(root: &Path, clients: &[Vec<Vec<&str>>]) -> Vec<ClientRecord> {
    clients
        .iter()
        .enumerate()
        .map(|(i, files)| {
            let dir = root.join(format!("c{i}"));
            std::fs::create_dir_all(&dir).unwrap();
            for (j, lines) in files.iter().enumerate() {
                touch(&dir, &format!("src/f{j}.c"), &lines.join("\n"));
            }
            ClientRecord::unprepared(format!("c{i}"), dir)
        })
        .collect()
}

pub fn scan_order_and_additivity() -> Result<u32, String> {
    run((client_tree(), 0usize..8), |(clients, rot)| {
        let tmp = tempfile::tempdir().unwrap();
        let recs = write_clients(tmp.path(), &clients);
        let catalog = ApiCatalog::from_names("lib", APIS);
        let opts = ScanOptions::default();
        let forward = corpus_scan(&recs, &catalog, &opts);

        let mut permuted = recs.clone();
        permuted.reverse();
        let k = rot % permuted.len();
        permuted.rotate_left(k);
        prop_assert_eq!(&corpus_scan(&permuted, &catalog, &opts), &forward);

        let mut folded = CorpusAggregate::empty(&catalog);
        for rec in permuted.iter().rev() {
            folded.add_report(scan_client(rec, &catalog, &opts));
        }
        prop_assert_eq!(&folded, &forward);

        for api in APIS {
            let sum: u64 = forward.reports.values().map(|r| r.uses.get(api).copied().unwrap_or(0)).sum();
            let users = forward.reports.values().filter(|r| r.uses.contains_key(api)).count() as u64;
            prop_assert_eq!(forward.total_uses[api], sum);
            prop_assert_eq!(forward.client_counts[api], users);
        }
        Ok(())
    })
}

pub fn exclusion_soundness() -> Result<u32, String> {
    let files = prop::collection::vec(prop::collection::vec(prop::sample::select(LINES), 0..6), 1..5);
    run((files, any::<prop::sample::Index>()), |(files, pick)| {
        let tmp = tempfile::tempdir().unwrap();
        let root = tmp.path().join("client");
        for (j, lines) in files.iter().enumerate() {
            touch(&root, &format!("src/f{j}.c"), &lines.join("\n"));
        }
        let catalog = ApiCatalog::from_names("lib", APIS);
        let opts = ScanOptions::default();
        let mut rec = ClientRecord::unprepared("c", &root);
        rec.excluded_dirs.insert(PathBuf::from("vendor"), ExclusionRule::Overlap);
        let before = scan_client(&rec, &catalog, &opts);

        let j = pick.index(files.len());
        let moved = format!("f{j}.c");
        std::fs::create_dir_all(root.join("vendor")).unwrap();
        std::fs::rename(root.join("src").join(&moved), root.join("vendor").join(&moved)).unwrap();
        let after = scan_client(&rec, &catalog, &opts);

        let alone = tmp.path().join("alone");
        touch(&alone, &moved, &files[j].join("\n"));
        let contribution = scan_client(&ClientRecord::unprepared("c", &alone), &catalog, &opts);
        for api in APIS {
            let get = |r: &UsageReport| r.uses.get(api).copied().unwrap_or(0);
            prop_assert_eq!(get(&after) + get(&contribution), get(&before));
        }
        Ok(())
    })
}

pub fn usage_report_invariants() -> Result<u32, String> {
    let uses = prop::collection::btree_map(ident(), 0u64..5, 0..10);
    run((uses, 0usize..20), |(uses, extra)| {
        let size = uses.len() + extra;
        let r = UsageReport::from_uses("c", "lib", size, uses.clone());
        prop_assert_eq!(r.distinct_count, uses.values().filter(|&&n| n > 0).count());
        prop_assert!(r.uses.values().all(|&n| n > 0));
        prop_assert!((0.0..=100.0).contains(&r.utilisation_pct));
        Ok(())
    })
}

// --------------------------------------------------------------- client-prep

const POOL: [&str; 8] = ["a.c", "b.c", "c.h", "d.c", "e.c", "f.h", "g.c", "h.c"];
const EXTRA: [&str; 3] = ["x1.c", "x2.c", "x3.txt"];

fn names(pool: &'static [&'static str]) -> impl Strategy<Value = Vec<&'static str>> {
    prop::sample::subsequence(pool, 0..=pool.len())
}

pub fn vendored_threshold_monotone() -> Result<u32, String> {
    let layout = (names(&POOL), names(&POOL), names(&EXTRA), names(&POOL), 0.05f64..=1.0, 0.05f64..=1.0);
    run(layout, |(lib, inner, extra, outer, t1, t2)| {
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let tmp = tempfile::tempdir().unwrap();
        for n in &lib {
            touch(tmp.path(), &format!("lib/src/{n}"), "");
        }
        let client = tmp.path().join("client");
        std::fs::create_dir_all(&client).unwrap();
        for n in inner.iter().chain(&extra) {
            touch(&client, &format!("x/y/{n}"), "");
        }
        for n in &outer {
            touch(&client, &format!("x/{n}"), "");
        }
        let inv = build_library_inventory(&[tmp.path().join("lib")]);
        let rule = |threshold| OverlapRule {
            threshold,
            min_lib_files: 3,
        };
        let low = detect_vendored_dirs(&client, &inv, rule(lo));
        let high = detect_vendored_dirs(&client, &inv, rule(hi));
        for d in &high {
            prop_assert!(
                low.iter().any(|l| d.starts_with(l)),
                "{:?} excluded at {} but not covered at {}",
                d,
                hi,
                lo
            );
        }
        prop_assert_eq!(&detect_vendored_dirs(&client, &inv, rule(hi)), &high);
        Ok(())
    })
}

pub fn vendored_min_lib_files() -> Result<u32, String> {
    run((names(&POOL), 0.05f64..=1.0), |(lib, threshold)| {
        let tmp = tempfile::tempdir().unwrap();
        for n in &lib {
            touch(tmp.path(), &format!("lib/src/{n}"), "");
            touch(tmp.path(), &format!("client/copy/{n}"), "");
        }
        touch(tmp.path(), "client/main.cpp", "");
        let inv = build_library_inventory(&[tmp.path().join("lib")]);
        let found = detect_vendored_dirs(
            &tmp.path().join("client"),
            &inv,
            OverlapRule {
                threshold,
                min_lib_files: 3,
            },
        );
        let copy = Path::new("copy");
        let covered = found.iter().any(|d| copy.starts_with(d));
        prop_assert_eq!(covered, lib.len() >= 3, "{} library files, found {:?}", lib.len(), found);
        if !covered {
            prop_assert!(found.is_empty());
        }
        Ok(())
    })
}

// ----------------------------------------------------------- coverage-ingest

/// Per file: sorted distinct function starts and (line, count) records.
type TraceShape = Vec<(BTreeSet<u32>, BTreeMap<u32, u64>)>;

fn trace_shape() -> impl Strategy<Value = TraceShape> {
    let file = (
        prop::collection::btree_set(1u32..60, 0..5),
        prop::collection::btree_map(1u32..70, 0u64..4, 0..25),
    );
    prop::collection::vec(file, 0..4)
}

fn lcov(shape: &TraceShape) -> String {
    let mut s = String::new();
    for (i, (fns, lines)) in shape.iter().enumerate() {
        s.push_str(&format!("SF:/src/f{i}.c\n"));
        for start in fns {
            s.push_str(&format!("FN:{start},fn_{i}_{start}\n"));
        }
        for (l, c) in lines {
            s.push_str(&format!("DA:{l},{c}\n"));
        }
        s.push_str("end_of_record\n");
    }
    s
}

fn trace_catalog(shape: &TraceShape) -> ApiCatalog {
    let mut names: Vec<String> = Vec::new();
    for (i, (fns, _)) in shape.iter().enumerate() {
        names.extend(fns.iter().map(|s| format!("fn_{i}_{s}")));
    }
    names.push("never_defined".into());
    ApiCatalog::from_names("lib", names)
}

/// Order-insensitive view of a tracefile: path -> (functions, line counts).
type FileView = (BTreeSet<(String, u32, Option<u32>)>, BTreeMap<u32, u64>);

fn normalized(tf: &Tracefile) -> BTreeMap<String, FileView> {
    tf.records
        .iter()
        .map(|r| {
            let fns = r.functions.iter().map(|f| (f.name.clone(), f.start, f.end)).collect();
            (r.path.clone(), (fns, r.line_counts.clone()))
        })
        .collect()
}

pub fn annotation_bounds() -> Result<u32, String> {
    run(trace_shape(), |shape| {
        let tf = parse_tracefile(&lcov(&shape)).unwrap();
        let cat = annotate_catalog_coverage(&trace_catalog(&shape), &tf);
        let mut eloc_sum = 0;
        for api in cat.apis.values() {
            if let (Some(e), Some(c)) = (api.eloc, api.covered_lines) {
                prop_assert!(c <= e);
                eloc_sum += e;
            }
            if let (Some(s), Some(e)) = (api.entry_start, api.entry_end) {
                prop_assert!(s <= e);
            }
        }
        prop_assert!(cat.apis["never_defined"].eloc.is_none());
        let total_lines: u64 = tf.records.iter().map(|r| r.line_counts.len() as u64).sum();
        prop_assert!(eloc_sum <= total_lines);
        Ok(())
    })
}

pub fn merge_algebra() -> Result<u32, String> {
    run((trace_shape(), trace_shape(), trace_shape()), |(a, b, c)| {
        let [a, b, c] = [a, b, c].map(|s| parse_tracefile(&lcov(&s)).unwrap());
        let m = |v: &[&Tracefile]| merge_tracefiles(&v.iter().map(|t| (*t).clone()).collect::<Vec<_>>());
        let empty = Tracefile::default();
        prop_assert_eq!(normalized(&m(&[&a, &empty])), normalized(&a));
        prop_assert_eq!(normalized(&m(&[&a, &b])), normalized(&m(&[&b, &a])));
        let left = m(&[&m(&[&a, &b]), &c]);
        let right = m(&[&a, &m(&[&b, &c])]);
        prop_assert_eq!(normalized(&left), normalized(&right));
        Ok(())
    })
}

pub fn delta_identity_and_monotonicity() -> Result<u32, String> {
    let shape_and_extra = trace_shape().prop_flat_map(|shape| {
        let n: usize = shape.iter().map(|(_, l)| l.len()).sum();
        (Just(shape), prop::collection::vec(0u64..3, n))
    });
    run(shape_and_extra, |(shape, extra)| {
        let base = parse_tracefile(&lcov(&shape)).unwrap();
        let cat = trace_catalog(&shape);
        let same = coverage_delta(&base, &base, &cat, &[]).unwrap();
        prop_assert!(same.is_zero(), "{:?}", same);

        // Extra run over the same build: same files and instrumented lines.
        let mut more = shape.clone();
        let mut it = extra.iter();
        for (_, lines) in more.iter_mut() {
            for c in lines.values_mut() {
                *c = *it.next().unwrap();
            }
        }
        let t = parse_tracefile(&lcov(&more)).unwrap();
        let aug = merge_tracefiles(&[base.clone(), t]);
        let d = coverage_delta(&base, &aug, &cat, &[]).unwrap();
        prop_assert!(d.extra_total_coverage_pct >= 0.0);
        let before = annotate_catalog_coverage(&cat, &base);
        let after = annotate_catalog_coverage(&cat, &aug);
        for (name, b) in &before.apis {
            prop_assert!(after.apis[name].covered_lines >= b.covered_lines);
        }
        let newly: BTreeSet<&String> = d.newly_covered_apis.iter().collect();
        prop_assert!(d.improved_apis.iter().all(|a| !newly.contains(a)));
        Ok(())
    })
}

// ------------------------------------------------------------ metrics-report

type Annotation = Option<(u64, u64)>;

fn annotated_catalog(apis: &[Annotation]) -> ApiCatalog {
    let mut cat = ApiCatalog::from_names("lib", (0..apis.len()).map(|i| format!("api{i:03}")));
    for (sym, a) in cat.apis.values_mut().zip(apis) {
        if let Some((eloc, cov)) = *a {
            sym.eloc = Some(eloc);
            sym.covered_lines = Some(cov.min(eloc));
        }
    }
    cat
}

fn annotations() -> impl Strategy<Value = Vec<Annotation>> {
    prop::collection::vec(prop::option::of((0u64..40, 0u64..40)), 0..40)
}

pub fn bucket_partitions() -> Result<u32, String> {
    run(annotations(), |apis| {
        let cat = annotated_catalog(&apis);
        let cb = coverage_buckets(&cat);
        let bucketed: u64 = cb.rows.iter().map(|r| r.api_count).sum();
        prop_assert_eq!(bucketed + cb.unmeasured, cat.len() as u64);

        // Independent oracle: floating-point percentage against the bounds.
        let mut expect = [0u64; 3];
        for api in cat.apis.values() {
            if let (Some(e), Some(c)) = (api.eloc, api.covered_lines) {
                if e > 0 {
                    let pct = 100.0 * c as f64 / e as f64;
                    expect[if pct < 50.0 { 0 } else if pct < 80.0 { 1 } else { 2 }] += 1;
                }
            }
        }
        let got: Vec<u64> = CoverageBucket::ALL
            .iter()
            .map(|b| cb.rows.iter().find(|r| r.bucket == *b).unwrap().api_count)
            .collect();
        prop_assert_eq!(got, expect.to_vec());

        let annotated = cat.apis.values().filter(|a| a.eloc.is_some()).count() as u64;
        prop_assert_eq!(size_buckets(&cat).iter().map(|r| r.api_count).sum::<u64>(), annotated);
        Ok(())
    })
}

fn count_maps() -> impl Strategy<Value = (BTreeMap<String, u64>, BTreeMap<String, u64>)> {
    prop::collection::vec((0u64..6, 0u64..6), 0..30).prop_map(|pairs| {
        let names = |f: fn(&(u64, u64)) -> u64| {
            pairs.iter().enumerate().map(|(i, p)| (format!("api{i}"), f(p))).collect()
        };
        (names(|p| p.0), names(|p| p.1))
    })
}

pub fn pr_swap_symmetry() -> Result<u32, String> {
    run(count_maps(), |(tool, oracle)| {
        let fwd = precision_recall(&tool, &oracle).unwrap();
        let rev = precision_recall(&oracle, &tool).unwrap();
        for (f, r) in [(fwd.distinct, rev.distinct), (fwd.total, rev.total)] {
            prop_assert_eq!((f.tp, f.fp, f.fn_), (r.tp, r.fn_, r.fp));
        }
        for (f, r) in [(fwd.distinct_pr, rev.distinct_pr), (fwd.total_pr, rev.total_pr)] {
            prop_assert_eq!(f.precision, r.recall);
            prop_assert_eq!(f.recall, r.precision);
        }
        Ok(())
    })
}

pub fn total_mode_identities() -> Result<u32, String> {
    run(count_maps(), |(tool, oracle)| {
        let e = precision_recall(&tool, &oracle).unwrap();
        prop_assert_eq!(e.total.tp + e.total.fp, tool.values().sum::<u64>());
        prop_assert_eq!(e.total.tp + e.total.fn_, oracle.values().sum::<u64>());
        let pos = |m: &BTreeMap<String, u64>| m.values().filter(|&&n| n > 0).count() as u64;
        prop_assert_eq!(e.distinct.tp + e.distinct.fp, pos(&tool));
        prop_assert_eq!(e.distinct.tp + e.distinct.fn_, pos(&oracle));
        Ok(())
    })
}

pub fn table_identities() -> Result<u32, String> {
    let input = annotations().prop_flat_map(|apis| {
        let n = apis.len();
        (Just(apis), prop::collection::vec(prop::collection::vec(0u64..3, n), 0..4))
    });
    run(input, |(apis, clients)| {
        let cat = annotated_catalog(&apis);
        let names: Vec<String> = cat.names().map(str::to_string).collect();
        let mut agg = CorpusAggregate::empty(&cat);
        for (i, counts) in clients.iter().enumerate() {
            let uses = names.iter().cloned().zip(counts.iter().copied()).collect();
            agg.add_report(UsageReport::from_uses(format!("c{i}"), "lib", cat.len(), uses));
        }
        let row = unused_apis(&agg, &cat);
        let used = names.iter().filter(|n| agg.client_count(n) > 0).count() as u64;
        prop_assert_eq!(row.total, row.unused + used);
        if row.total > 0 {
            let exact = 100.0 * row.unused as f64 / row.total as f64;
            prop_assert!((row.unused_pct as f64 - exact).abs() <= 0.5);
        }
        let unt = used_not_tested(&agg, &cat);
        let unused: BTreeSet<&String> = row.unused_apis.iter().collect();
        for api in &unt.apis {
            prop_assert!(agg.client_count(api) > 0);
            prop_assert!(!unused.contains(api));
        }
        if !cat.is_empty() {
            let exact = 100.0 * unt.api_count as f64 / cat.len() as f64;
            prop_assert!((unt.pct_of_catalog as f64 - exact).abs() <= 0.5);
        }
        Ok(())
    })
}

// --------------------------------------------------------------- api-catalog

struct CatalogFixture {
    _dir: tempfile::TempDir,
    so: PathBuf,
    symbols: BTreeSet<String>,
}

fn catalog_fixture() -> &'static CatalogFixture {
    static FIXTURE: OnceLock<CatalogFixture> = OnceLock::new();
    FIXTURE.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let src: String = CATALOG_WORDS.iter().map(|w| format!("int {w}(void) {{ return 0; }}\n")).collect();
        touch(dir.path(), "lib.c", &src);
        let so = dir.path().join("libp.so");
        super::compile_shared(&[dir.path().join("lib.c")], None, &so);
        let symbols = extract_exported_symbols(&so).unwrap();
        CatalogFixture { _dir: dir, so, symbols }
    })
}

const CATALOG_WORDS: [&str; 6] = ["open", "mdb_open", "mdb_close", "mdb_get", "put", "mdb_put_x"];
const HEADER_WORDS: [&str; 10] = [
    "open", "mdb_open", "mdb_close", "mdb_get", "int", "void", "mdb", "mdb_put", "x_put", "/* put */",
];

pub fn catalog_subsets_and_determinism() -> Result<u32, String> {
    let header = prop::collection::vec(prop::sample::select(&HEADER_WORDS[..]), 1..12);
    run(header, |words| {
        let fx = catalog_fixture();
        let tmp = tempfile::tempdir().unwrap();
        touch(tmp.path(), "include/api.h", &words.join(" ;\n"));
        let spec = LibrarySpec {
            name: "p".into(),
            shared_objects: vec![fx.so.clone()],
            header_root: tmp.path().join("include"),
            source_roots: Vec::new(),
            explicit_file_excludes: Vec::new(),
            coverage_excludes: Vec::new(),
        };
        let idents = harvest_header_identifiers(&spec.header_root).unwrap();
        match build_catalog(&spec) {
            Ok(cat) => {
                for n in cat.names() {
                    prop_assert!(fx.symbols.contains(n) && idents.contains(n));
                }
                let expect: BTreeSet<String> = fx.symbols.intersection(&idents).cloned().collect();
                prop_assert_eq!(cat.name_set(), expect);
                prop_assert_eq!(build_catalog(&spec).unwrap().apis, cat.apis);
            }
            Err(apiscope::Error::EmptyCatalog { .. }) => {
                prop_assert!(fx.symbols.is_disjoint(&idents));
            }
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        }
        Ok(())
    })
}

// ----------------------------------------------------------------------- cli

pub fn schema_major_versions() -> Result<u32, String> {
    run((0u32..50, 0u32..20), |(major, minor)| {
        let text = format!("{{\"schema_version\": \"{major}.{minor}\", \"x\": 1}}");
        let ok = schema::check(&text, Path::new("a.json")).is_ok();
        prop_assert_eq!(ok, major == schema::MAJOR);
        Ok(())
    })
}

/// The suites named by the acceptance criteria, in criterion order, followed
/// by the remaining module invariants.
pub const SUITES: &[Suite] = &[
    ("strip_comments preserves line counts", strip_preserves_lines),
    ("no matches on superstring identifiers", token_boundaries),
    ("scan order independence and aggregate additivity", scan_order_and_additivity),
    ("vendored detection is monotone in the threshold", vendored_threshold_monotone),
    ("vendored detection needs 3 library files", vendored_min_lib_files),
    ("bucket partitions sum to the catalog", bucket_partitions),
    ("P/R swap symmetry", pr_swap_symmetry),
    ("total-mode identities", total_mode_identities),
    ("exclusion soundness", exclusion_soundness),
    ("usage report invariants", usage_report_invariants),
    ("annotation bounds", annotation_bounds),
    ("merge identity, commutativity, associativity", merge_algebra),
    ("delta identity and monotonicity", delta_identity_and_monotonicity),
    ("table identities and used-not-tested disjointness", table_identities),
    ("catalog subsets and determinism", catalog_subsets_and_determinism),
    ("schema major version check", schema_major_versions),
];
