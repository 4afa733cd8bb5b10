#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Command;

use apiscope::catalog::{ApiCatalog, LibrarySpec};

pub const GOLDEN_APIS: [&str; 6] = ["ml_close", "ml_open", "ml_read", "ml_seek", "ml_stat", "ml_write"];

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn golden() -> PathBuf {
    fixtures().join("golden")
}

pub fn write(root: &Path, rel: &str, contents: &str) -> PathBuf {
    let p = root.join(rel);
    std::fs::create_dir_all(p.parent().unwrap()).unwrap();
    std::fs::write(&p, contents).unwrap();
    p
}

/// Compiles C sources into a shared object with the system compiler.
pub fn compile_shared(sources: &[PathBuf], include: Option<&Path>, out: &Path) {
    let mut cmd = Command::new("cc");
    cmd.args(["-shared", "-fPIC", "-O0", "-o"]).arg(out);
    if let Some(inc) = include {
        cmd.arg("-I").arg(inc);
    }
    cmd.args(sources);
    let status = cmd.status().expect("cc must be installed");
    assert!(status.success(), "cc failed");
}

/// Builds the golden library into `dir` and returns its spec.
pub fn golden_spec(dir: &Path) -> LibrarySpec {
    let lib = golden().join("minilib");
    let so = dir.join("libminilib.so");
    let sources: Vec<PathBuf> = ["core.c", "io.c", "seek.c", "stat.c"]
        .iter()
        .map(|f| lib.join("src").join(f))
        .collect();
    compile_shared(&sources, Some(&lib.join("include")), &so);
    LibrarySpec {
        name: "minilib".into(),
        shared_objects: vec![so],
        header_root: lib.join("include"),
        source_roots: vec![lib],
        explicit_file_excludes: Vec::new(),
        coverage_excludes: Vec::new(),
    }
}

/// The golden library's spec without a built shared object.
pub fn golden_source_spec() -> LibrarySpec {
    let lib = golden().join("minilib");
    LibrarySpec {
        name: "minilib".into(),
        shared_objects: Vec::new(),
        header_root: lib.join("include"),
        source_roots: vec![lib],
        explicit_file_excludes: Vec::new(),
        coverage_excludes: Vec::new(),
    }
}

pub fn golden_catalog() -> ApiCatalog {
    ApiCatalog::from_names("minilib", GOLDEN_APIS)
}

pub fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

pub mod checks;
pub mod props;
