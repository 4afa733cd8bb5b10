//! Client preparation: finding the parts of a client checkout that are not
//! the client's own code.
//!
//! Three rules feed the exclusion set: paths declared as git submodules,
//! directories that look like a vendored copy of the library (most of their
//! file names also occur in one of the library's source directories), and
//! explicitly named library files.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::{Component, Path, PathBuf};

use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use crate::catalog::LibrarySpec;
use crate::error::{Error, Result};
use crate::schema;
use crate::scan::is_source_file;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExclusionRule {
    Submodule,
    Overlap,
    Explicit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapRule {
    /// Fraction of a client directory's file names that must also occur in a
    /// library directory.
    pub threshold: f64,
    /// Library directories with fewer files never match.
    pub min_lib_files: usize,
}

impl Default for OverlapRule {
    fn default() -> Self {
        OverlapRule {
            threshold: 0.8,
            min_lib_files: 3,
        }
    }
}

/// A client checkout and what to skip when scanning it. Excluded paths are
/// relative to `root`; the empty path stands for `root` itself.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClientRecord {
    pub client_id: String,
    pub root: PathBuf,
    pub excluded_dirs: BTreeMap<PathBuf, ExclusionRule>,
    pub excluded_files: BTreeMap<PathBuf, ExclusionRule>,
}

impl ClientRecord {
    pub fn unprepared(client_id: impl Into<String>, root: impl Into<PathBuf>) -> Self {
        ClientRecord {
            client_id: client_id.into(),
            root: root.into(),
            excluded_dirs: BTreeMap::new(),
            excluded_files: BTreeMap::new(),
        }
    }

    pub fn is_excluded(&self, rel: &Path) -> bool {
        self.excluded_files.contains_key(rel)
            || self.excluded_dirs.keys().any(|d| rel.starts_with(d))
    }

    pub fn report(&self) -> PrepReport {
        let entries = |m: &BTreeMap<PathBuf, ExclusionRule>| {
            m.iter()
                .map(|(p, &rule)| ExclusionEntry {
                    path: display_rel(p),
                    rule,
                })
                .collect()
        };
        PrepReport {
            schema_version: schema::VERSION.to_string(),
            client: self.client_id.clone(),
            root: self.root.display().to_string(),
            excluded_dirs: entries(&self.excluded_dirs),
            excluded_files: entries(&self.excluded_files),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExclusionEntry {
    pub path: String,
    pub rule: ExclusionRule,
}

/// Persisted form of a [`ClientRecord`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrepReport {
    pub schema_version: String,
    pub client: String,
    pub root: String,
    pub excluded_dirs: Vec<ExclusionEntry>,
    pub excluded_files: Vec<ExclusionEntry>,
}

impl PrepReport {
    pub fn into_record(self) -> ClientRecord {
        let collect = |v: Vec<ExclusionEntry>| {
            v.into_iter()
                .map(|e| (parse_rel(&e.path), e.rule))
                .collect()
        };
        ClientRecord {
            client_id: self.client,
            root: PathBuf::from(self.root),
            excluded_dirs: collect(self.excluded_dirs),
            excluded_files: collect(self.excluded_files),
        }
    }
}

fn display_rel(p: &Path) -> String {
    if p.as_os_str().is_empty() {
        ".".to_string()
    } else {
        p.components()
            .map(|c| c.as_os_str().to_string_lossy())
            .collect::<Vec<_>>()
            .join("/")
    }
}

fn parse_rel(s: &str) -> PathBuf {
    if s == "." {
        PathBuf::new()
    } else {
        PathBuf::from(s)
    }
}

/// Values of every `path` key inside `[submodule "..."]` sections, in file
/// order. Sections without a path are skipped with a warning.
pub fn parse_submodule_manifest(content: &str) -> Vec<String> {
    let mut paths = Vec::new();
    // (section name, whether it had a path) for the open submodule section
    let mut section: Option<(String, bool)> = None;

    let close = |section: &mut Option<(String, bool)>| {
        if let Some((name, false)) = section.take() {
            log::warn!("submodule section `{name}` has no path; skipped");
        }
    };

    for raw in content.lines() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if line.starts_with('[') {
            close(&mut section);
            let header = line.trim_start_matches('[').trim_end_matches(']').trim();
            if let Some(rest) = header.strip_prefix("submodule") {
                let name = rest.trim().trim_matches('"').to_string();
                section = Some((name, false));
            } else if !line.ends_with(']') {
                log::warn!("malformed section header `{line}`; skipped");
            }
            continue;
        }
        let Some((name, found)) = section.as_mut() else {
            continue;
        };
        let Some((key, value)) = line.split_once('=') else {
            log::warn!("submodule `{name}`: malformed line `{line}`");
            continue;
        };
        if key.trim() == "path" {
            let value = value.trim().trim_matches('"');
            if value.is_empty() {
                log::warn!("submodule `{name}`: empty path");
                continue;
            }
            if !*found {
                paths.push(value.to_string());
                *found = true;
            }
        }
    }
    close(&mut section);
    paths
}

/// Library source directories mapped to the base names of all files below them.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LibraryInventory {
    pub dirs: BTreeMap<PathBuf, BTreeSet<String>>,
}

/// Relative paths of all files under `root` (skipping `.git`), sorted.
fn files_under(root: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let walker = WalkDir::new(root)
        .sort_by_file_name()
        .into_iter()
        .filter_entry(|e| e.depth() == 0 || e.file_name() != ".git");
    for entry in walker {
        match entry {
            Ok(e) if e.file_type().is_file() => {
                if let Ok(rel) = e.path().strip_prefix(root) {
                    out.push(rel.to_path_buf());
                }
            }
            Ok(_) => {}
            Err(e) => log::warn!("skipping unreadable entry under {}: {e}", root.display()),
        }
    }
    out
}

/// Every directory under `root` (relative; the empty path is `root`) mapped
/// to the base names of the files it contains recursively, plus whether any
/// of those files is C/C++ source.
fn directory_names(root: &Path) -> BTreeMap<PathBuf, (BTreeSet<String>, bool)> {
    let mut dirs: BTreeMap<PathBuf, (BTreeSet<String>, bool)> = BTreeMap::new();
    for rel in files_under(root) {
        let Some(name) = rel.file_name().map(|n| n.to_string_lossy().into_owned()) else {
            continue;
        };
        let source = is_source_file(&rel);
        let mut dir = rel.parent();
        while let Some(d) = dir {
            let slot = dirs.entry(d.to_path_buf()).or_default();
            slot.0.insert(name.clone());
            slot.1 |= source;
            dir = d.parent();
        }
    }
    dirs
}

pub fn build_library_inventory(source_roots: &[PathBuf]) -> LibraryInventory {
    let mut inv = LibraryInventory::default();
    for root in source_roots {
        for (rel, (names, has_source)) in directory_names(root) {
            if has_source {
                inv.dirs.insert(root.join(rel), names);
            }
        }
    }
    inv
}

/// Client directories (relative to `client_root`) that look like a copy of
/// some library directory. A qualifying directory's subdirectories are not
/// reported separately.
pub fn detect_vendored_dirs(
    client_root: &Path,
    inv: &LibraryInventory,
    rule: OverlapRule,
) -> BTreeSet<PathBuf> {
    let eligible: Vec<&BTreeSet<String>> = inv
        .dirs
        .values()
        .filter(|names| names.len() >= rule.min_lib_files)
        .collect();
    let mut by_name: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, names) in eligible.iter().enumerate() {
        for n in names.iter() {
            by_name.entry(n.as_str()).or_default().push(i);
        }
    }

    let mut out: BTreeSet<PathBuf> = BTreeSet::new();
    let mut hits = vec![0usize; eligible.len()];
    // BTreeMap order visits parents before children.
    for (dir, (names, _)) in directory_names(client_root) {
        if names.is_empty() || out.iter().any(|p| dir.starts_with(p)) {
            continue;
        }
        hits.iter_mut().for_each(|h| *h = 0);
        for n in &names {
            if let Some(libs) = by_name.get(n.as_str()) {
                for &i in libs {
                    hits[i] += 1;
                }
            }
        }
        let total = names.len() as f64;
        if hits.iter().any(|&h| h as f64 / total >= rule.threshold) {
            out.insert(dir);
        }
    }
    out
}

/// Normalizes a submodule path to a relative path inside the client root.
fn submodule_rel(path: &str) -> Option<PathBuf> {
    let p = Path::new(path);
    let mut out = PathBuf::new();
    for c in p.components() {
        match c {
            Component::Normal(s) => out.push(s),
            Component::CurDir => {}
            _ => return None,
        }
    }
    (!out.as_os_str().is_empty()).then_some(out)
}

pub fn prepare_client(
    client_id: &str,
    root: &Path,
    spec: &LibrarySpec,
    inv: &LibraryInventory,
    rule: OverlapRule,
) -> Result<ClientRecord> {
    if !root.is_dir() {
        return Err(Error::MissingRoot {
            path: root.to_path_buf(),
        });
    }
    let mut rec = ClientRecord::unprepared(client_id, root);

    let manifest = root.join(".gitmodules");
    if manifest.is_file() {
        let text = fs::read(&manifest).map_err(|e| Error::io(&manifest, e))?;
        for path in parse_submodule_manifest(&String::from_utf8_lossy(&text)) {
            match submodule_rel(&path) {
                Some(rel) => {
                    rec.excluded_dirs.insert(rel, ExclusionRule::Submodule);
                }
                None => log::warn!("{client_id}: submodule path `{path}` is outside the root"),
            }
        }
    }

    for dir in detect_vendored_dirs(root, inv, rule) {
        rec.excluded_dirs.entry(dir).or_insert(ExclusionRule::Overlap);
    }

    if !spec.explicit_file_excludes.is_empty() {
        for rel in files_under(root) {
            let matches = rel
                .file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| spec.explicit_file_excludes.iter().any(|x| x == n));
            if matches {
                rec.excluded_files.insert(rel, ExclusionRule::Explicit);
            }
        }
    }
    Ok(rec)
}
