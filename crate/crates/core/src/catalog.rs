//! The public API catalog of a library.
//!
//! An API is a function symbol that the library's shared objects export from
//! their text section *and* that occurs as a token somewhere in the installed
//! headers. Exported symbols alone over-approximate the API (libraries export
//! internal cross-module helpers), while parsing headers alone is unreliable in
//! the presence of macros, so the catalog is the intersection of the two.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use goblin::elf::section_header::{SHF_EXECINSTR, SHN_LORESERVE, SHN_UNDEF};
use goblin::elf::sym::{STB_GLOBAL, STT_FUNC, STT_NOTYPE};
use goblin::elf::Elf;
use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use crate::error::{Error, Result};
use crate::lexer;
use crate::schema;

pub const HEADER_EXTENSIONS: &[&str] = &["h", "hh", "hpp", "hxx"];

/// Build inputs describing one library.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LibrarySpec {
    pub name: String,
    pub shared_objects: Vec<PathBuf>,
    pub header_root: PathBuf,
    #[serde(default)]
    pub source_roots: Vec<PathBuf>,
    /// File names excluded from every client, wherever they appear.
    #[serde(default)]
    pub explicit_file_excludes: Vec<String>,
    /// Source path prefixes left out of overall library coverage.
    #[serde(default)]
    pub coverage_excludes: Vec<String>,
}

impl LibrarySpec {
    pub fn validate(&self) -> Result<()> {
        let invalid = |reason: String| Error::InvalidLibrarySpec {
            library: self.name.clone(),
            reason,
        };
        if self.shared_objects.is_empty() {
            return Err(invalid("no shared objects listed".into()));
        }
        for so in &self.shared_objects {
            if !so.is_file() {
                return Err(invalid(format!("shared object {} does not exist", so.display())));
            }
        }
        if !self.header_root.is_dir() {
            return Err(invalid(format!(
                "header root {} is not a directory",
                self.header_root.display()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiSymbol {
    pub name: String,
    pub defining_file: Option<String>,
    pub entry_start: Option<u32>,
    pub entry_end: Option<u32>,
    /// Instrumented lines in the entry function.
    pub eloc: Option<u64>,
    pub covered_lines: Option<u64>,
}

impl ApiSymbol {
    pub fn new(name: impl Into<String>) -> Self {
        ApiSymbol {
            name: name.into(),
            defining_file: None,
            entry_start: None,
            entry_end: None,
            eloc: None,
            covered_lines: None,
        }
    }

    /// Line coverage in percent; absent when unmeasured or when the entry
    /// function has no instrumented lines.
    pub fn coverage_pct(&self) -> Option<f64> {
        match (self.eloc, self.covered_lines) {
            (Some(eloc), Some(cov)) if eloc > 0 => Some(100.0 * cov as f64 / eloc as f64),
            _ => None,
        }
    }

    pub fn is_measured(&self) -> bool {
        self.eloc.is_some()
    }

    pub fn clear_coverage(&mut self) {
        *self = ApiSymbol::new(std::mem::take(&mut self.name));
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub shared_objects: Vec<ObjectProvenance>,
    pub header_root: String,
    pub header_files: usize,
    pub header_identifiers: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tracefiles: Option<Vec<String>>,
    /// Overall line coverage of the tracefile used for annotation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_coverage_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectProvenance {
    pub path: String,
    pub exported_functions: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApiCatalog {
    pub library: String,
    pub apis: BTreeMap<String, ApiSymbol>,
    pub created_at: DateTime<Utc>,
    pub provenance: Provenance,
}

#[derive(Serialize, Deserialize)]
struct CatalogDocument {
    schema_version: String,
    library: String,
    created_at: DateTime<Utc>,
    apis: Vec<ApiSymbol>,
    provenance: Provenance,
}

impl ApiCatalog {
    /// A catalog over the given names, without coverage data.
    pub fn from_names<I, S>(library: impl Into<String>, names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let apis = names
            .into_iter()
            .map(|n| {
                let n = n.into();
                (n.clone(), ApiSymbol::new(n))
            })
            .collect();
        ApiCatalog {
            library: library.into(),
            apis,
            created_at: Utc::now(),
            provenance: Provenance::default(),
        }
    }

    pub fn len(&self) -> usize {
        self.apis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.apis.is_empty()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.apis.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.apis.keys().map(String::as_str)
    }

    pub fn name_set(&self) -> BTreeSet<String> {
        self.apis.keys().cloned().collect()
    }

    pub fn to_json(&self) -> String {
        let doc = CatalogDocument {
            schema_version: schema::VERSION.to_string(),
            library: self.library.clone(),
            created_at: self.created_at,
            apis: self.apis.values().cloned().collect(),
            provenance: self.provenance.clone(),
        };
        let mut s = serde_json::to_string_pretty(&doc).expect("catalog serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str, origin: &Path) -> Result<Self> {
        schema::check(text, origin)?;
        let doc: CatalogDocument =
            serde_json::from_str(text).map_err(|e| Error::json(origin, e))?;
        let mut apis = BTreeMap::new();
        for api in doc.apis {
            apis.insert(api.name.clone(), api);
        }
        Ok(ApiCatalog {
            library: doc.library,
            apis,
            created_at: doc.created_at,
            provenance: doc.provenance,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::util::write_file(path, self.to_json())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, path)
    }
}

/// Names of the global function symbols a shared object defines in an
/// executable section, i.e. the ` T ` lines of `nm -D`. Versioned names
/// (`name@VER`, `name@@VER`) are reduced to the bare name.
pub fn extract_exported_symbols(shared_object: &Path) -> Result<BTreeSet<String>> {
    let bytes = fs::read(shared_object).map_err(|e| Error::io(shared_object, e))?;
    exported_symbols_from_bytes(&bytes, shared_object)
}

pub fn exported_symbols_from_bytes(bytes: &[u8], origin: &Path) -> Result<BTreeSet<String>> {
    if bytes.len() < 4 || &bytes[..4] != b"\x7fELF" {
        return Err(Error::NotElf {
            path: origin.to_path_buf(),
        });
    }
    let elf = Elf::parse(bytes).map_err(|_| Error::NotElf {
        path: origin.to_path_buf(),
    })?;
    if elf.dynsyms.is_empty() {
        return Err(Error::NoDynamicSymbols {
            path: origin.to_path_buf(),
        });
    }

    let in_text = |shndx: usize| -> bool {
        if shndx == SHN_UNDEF as usize || shndx >= SHN_LORESERVE as usize {
            return false;
        }
        match elf.section_headers.get(shndx) {
            Some(sh) => sh.sh_flags & u64::from(SHF_EXECINSTR) != 0,
            // Section headers stripped: any defined symbol is in some loaded segment.
            None => elf.section_headers.is_empty(),
        }
    };

    let mut out = BTreeSet::new();
    for sym in elf.dynsyms.iter() {
        if sym.st_bind() != STB_GLOBAL {
            continue;
        }
        let ty = sym.st_type();
        if ty != STT_FUNC && ty != STT_NOTYPE {
            continue;
        }
        if !in_text(sym.st_shndx) {
            continue;
        }
        let Some(name) = elf.dynstrtab.get_at(sym.st_name) else {
            continue;
        };
        let bare = strip_version(name);
        if !bare.is_empty() {
            out.insert(bare.to_string());
        }
    }
    Ok(out)
}

fn strip_version(name: &str) -> &str {
    match name.find('@') {
        Some(i) => &name[..i],
        None => name,
    }
}

pub fn is_header_file(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| HEADER_EXTENSIONS.contains(&e))
}

/// Every identifier token in every header below `header_root`. Comments and
/// preprocessor structure are deliberately not interpreted.
pub fn harvest_header_identifiers(header_root: &Path) -> Result<BTreeSet<String>> {
    Ok(harvest_headers(header_root)?.0)
}

fn harvest_headers(header_root: &Path) -> Result<(BTreeSet<String>, usize)> {
    if !header_root.is_dir() {
        return Err(Error::io(
            header_root,
            std::io::Error::new(std::io::ErrorKind::NotFound, "header root is not a directory"),
        ));
    }
    let mut idents = BTreeSet::new();
    let mut files = 0usize;
    for entry in WalkDir::new(header_root).sort_by_file_name() {
        let entry = match entry {
            Ok(e) => e,
            Err(e) => {
                log::warn!("skipping unreadable header entry: {e}");
                continue;
            }
        };
        if !entry.file_type().is_file() || !is_header_file(entry.path()) {
            continue;
        }
        let bytes = match fs::read(entry.path()) {
            Ok(b) => b,
            Err(e) => {
                log::warn!("skipping unreadable header {}: {e}", entry.path().display());
                continue;
            }
        };
        files += 1;
        for (_, ident) in lexer::identifiers(&bytes) {
            if !idents.contains(ident) {
                idents.insert(ident.to_string());
            }
        }
    }
    if files == 0 {
        return Err(Error::EmptyHeaderSet {
            path: header_root.to_path_buf(),
        });
    }
    Ok((idents, files))
}

pub fn build_catalog(spec: &LibrarySpec) -> Result<ApiCatalog> {
    spec.validate()?;
    let mut exported = BTreeSet::new();
    let mut objects = Vec::new();
    for so in &spec.shared_objects {
        let syms = extract_exported_symbols(so)?;
        objects.push(ObjectProvenance {
            path: so.display().to_string(),
            exported_functions: syms.len(),
        });
        exported.extend(syms);
    }
    let (header_idents, header_files) = harvest_headers(&spec.header_root)?;

    let names: Vec<String> = exported.intersection(&header_idents).cloned().collect();
    if names.is_empty() {
        return Err(Error::EmptyCatalog {
            library: spec.name.clone(),
        });
    }
    let mut catalog = ApiCatalog::from_names(spec.name.clone(), names);
    catalog.provenance = Provenance {
        shared_objects: objects,
        header_root: spec.header_root.display().to_string(),
        header_files,
        header_identifiers: header_idents.len(),
        tracefiles: None,
        total_coverage_pct: None,
    };
    Ok(catalog)
}
