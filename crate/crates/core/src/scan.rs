//! Lexical API usage scanning of C/C++ client sources.
//!
//! A use is a call expression: the API name as a whole word, followed by at
//! most one whitespace character and an opening parenthesis. Uses inside
//! comments and string or character literals do not count; uses inside macro
//! bodies and `#if` regions do. Nothing is preprocessed or built.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use crate::catalog::ApiCatalog;
use crate::error::{Error, Result};
use crate::lexer;
use crate::prep::ClientRecord;
use crate::schema;

pub const SOURCE_EXTENSIONS: &[&str] = &["c", "cc", "cpp", "cxx", "h", "hh", "hpp", "hxx"];

pub const DEFAULT_FILE_CAP: u64 = 16 * 1024 * 1024;

pub fn is_source_file(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| SOURCE_EXTENSIONS.contains(&e))
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum State {
    Code,
    LineComment,
    BlockComment,
    Literal(u8),
    RawString,
}

/// Blanks comments and/or literals to spaces, keeping every newline and the
/// byte offset of everything that survives.
fn blank(src: &[u8], comments: bool, literals: bool) -> Vec<u8> {
    let mut out = src.to_vec();
    let mut state = State::Code;
    let mut raw_close: Vec<u8> = Vec::new();
    let n = src.len();
    let mut i = 0;

    fn put_blank(out: &mut [u8], at: usize, enabled: bool) {
        if enabled && out[at] != b'\n' && out[at] != b'\r' {
            out[at] = b' ';
        }
    }

    while i < n {
        let b = src[i];
        match state {
            State::Code => match b {
                b'/' if i + 1 < n && src[i + 1] == b'/' => {
                    state = State::LineComment;
                    put_blank(&mut out, i, comments);
                    put_blank(&mut out, i + 1, comments);
                    i += 2;
                    continue;
                }
                b'/' if i + 1 < n && src[i + 1] == b'*' => {
                    state = State::BlockComment;
                    put_blank(&mut out, i, comments);
                    put_blank(&mut out, i + 1, comments);
                    i += 2;
                    continue;
                }
                b'"' => {
                    if let Some(close) = raw_string_close(src, i) {
                        raw_close = close;
                        state = State::RawString;
                    } else {
                        state = State::Literal(b'"');
                    }
                    put_blank(&mut out, i, literals);
                }
                b'\'' if !is_digit_separator(src, i) => {
                    state = State::Literal(b'\'');
                    put_blank(&mut out, i, literals);
                }
                _ => {}
            },
            State::LineComment => {
                if b == b'\n' {
                    if !continues_line(src, i) {
                        state = State::Code;
                    }
                } else {
                    put_blank(&mut out, i, comments);
                }
            }
            State::BlockComment => {
                if b == b'*' && i + 1 < n && src[i + 1] == b'/' {
                    put_blank(&mut out, i, comments);
                    put_blank(&mut out, i + 1, comments);
                    state = State::Code;
                    i += 2;
                    continue;
                }
                put_blank(&mut out, i, comments);
            }
            State::Literal(quote) => {
                if b == b'\\' && i + 1 < n {
                    put_blank(&mut out, i, literals);
                    put_blank(&mut out, i + 1, literals);
                    i += 2;
                    continue;
                }
                if b == b'\n' {
                    // unterminated literal; recover at end of line
                    state = State::Code;
                } else {
                    put_blank(&mut out, i, literals);
                    if b == quote {
                        state = State::Code;
                    }
                }
            }
            State::RawString => {
                if src[i..].starts_with(&raw_close) {
                    for k in i..i + raw_close.len() {
                        put_blank(&mut out, k, literals);
                    }
                    i += raw_close.len();
                    state = State::Code;
                    continue;
                }
                put_blank(&mut out, i, literals);
            }
        }
        i += 1;
    }
    if state == State::BlockComment {
        log::warn!("unterminated block comment; blanked to end of file");
    }
    out
}

/// Whether the newline at `nl` is escaped by a trailing backslash.
fn continues_line(src: &[u8], nl: usize) -> bool {
    let mut j = nl;
    if j > 0 && src[j - 1] == b'\r' {
        j -= 1;
    }
    j > 0 && src[j - 1] == b'\\'
}

/// C++14 digit separators (`1'000'000`): a quote inside a numeric token.
fn is_digit_separator(src: &[u8], quote: usize) -> bool {
    let mut j = quote;
    while j > 0 && lexer::is_word_byte(src[j - 1]) {
        j -= 1;
    }
    j < quote && src[j].is_ascii_digit()
}

/// For a `"` at `quote` opening a raw string (`R"delim(`), the closing
/// sequence `)delim"`.
fn raw_string_close(src: &[u8], quote: usize) -> Option<Vec<u8>> {
    let mut j = quote;
    while j > 0 && lexer::is_word_byte(src[j - 1]) {
        j -= 1;
    }
    let prefix = &src[j..quote];
    if !matches!(prefix, b"R" | b"LR" | b"uR" | b"UR" | b"u8R") {
        return None;
    }
    let rest = &src[quote + 1..];
    let open = rest.iter().take(17).position(|&c| c == b'(')?;
    let delim = &rest[..open];
    if delim
        .iter()
        .any(|&c| c == b')' || c == b'\\' || c.is_ascii_whitespace())
    {
        return None;
    }
    let mut close = Vec::with_capacity(delim.len() + 2);
    close.push(b')');
    close.extend_from_slice(delim);
    close.push(b'"');
    Some(close)
}

fn into_string(bytes: Vec<u8>) -> String {
    String::from_utf8(bytes).unwrap_or_else(|e| String::from_utf8_lossy(e.as_bytes()).into_owned())
}

/// Replaces `//` and `/* */` comments with spaces. Line count and the column
/// of surviving text are preserved; comment markers inside string and
/// character literals are left alone.
pub fn strip_comments(source: &str) -> String {
    into_string(blank(source.as_bytes(), true, false))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchMode {
    /// Line-oriented filtering: drop any line containing `//` or `/*` or
    /// starting with ` *`, and any line where the API appears between two
    /// double quotes.
    pub paper_faithful: bool,
    /// Allow any amount of whitespace, including newlines, between the name
    /// and `(`.
    pub loose_call_match: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Hit {
    /// 1-based.
    pub line: u32,
    /// Index into [`ApiMatcher::names`].
    pub api: usize,
}

/// Matches all catalog APIs in one pass over a file.
#[derive(Debug, Clone)]
pub struct ApiMatcher {
    names: Vec<String>,
    index: HashMap<String, usize>,
    mode: MatchMode,
}

impl ApiMatcher {
    pub fn new<I, S>(names: I, mode: MatchMode) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let set: BTreeSet<String> = names.into_iter().map(Into::into).collect();
        let names: Vec<String> = set.into_iter().collect();
        let index = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i))
            .collect();
        ApiMatcher { names, index, mode }
    }

    pub fn for_catalog(catalog: &ApiCatalog, mode: MatchMode) -> Self {
        Self::new(catalog.names(), mode)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn mode(&self) -> MatchMode {
        self.mode
    }

    /// Uses in raw (unstripped) file contents.
    pub fn scan_source(&self, source: &str) -> Vec<Hit> {
        if self.mode.paper_faithful {
            self.scan_lines(source)
        } else {
            let masked = blank(source.as_bytes(), true, true);
            self.scan_masked(&masked)
        }
    }

    /// Uses in text whose comments are already stripped.
    pub fn scan_stripped(&self, stripped: &str) -> Vec<Hit> {
        if self.mode.paper_faithful {
            self.scan_lines(stripped)
        } else {
            let masked = blank(stripped.as_bytes(), false, true);
            self.scan_masked(&masked)
        }
    }

    fn call_follows(&self, text: &[u8], mut pos: usize) -> bool {
        if self.mode.loose_call_match {
            while pos < text.len() && text[pos].is_ascii_whitespace() {
                pos += 1;
            }
        } else if pos < text.len() && is_regex_space(text[pos]) {
            pos += 1;
        }
        text.get(pos) == Some(&b'(')
    }

    fn scan_masked(&self, text: &[u8]) -> Vec<Hit> {
        let mut hits = Vec::new();
        let mut line = 1u32;
        let mut counted = 0usize;
        for (start, word) in lexer::identifiers(text) {
            let Some(&api) = self.index.get(word) else {
                continue;
            };
            if !self.call_follows(text, start + word.len()) {
                continue;
            }
            line += text[counted..start].iter().filter(|&&b| b == b'\n').count() as u32;
            counted = start;
            hits.push(Hit { line, api });
        }
        hits
    }

    fn scan_lines(&self, text: &str) -> Vec<Hit> {
        let mut hits = Vec::new();
        for (i, line) in text.split('\n').enumerate() {
            let b = line.as_bytes();
            if line.contains("//")
                || line.contains("/*")
                || (b.len() >= 2 && is_regex_space(b[0]) && b[1] == b'*')
            {
                continue;
            }
            let quoted = match (line.find('"'), line.rfind('"')) {
                (Some(first), Some(last)) if first < last => Some(&line[first + 1..last]),
                _ => None,
            };
            for (start, word) in lexer::identifiers(b) {
                let Some(&api) = self.index.get(word) else {
                    continue;
                };
                if !self.call_follows(b, start + word.len()) {
                    continue;
                }
                if quoted.is_some_and(|q| q.contains(word)) {
                    continue;
                }
                hits.push(Hit {
                    line: i as u32 + 1,
                    api,
                });
            }
        }
        hits
    }
}

/// `\s` on a single line.
fn is_regex_space(b: u8) -> bool {
    matches!(b, b' ' | b'\t' | b'\x0b' | b'\x0c' | b'\r')
}

/// Line numbers of the uses of one API in comment-stripped source.
pub fn find_api_uses(source: &str, api: &str) -> Vec<u32> {
    find_api_uses_with(source, api, MatchMode::default())
}

pub fn find_api_uses_with(source: &str, api: &str, mode: MatchMode) -> Vec<u32> {
    ApiMatcher::new([api], mode)
        .scan_stripped(source)
        .into_iter()
        .map(|h| h.line)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct UseSite {
    pub file: PathBuf,
    pub line: u32,
    pub api: String,
}

impl std::fmt::Display for UseSite {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}:{}", self.file.display(), self.line, self.api)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UsageReport {
    #[serde(rename = "client")]
    pub client_id: String,
    pub library: String,
    /// Used APIs only.
    pub uses: BTreeMap<String, u64>,
    #[serde(rename = "distinct")]
    pub distinct_count: usize,
    pub utilisation_pct: f64,
    pub catalog_size: usize,
}

impl UsageReport {
    pub fn from_uses(
        client_id: impl Into<String>,
        library: impl Into<String>,
        catalog_size: usize,
        mut uses: BTreeMap<String, u64>,
    ) -> Self {
        uses.retain(|_, n| *n > 0);
        let distinct_count = uses.len();
        let utilisation_pct = if catalog_size == 0 {
            0.0
        } else {
            100.0 * distinct_count as f64 / catalog_size as f64
        };
        UsageReport {
            client_id: client_id.into(),
            library: library.into(),
            uses,
            distinct_count,
            utilisation_pct,
            catalog_size,
        }
    }

    pub fn total_uses(&self) -> u64 {
        self.uses.values().sum()
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Doc<'a> {
            schema_version: &'a str,
            #[serde(flatten)]
            report: &'a UsageReport,
        }
        crate::util::to_json_pretty(&Doc {
            schema_version: schema::VERSION,
            report: self,
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ScanOptions {
    pub mode: MatchMode,
    pub file_cap_bytes: u64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            mode: MatchMode::default(),
            file_cap_bytes: DEFAULT_FILE_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClientScan {
    pub report: UsageReport,
    pub sites: Vec<UseSite>,
    pub files_scanned: usize,
    pub files_skipped: usize,
}

/// Source files of a prepared client that are not excluded, relative to its
/// root, in sorted order.
pub fn client_source_files(rec: &ClientRecord) -> Vec<PathBuf> {
    let root = rec.root.as_path();
    let walker = WalkDir::new(root)
        .sort_by_file_name()
        .into_iter()
        .filter_entry(|e| {
            if e.depth() == 0 {
                return true;
            }
            if e.file_type().is_dir() && e.file_name() == ".git" {
                return false;
            }
            let rel = e.path().strip_prefix(root).unwrap_or(e.path());
            !rec.is_excluded(rel)
        });
    let mut files = Vec::new();
    for entry in walker {
        match entry {
            Ok(e) if e.file_type().is_file() && is_source_file(e.path()) => {
                if let Ok(rel) = e.path().strip_prefix(root) {
                    if !rec.is_excluded(rel) {
                        files.push(rel.to_path_buf());
                    }
                }
            }
            Ok(_) => {}
            Err(e) => log::warn!("{}: skipping unreadable entry: {e}", rec.client_id),
        }
    }
    if rec.is_excluded(Path::new("")) {
        files.clear();
    }
    files
}

fn scan_file(root: &Path, rel: &Path, matcher: &ApiMatcher, cap: u64) -> Option<Vec<UseSite>> {
    let path = root.join(rel);
    match fs::metadata(&path) {
        Ok(m) if m.len() > cap => {
            log::warn!("{}: {} bytes exceeds the file cap; skipped", path.display(), m.len());
            return None;
        }
        Ok(_) => {}
        Err(e) => {
            log::warn!("{}: {e}; skipped", path.display());
            return None;
        }
    }
    let bytes = match fs::read(&path) {
        Ok(b) => b,
        Err(e) => {
            log::warn!("{}: {e}; skipped", path.display());
            return None;
        }
    };
    let text = String::from_utf8_lossy(&bytes);
    let hits = matcher.scan_source(&text);
    Some(
        hits.into_iter()
            .map(|h| UseSite {
                file: rel.to_path_buf(),
                line: h.line,
                api: matcher.names()[h.api].clone(),
            })
            .collect(),
    )
}

pub fn scan_client_detailed(
    rec: &ClientRecord,
    catalog: &ApiCatalog,
    opts: &ScanOptions,
) -> ClientScan {
    let matcher = ApiMatcher::for_catalog(catalog, opts.mode);
    let files = client_source_files(rec);
    let per_file: Vec<Option<Vec<UseSite>>> = files
        .par_iter()
        .map(|rel| scan_file(&rec.root, rel, &matcher, opts.file_cap_bytes))
        .collect();

    let files_skipped = per_file.iter().filter(|r| r.is_none()).count();
    let mut sites: Vec<UseSite> = per_file.into_iter().flatten().flatten().collect();
    sites.sort();
    let mut uses: BTreeMap<String, u64> = BTreeMap::new();
    for s in &sites {
        *uses.entry(s.api.clone()).or_insert(0) += 1;
    }
    ClientScan {
        report: UsageReport::from_uses(&rec.client_id, &catalog.library, catalog.len(), uses),
        sites,
        files_scanned: files.len() - files_skipped,
        files_skipped,
    }
}

pub fn scan_client(rec: &ClientRecord, catalog: &ApiCatalog, opts: &ScanOptions) -> UsageReport {
    scan_client_detailed(rec, catalog, opts).report
}

/// Usage across all clients of one library. Combining aggregates is
/// commutative and associative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusAggregate {
    pub library: String,
    pub catalog_size: usize,
    /// Number of clients using each catalog API at least once.
    pub client_counts: BTreeMap<String, u64>,
    /// Uses of each catalog API summed over clients.
    pub total_uses: BTreeMap<String, u64>,
    pub reports: BTreeMap<String, UsageReport>,
    /// Clients in which no API use was identified.
    pub no_identified_uses: BTreeSet<String>,
}

impl CorpusAggregate {
    pub fn empty(catalog: &ApiCatalog) -> Self {
        let zeros: BTreeMap<String, u64> = catalog.names().map(|n| (n.to_string(), 0)).collect();
        CorpusAggregate {
            library: catalog.library.clone(),
            catalog_size: catalog.len(),
            client_counts: zeros.clone(),
            total_uses: zeros,
            reports: BTreeMap::new(),
            no_identified_uses: BTreeSet::new(),
        }
    }

    pub fn add_report(&mut self, report: UsageReport) {
        for (api, &n) in &report.uses {
            *self.total_uses.entry(api.clone()).or_insert(0) += n;
            *self.client_counts.entry(api.clone()).or_insert(0) += u64::from(n > 0);
        }
        if report.distinct_count == 0 {
            self.no_identified_uses.insert(report.client_id.clone());
        }
        self.reports.insert(report.client_id.clone(), report);
    }

    pub fn merge(mut self, other: CorpusAggregate) -> Self {
        for (_, r) in other.reports {
            self.add_report(r);
        }
        self
    }

    pub fn client_count(&self, api: &str) -> u64 {
        self.client_counts.get(api).copied().unwrap_or(0)
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Doc<'a> {
            schema_version: &'a str,
            #[serde(flatten)]
            agg: &'a CorpusAggregate,
        }
        crate::util::to_json_pretty(&Doc {
            schema_version: schema::VERSION,
            agg: self,
        })
    }

    pub fn from_json(text: &str, origin: &Path) -> Result<Self> {
        schema::check(text, origin)?;
        serde_json::from_str(text).map_err(|e| Error::json(origin, e))
    }
}

pub fn corpus_scan(
    clients: &[ClientRecord],
    catalog: &ApiCatalog,
    opts: &ScanOptions,
) -> CorpusAggregate {
    clients
        .par_iter()
        .map(|rec| {
            let mut agg = CorpusAggregate::empty(catalog);
            agg.add_report(scan_client(rec, catalog, opts));
            agg
        })
        .reduce(|| CorpusAggregate::empty(catalog), CorpusAggregate::merge)
}
