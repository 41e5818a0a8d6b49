//! Dictionary-edition parsing.
//!
//! A transcribed edition is a sequence of entries of the form
//!
//! ```text
//! BENCH-LATHE OPERATOR (mach. shop) 4-76.210. A general term applied to ...
//! TAPER (const.) see PAPER HANGER.
//! ```
//!
//! An entry starts on a line whose text before the first `(` is a mostly
//! uppercase title and is followed by one or more parenthesized industry
//! designations. An optional occupational code may follow the industries.
//! The body runs until the next entry start or a blank line. Bodies that open
//! with a reference trigger ("see ", "ref. to ", ...) become references
//! instead of a description.
//!
//! Non-blank lines that belong to no entry are reported as `Unparsed`
//! diagnostics with their byte spans, so the entries plus diagnostics always
//! account for every non-blank line of the input.

use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{normalize_whitespace, tokenize, StopWords};

pub const DEFAULT_CODE_PATTERN: &str = r"\d+(?:-\d+)?\.\d+(?:-\d+)?";

/// Serialized form of the grammar configuration (TOML).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GrammarFile {
    pub title_uppercase_ratio: f64,
    pub min_title_letters: usize,
    pub code_pattern: String,
    pub reference_triggers: Vec<String>,
    pub reference_separators: Vec<String>,
    pub alt_title_separator: String,
    pub stopwords_path: Option<PathBuf>,
}

impl Default for GrammarFile {
    fn default() -> Self {
        GrammarFile {
            title_uppercase_ratio: 0.8,
            min_title_letters: 2,
            code_pattern: DEFAULT_CODE_PATTERN.to_string(),
            reference_triggers: vec!["see ".into(), "ref. to ".into(), "refer to ".into()],
            reference_separators: vec![";".into(), " or ".into()],
            alt_title_separator: ";".into(),
            stopwords_path: None,
        }
    }
}

/// Compiled grammar: patterns, trigger lists and the stop-word list.
#[derive(Debug, Clone)]
pub struct GrammarConfig {
    pub title_uppercase_ratio: f64,
    pub min_title_letters: usize,
    code: Regex,
    reference_triggers: Vec<String>,
    reference_separators: Vec<String>,
    alt_title_separator: String,
    stopwords: Arc<StopWords>,
}

impl Default for GrammarConfig {
    fn default() -> Self {
        GrammarConfig::compile(GrammarFile::default(), None).expect("default grammar compiles")
    }
}

impl GrammarConfig {
    /// Compile a grammar file. A relative `stopwords_path` resolves against
    /// `base_dir`.
    pub fn compile(file: GrammarFile, base_dir: Option<&Path>) -> Result<Self> {
        if !(0.0..=1.0).contains(&file.title_uppercase_ratio) {
            return Err(Error::param(
                "title_uppercase_ratio",
                format!("{} outside [0, 1]", file.title_uppercase_ratio),
            ));
        }
        if file.reference_triggers.iter().any(|t| t.trim().is_empty()) {
            return Err(Error::param("reference_triggers", "empty trigger"));
        }
        let code = Regex::new(&format!("^(?:{})", file.code_pattern))?;
        let stopwords = match &file.stopwords_path {
            Some(p) => {
                let p = match base_dir {
                    Some(base) if p.is_relative() => base.join(p),
                    _ => p.clone(),
                };
                StopWords::load(&p)?
            }
            None => StopWords::builtin(),
        };
        Ok(GrammarConfig {
            title_uppercase_ratio: file.title_uppercase_ratio,
            min_title_letters: file.min_title_letters,
            code,
            reference_triggers: file
                .reference_triggers
                .iter()
                .map(|t| t.to_lowercase())
                .collect(),
            reference_separators: file.reference_separators,
            alt_title_separator: file.alt_title_separator,
            stopwords: Arc::new(stopwords),
        })
    }

    pub fn from_toml_str(text: &str, base_dir: Option<&Path>) -> Result<Self> {
        let file: GrammarFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Self::compile(file, base_dir)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text, path.parent())
    }

    pub fn with_stopwords(mut self, stopwords: StopWords) -> Self {
        self.stopwords = Arc::new(stopwords);
        self
    }

    pub fn stopwords(&self) -> &Arc<StopWords> {
        &self.stopwords
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceSpan {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupationEntry {
    pub id: String,
    pub title: String,
    pub alt_titles: Vec<String>,
    pub code: Option<String>,
    pub industries: Vec<String>,
    pub description: String,
    pub references: Vec<String>,
    pub edition_year: i32,
    /// 1-based line of the entry header.
    pub line: usize,
    pub span: SourceSpan,
}

impl OccupationEntry {
    pub fn has_description(&self) -> bool {
        !self.description.is_empty()
    }

    pub fn is_reference_only(&self) -> bool {
        self.description.is_empty() && !self.references.is_empty()
    }

    /// Neither a description nor references were recognized.
    pub fn is_unparsed(&self) -> bool {
        self.description.is_empty() && self.references.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub year: i32,
    pub total_entries: usize,
    pub distinct_description_entries: usize,
    pub mean_description_length: f64,
    pub mean_description_length_no_stopwords: f64,
    pub vocab_size: usize,
    pub reference_entries: usize,
    pub coded_entries: usize,
    pub stopwords_sha256: String,
}

/// All entries of one edition with derived vocabulary statistics.
#[derive(Debug, Clone)]
pub struct EditionCorpus {
    pub year: i32,
    pub entries: Vec<OccupationEntry>,
    /// Token counts over every entry's description.
    pub vocab: BTreeMap<String, usize>,
    pub stats: CorpusStats,
    stopwords: Arc<StopWords>,
}

impl EditionCorpus {
    pub fn new(year: i32, entries: Vec<OccupationEntry>, stopwords: Arc<StopWords>) -> Self {
        let (vocab, stats) = compute_stats(year, &entries, &stopwords);
        EditionCorpus {
            year,
            entries,
            vocab,
            stats,
            stopwords,
        }
    }

    pub fn stopwords(&self) -> &Arc<StopWords> {
        &self.stopwords
    }

    /// Description tokens of `entry`, optionally without stop words.
    pub fn description_tokens(&self, entry: &OccupationEntry, filter_stopwords: bool) -> Vec<String> {
        let tokens = tokenize(&entry.description);
        if filter_stopwords {
            self.stopwords.filter(tokens)
        } else {
            tokens
        }
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for entry in &self.entries {
            serde_json::to_writer(&mut w, entry)?;
            w.write_all(b"\n").map_err(|e| Error::io("<jsonl>", e))?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(year: i32, reader: R, stopwords: Arc<StopWords>) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io("<jsonl>", e))?;
            if line.trim().is_empty() {
                continue;
            }
            let entry: OccupationEntry = serde_json::from_str(&line).map_err(|e| Error::Format {
                path: "<jsonl>".into(),
                line: i + 1,
                reason: e.to_string(),
            })?;
            if entry.edition_year != year {
                return Err(Error::Format {
                    path: "<jsonl>".into(),
                    line: i + 1,
                    reason: format!("entry year {} in edition {}", entry.edition_year, year),
                });
            }
            entries.push(entry);
        }
        Ok(EditionCorpus::new(year, entries, stopwords))
    }

    pub fn load_jsonl(path: &Path, year: i32, stopwords: Arc<StopWords>) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_jsonl(year, std::io::BufReader::new(file), stopwords).map_err(|e| match e {
            Error::Format { line, reason, .. } => Error::Format {
                path: path.display().to_string(),
                line,
                reason,
            },
            other => other,
        })
    }
}

fn compute_stats(
    year: i32,
    entries: &[OccupationEntry],
    stopwords: &StopWords,
) -> (BTreeMap<String, usize>, CorpusStats) {
    let mut vocab = BTreeMap::new();
    let mut seen: HashSet<&str> = HashSet::new();
    let mut len_sum = 0usize;
    let mut len_sum_filtered = 0usize;
    for entry in entries {
        if !entry.has_description() {
            continue;
        }
        let tokens = tokenize(&entry.description);
        if seen.insert(entry.description.as_str()) {
            len_sum += tokens.len();
            len_sum_filtered += tokens.iter().filter(|t| !stopwords.contains(t)).count();
        }
        for t in tokens {
            *vocab.entry(t).or_insert(0) += 1;
        }
    }
    let distinct = seen.len();
    let mean = |s: usize| if distinct == 0 { 0.0 } else { s as f64 / distinct as f64 };
    let stats = CorpusStats {
        year,
        total_entries: entries.len(),
        distinct_description_entries: distinct,
        mean_description_length: mean(len_sum),
        mean_description_length_no_stopwords: mean(len_sum_filtered),
        vocab_size: vocab.len(),
        reference_entries: entries.iter().filter(|e| !e.references.is_empty()).count(),
        coded_entries: entries.iter().filter(|e| e.code.is_some()).count(),
        stopwords_sha256: stopwords.sha256().to_string(),
    };
    (vocab, stats)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosticKind {
    /// Non-blank text outside any recognizable entry.
    Unparsed,
    /// Entry header with no body text.
    EmptyBody,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub line: usize,
    pub span: SourceSpan,
    pub text: String,
}

#[derive(Debug, Clone)]
pub struct ParsedEdition {
    pub corpus: EditionCorpus,
    pub diagnostics: Vec<Diagnostic>,
}

struct Header {
    title: String,
    alt_titles: Vec<String>,
    industries: Vec<String>,
    code: Option<String>,
    rest: String,
}

struct PendingEntry {
    header: Header,
    body: Vec<String>,
    line: usize,
    span: SourceSpan,
}

struct PendingRun {
    line: usize,
    span: SourceSpan,
}

fn parse_header(line: &str, grammar: &GrammarConfig) -> Option<Header> {
    let trimmed = line.trim_start();
    let open = trimmed.find('(')?;
    let prefix = trimmed[..open].trim();
    let first = prefix.chars().next()?;
    if !first.is_alphabetic() || !first.is_uppercase() || prefix.contains(". ") {
        return None;
    }
    let letters: Vec<char> = prefix.chars().filter(|c| c.is_alphabetic()).collect();
    if letters.len() < grammar.min_title_letters.max(1) {
        return None;
    }
    let upper = letters.iter().filter(|c| c.is_uppercase()).count();
    if (upper as f64) < grammar.title_uppercase_ratio * letters.len() as f64 {
        return None;
    }

    let mut rest = &trimmed[open..];
    let mut industries = Vec::new();
    while let Some(after_open) = rest.strip_prefix('(') {
        let Some(close) = after_open.find(')') else {
            break;
        };
        industries.extend(
            after_open[..close]
                .split(';')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(str::to_string),
        );
        rest = after_open[close + 1..].trim_start();
    }
    if industries.is_empty() {
        return None;
    }

    let mut code = None;
    if let Some(m) = grammar.code.find(rest) {
        code = Some(m.as_str().to_string());
        rest = &rest[m.end()..];
    }
    let rest = rest.trim_start_matches(|c: char| c.is_whitespace() || matches!(c, '.' | ':' | ';' | ','));

    let clean = |s: &str| s.trim().trim_end_matches([',', ';']).trim().to_string();
    let mut names = prefix
        .split(grammar.alt_title_separator.as_str())
        .map(clean)
        .filter(|s| !s.is_empty());
    let title = names.next()?;
    Some(Header {
        title,
        alt_titles: names.collect(),
        industries,
        code,
        rest: rest.to_string(),
    })
}

fn parse_references(text: &str, grammar: &GrammarConfig) -> Vec<String> {
    let text = text.trim().trim_end_matches('.');
    let mut parts = vec![text.to_string()];
    for sep in &grammar.reference_separators {
        parts = parts
            .iter()
            .flat_map(|p| p.split(sep.as_str()).map(str::to_string).collect::<Vec<_>>())
            .collect();
    }
    parts
        .into_iter()
        .map(|p| p.trim().trim_end_matches(['.', ',']).trim().to_string())
        .filter(|p| !p.is_empty())
        .collect()
}

/// Parse one edition's raw transcription.
pub fn parse_edition(raw_text: &str, year: i32, grammar: &GrammarConfig) -> Result<ParsedEdition> {
    if raw_text.trim().is_empty() {
        return Err(Error::EmptyInput(format!("edition {year} has no text")));
    }

    let mut entries = Vec::new();
    let mut diagnostics = Vec::new();
    let mut pending: Option<PendingEntry> = None;
    let mut run: Option<PendingRun> = None;

    let finish_entry = |p: PendingEntry, entries: &mut Vec<OccupationEntry>, diags: &mut Vec<Diagnostic>| {
        let mut body = p.header.rest.clone();
        for l in &p.body {
            body.push(' ');
            body.push_str(l);
        }
        let body = normalize_whitespace(&body);
        let lower = body.to_lowercase();
        let trigger = grammar
            .reference_triggers
            .iter()
            .find(|t| lower.starts_with(t.as_str()));
        let (description, references) = match trigger {
            Some(t) => (String::new(), parse_references(&body[t.len()..], grammar)),
            None => (body, Vec::new()),
        };
        let entry = OccupationEntry {
            id: format!("{}-{:05}", year, entries.len() + 1),
            title: p.header.title,
            alt_titles: p.header.alt_titles,
            code: p.header.code,
            industries: p.header.industries,
            description,
            references,
            edition_year: year,
            line: p.line,
            span: p.span,
        };
        if entry.is_unparsed() {
            diags.push(Diagnostic {
                kind: DiagnosticKind::EmptyBody,
                line: entry.line,
                span: entry.span,
                text: entry.title.clone(),
            });
        }
        entries.push(entry);
    };
    let finish_run = |r: PendingRun, diags: &mut Vec<Diagnostic>| {
        diags.push(Diagnostic {
            kind: DiagnosticKind::Unparsed,
            line: r.line,
            span: r.span,
            text: raw_text[r.span.start..r.span.end].to_string(),
        });
    };

    let mut offset = 0;
    for (idx, raw_line) in raw_text.split_inclusive('\n').enumerate() {
        let start = offset;
        offset += raw_line.len();
        let line = raw_line.trim_end_matches(['\n', '\r']);
        let end = start + line.len();
        let line_no = idx + 1;

        if line.trim().is_empty() {
            if let Some(p) = pending.take() {
                finish_entry(p, &mut entries, &mut diagnostics);
            }
            if let Some(r) = run.take() {
                finish_run(r, &mut diagnostics);
            }
            continue;
        }
        if let Some(header) = parse_header(line, grammar) {
            if let Some(p) = pending.take() {
                finish_entry(p, &mut entries, &mut diagnostics);
            }
            if let Some(r) = run.take() {
                finish_run(r, &mut diagnostics);
            }
            pending = Some(PendingEntry {
                header,
                body: Vec::new(),
                line: line_no,
                span: SourceSpan { start, end },
            });
        } else if let Some(p) = pending.as_mut() {
            p.body.push(line.to_string());
            p.span.end = end;
        } else if let Some(r) = run.as_mut() {
            r.span.end = end;
        } else {
            run = Some(PendingRun {
                line: line_no,
                span: SourceSpan { start, end },
            });
        }
    }
    if let Some(p) = pending.take() {
        finish_entry(p, &mut entries, &mut diagnostics);
    }
    if let Some(r) = run.take() {
        finish_run(r, &mut diagnostics);
    }

    Ok(ParsedEdition {
        corpus: EditionCorpus::new(year, entries, grammar.stopwords.clone()),
        diagnostics,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DedupeReport {
    pub input_entries: usize,
    pub retained: usize,
    pub removed_duplicates: usize,
    pub removed_reference_only: usize,
    pub removed_empty: usize,
    /// References naming a title (or alternate title) absent from the edition.
    pub unresolved_references: usize,
}

#[derive(Debug, Clone)]
pub struct Deduped {
    pub corpus: EditionCorpus,
    pub report: DedupeReport,
}

/// Keep one entry per distinct description (first in document order) and drop
/// entries without a description of their own.
pub fn dedupe_and_resolve(corpus: &EditionCorpus) -> Deduped {
    let known: HashSet<String> = corpus
        .entries
        .iter()
        .flat_map(|e| std::iter::once(&e.title).chain(e.alt_titles.iter()))
        .map(|t| normalize_whitespace(&t.to_uppercase()))
        .collect();

    let mut report = DedupeReport {
        input_entries: corpus.entries.len(),
        ..Default::default()
    };
    let mut seen: HashSet<&str> = HashSet::new();
    let mut kept = Vec::new();
    for entry in &corpus.entries {
        report.unresolved_references += entry
            .references
            .iter()
            .filter(|r| !known.contains(&normalize_whitespace(&r.to_uppercase())))
            .count();
        if entry.is_reference_only() {
            report.removed_reference_only += 1;
        } else if entry.is_unparsed() {
            report.removed_empty += 1;
        } else if !seen.insert(entry.description.as_str()) {
            report.removed_duplicates += 1;
        } else {
            kept.push(entry.clone());
        }
    }
    report.retained = kept.len();
    Deduped {
        corpus: EditionCorpus::new(corpus.year, kept, corpus.stopwords.clone()),
        report,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpellReport {
    pub edition_year: i32,
    pub misspelled_count: usize,
    pub total_words: usize,
    pub accuracy_rate: f64,
    /// `(token, entry title)` pairs in document order.
    pub misspelled_samples: Vec<(String, String)>,
}

/// Lowercased word list, one word per line.
pub fn load_lexicon(path: &Path) -> Result<HashSet<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(|l| l.trim().to_lowercase())
        .filter(|l| !l.is_empty())
        .collect())
}

/// Check every description word against `lexicon`. Tokens with digits and
/// single characters are not words for this purpose.
pub fn validate_spelling(
    corpus: &EditionCorpus,
    lexicon: &HashSet<String>,
    max_samples: usize,
) -> Result<SpellReport> {
    if lexicon.is_empty() {
        return Err(Error::EmptyInput("lexicon".into()));
    }
    let mut total = 0usize;
    let mut misspelled = 0usize;
    let mut samples = Vec::new();
    for entry in &corpus.entries {
        for token in tokenize(&entry.description) {
            if token.chars().count() < 2 || token.chars().any(|c| c.is_numeric()) {
                continue;
            }
            total += 1;
            if !lexicon.contains(&token) {
                misspelled += 1;
                if samples.len() < max_samples {
                    samples.push((token, entry.title.clone()));
                }
            }
        }
    }
    let accuracy_rate = if total == 0 {
        1.0
    } else {
        (total - misspelled) as f64 / total as f64
    };
    Ok(SpellReport {
        edition_year: corpus.year,
        misspelled_count: misspelled,
        total_words: total,
        accuracy_rate,
        misspelled_samples: samples,
    })
}
