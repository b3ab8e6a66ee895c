//! Domain types for aligned sentence pairs and ALT-style file ingestion.
//!
//! A corpus is a list of (low-resource source, Chinese target) pairs joined
//! by a shared sentence id. Ingestion reads one-record-per-line TSV files
//! (`id<TAB>text`), alignment intersects two record sets on id, and the
//! validity filter applies the hard hygiene gate used by the elite sampler.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

/// Language codes supported by the toolkit. `Zh` is the only valid target;
/// the other five are the supported low-resource source languages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LanguageTag {
    /// Tagalog / Filipino
    Fil,
    /// Indonesian
    Id,
    /// Lao
    Lo,
    /// Burmese
    My,
    /// Vietnamese
    Vi,
    /// Chinese (target side only)
    Zh,
}

impl LanguageTag {
    /// The five valid source languages, in code order.
    pub const SOURCES: [LanguageTag; 5] = [
        LanguageTag::Fil,
        LanguageTag::Id,
        LanguageTag::Lo,
        LanguageTag::My,
        LanguageTag::Vi,
    ];

    pub fn code(&self) -> &'static str {
        match self {
            LanguageTag::Fil => "fil",
            LanguageTag::Id => "id",
            LanguageTag::Lo => "lo",
            LanguageTag::My => "my",
            LanguageTag::Vi => "vi",
            LanguageTag::Zh => "zh",
        }
    }

    /// True for every code except the Chinese target.
    pub fn is_source(&self) -> bool {
        *self != LanguageTag::Zh
    }
}

impl fmt::Display for LanguageTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for LanguageTag {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, CorpusError> {
        match s {
            "fil" => Ok(LanguageTag::Fil),
            "id" => Ok(LanguageTag::Id),
            "lo" => Ok(LanguageTag::Lo),
            "my" => Ok(LanguageTag::My),
            "vi" => Ok(LanguageTag::Vi),
            "zh" => Ok(LanguageTag::Zh),
            other => Err(CorpusError::UnknownLanguage(other.to_string())),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("unknown language code {0:?} (expected one of fil, id, lo, my, vi, zh)")]
    UnknownLanguage(String),
    #[error("line {line_no}: no tab separator in record {line:?}")]
    MalformedLine { line_no: usize, line: String },
    #[error("line {line_no}: empty sentence id")]
    EmptyId { line_no: usize },
    #[error("duplicate id {id:?} on the {side} side")]
    DuplicateId { id: String, side: &'static str },
    #[error("sentence pair {id:?}: Chinese cannot be the source language")]
    SourceIsTarget { id: String },
    #[error("sentence pair with empty id")]
    EmptyPairId,
    #[error("corpus mixes source languages ({expected} and {found})")]
    MixedLanguages { expected: LanguageTag, found: LanguageTag },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// One aligned sentence pair. Texts are stored exactly as ingested; any
/// normalization is an explicit opt-in at read time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSentencePair")]
pub struct SentencePair {
    pub id: String,
    pub source_lang: LanguageTag,
    pub source_text: String,
    pub target_text: String,
    /// Domain label; empty when unlabeled.
    #[serde(default)]
    pub domain: String,
}

#[derive(Deserialize)]
struct RawSentencePair {
    id: String,
    source_lang: LanguageTag,
    source_text: String,
    target_text: String,
    #[serde(default)]
    domain: String,
}

impl TryFrom<RawSentencePair> for SentencePair {
    type Error = CorpusError;

    fn try_from(raw: RawSentencePair) -> Result<Self, CorpusError> {
        SentencePair::new(
            raw.id,
            raw.source_lang,
            raw.source_text,
            raw.target_text,
            raw.domain,
        )
    }
}

impl SentencePair {
    pub fn new(
        id: String,
        source_lang: LanguageTag,
        source_text: String,
        target_text: String,
        domain: String,
    ) -> Result<Self, CorpusError> {
        if id.is_empty() {
            return Err(CorpusError::EmptyPairId);
        }
        if !source_lang.is_source() {
            return Err(CorpusError::SourceIsTarget { id });
        }
        Ok(SentencePair {
            id,
            source_lang,
            source_text,
            target_text,
            domain,
        })
    }
}

/// An ordered list of sentence pairs sharing one source language, with
/// unique ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub source_lang: LanguageTag,
    pub pairs: Vec<SentencePair>,
}

impl Corpus {
    /// Builds a corpus, checking language homogeneity and id uniqueness.
    pub fn from_pairs(
        source_lang: LanguageTag,
        pairs: Vec<SentencePair>,
    ) -> Result<Self, CorpusError> {
        let mut seen = std::collections::HashSet::with_capacity(pairs.len());
        for pair in &pairs {
            if pair.source_lang != source_lang {
                return Err(CorpusError::MixedLanguages {
                    expected: source_lang,
                    found: pair.source_lang,
                });
            }
            if !seen.insert(pair.id.as_str()) {
                return Err(CorpusError::DuplicateId {
                    id: pair.id.clone(),
                    side: "corpus",
                });
            }
        }
        Ok(Corpus { source_lang, pairs })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Hard validity gate applied before any scoring.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ValidityConfig {
    /// Minimum character-length ratio min(|y|/|x|, |x|/|y|), in (0, 1].
    pub min_len_ratio: f64,
    /// Maximum character count per side.
    pub max_chars: usize,
    /// Reject pairs with an empty side.
    pub require_nonempty: bool,
}

impl Default for ValidityConfig {
    fn default() -> Self {
        ValidityConfig {
            min_len_ratio: 0.3,
            max_chars: 4096,
            require_nonempty: true,
        }
    }
}

/// Why a pair failed the validity gate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValidityVerdict {
    Valid,
    EmptySide,
    TooLong,
    LengthRatio,
}

impl ValidityVerdict {
    pub fn reason(&self) -> Option<&'static str> {
        match self {
            ValidityVerdict::Valid => None,
            ValidityVerdict::EmptySide => Some("empty_side"),
            ValidityVerdict::TooLong => Some("too_long"),
            ValidityVerdict::LengthRatio => Some("length_ratio"),
        }
    }
}

/// Total predicate: true iff both sides are non-empty (when required),
/// both within `max_chars`, and the character-length ratio is at least
/// `min_len_ratio`. Character counts are Unicode scalar values, not bytes.
pub fn validity_filter(pair: &SentencePair, cfg: &ValidityConfig) -> bool {
    check_validity(pair, cfg) == ValidityVerdict::Valid
}

/// Like [`validity_filter`] but reports which criterion failed first
/// (empty side, then length cap, then ratio).
pub fn check_validity(pair: &SentencePair, cfg: &ValidityConfig) -> ValidityVerdict {
    let n_src = pair.source_text.chars().count();
    let n_tgt = pair.target_text.chars().count();
    if cfg.require_nonempty && (n_src == 0 || n_tgt == 0) {
        return ValidityVerdict::EmptySide;
    }
    if n_src > cfg.max_chars || n_tgt > cfg.max_chars {
        return ValidityVerdict::TooLong;
    }
    // An empty side that slipped past require_nonempty=false has ratio 0,
    // which can never reach a min_len_ratio in (0, 1].
    let ratio = if n_src == 0 || n_tgt == 0 {
        0.0
    } else {
        let a = n_src as f64;
        let b = n_tgt as f64;
        (a / b).min(b / a)
    };
    if ratio < cfg.min_len_ratio {
        return ValidityVerdict::LengthRatio;
    }
    ValidityVerdict::Valid
}

/// Escapes a text field for the one-record-per-line TSV format: backslash,
/// tab, LF and CR become `\\`, `\t`, `\n`, `\r`.
pub fn escape_alt_text(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            other => out.push(other),
        }
    }
    out
}

fn unescape_alt_text(raw: &str, line_no: usize) -> Result<String, CorpusError> {
    let mut out = String::with_capacity(raw.len());
    let mut chars = raw.chars();
    while let Some(c) = chars.next() {
        match c {
            '\\' => match chars.next() {
                Some('\\') => out.push('\\'),
                Some('t') => out.push('\t'),
                Some('n') => out.push('\n'),
                Some('r') => out.push('\r'),
                _ => {
                    return Err(CorpusError::MalformedLine {
                        line_no,
                        line: raw.to_string(),
                    })
                }
            },
            // A raw tab means the record was not escaped per the format.
            '\t' => {
                return Err(CorpusError::MalformedLine {
                    line_no,
                    line: raw.to_string(),
                })
            }
            other => out.push(other),
        }
    }
    Ok(out)
}

/// Parses one `id<TAB>text` record. The id is trimmed of surrounding
/// whitespace; the text keeps its bytes exactly (after unescaping).
/// An empty text is legal here; the validity filter rejects it downstream.
pub fn parse_alt_line(line: &str) -> Result<(String, String), CorpusError> {
    parse_alt_line_at(line, 0)
}

fn parse_alt_line_at(line: &str, line_no: usize) -> Result<(String, String), CorpusError> {
    let line = line.strip_suffix('\n').unwrap_or(line);
    let line = line.strip_suffix('\r').unwrap_or(line);
    let Some((id, text)) = line.split_once('\t') else {
        return Err(CorpusError::MalformedLine {
            line_no,
            line: line.to_string(),
        });
    };
    let id = id.trim();
    if id.is_empty() {
        return Err(CorpusError::EmptyId { line_no });
    }
    Ok((id.to_string(), unescape_alt_text(text, line_no)?))
}

/// Serializes one record back to the TSV line format. Inverse of
/// [`parse_alt_line`] for records whose id carries no surrounding whitespace.
pub fn format_alt_line(id: &str, text: &str) -> String {
    format!("{id}\t{}", escape_alt_text(text))
}

/// Reads a whole ALT-style TSV file into (id, text) records.
/// `nfc` opts into NFC normalization of the text field; by default texts
/// are kept byte-exact.
pub fn read_alt_records(path: &Path, nfc: bool) -> Result<Vec<(String, String)>, CorpusError> {
    let content = std::fs::read_to_string(path)?;
    parse_alt_records(&content, nfc)
}

/// Parses TSV content (LF line endings, UTF-8) into records. Empty lines
/// are skipped.
pub fn parse_alt_records(content: &str, nfc: bool) -> Result<Vec<(String, String)>, CorpusError> {
    let mut records = Vec::new();
    for (idx, line) in content.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let (id, text) = parse_alt_line_at(line, idx + 1)?;
        let text = if nfc { text.nfc().collect() } else { text };
        records.push((id, text));
    }
    Ok(records)
}

/// Outcome counters for [`align_by_id`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct AlignStats {
    /// Source-side records without a Chinese counterpart.
    pub dropped_source: usize,
    /// Chinese records without a source counterpart.
    pub dropped_target: usize,
}

/// Joins source-language and Chinese records that share a sentence id into
/// a corpus. Ids present on only one side are dropped and counted; a
/// duplicate id on either side aborts the alignment.
/// The output is ordered by id.
pub fn align_by_id(
    source_records: &[(String, String)],
    zh_records: &[(String, String)],
    lang: LanguageTag,
    domains: &BTreeMap<String, String>,
) -> Result<(Corpus, AlignStats), CorpusError> {
    if !lang.is_source() {
        return Err(CorpusError::SourceIsTarget { id: String::new() });
    }
    let source = index_records(source_records, "source")?;
    let target = index_records(zh_records, "target")?;

    let mut stats = AlignStats::default();
    let mut pairs = Vec::new();
    for (id, source_text) in &source {
        match target.get(id) {
            Some(target_text) => {
                let domain = domains.get(id.as_str()).cloned().unwrap_or_default();
                pairs.push(SentencePair::new(
                    id.clone(),
                    lang,
                    (*source_text).clone(),
                    (*target_text).clone(),
                    domain,
                )?);
            }
            None => stats.dropped_source += 1,
        }
    }
    stats.dropped_target = target.len() - (pairs.len());
    let corpus = Corpus::from_pairs(lang, pairs)?;
    Ok((corpus, stats))
}

fn index_records<'a>(
    records: &'a [(String, String)],
    side: &'static str,
) -> Result<BTreeMap<String, &'a String>, CorpusError> {
    let mut map = BTreeMap::new();
    for (id, text) in records {
        if map.insert(id.clone(), text).is_some() {
            return Err(CorpusError::DuplicateId {
                id: id.clone(),
                side,
            });
        }
    }
    Ok(map)
}
