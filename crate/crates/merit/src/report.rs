//! Run-level reporting: per-language retention counts, reduction
//! percentages and metric tables, with the BLEU-chrF column recomputed
//! from its parts.
//!
//! A run directory holds one subdirectory per language code. Each language
//! directory contains the selection audit shards (`audit*.jsonl`, merged)
//! and optionally a `metrics.json` written by the evaluator.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::LanguageTag;
use crate::io::{read_jsonl, JsonlError, Manifest};
use crate::metrics::{bleu_chrf, MetricReport};
use crate::select::AuditRecord;

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("missing artifact: {0}")]
    MissingArtifact(String),
    #[error(transparent)]
    Jsonl(#[from] JsonlError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    BadMetrics {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

/// Shape of a `metrics.json` file produced by the evaluator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manifest: Option<Manifest>,
    pub corpus: MetricReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sentences: Option<Vec<MetricReport>>,
}

/// One language row of the run report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LanguageRow {
    pub lang: String,
    pub input: usize,
    pub retained: usize,
    pub retained_pct: f64,
    pub reduction_pct: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricReport>,
}

/// Aggregate over all languages.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TotalsRow {
    pub input: usize,
    pub retained: usize,
    pub retained_pct: f64,
    pub reduction_pct: f64,
}

/// The full run report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub manifest: Manifest,
    pub languages: Vec<LanguageRow>,
    pub total: TotalsRow,
}

fn pct(part: usize, whole: usize) -> f64 {
    if whole == 0 {
        0.0
    } else {
        100.0 * part as f64 / whole as f64
    }
}

/// Builds the report from a run directory. Every language subdirectory must
/// contribute at least one audit record; metrics are optional.
pub fn build_report(run_dir: &Path, manifest: Manifest) -> Result<RunReport, ReportError> {
    let mut languages = Vec::new();
    let mut total_input = 0usize;
    let mut total_retained = 0usize;

    for lang in LanguageTag::SOURCES {
        let lang_dir = run_dir.join(lang.code());
        if !lang_dir.is_dir() {
            continue;
        }
        let mut audit: Vec<AuditRecord> = Vec::new();
        let mut shards: Vec<_> = std::fs::read_dir(&lang_dir)
            .map_err(|e| ReportError::Io {
                path: lang_dir.display().to_string(),
                source: e,
            })?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| {
                let name = p.file_name().map(|n| n.to_string_lossy().into_owned());
                matches!(&name, Some(n) if n.starts_with("audit") && n.ends_with(".jsonl"))
            })
            .collect();
        shards.sort();
        for shard in &shards {
            let (_, mut records) = read_jsonl::<AuditRecord>(shard)?;
            audit.append(&mut records);
        }
        if audit.is_empty() {
            return Err(ReportError::MissingArtifact(format!(
                "{} has no audit records",
                lang_dir.display()
            )));
        }

        let metrics_path = lang_dir.join("metrics.json");
        let metrics = if metrics_path.is_file() {
            let raw = std::fs::read_to_string(&metrics_path).map_err(|e| ReportError::Io {
                path: metrics_path.display().to_string(),
                source: e,
            })?;
            let file: MetricsFile =
                serde_json::from_str(&raw).map_err(|e| ReportError::BadMetrics {
                    path: metrics_path.display().to_string(),
                    source: e,
                })?;
            let mut corpus = file.corpus;
            // The composite column is always the recomputed mean.
            corpus.bleu_chrf = bleu_chrf(corpus.bleu4, corpus.chrf)
                .map_err(|_| ReportError::MissingArtifact("metrics out of range".into()))?;
            Some(corpus)
        } else {
            None
        };

        let input = audit.len();
        let retained = audit.iter().filter(|a| a.rank.is_some()).count();
        total_input += input;
        total_retained += retained;
        languages.push(LanguageRow {
            lang: lang.code().to_string(),
            input,
            retained,
            retained_pct: pct(retained, input),
            reduction_pct: 100.0 - pct(retained, input),
            metrics,
        });
    }

    if languages.is_empty() {
        return Err(ReportError::MissingArtifact(format!(
            "{} contains no per-language audit directories",
            run_dir.display()
        )));
    }

    Ok(RunReport {
        manifest,
        languages,
        total: TotalsRow {
            input: total_input,
            retained: total_retained,
            retained_pct: pct(total_retained, total_input),
            reduction_pct: 100.0 - pct(total_retained, total_input),
        },
    })
}

/// Renders the report as an aligned text table.
pub fn render_text(report: &RunReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "# {} v{} config={} seed={}\n",
        report.manifest.tool, report.manifest.version, report.manifest.config_hash,
        report.manifest.seed
    ));
    let has_metrics = report.languages.iter().any(|l| l.metrics.is_some());
    let mut header = format!(
        "{:<6} {:>8} {:>9} {:>9} {:>9}",
        "lang", "input", "retained", "kept%", "cut%"
    );
    if has_metrics {
        header.push_str(&format!(
            " {:>8} {:>8} {:>8} {:>9}",
            "BLEU-4", "chrF", "ROUGE-L", "BLEU-chrF"
        ));
    }
    out.push_str(&header);
    out.push('\n');

    let row = |name: &str, input: usize, retained: usize, kept: f64, cut: f64,
                   metrics: Option<&MetricReport>| {
        let mut line = format!(
            "{:<6} {:>8} {:>9} {:>8.1}% {:>8.1}%",
            name, input, retained, kept, cut
        );
        if has_metrics {
            match metrics {
                Some(m) => line.push_str(&format!(
                    " {:>8.2} {:>8.2} {:>8.2} {:>9.2}",
                    m.bleu4, m.chrf, m.rouge_l, m.bleu_chrf
                )),
                None => line.push_str(&format!(" {:>8} {:>8} {:>8} {:>9}", "-", "-", "-", "-")),
            }
        }
        line.push('\n');
        line
    };

    for lang in &report.languages {
        out.push_str(&row(
            &lang.lang,
            lang.input,
            lang.retained,
            lang.retained_pct,
            lang.reduction_pct,
            lang.metrics.as_ref(),
        ));
    }
    out.push_str(&row(
        "total",
        report.total.input,
        report.total.retained,
        report.total.retained_pct,
        report.total.reduction_pct,
        None,
    ));
    out
}

/// Per-language retention summary straight from in-memory audits; the CLI
/// uses it to print one line per stage without a full report.
pub fn retention_line(lang: &str, audit: &[AuditRecord]) -> String {
    let retained = audit.iter().filter(|a| a.rank.is_some()).count();
    format!(
        "{lang}: retained {retained} of {} ({:.1}%, reduction {:.1}%)",
        audit.len(),
        pct(retained, audit.len()),
        100.0 - pct(retained, audit.len())
    )
}
