//! Command-line front end: one subcommand per pipeline stage.
//!
//! `ingest → align → features → score → select → split → sar → ltp → eval →
//! report`, all reading and writing JSONL/TSV in UTF-8. Every output file
//! starts with a manifest line (tool version, config hash, seed) and is
//! written atomically, so a run is reproducible from its artifacts alone.
//!
//! Exit codes: 0 success, 1 data or I/O error, 2 usage error.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::corpus::{
    align_by_id, read_alt_records, Corpus, LanguageTag, SentencePair,
};
use crate::features::{self, FeatureRecord};
use crate::io::{read_jsonl, write_json_pretty, write_jsonl, Manifest};
use crate::lm::{CharNgramScorer, LogprobScorer, RemoteScorer};
use crate::ltp::{build_ltp_input, render_prompt, LangVocab, PromptTemplate, SftRecord};
use crate::metrics::{score_lines, score_sentence, Smoothing};
use crate::report::{build_report, render_text, MetricsFile};
use crate::sar::{group_normalize, judge, SarConfig};
use crate::select::{
    score_corpus, select_above, select_top_k, AuditRecord, EpdsConfig, ScoredPair,
};
use crate::split::{split as div_split, SplitSpec};
use crate::tokenize::mixed_tokens;

/// Environment variable that overrides the scorer endpoint.
pub const SCORER_URL_ENV: &str = "MERIT_SCORER_URL";

#[derive(Parser)]
#[command(
    name = "merit",
    version,
    about = "Corpus curation and evaluation toolkit for low-resource machine translation"
)]
struct Cli {
    /// TOML config file; flags override file values.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate an ALT-style TSV file and convert it to id/text records.
    Ingest(IngestArgs),
    /// Join source and Chinese TSV records by sentence id into a corpus.
    Align(AlignArgs),
    /// Dump the five statistical features and the base score per pair.
    Features(FeaturesArgs),
    /// Attach base, fluency and context-reliance scores to a corpus.
    Score(ScoreArgs),
    /// Keep the top-K (or above-threshold) pairs of a scored corpus.
    Select(SelectArgs),
    /// Produce exact-size, distribution-preserving train/dev/test splits.
    Split(SplitArgs),
    /// Extract judge scores, assign rewards and group-relative advantages.
    Sar(SarArgs),
    /// Assemble language-token-prefixed training records.
    Ltp(LtpArgs),
    /// Score hypotheses against references with the bundled metrics.
    Eval(EvalArgs),
    /// Summarize run artifacts into retention and metric tables.
    Report(ReportArgs),
}

#[derive(Args)]
struct IngestArgs {
    /// Input TSV file (one `id<TAB>text` record per line).
    #[arg(long = "in", value_name = "TSV")]
    input: PathBuf,
    /// Output records JSONL.
    #[arg(long, value_name = "JSONL")]
    out: PathBuf,
    /// Apply NFC normalization to text fields.
    #[arg(long)]
    nfc: bool,
}

#[derive(Args)]
struct AlignArgs {
    /// Source-language TSV.
    #[arg(long, value_name = "TSV")]
    source: PathBuf,
    /// Chinese TSV.
    #[arg(long, value_name = "TSV")]
    target: PathBuf,
    /// Source language code (fil, id, lo, my, vi).
    #[arg(long)]
    lang: LanguageTag,
    /// Optional `id<TAB>domain` TSV with domain labels.
    #[arg(long, value_name = "TSV")]
    domains: Option<PathBuf>,
    /// Output corpus JSONL.
    #[arg(long, value_name = "JSONL")]
    out: PathBuf,
    /// Apply NFC normalization to text fields.
    #[arg(long)]
    nfc: bool,
}

#[derive(Args)]
struct FeaturesArgs {
    /// Input corpus JSONL.
    #[arg(long = "in", value_name = "JSONL")]
    input: PathBuf,
    /// Output feature-dump JSONL.
    #[arg(long, value_name = "JSONL")]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ScorerChoice {
    /// Remote when an endpoint is configured, otherwise the offline model.
    Auto,
    /// Deterministic character n-gram model trained on the input corpus.
    Fallback,
    /// Remote logprob service.
    Remote,
}

#[derive(Args)]
struct ScoreArgs {
    /// Input corpus JSONL.
    #[arg(long = "in", value_name = "JSONL")]
    input: PathBuf,
    /// Output scored-pair JSONL.
    #[arg(long, value_name = "JSONL")]
    out: PathBuf,
    /// Audit JSONL for pairs dropped by the validity gate.
    #[arg(long, value_name = "JSONL")]
    audit: Option<PathBuf>,
    /// Scorer backend.
    #[arg(long, value_enum, default_value = "auto")]
    scorer: ScorerChoice,
    /// Remote scorer endpoint (overrides config and environment).
    #[arg(long, value_name = "URL")]
    endpoint: Option<String>,
}

#[derive(Args)]
struct SelectArgs {
    /// Input scored-pair JSONL.
    #[arg(long = "in", value_name = "JSONL")]
    input: PathBuf,
    /// Keep exactly the K best pairs.
    #[arg(long, value_name = "K", conflicts_with = "theta")]
    k: Option<usize>,
    /// Keep pairs whose composite score exceeds this threshold.
    #[arg(long, value_name = "THETA")]
    theta: Option<f64>,
    /// Output corpus JSONL with the retained pairs.
    #[arg(long, value_name = "JSONL")]
    out: PathBuf,
    /// Audit JSONL with ranks and drop reasons.
    #[arg(long, value_name = "JSONL")]
    audit: Option<PathBuf>,
    /// Fail instead of warning when fewer than K pairs are available.
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct SplitArgs {
    /// Input corpus JSONL.
    #[arg(long = "in", value_name = "JSONL")]
    input: PathBuf,
    /// Train size.
    #[arg(long)]
    train: Option<usize>,
    /// Dev size.
    #[arg(long)]
    dev: Option<usize>,
    /// Test size.
    #[arg(long)]
    test: Option<usize>,
    /// Sampling seed (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for train.jsonl, dev.jsonl, test.jsonl and
    /// quota_report.json.
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct SarArgs {
    /// Input JSONL with {id, eval_log, expert_score[, group_id]}.
    #[arg(long = "in", value_name = "JSONL")]
    input: PathBuf,
    /// Output JSONL with {id, extracted, reward[, advantage, group_id]}.
    #[arg(long, value_name = "JSONL")]
    out: PathBuf,
    /// Chunk ungrouped records into groups of this size for normalization.
    #[arg(long, value_name = "N")]
    group_size: Option<usize>,
    /// Accept any standalone in-range integer, not just cued scores.
    #[arg(long)]
    permissive: bool,
}

#[derive(Args)]
struct LtpArgs {
    /// Input corpus JSONL.
    #[arg(long = "in", value_name = "JSONL")]
    input: PathBuf,
    /// Output SFT-record JSONL.
    #[arg(long, value_name = "JSONL")]
    out: PathBuf,
    /// Prompt template file (defaults to the built-in template).
    #[arg(long, value_name = "FILE")]
    template: Option<PathBuf>,
    /// Emit token arrays instead of assembled input text.
    #[arg(long)]
    tokens: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GranularityArg {
    Corpus,
    Sentence,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SmoothingArg {
    AddOne,
    None,
}

#[derive(Args)]
struct EvalArgs {
    /// Hypotheses, one sentence per line.
    #[arg(long, value_name = "TXT")]
    hyp: PathBuf,
    /// Line-aligned references.
    #[arg(long = "ref", value_name = "TXT")]
    reference: PathBuf,
    /// Output metrics JSON (printed to stdout when omitted).
    #[arg(long, value_name = "JSON")]
    out: Option<PathBuf>,
    /// Which metrics to report.
    #[arg(long, default_value = "all")]
    metric: String,
    /// BLEU zero-precision handling.
    #[arg(long, value_enum)]
    smoothing: Option<SmoothingArg>,
    /// Report corpus-level scores or per-sentence scores too.
    #[arg(long, value_enum, default_value = "corpus")]
    granularity: GranularityArg,
}

#[derive(Args)]
struct ReportArgs {
    /// Run directory with per-language audit subdirectories.
    #[arg(long = "in", value_name = "DIR")]
    input: PathBuf,
    /// Output report JSON.
    #[arg(long, value_name = "JSON")]
    out: Option<PathBuf>,
    /// Also write the aligned text table to this file.
    #[arg(long, value_name = "TXT")]
    text: Option<PathBuf>,
}

/// Parses argv (`argv[0]` is the program name) and runs one subcommand.
pub fn run(argv: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = err.print();
            return code;
        }
    };
    let config = match load_config(cli.config.as_deref()) {
        Ok(config) => config,
        Err(err) => {
            eprintln!("error: {err:#}");
            return 1;
        }
    };
    match dispatch(cli.command, &config) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err:#}");
            1
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<PipelineConfig> {
    match path {
        Some(path) => Ok(PipelineConfig::load(path)?),
        None => Ok(PipelineConfig::default()),
    }
}

fn dispatch(command: Command, config: &PipelineConfig) -> Result<()> {
    match command {
        Command::Ingest(args) => cmd_ingest(args, config),
        Command::Align(args) => cmd_align(args, config),
        Command::Features(args) => cmd_features(args, config),
        Command::Score(args) => cmd_score(args, config),
        Command::Select(args) => cmd_select(args, config),
        Command::Split(args) => cmd_split(args, config),
        Command::Sar(args) => cmd_sar(args, config),
        Command::Ltp(args) => cmd_ltp(args, config),
        Command::Eval(args) => cmd_eval(args, config),
        Command::Report(args) => cmd_report(args, config),
    }
}

fn manifest(config: &PipelineConfig, seed: u64) -> Manifest {
    Manifest::new(&config.content_hash(), seed)
}

#[derive(Serialize, Deserialize)]
struct RecordRow {
    id: String,
    text: String,
}

fn cmd_ingest(args: IngestArgs, config: &PipelineConfig) -> Result<()> {
    let records = read_alt_records(&args.input, args.nfc)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let rows: Vec<RecordRow> = records
        .into_iter()
        .map(|(id, text)| RecordRow { id, text })
        .collect();
    let count = rows.len();
    write_jsonl(&args.out, &manifest(config, config.seed), rows)?;
    println!("ingested {count} records -> {}", args.out.display());
    Ok(())
}

fn read_domains(path: &Path) -> Result<BTreeMap<String, String>> {
    let records =
        read_alt_records(path, false).with_context(|| format!("reading {}", path.display()))?;
    Ok(records.into_iter().collect())
}

fn cmd_align(args: AlignArgs, config: &PipelineConfig) -> Result<()> {
    let source = read_alt_records(&args.source, args.nfc)
        .with_context(|| format!("reading {}", args.source.display()))?;
    let target = read_alt_records(&args.target, args.nfc)
        .with_context(|| format!("reading {}", args.target.display()))?;
    let domains = match &args.domains {
        Some(path) => read_domains(path)?,
        None => BTreeMap::new(),
    };
    let (corpus, stats) = align_by_id(&source, &target, args.lang, &domains)?;
    let aligned = corpus.len();
    write_jsonl(&args.out, &manifest(config, config.seed), corpus.pairs)?;
    println!(
        "aligned {aligned} pairs ({} source-only and {} target-only dropped) -> {}",
        stats.dropped_source,
        stats.dropped_target,
        args.out.display()
    );
    Ok(())
}

fn read_corpus(path: &Path) -> Result<Corpus> {
    let (_, pairs): (_, Vec<SentencePair>) = read_jsonl(path)?;
    let lang = pairs
        .first()
        .map(|p| p.source_lang)
        .ok_or_else(|| anyhow!("{}: corpus is empty", path.display()))?;
    Ok(Corpus::from_pairs(lang, pairs)?)
}

fn cmd_features(args: FeaturesArgs, config: &PipelineConfig) -> Result<()> {
    let corpus = read_corpus(&args.input)?;
    let mut rows = Vec::with_capacity(corpus.len());
    let mut skipped = 0usize;
    for pair in &corpus.pairs {
        match features::extract(&pair.source_text, &pair.target_text) {
            Ok(fv) => {
                let s_base = features::base_score(&fv, &config.base_score)?;
                rows.push(FeatureRecord {
                    id: pair.id.clone(),
                    r_len: fv.r_len,
                    r_tok: fv.r_tok,
                    d_punct: fv.d_punct,
                    d_digit: fv.d_digit,
                    d_uniq: fv.d_uniq,
                    s_base,
                });
            }
            Err(_) => {
                skipped += 1;
                eprintln!("warning: {}: empty side, no features", pair.id);
            }
        }
    }
    let count = rows.len();
    write_jsonl(&args.out, &manifest(config, config.seed), rows)?;
    println!(
        "featurized {count} pairs ({skipped} skipped) -> {}",
        args.out.display()
    );
    Ok(())
}

/// Endpoint precedence: flag, then MERIT_SCORER_URL, then config file.
fn resolve_endpoint(
    flag: Option<&str>,
    env_value: Option<&str>,
    config_value: Option<&str>,
) -> Option<String> {
    flag.or(env_value).or(config_value).map(str::to_string)
}

fn prompt_template(flag: Option<&Path>, config: &PipelineConfig) -> Result<PromptTemplate> {
    match flag.or(config.prompt_template.as_ref().map(Path::new)) {
        Some(path) => Ok(PromptTemplate::load(path)?),
        None => Ok(PromptTemplate::default()),
    }
}

fn cmd_score(args: ScoreArgs, config: &PipelineConfig) -> Result<()> {
    let corpus = read_corpus(&args.input)?;
    config.scorer.validate()?;
    let epds = EpdsConfig {
        validity: config.validity.clone(),
        base: config.base_score,
        scorer: config.scorer.clone(),
        compose: config.compose,
        prompt: prompt_template(None, config)?,
        k: 0,
        strict: false,
    };

    let endpoint = resolve_endpoint(
        args.endpoint.as_deref(),
        std::env::var(SCORER_URL_ENV).ok().as_deref(),
        config.scorer.endpoint.as_deref(),
    );
    let use_remote = match args.scorer {
        ScorerChoice::Remote => true,
        ScorerChoice::Fallback => false,
        ScorerChoice::Auto => endpoint.is_some(),
    };

    let scorer: Box<dyn LogprobScorer> = if use_remote {
        let url = endpoint.ok_or_else(|| {
            anyhow!("remote scorer requested but no endpoint given (flag, {SCORER_URL_ENV} or config)")
        })?;
        Box::new(RemoteScorer::new(
            &url,
            config.scorer.timeout(),
            config.scorer.max_in_flight,
        ))
    } else {
        // Offline mode: train the character model on the corpus being
        // scored (instruction + source + target per valid pair).
        let instruction = render_prompt(&epds.prompt, corpus.source_lang)?;
        let texts: Vec<String> = corpus
            .pairs
            .iter()
            .filter(|p| crate::corpus::validity_filter(p, &config.validity))
            .map(|p| format!("{instruction}{}{}", p.source_text, p.target_text))
            .collect();
        let texts = if texts.is_empty() {
            // Nothing will be scored; any non-empty corpus satisfies the
            // trainer.
            vec![" ".to_string()]
        } else {
            texts
        };
        Box::new(CharNgramScorer::new(crate::lm::train_char_ngram(&texts, 4)?))
    };

    let (scored, dropped) = score_corpus(&corpus, &epds, scorer.as_ref())?;
    let kept = scored.len();
    if let Some(audit_path) = &args.audit {
        write_jsonl(audit_path, &manifest(config, config.seed), &dropped)?;
    }
    write_jsonl(&args.out, &manifest(config, config.seed), scored)?;
    println!(
        "scored {kept} pairs ({} dropped by validity) -> {}",
        dropped.len(),
        args.out.display()
    );
    Ok(())
}

fn cmd_select(args: SelectArgs, config: &PipelineConfig) -> Result<()> {
    let (_, scored): (_, Vec<ScoredPair>) = read_jsonl(&args.input)?;
    let total = scored.len();
    let selected = match (args.k, args.theta) {
        (Some(k), None) => {
            if k > total {
                if args.strict {
                    bail!("only {total} scored pairs for K = {k} (strict mode)");
                }
                eprintln!("warning: only {total} scored pairs for K = {k}; keeping all");
            }
            select_top_k(scored.clone(), k)
        }
        (None, Some(theta)) => select_above(scored.clone(), theta),
        _ => bail!("select needs exactly one of --k or --theta"),
    };

    if let Some(audit_path) = &args.audit {
        let cutoff = selected.len();
        let mut ranked = scored;
        ranked.sort_by(|a, b| {
            b.s_final
                .total_cmp(&a.s_final)
                .then_with(|| a.pair.id.cmp(&b.pair.id))
        });
        let audit: Vec<AuditRecord> = ranked
            .iter()
            .enumerate()
            .map(|(idx, sp)| {
                if idx < cutoff {
                    AuditRecord::scored(sp, Some(idx + 1), None)
                } else {
                    AuditRecord::scored(sp, None, Some("below_cutoff"))
                }
            })
            .collect();
        write_jsonl(audit_path, &manifest(config, config.seed), audit)?;
    }

    let kept = selected.len();
    let pairs: Vec<SentencePair> = selected.into_iter().map(|sp| sp.pair).collect();
    write_jsonl(&args.out, &manifest(config, config.seed), pairs)?;
    println!("selected {kept} of {total} pairs -> {}", args.out.display());
    Ok(())
}

fn cmd_split(args: SplitArgs, config: &PipelineConfig) -> Result<()> {
    let corpus = read_corpus(&args.input)?;
    let spec = SplitSpec {
        n_train: args.train.unwrap_or(config.split.n_train),
        n_dev: args.dev.unwrap_or(config.split.n_dev),
        n_test: args.test.unwrap_or(config.split.n_test),
        seed: args.seed.unwrap_or(config.split.seed),
    };
    let result = div_split(&corpus, &spec)?;
    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;
    let stamp = manifest(config, spec.seed);
    write_jsonl(&args.out_dir.join("train.jsonl"), &stamp, &result.train)?;
    write_jsonl(&args.out_dir.join("dev.jsonl"), &stamp, &result.dev)?;
    write_jsonl(&args.out_dir.join("test.jsonl"), &stamp, &result.test)?;

    #[derive(Serialize)]
    struct QuotaDocument<'a> {
        manifest: &'a Manifest,
        #[serde(flatten)]
        report: &'a crate::split::QuotaReport,
    }
    write_json_pretty(
        &args.out_dir.join("quota_report.json"),
        &QuotaDocument {
            manifest: &stamp,
            report: &result.quota_report,
        },
    )?;
    println!(
        "split {} pairs into {}/{}/{} -> {}",
        corpus.len(),
        result.train.len(),
        result.dev.len(),
        result.test.len(),
        args.out_dir.display()
    );
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct SarInputRow {
    id: String,
    eval_log: String,
    expert_score: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    group_id: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct SarOutputRow {
    id: String,
    extracted: i64,
    reward: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    advantage: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    group_id: Option<String>,
}

fn cmd_sar(args: SarArgs, config: &PipelineConfig) -> Result<()> {
    let (_, rows): (_, Vec<SarInputRow>) = read_jsonl(&args.input)?;
    if rows.is_empty() {
        bail!("{}: no records", args.input.display());
    }
    let sar_cfg = SarConfig {
        permissive: args.permissive || config.sar.permissive,
        ..config.sar.clone()
    };

    let mut out: Vec<SarOutputRow> = Vec::with_capacity(rows.len());
    for row in &rows {
        let record = judge(
            &crate::sar::EvalLog::new(row.eval_log.clone()),
            row.expert_score,
            &sar_cfg,
        )
        .with_context(|| format!("record {}", row.id))?;
        out.push(SarOutputRow {
            id: row.id.clone(),
            extracted: record.extracted,
            reward: record.reward,
            advantage: None,
            group_id: row.group_id.clone(),
        });
    }

    // Grouping: explicit group ids win; otherwise sequential chunks of
    // --group-size. Groups below two members keep a null advantage.
    let mut groups: Vec<Vec<usize>> = Vec::new();
    if rows.iter().any(|r| r.group_id.is_some()) {
        let mut by_id: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (idx, row) in rows.iter().enumerate() {
            if let Some(group) = &row.group_id {
                by_id.entry(group).or_default().push(idx);
            }
        }
        groups.extend(by_id.into_values());
    } else if let Some(size) = args.group_size {
        if size < 2 {
            bail!("--group-size must be at least 2");
        }
        let mut idx = 0;
        while idx < out.len() {
            let end = (idx + size).min(out.len());
            groups.push((idx..end).collect());
            for member in idx..end {
                out[member].group_id = Some(format!("chunk{:04}", idx / size));
            }
            idx = end;
        }
    }
    for members in groups {
        if members.len() < 2 {
            continue;
        }
        let rewards: Vec<f64> = members.iter().map(|&i| out[i].reward).collect();
        let advantages = group_normalize(&rewards)?;
        for (member, adv) in members.iter().zip(advantages) {
            out[*member].advantage = Some(adv);
        }
    }

    let count = out.len();
    write_jsonl(&args.out, &manifest(config, config.seed), out)?;
    println!("rewarded {count} records -> {}", args.out.display());
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct SftTextRow {
    lang: LanguageTag,
    input_text: String,
    target_text: String,
}

fn cmd_ltp(args: LtpArgs, config: &PipelineConfig) -> Result<()> {
    let corpus = read_corpus(&args.input)?;
    let template = prompt_template(args.template.as_deref(), config)?;
    let vocab = LangVocab::default();
    let count = corpus.len();

    if args.tokens {
        let mut rows = Vec::with_capacity(corpus.len());
        for pair in &corpus.pairs {
            let prompt = render_prompt(&template, pair.source_lang)?;
            let prompt_tokens: Vec<String> =
                prompt.split_whitespace().map(str::to_string).collect();
            let source_tokens: Vec<String> = mixed_tokens(&pair.source_text)
                .into_iter()
                .map(str::to_string)
                .collect();
            let input_tokens =
                build_ltp_input(&prompt_tokens, pair.source_lang, &source_tokens, &vocab)
                    .with_context(|| format!("pair {}", pair.id))?;
            let target_tokens: Vec<String> = mixed_tokens(&pair.target_text)
                .into_iter()
                .map(str::to_string)
                .collect();
            rows.push(SftRecord {
                lang: pair.source_lang,
                input_tokens,
                target_tokens,
            });
        }
        write_jsonl(&args.out, &manifest(config, config.seed), rows)?;
    } else {
        let mut rows = Vec::with_capacity(corpus.len());
        for pair in &corpus.pairs {
            let prompt = render_prompt(&template, pair.source_lang)?;
            let lang_token = vocab
                .token(pair.source_lang)
                .ok_or_else(|| anyhow!("no language token for {}", pair.source_lang))?;
            rows.push(SftTextRow {
                lang: pair.source_lang,
                input_text: format!("{prompt}{lang_token} {}", pair.source_text),
                target_text: pair.target_text.clone(),
            });
        }
        write_jsonl(&args.out, &manifest(config, config.seed), rows)?;
    }
    println!("assembled {count} records -> {}", args.out.display());
    Ok(())
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let content =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let lines: Vec<String> = content.lines().map(str::to_string).collect();
    for (idx, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            bail!("{} line {}: empty sentence", path.display(), idx + 1);
        }
    }
    Ok(lines)
}

fn cmd_eval(args: EvalArgs, config: &PipelineConfig) -> Result<()> {
    let hyps = read_lines(&args.hyp)?;
    let refs = read_lines(&args.reference)?;
    let mut opts = config.metrics.clone();
    if let Some(smoothing) = args.smoothing {
        opts.smoothing = match smoothing {
            SmoothingArg::AddOne => Smoothing::AddOne,
            SmoothingArg::None => Smoothing::None,
        };
    }
    match args.metric.as_str() {
        "all" | "bleu" | "chrf" | "rouge" | "bleu-chrf" => {}
        other => bail!("unknown metric {other:?} (use all, bleu, chrf, rouge or bleu-chrf)"),
    }

    let corpus = score_lines(&hyps, &refs, &opts)?;
    let sentences = match args.granularity {
        GranularityArg::Corpus => None,
        GranularityArg::Sentence => {
            let mut rows = Vec::with_capacity(hyps.len());
            for (hyp, reference) in hyps.iter().zip(&refs) {
                rows.push(score_sentence(hyp, reference, &opts)?);
            }
            Some(rows)
        }
    };

    let document = MetricsFile {
        manifest: Some(manifest(config, config.seed)),
        corpus: corpus.clone(),
        sentences,
    };
    let summary = match args.metric.as_str() {
        "bleu" => format!("BLEU-4 {:.2}", corpus.bleu4),
        "chrf" => format!("chrF {:.2}", corpus.chrf),
        "rouge" => format!("ROUGE-L {:.2}", corpus.rouge_l),
        "bleu-chrf" => format!("BLEU-chrF {:.2}", corpus.bleu_chrf),
        _ => format!(
            "BLEU-4 {:.2}  chrF {:.2}  ROUGE-L {:.2}  BLEU-chrF {:.2}",
            corpus.bleu4, corpus.chrf, corpus.rouge_l, corpus.bleu_chrf
        ),
    };
    match &args.out {
        Some(path) => {
            write_json_pretty(path, &document)?;
            println!("{summary} -> {}", path.display());
        }
        None => {
            println!("{}", serde_json::to_string_pretty(&document)?);
        }
    }
    Ok(())
}

fn cmd_report(args: ReportArgs, config: &PipelineConfig) -> Result<()> {
    let report = build_report(&args.input, manifest(config, config.seed))?;
    let table = render_text(&report);
    if let Some(path) = &args.out {
        write_json_pretty(path, &report)?;
    }
    if let Some(path) = &args.text {
        crate::io::atomic_write(path, table.as_bytes())?;
    }
    print!("{table}");
    Ok(())
}
