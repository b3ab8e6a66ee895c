//! From-scratch evaluation metrics: BLEU-4, chrF, ROUGE-L, their composite,
//! the combination variants, and a Spearman rank-correlation utility.
//!
//! All metric values are scaled to [0, 100]. Corpus-level scores pool
//! counts across sentences (the default for reporting); sentence-level
//! scoring is the single-pair case of the same counters.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::tokenize::mixed_tokens;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MetricError {
    #[error("cannot score empty input")]
    EmptyInput,
    #[error("metric inputs must lie in [0, 100], got {0}")]
    OutOfRange(f64),
    #[error("sequences must share granularity")]
    GranularityMismatch,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("rank correlation is undefined when a side has zero rank variance")]
    DegenerateInput,
}

/// Token granularity of a [`TokenSequence`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    /// Whitespace words with CJK split to single characters.
    Word,
    /// Every scalar value is a token.
    Character,
}

/// A tokenized sentence, tagged with how it was segmented.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenSequence {
    pub tokens: Vec<String>,
    pub granularity: Granularity,
}

impl TokenSequence {
    pub fn characters(text: &str) -> Self {
        TokenSequence {
            tokens: text.chars().map(String::from).collect(),
            granularity: Granularity::Character,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Segments target-side text: CJK scalar values become single tokens,
/// contiguous non-CJK runs split on whitespace.
pub fn tokenize_target(text: &str) -> TokenSequence {
    TokenSequence {
        tokens: mixed_tokens(text).into_iter().map(String::from).collect(),
        granularity: Granularity::Word,
    }
}

/// BLEU zero-precision handling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Smoothing {
    /// Add one to numerator and denominator for n >= 2 when a precision
    /// is zero.
    #[default]
    AddOne,
    /// No smoothing: any zero precision zeroes the whole score.
    None,
}

const BLEU_ORDER: usize = 4;

/// Pooled modified-precision counters for BLEU. Counters merge
/// associatively, so corpus scoring is `add` over all pairs then `score`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BleuCounts {
    matched: [u64; BLEU_ORDER],
    total: [u64; BLEU_ORDER],
    hyp_len: u64,
    ref_len: u64,
}

fn ngram_counts<'a>(tokens: &'a [String], n: usize) -> HashMap<&'a [String], u64> {
    let mut counts: HashMap<&[String], u64> = HashMap::new();
    if tokens.len() >= n {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

impl BleuCounts {
    /// Accumulates one hypothesis/reference pair.
    pub fn add(&mut self, hyp: &TokenSequence, reference: &TokenSequence) -> Result<(), MetricError> {
        if hyp.is_empty() || reference.is_empty() {
            return Err(MetricError::EmptyInput);
        }
        if hyp.granularity != reference.granularity {
            return Err(MetricError::GranularityMismatch);
        }
        self.hyp_len += hyp.len() as u64;
        self.ref_len += reference.len() as u64;
        for n in 1..=BLEU_ORDER {
            let ref_counts = ngram_counts(&reference.tokens, n);
            let hyp_counts = ngram_counts(&hyp.tokens, n);
            for (gram, count) in &hyp_counts {
                let clip = ref_counts.get(gram).copied().unwrap_or(0);
                self.matched[n - 1] += (*count).min(clip);
                self.total[n - 1] += count;
            }
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &BleuCounts) {
        for n in 0..BLEU_ORDER {
            self.matched[n] += other.matched[n];
            self.total[n] += other.total[n];
        }
        self.hyp_len += other.hyp_len;
        self.ref_len += other.ref_len;
    }

    /// Geometric mean of the four modified precisions times the brevity
    /// penalty, scaled to [0, 100].
    pub fn score(&self, smoothing: Smoothing) -> f64 {
        let mut log_sum = 0.0;
        for n in 0..BLEU_ORDER {
            let (mut m, mut t) = (self.matched[n] as f64, self.total[n] as f64);
            if m == 0.0 || t == 0.0 {
                match smoothing {
                    Smoothing::AddOne if n > 0 => {
                        m += 1.0;
                        t += 1.0;
                    }
                    _ => return 0.0,
                }
            }
            log_sum += (m / t).ln();
        }
        let bp = if self.hyp_len < self.ref_len {
            (1.0 - self.ref_len as f64 / self.hyp_len as f64).exp()
        } else {
            1.0
        };
        100.0 * bp * (log_sum / BLEU_ORDER as f64).exp()
    }
}

/// Sentence-level BLEU-4 with the default add-one smoothing.
pub fn bleu4(hyp: &TokenSequence, reference: &TokenSequence) -> Result<f64, MetricError> {
    bleu4_smoothed(hyp, reference, Smoothing::AddOne)
}

pub fn bleu4_smoothed(
    hyp: &TokenSequence,
    reference: &TokenSequence,
    smoothing: Smoothing,
) -> Result<f64, MetricError> {
    let mut counts = BleuCounts::default();
    counts.add(hyp, reference)?;
    Ok(counts.score(smoothing))
}

/// Corpus-level BLEU-4 over line-aligned pairs (pooled counts).
pub fn corpus_bleu4(
    pairs: &[(TokenSequence, TokenSequence)],
    smoothing: Smoothing,
) -> Result<f64, MetricError> {
    if pairs.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    let mut counts = BleuCounts::default();
    for (hyp, reference) in pairs {
        counts.add(hyp, reference)?;
    }
    Ok(counts.score(smoothing))
}

pub const CHRF_ORDER: usize = 6;
pub const CHRF_BETA: f64 = 2.0;

/// Pooled character n-gram statistics for chrF, one row per order.
#[derive(Debug, Clone, PartialEq)]
pub struct ChrfCounts {
    order: usize,
    matched: Vec<u64>,
    hyp_total: Vec<u64>,
    ref_total: Vec<u64>,
}

fn chrf_chars(text: &str) -> Vec<char> {
    // Whitespace is not part of chrF n-grams.
    text.chars().filter(|c| !c.is_whitespace()).collect()
}

fn char_ngram_counts(chars: &[char], n: usize) -> HashMap<&[char], u64> {
    let mut counts: HashMap<&[char], u64> = HashMap::new();
    if chars.len() >= n {
        for gram in chars.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

impl ChrfCounts {
    pub fn new(order: usize) -> Self {
        ChrfCounts {
            order,
            matched: vec![0; order],
            hyp_total: vec![0; order],
            ref_total: vec![0; order],
        }
    }

    pub fn add(&mut self, hyp: &str, reference: &str) -> Result<(), MetricError> {
        let hyp_chars = chrf_chars(hyp);
        let ref_chars = chrf_chars(reference);
        if hyp_chars.is_empty() || ref_chars.is_empty() {
            return Err(MetricError::EmptyInput);
        }
        for n in 1..=self.order {
            let hyp_counts = char_ngram_counts(&hyp_chars, n);
            let ref_counts = char_ngram_counts(&ref_chars, n);
            for (gram, count) in &hyp_counts {
                let clip = ref_counts.get(gram).copied().unwrap_or(0);
                self.matched[n - 1] += (*count).min(clip);
            }
            self.hyp_total[n - 1] += hyp_counts.values().sum::<u64>();
            self.ref_total[n - 1] += ref_counts.values().sum::<u64>();
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &ChrfCounts) {
        assert_eq!(self.order, other.order);
        for n in 0..self.order {
            self.matched[n] += other.matched[n];
            self.hyp_total[n] += other.hyp_total[n];
            self.ref_total[n] += other.ref_total[n];
        }
    }

    /// Average F_beta over the orders that produced n-grams on either side.
    pub fn score(&self, beta: f64) -> f64 {
        let beta2 = beta * beta;
        let mut f_sum = 0.0;
        let mut orders = 0usize;
        for n in 0..self.order {
            if self.hyp_total[n] == 0 && self.ref_total[n] == 0 {
                continue; // both sides too short for this order
            }
            orders += 1;
            let m = self.matched[n] as f64;
            let precision = if self.hyp_total[n] > 0 { m / self.hyp_total[n] as f64 } else { 0.0 };
            let recall = if self.ref_total[n] > 0 { m / self.ref_total[n] as f64 } else { 0.0 };
            if precision + recall > 0.0 {
                f_sum += (1.0 + beta2) * precision * recall / (beta2 * precision + recall);
            }
        }
        if orders == 0 {
            0.0
        } else {
            100.0 * f_sum / orders as f64
        }
    }
}

/// Sentence-level chrF with the default order 6 and beta 2.
pub fn chrf(hyp: &str, reference: &str) -> Result<f64, MetricError> {
    chrf_with(hyp, reference, CHRF_ORDER, CHRF_BETA)
}

pub fn chrf_with(hyp: &str, reference: &str, order: usize, beta: f64) -> Result<f64, MetricError> {
    let mut counts = ChrfCounts::new(order);
    counts.add(hyp, reference)?;
    Ok(counts.score(beta))
}

/// Corpus-level chrF (pooled counts).
pub fn corpus_chrf(
    pairs: &[(String, String)],
    order: usize,
    beta: f64,
) -> Result<f64, MetricError> {
    if pairs.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    let mut counts = ChrfCounts::new(order);
    for (hyp, reference) in pairs {
        counts.add(hyp, reference)?;
    }
    Ok(counts.score(beta))
}

/// Pooled longest-common-subsequence statistics for ROUGE-L.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RougeCounts {
    lcs_sum: u64,
    hyp_len: u64,
    ref_len: u64,
}

fn lcs_length(a: &[String], b: &[String]) -> usize {
    // Two-row dynamic program.
    let mut prev = vec![0usize; b.len() + 1];
    let mut curr = vec![0usize; b.len() + 1];
    for ai in a {
        for (j, bj) in b.iter().enumerate() {
            curr[j + 1] = if ai == bj {
                prev[j] + 1
            } else {
                prev[j + 1].max(curr[j])
            };
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[b.len()]
}

impl RougeCounts {
    pub fn add(&mut self, hyp: &TokenSequence, reference: &TokenSequence) -> Result<(), MetricError> {
        if hyp.is_empty() || reference.is_empty() {
            return Err(MetricError::EmptyInput);
        }
        if hyp.granularity != reference.granularity {
            return Err(MetricError::GranularityMismatch);
        }
        self.lcs_sum += lcs_length(&hyp.tokens, &reference.tokens) as u64;
        self.hyp_len += hyp.len() as u64;
        self.ref_len += reference.len() as u64;
        Ok(())
    }

    pub fn merge(&mut self, other: &RougeCounts) {
        self.lcs_sum += other.lcs_sum;
        self.hyp_len += other.hyp_len;
        self.ref_len += other.ref_len;
    }

    /// LCS F-measure: F = (1 + beta^2) R P / (R + beta^2 P), scaled to
    /// [0, 100].
    pub fn score(&self, beta: f64) -> f64 {
        let precision = self.lcs_sum as f64 / self.hyp_len as f64;
        let recall = self.lcs_sum as f64 / self.ref_len as f64;
        if precision + recall == 0.0 {
            return 0.0;
        }
        let beta2 = beta * beta;
        100.0 * (1.0 + beta2) * recall * precision / (recall + beta2 * precision)
    }
}

/// Sentence-level ROUGE-L with the default beta 1 (harmonic F).
pub fn rouge_l(hyp: &TokenSequence, reference: &TokenSequence) -> Result<f64, MetricError> {
    rouge_l_with(hyp, reference, 1.0)
}

pub fn rouge_l_with(
    hyp: &TokenSequence,
    reference: &TokenSequence,
    beta: f64,
) -> Result<f64, MetricError> {
    let mut counts = RougeCounts::default();
    counts.add(hyp, reference)?;
    Ok(counts.score(beta))
}

/// Corpus-level ROUGE-L (pooled counts).
pub fn corpus_rouge_l(
    pairs: &[(TokenSequence, TokenSequence)],
    beta: f64,
) -> Result<f64, MetricError> {
    if pairs.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    let mut counts = RougeCounts::default();
    for (hyp, reference) in pairs {
        counts.add(hyp, reference)?;
    }
    Ok(counts.score(beta))
}

fn check_range(value: f64) -> Result<f64, MetricError> {
    if !(0.0..=100.0).contains(&value) {
        return Err(MetricError::OutOfRange(value));
    }
    Ok(value)
}

/// Arithmetic mean of BLEU-4 and chrF.
pub fn bleu_chrf(bleu4: f64, chrf: f64) -> Result<f64, MetricError> {
    Ok((check_range(bleu4)? + check_range(chrf)?) / 2.0)
}

/// How to fold BLEU-4 and chrF into one number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CombineMethod {
    /// (b + c) / 2 — identical to [`bleu_chrf`].
    Equal,
    /// sqrt(b * c)
    Geometric,
    /// 0.4 b + 0.6 c
    W46,
    /// 0.6 b + 0.4 c
    W64,
}

pub fn combine(bleu4: f64, chrf: f64, method: CombineMethod) -> Result<f64, MetricError> {
    let b = check_range(bleu4)?;
    let c = check_range(chrf)?;
    Ok(match method {
        CombineMethod::Equal => (b + c) / 2.0,
        CombineMethod::Geometric => (b * c).sqrt(),
        CombineMethod::W46 => 0.4 * b + 0.6 * c,
        CombineMethod::W64 => 0.6 * b + 0.4 * c,
    })
}

fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // 1-based ranks; ties share the mean rank of their block.
        let mean_rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = mean_rank;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation: Pearson correlation of average-ranked data,
/// with ties assigned their mean rank.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64, MetricError> {
    if xs.len() != ys.len() {
        return Err(MetricError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 2 {
        return Err(MetricError::DegenerateInput);
    }
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    let n = rx.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (x, y) in rx.iter().zip(&ry) {
        cov += (x - mx) * (y - my);
        vx += (x - mx).powi(2);
        vy += (y - my).powi(2);
    }
    if vx == 0.0 || vy == 0.0 {
        return Err(MetricError::DegenerateInput);
    }
    Ok(cov / (vx.sqrt() * vy.sqrt()))
}

/// Scoring level of a [`MetricReport`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricLevel {
    Corpus,
    Sentence,
}

/// The metric roster for one hypothesis/reference set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub level: MetricLevel,
    pub bleu4: f64,
    pub chrf: f64,
    pub rouge_l: f64,
    pub bleu_chrf: f64,
}

/// Metric options for [`score_lines`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricOptions {
    pub smoothing: Smoothing,
    pub chrf_order: usize,
    pub chrf_beta: f64,
    pub rouge_beta: f64,
}

impl Default for MetricOptions {
    fn default() -> Self {
        MetricOptions {
            smoothing: Smoothing::AddOne,
            chrf_order: CHRF_ORDER,
            chrf_beta: CHRF_BETA,
            rouge_beta: 1.0,
        }
    }
}

/// Scores line-aligned hypothesis/reference text at corpus level.
pub fn score_lines(
    hyps: &[String],
    refs: &[String],
    opts: &MetricOptions,
) -> Result<MetricReport, MetricError> {
    if hyps.len() != refs.len() {
        return Err(MetricError::LengthMismatch(hyps.len(), refs.len()));
    }
    if hyps.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    let mut bleu = BleuCounts::default();
    let mut chrf_counts = ChrfCounts::new(opts.chrf_order);
    let mut rouge = RougeCounts::default();
    for (hyp, reference) in hyps.iter().zip(refs) {
        let h = tokenize_target(hyp);
        let r = tokenize_target(reference);
        bleu.add(&h, &r)?;
        chrf_counts.add(hyp, reference)?;
        rouge.add(&h, &r)?;
    }
    let bleu4 = bleu.score(opts.smoothing);
    let chrf = chrf_counts.score(opts.chrf_beta);
    Ok(MetricReport {
        level: MetricLevel::Corpus,
        bleu4,
        chrf,
        rouge_l: rouge.score(opts.rouge_beta),
        bleu_chrf: bleu_chrf(bleu4, chrf)?,
    })
}

/// Scores one hypothesis/reference pair.
pub fn score_sentence(
    hyp: &str,
    reference: &str,
    opts: &MetricOptions,
) -> Result<MetricReport, MetricError> {
    let h = tokenize_target(hyp);
    let r = tokenize_target(reference);
    let bleu4 = bleu4_smoothed(&h, &r, opts.smoothing)?;
    let chrf = chrf_with(hyp, reference, opts.chrf_order, opts.chrf_beta)?;
    Ok(MetricReport {
        level: MetricLevel::Sentence,
        bleu4,
        chrf,
        rouge_l: rouge_l_with(&h, &r, opts.rouge_beta)?,
        bleu_chrf: bleu_chrf(bleu4, chrf)?,
    })
}
