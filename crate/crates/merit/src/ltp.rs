//! Language-token-prefixed model inputs and the reference training
//! objectives (label-smoothed cross-entropy and negative log-likelihood),
//! with analytic gradients for verification.
//!
//! A model input is `[prompt tokens..., ⟨lang⟩, source tokens...]`: the
//! rendered instruction, then the registered language-identifier token,
//! then the source. The objectives here are executable references used to
//! check training-side implementations, not a training loop.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::LanguageTag;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum LtpError {
    #[error("template must contain the placeholder {placeholder:?} exactly once (found {found})")]
    BadTemplate { placeholder: &'static str, found: usize },
    #[error("the target language cannot appear as a source")]
    TargetLanguageAsSource,
    #[error("source token sequence is empty")]
    EmptySource,
    #[error("language {0} has no registered identifier token")]
    UnregisteredLanguage(LanguageTag),
    #[error("target index {index} out of range for vocabulary size {vocab}")]
    IndexOutOfRange { index: usize, vocab: usize },
    #[error("epsilon must lie in [0, 1), got {0}")]
    InvalidEpsilon(f64),
    #[error("prediction is not a distribution: {0}")]
    InvalidDistribution(String),
    #[error("log-probability {0} is positive")]
    PositiveLogProb(f64),
    #[error("io: {0}")]
    Io(String),
}

pub const LANG_PLACEHOLDER: &str = "[lang]";

/// Default instruction template; the bundled golden file pins its bytes.
pub const DEFAULT_TEMPLATE: &str = "Translate [lang] language into Chinese: ";

/// Instruction template with a single `[lang]` placeholder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct PromptTemplate {
    template: String,
}

impl TryFrom<String> for PromptTemplate {
    type Error = LtpError;

    fn try_from(template: String) -> Result<Self, LtpError> {
        PromptTemplate::new(template)
    }
}

impl From<PromptTemplate> for String {
    fn from(tpl: PromptTemplate) -> String {
        tpl.template
    }
}

impl Default for PromptTemplate {
    fn default() -> Self {
        PromptTemplate {
            template: DEFAULT_TEMPLATE.to_string(),
        }
    }
}

impl PromptTemplate {
    /// Validates that the placeholder occurs exactly once.
    pub fn new(template: String) -> Result<Self, LtpError> {
        let found = template.matches(LANG_PLACEHOLDER).count();
        if found != 1 {
            return Err(LtpError::BadTemplate {
                placeholder: LANG_PLACEHOLDER,
                found,
            });
        }
        Ok(PromptTemplate { template })
    }

    /// Loads a template file. A single trailing newline is stripped so the
    /// file can be edited normally; everything else is kept byte-exact.
    pub fn load(path: &Path) -> Result<Self, LtpError> {
        let raw = std::fs::read_to_string(path).map_err(|e| LtpError::Io(e.to_string()))?;
        let raw = raw.strip_suffix('\n').unwrap_or(&raw);
        PromptTemplate::new(raw.to_string())
    }

    pub fn template(&self) -> &str {
        &self.template
    }

    /// Whitespace token count of the prompt rendered for `lang`.
    pub fn rendered_token_count(&self, lang: LanguageTag) -> Result<usize, LtpError> {
        Ok(render_prompt(self, lang)?.split_whitespace().count())
    }
}

/// Substitutes the language code into the template. Chinese is the target
/// language and is rejected as a source.
pub fn render_prompt(tpl: &PromptTemplate, lang: LanguageTag) -> Result<String, LtpError> {
    if !lang.is_source() {
        return Err(LtpError::TargetLanguageAsSource);
    }
    Ok(tpl.template.replace(LANG_PLACEHOLDER, lang.code()))
}

/// Registered language-identifier tokens, one vocabulary entry per source
/// language (⟨fil⟩, ⟨id⟩, ⟨lo⟩, ⟨my⟩, ⟨vi⟩ by default).
#[derive(Debug, Clone, PartialEq)]
pub struct LangVocab {
    tokens: BTreeMap<LanguageTag, String>,
}

impl Default for LangVocab {
    fn default() -> Self {
        let mut tokens = BTreeMap::new();
        for lang in LanguageTag::SOURCES {
            tokens.insert(lang, format!("\u{27E8}{}\u{27E9}", lang.code()));
        }
        LangVocab { tokens }
    }
}

impl LangVocab {
    /// A vocabulary with no registered languages; useful for tests.
    pub fn empty() -> Self {
        LangVocab {
            tokens: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, lang: LanguageTag, token: String) {
        self.tokens.insert(lang, token);
    }

    pub fn token(&self, lang: LanguageTag) -> Option<&str> {
        self.tokens.get(&lang).map(|s| s.as_str())
    }
}

/// One serialized training record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SftRecord {
    pub lang: LanguageTag,
    pub input_tokens: Vec<String>,
    pub target_tokens: Vec<String>,
}

/// Concatenates `[prompt..., ⟨lang⟩, source...]`. The language token sits
/// immediately after the prompt and immediately before the source.
pub fn build_ltp_input(
    prompt_tokens: &[String],
    lang: LanguageTag,
    source_tokens: &[String],
    vocab: &LangVocab,
) -> Result<Vec<String>, LtpError> {
    if source_tokens.is_empty() {
        return Err(LtpError::EmptySource);
    }
    let lang_token = vocab
        .token(lang)
        .ok_or(LtpError::UnregisteredLanguage(lang))?;
    let mut input = Vec::with_capacity(prompt_tokens.len() + 1 + source_tokens.len());
    input.extend_from_slice(prompt_tokens);
    input.push(lang_token.to_string());
    input.extend_from_slice(source_tokens);
    Ok(input)
}

/// Label-smoothed target distribution: the true class keeps 1 - eps plus
/// its share of the uniform mass, every class gets eps / |V|.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedDistribution {
    pub probs: Vec<f64>,
    pub epsilon: f64,
    pub target_index: usize,
}

pub fn smoothed_target(
    y_star: usize,
    vocab_size: usize,
    eps: f64,
) -> Result<SmoothedDistribution, LtpError> {
    if !(0.0..1.0).contains(&eps) {
        return Err(LtpError::InvalidEpsilon(eps));
    }
    if y_star >= vocab_size {
        return Err(LtpError::IndexOutOfRange {
            index: y_star,
            vocab: vocab_size,
        });
    }
    let uniform = eps / vocab_size as f64;
    let mut probs = vec![uniform; vocab_size];
    probs[y_star] += 1.0 - eps;
    Ok(SmoothedDistribution {
        probs,
        epsilon: eps,
        target_index: y_star,
    })
}

/// Variant that spreads the smoothing mass over the |V| - 1 wrong classes
/// only, leaving exactly 1 - eps on the true class.
pub fn smoothed_target_excl(
    y_star: usize,
    vocab_size: usize,
    eps: f64,
) -> Result<SmoothedDistribution, LtpError> {
    if !(0.0..1.0).contains(&eps) {
        return Err(LtpError::InvalidEpsilon(eps));
    }
    if y_star >= vocab_size {
        return Err(LtpError::IndexOutOfRange {
            index: y_star,
            vocab: vocab_size,
        });
    }
    let spread = if vocab_size > 1 {
        eps / (vocab_size - 1) as f64
    } else {
        0.0
    };
    let mut probs = vec![spread; vocab_size];
    probs[y_star] = 1.0 - eps;
    Ok(SmoothedDistribution {
        probs,
        epsilon: eps,
        target_index: y_star,
    })
}

fn check_distribution(pred: &[f64]) -> Result<(), LtpError> {
    if pred.is_empty() {
        return Err(LtpError::InvalidDistribution("empty prediction".into()));
    }
    if pred.iter().any(|p| !(*p > 0.0) || !p.is_finite()) {
        return Err(LtpError::InvalidDistribution(
            "entries must be strictly positive and finite".into(),
        ));
    }
    let sum: f64 = pred.iter().sum();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(LtpError::InvalidDistribution(format!(
            "probabilities sum to {sum}"
        )));
    }
    Ok(())
}

/// Label-smoothed cross-entropy -sum_k q'(k) log pred(k). With eps = 0 this
/// is exactly the plain cross-entropy of the true class.
pub fn sft_loss(pred: &[f64], y_star: usize, eps: f64) -> Result<f64, LtpError> {
    check_distribution(pred)?;
    let q = smoothed_target(y_star, pred.len(), eps)?;
    Ok(q
        .probs
        .iter()
        .zip(pred)
        .map(|(qk, pk)| -qk * pk.ln())
        .sum())
}

/// Softmax with the usual max-shift for stability.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Gradient of `sft_loss(softmax(logits), y*, eps)` with respect to the
/// logits: softmax(logits) - q'.
pub fn sft_loss_grad(logits: &[f64], y_star: usize, eps: f64) -> Vec<f64> {
    assert!(y_star < logits.len(), "target index out of range");
    let p = softmax(logits);
    let q = smoothed_target(y_star, logits.len(), eps).expect("validated eps and index");
    p.iter().zip(&q.probs).map(|(pk, qk)| pk - qk).collect()
}

/// Negative log-likelihood of a token sequence from per-token logprobs.
pub fn mle_loss(token_logprobs: &[f64]) -> Result<f64, LtpError> {
    for &lp in token_logprobs {
        if lp > 0.0 {
            return Err(LtpError::PositiveLogProb(lp));
        }
    }
    Ok(-token_logprobs.iter().sum::<f64>())
}
