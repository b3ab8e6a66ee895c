//! Surface-alignment features for a sentence pair and their weighted base
//! score.
//!
//! Five signals flag superficially misaligned bitext: character-length
//! ratio, token-count ratio, punctuation-ratio divergence, digit-proportion
//! divergence, and type-token-ratio divergence. Each lands in [0, 1]; the
//! base score orients them (higher = cleaner) and combines them with
//! normalized weights.

use serde::{Deserialize, Serialize};
use unicode_properties::{GeneralCategory, GeneralCategoryGroup, UnicodeGeneralCategory};

use crate::tokenize::mixed_tokens;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum FeatureError {
    #[error("feature requires non-empty text on both sides")]
    EmptyText,
    #[error("weights must be non-negative and sum to 1 (got sum {sum})")]
    InvalidWeights { sum: f64 },
}

/// The five statistical features of one pair. Ratios live in (0, 1],
/// divergences in [0, 1]; all are symmetric in (source, target).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub r_len: f64,
    pub r_tok: f64,
    pub d_punct: f64,
    pub d_digit: f64,
    pub d_uniq: f64,
}

/// Weights for the base score, one per feature. They must sum to 1.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct BaseScoreConfig {
    pub w_len: f64,
    pub w_tok: f64,
    pub w_punct: f64,
    pub w_digit: f64,
    pub w_uniq: f64,
}

impl Default for BaseScoreConfig {
    fn default() -> Self {
        BaseScoreConfig {
            w_len: 0.2,
            w_tok: 0.2,
            w_punct: 0.2,
            w_digit: 0.2,
            w_uniq: 0.2,
        }
    }
}

impl BaseScoreConfig {
    pub fn validate(&self) -> Result<(), FeatureError> {
        let ws = [self.w_len, self.w_tok, self.w_punct, self.w_digit, self.w_uniq];
        let sum: f64 = ws.iter().sum();
        if ws.iter().any(|w| *w < 0.0) || (sum - 1.0).abs() > 1e-9 {
            return Err(FeatureError::InvalidWeights { sum });
        }
        Ok(())
    }
}

fn char_count(s: &str) -> usize {
    s.chars().count()
}

fn is_punct(c: char) -> bool {
    c.general_category_group() == GeneralCategoryGroup::Punctuation
        || ('\u{3000}'..='\u{303F}').contains(&c)
}

fn is_digit(c: char) -> bool {
    c.general_category() == GeneralCategory::DecimalNumber
}

fn class_ratio(s: &str, class: fn(char) -> bool) -> f64 {
    let mut total = 0usize;
    let mut hits = 0usize;
    for c in s.chars() {
        total += 1;
        if class(c) {
            hits += 1;
        }
    }
    if total == 0 {
        0.0
    } else {
        hits as f64 / total as f64
    }
}

/// min(|y|/|x|, |x|/|y|) over character counts; 1.0 means equal lengths.
pub fn length_ratio(x: &str, y: &str) -> Result<f64, FeatureError> {
    let a = char_count(x);
    let b = char_count(y);
    if a == 0 || b == 0 {
        return Err(FeatureError::EmptyText);
    }
    let (a, b) = (a as f64, b as f64);
    Ok((a / b).min(b / a))
}

/// Same min-ratio on token counts under the script-aware tokenizer.
pub fn token_ratio(x: &str, y: &str) -> Result<f64, FeatureError> {
    let a = mixed_tokens(x).len();
    let b = mixed_tokens(y).len();
    if a == 0 || b == 0 {
        return Err(FeatureError::EmptyText);
    }
    let (a, b) = (a as f64, b as f64);
    Ok((a / b).min(b / a))
}

/// Absolute difference of punctuation-character proportions. Punctuation is
/// Unicode general category P plus the CJK symbols-and-punctuation block.
/// Total on an empty string is taken as ratio 0.
pub fn punct_divergence(x: &str, y: &str) -> f64 {
    (class_ratio(x, is_punct) - class_ratio(y, is_punct)).abs()
}

/// Absolute difference of decimal-digit (Nd) proportions.
pub fn digit_divergence(x: &str, y: &str) -> f64 {
    (class_ratio(x, is_digit) - class_ratio(y, is_digit)).abs()
}

/// Absolute difference of type-token ratios (unique / total tokens).
pub fn lexical_diversity_diff(x: &str, y: &str) -> Result<f64, FeatureError> {
    Ok((type_token_ratio(x)? - type_token_ratio(y)?).abs())
}

fn type_token_ratio(s: &str) -> Result<f64, FeatureError> {
    let tokens = mixed_tokens(s);
    if tokens.is_empty() {
        return Err(FeatureError::EmptyText);
    }
    let unique: std::collections::HashSet<&str> = tokens.iter().copied().collect();
    Ok(unique.len() as f64 / tokens.len() as f64)
}

/// Extracts all five features at once.
pub fn extract(x: &str, y: &str) -> Result<FeatureVector, FeatureError> {
    Ok(FeatureVector {
        r_len: length_ratio(x, y)?,
        r_tok: token_ratio(x, y)?,
        d_punct: punct_divergence(x, y),
        d_digit: digit_divergence(x, y),
        d_uniq: lexical_diversity_diff(x, y)?,
    })
}

/// Weighted base score in [0, 1]. Ratios enter as-is; divergences are
/// oriented with 1 - d so that higher always means cleaner.
pub fn base_score(fv: &FeatureVector, cfg: &BaseScoreConfig) -> Result<f64, FeatureError> {
    cfg.validate()?;
    Ok(cfg.w_len * fv.r_len
        + cfg.w_tok * fv.r_tok
        + cfg.w_punct * (1.0 - fv.d_punct)
        + cfg.w_digit * (1.0 - fv.d_digit)
        + cfg.w_uniq * (1.0 - fv.d_uniq))
}

/// One line of the feature dump.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureRecord {
    pub id: String,
    pub r_len: f64,
    pub r_tok: f64,
    pub d_punct: f64,
    pub d_digit: f64,
    pub d_uniq: f64,
    pub s_base: f64,
}
