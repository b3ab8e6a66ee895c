//! Stepwise alignment reward for quality-estimation outputs, plus
//! group-relative normalization.
//!
//! A judge model emits a free-text evaluation log; a regex pulls every
//! integer score it mentions, the conservative extractor keeps the minimum
//! (so hedging with a lower number is never rewarded), and the reward
//! compares that value with the expert score: exact match earns 2.0, within
//! the tolerance band 1.0, anything else (including an unparseable log) 0.0.

use std::collections::BTreeSet;

use regex::Regex;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum SarError {
    #[error("invalid score pattern: {0}")]
    InvalidPattern(String),
    #[error("expert score {score} outside [{min}, {max}]")]
    InvalidExpertScore { score: i64, min: i64, max: i64 },
    #[error("group normalization needs at least 2 rewards, got {0}")]
    GroupTooSmall(usize),
}

/// Sentinel for "no parseable score in the log".
pub const NO_SCORE: i64 = -1;

/// A judge's free-text evaluation of one translation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalLog {
    pub text: String,
}

impl EvalLog {
    pub fn new(text: impl Into<String>) -> Self {
        EvalLog { text: text.into() }
    }
}

/// Extraction pattern, score bounds, tolerance band and reward levels.
///
/// The default pattern captures integers that follow a "score" cue
/// (case-insensitive, optional punctuation). Permissive mode widens the net
/// to any standalone integer; the score bounds still apply either way.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SarConfig {
    pub pattern: String,
    pub permissive: bool,
    pub score_min: i64,
    pub score_max: i64,
    pub tolerance: i64,
    pub reward_exact: f64,
    pub reward_partial: f64,
}

pub const DEFAULT_PATTERN: &str = r"(?i)score\s*(?:is|was|of)?\s*[:：=]?\s*(\d+)";
pub const PERMISSIVE_PATTERN: &str = r"\b(\d+)\b";

impl Default for SarConfig {
    fn default() -> Self {
        SarConfig {
            pattern: DEFAULT_PATTERN.to_string(),
            permissive: false,
            score_min: 0,
            score_max: 100,
            tolerance: 10,
            reward_exact: 2.0,
            reward_partial: 1.0,
        }
    }
}

impl SarConfig {
    fn compiled(&self) -> Result<Regex, SarError> {
        let pattern = if self.permissive {
            PERMISSIVE_PATTERN
        } else {
            self.pattern.as_str()
        };
        Regex::new(pattern).map_err(|e| SarError::InvalidPattern(e.to_string()))
    }
}

/// All distinct in-range integers the pattern finds in the log. Out-of-range
/// integers are excluded, not clamped.
pub fn extract_scores(log: &EvalLog, cfg: &SarConfig) -> Result<BTreeSet<i64>, SarError> {
    let re = cfg.compiled()?;
    let mut scores = BTreeSet::new();
    for caps in re.captures_iter(&log.text) {
        let m = caps.get(1).unwrap_or_else(|| caps.get(0).expect("match"));
        if let Ok(value) = m.as_str().parse::<i64>() {
            if (cfg.score_min..=cfg.score_max).contains(&value) {
                scores.insert(value);
            }
        }
    }
    Ok(scores)
}

/// Minimum matched score, or [`NO_SCORE`] when the log yields nothing. The
/// minimum penalizes logs that hedge with conflicting lower scores.
pub fn conservative_extract(log: &EvalLog, cfg: &SarConfig) -> Result<i64, SarError> {
    Ok(extract_scores(log, cfg)?
        .first()
        .copied()
        .unwrap_or(NO_SCORE))
}

/// Stepwise reward on the absolute deviation d = |s - a|: the exact level
/// at d = 0, the partial level for 1 <= d <= tolerance, 0.0 otherwise.
/// A negative (unparseable) extraction always earns 0.0.
pub fn sar_reward(s: i64, a: i64, cfg: &SarConfig) -> Result<f64, SarError> {
    if !(cfg.score_min..=cfg.score_max).contains(&a) {
        return Err(SarError::InvalidExpertScore {
            score: a,
            min: cfg.score_min,
            max: cfg.score_max,
        });
    }
    if s < 0 {
        return Ok(0.0);
    }
    let d = (s - a).abs();
    Ok(if d == 0 {
        cfg.reward_exact
    } else if d <= cfg.tolerance {
        cfg.reward_partial
    } else {
        0.0
    })
}

/// One fully processed judgement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardRecord {
    pub extracted: i64,
    pub expert: i64,
    pub reward: f64,
}

/// Extract-then-reward in one step.
pub fn judge(log: &EvalLog, expert: i64, cfg: &SarConfig) -> Result<RewardRecord, SarError> {
    let extracted = conservative_extract(log, cfg)?;
    let reward = sar_reward(extracted, expert, cfg)?;
    Ok(RewardRecord { extracted, expert, reward })
}

const NORM_EPSILON: f64 = 1e-8;

/// Group-relative advantages: (r - mean) / (population std + 1e-8). A
/// zero-variance group maps to all zeros; groups smaller than 2 are
/// rejected.
pub fn group_normalize(rewards: &[f64]) -> Result<Vec<f64>, SarError> {
    if rewards.len() < 2 {
        return Err(SarError::GroupTooSmall(rewards.len()));
    }
    let n = rewards.len() as f64;
    let mean = rewards.iter().sum::<f64>() / n;
    let var = rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
    let denom = var.sqrt() + NORM_EPSILON;
    Ok(rewards.iter().map(|r| (r - mean) / denom).collect())
}
