//! Elite selection over scored sentence pairs: composite scoring, exact
//! top-K retention and the threshold-based alternative, plus the one-call
//! pipeline that takes a raw corpus to its cleaned subset with an audit
//! trail.

use serde::{Deserialize, Serialize};

use crate::corpus::{check_validity, Corpus, SentencePair, ValidityConfig};
use crate::features::{self, BaseScoreConfig, FeatureError};
use crate::lm::{s_ifd, s_ppl, LogprobScorer, ScoreError, ScoreRequest, ScorerConfig};
use crate::ltp::{render_prompt, LtpError, PromptTemplate};

#[derive(Debug, thiserror::Error)]
pub enum SelectError {
    #[error("compose weights must be non-negative and sum to 1 (got sum {sum})")]
    InvalidWeights { sum: f64 },
    #[error("only {valid} valid pairs for K = {k} (strict mode)")]
    InsufficientValidPairs { valid: usize, k: usize },
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error(transparent)]
    Prompt(#[from] LtpError),
}

/// Weights for the composite score alpha * s_base + beta * s_ppl +
/// gamma * s_ifd. The default (0.3, 0.3, 0.4) leans on the semantic
/// signals; [`ComposeWeights::uniform`] gives the plain unweighted sum
/// rescaled to [0, 1].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct ComposeWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for ComposeWeights {
    fn default() -> Self {
        ComposeWeights {
            alpha: 0.3,
            beta: 0.3,
            gamma: 0.4,
        }
    }
}

impl ComposeWeights {
    /// Equal thirds: equivalent (up to scale) to summing the three scores.
    pub fn uniform() -> Self {
        ComposeWeights {
            alpha: 1.0 / 3.0,
            beta: 1.0 / 3.0,
            gamma: 1.0 / 3.0,
        }
    }

    pub fn validate(&self) -> Result<(), SelectError> {
        let sum = self.alpha + self.beta + self.gamma;
        if self.alpha < 0.0 || self.beta < 0.0 || self.gamma < 0.0 || (sum - 1.0).abs() > 1e-9 {
            return Err(SelectError::InvalidWeights { sum });
        }
        Ok(())
    }
}

/// A sentence pair with its component scores and composite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredPair {
    #[serde(flatten)]
    pub pair: SentencePair,
    pub s_base: f64,
    pub s_ppl: f64,
    pub s_ifd: f64,
    pub s_final: f64,
}

/// alpha * s_base + beta * s_ppl + gamma * s_ifd, in [0, 1] for inputs in
/// [0, 1].
pub fn final_score(
    s_base: f64,
    s_ppl: f64,
    s_ifd: f64,
    weights: &ComposeWeights,
) -> Result<f64, SelectError> {
    weights.validate()?;
    Ok(weights.alpha * s_base + weights.beta * s_ppl + weights.gamma * s_ifd)
}

fn rank_order(a: &ScoredPair, b: &ScoredPair) -> std::cmp::Ordering {
    b.s_final
        .total_cmp(&a.s_final)
        .then_with(|| a.pair.id.cmp(&b.pair.id))
}

/// The K highest-scoring pairs, sorted descending by composite score with
/// ties broken by ascending id. K at or beyond the input size returns the
/// whole input, sorted.
pub fn select_top_k(mut scored: Vec<ScoredPair>, k: usize) -> Vec<ScoredPair> {
    scored.sort_by(rank_order);
    scored.truncate(k);
    scored
}

/// Threshold view of the same ranking: pairs whose composite score exceeds
/// `theta`, in rank order.
pub fn select_above(mut scored: Vec<ScoredPair>, theta: f64) -> Vec<ScoredPair> {
    scored.retain(|sp| sp.s_final > theta);
    scored.sort_by(rank_order);
    scored
}

/// Per-pair audit line: either a rank (selected) or a drop reason, with
/// whatever scores were computed before the pair left the pipeline.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AuditRecord {
    pub id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rank: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dropped_reason: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s_base: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s_ppl: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s_ifd: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s_final: Option<f64>,
}

impl AuditRecord {
    pub fn dropped(id: &str, reason: &str) -> Self {
        AuditRecord {
            id: id.to_string(),
            rank: None,
            dropped_reason: Some(reason.to_string()),
            s_base: None,
            s_ppl: None,
            s_ifd: None,
            s_final: None,
        }
    }

    pub fn scored(sp: &ScoredPair, rank: Option<usize>, reason: Option<&str>) -> Self {
        AuditRecord {
            id: sp.pair.id.clone(),
            rank,
            dropped_reason: reason.map(str::to_string),
            s_base: Some(sp.s_base),
            s_ppl: Some(sp.s_ppl),
            s_ifd: Some(sp.s_ifd),
            s_final: Some(sp.s_final),
        }
    }
}

/// Everything the sampler needs: validity gate, feature weights, scorer
/// scaling, compose weights, the instruction template, the retention size
/// and whether a shortfall aborts.
#[derive(Debug, Clone)]
pub struct EpdsConfig {
    pub validity: ValidityConfig,
    pub base: BaseScoreConfig,
    pub scorer: ScorerConfig,
    pub compose: ComposeWeights,
    pub prompt: PromptTemplate,
    pub k: usize,
    pub strict: bool,
}

impl Default for EpdsConfig {
    fn default() -> Self {
        EpdsConfig {
            validity: ValidityConfig::default(),
            base: BaseScoreConfig::default(),
            scorer: ScorerConfig::default(),
            compose: ComposeWeights::default(),
            prompt: PromptTemplate::default(),
            k: 0,
            strict: false,
        }
    }
}

/// Result of a sampler run: the retained corpus, one audit line per input
/// pair, and a shortfall flag set when fewer than K pairs survived the
/// validity gate in non-strict mode.
#[derive(Debug, Clone)]
pub struct EpdsOutcome {
    pub selected: Corpus,
    pub audit: Vec<AuditRecord>,
    pub shortfall: bool,
}

/// Scores every valid pair of a corpus. Returns the scored pairs plus audit
/// lines for the pairs the validity gate dropped.
pub fn score_corpus(
    corpus: &Corpus,
    cfg: &EpdsConfig,
    scorer: &dyn LogprobScorer,
) -> Result<(Vec<ScoredPair>, Vec<AuditRecord>), SelectError> {
    cfg.compose.validate()?;
    cfg.base.validate()?;
    let instruction = render_prompt(&cfg.prompt, corpus.source_lang)?;

    let mut dropped = Vec::new();
    let mut valid: Vec<&SentencePair> = Vec::new();
    for pair in &corpus.pairs {
        match check_validity(pair, &cfg.validity).reason() {
            Some(reason) => dropped.push(AuditRecord::dropped(&pair.id, reason)),
            None => valid.push(pair),
        }
    }

    let requests: Vec<ScoreRequest> = valid
        .iter()
        .flat_map(|pair| {
            [
                ScoreRequest::conditional(&instruction, &pair.source_text, &pair.target_text),
                ScoreRequest::unconditional(&pair.target_text),
            ]
        })
        .collect();
    let raw = scorer.score_batch(&requests)?;

    let mut scored = Vec::with_capacity(valid.len());
    for (i, pair) in valid.iter().enumerate() {
        let fv = features::extract(&pair.source_text, &pair.target_text)?;
        let s_base = features::base_score(&fv, &cfg.base)?;
        let ppl_cond = raw[2 * i].perplexity()?;
        let ppl_uncond = raw[2 * i + 1].perplexity()?;
        let sp = s_ppl(ppl_cond, cfg.scorer.sigma);
        let si = s_ifd(ppl_uncond, ppl_cond, cfg.scorer.tau);
        let s_final = final_score(s_base, sp, si, &cfg.compose)?;
        scored.push(ScoredPair {
            pair: (*pair).clone(),
            s_base,
            s_ppl: sp,
            s_ifd: si,
            s_final,
        });
    }
    Ok((scored, dropped))
}

/// Runs the whole sampler: validity gate, base features, LM scores,
/// composition and exact top-K retention. Fewer valid pairs than K returns
/// all survivors with the shortfall flag (or errors in strict mode).
pub fn run_epds(
    corpus: &Corpus,
    cfg: &EpdsConfig,
    scorer: &dyn LogprobScorer,
) -> Result<EpdsOutcome, SelectError> {
    let (scored, mut audit) = score_corpus(corpus, cfg, scorer)?;

    let shortfall = scored.len() < cfg.k;
    if shortfall && cfg.strict {
        return Err(SelectError::InsufficientValidPairs {
            valid: scored.len(),
            k: cfg.k,
        });
    }

    let selected = select_top_k(scored.clone(), cfg.k);
    let cutoff = selected.len();
    let mut ranked = scored;
    ranked.sort_by(rank_order);
    for (idx, sp) in ranked.iter().enumerate() {
        if idx < cutoff {
            audit.push(AuditRecord::scored(sp, Some(idx + 1), None));
        } else {
            audit.push(AuditRecord::scored(sp, None, Some("below_cutoff")));
        }
    }

    let pairs = selected.into_iter().map(|sp| sp.pair).collect();
    let selected = Corpus::from_pairs(corpus.source_lang, pairs)
        .expect("selection preserves corpus invariants");
    Ok(EpdsOutcome {
        selected,
        audit,
        shortfall,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::LanguageTag;
    use crate::lm::{train_char_ngram, CharNgramScorer};

    fn sp(id: &str, s_final: f64) -> ScoredPair {
        ScoredPair {
            pair: SentencePair::new(
                id.to_string(),
                LanguageTag::Vi,
                format!("src {id}"),
                format!("tgt {id}"),
                String::new(),
            )
            .unwrap(),
            s_base: s_final,
            s_ppl: s_final,
            s_ifd: s_final,
            s_final,
        }
    }

    #[test]
    fn final_score_known_points() {
        let w = ComposeWeights::default();
        assert!((final_score(1.0, 1.0, 1.0, &w).unwrap() - 1.0).abs() < 1e-12);
        assert!((final_score(0.5, 0.5, 0.5, &w).unwrap() - 0.5).abs() < 1e-12);
        // 0.3*0.8 + 0.3*0.6 + 0.4*0.5 = 0.62
        assert!((final_score(0.8, 0.6, 0.5, &w).unwrap() - 0.62).abs() < 1e-12);
    }

    #[test]
    fn final_score_rejects_bad_weights() {
        let w = ComposeWeights { alpha: 0.5, beta: 0.5, gamma: 0.5 };
        assert!(matches!(
            final_score(1.0, 1.0, 1.0, &w),
            Err(SelectError::InvalidWeights { .. })
        ));
    }

    #[test]
    fn uniform_weights_match_unweighted_sum() {
        let w = ComposeWeights::uniform();
        let s = final_score(0.9, 0.3, 0.6, &w).unwrap();
        assert!((s - (0.9 + 0.3 + 0.6) / 3.0).abs() < 1e-12);
    }

    #[test]
    fn top_k_edges() {
        let scored = vec![sp("a", 0.1), sp("b", 0.9), sp("c", 0.5)];
        assert!(select_top_k(scored.clone(), 0).is_empty());
        let all = select_top_k(scored.clone(), 10);
        let ids: Vec<&str> = all.iter().map(|s| s.pair.id.as_str()).collect();
        assert_eq!(ids, ["b", "c", "a"]);
    }

    #[test]
    fn top_k_breaks_ties_by_ascending_id() {
        let scored = vec![sp("z", 0.5), sp("a", 0.5), sp("m", 0.5), sp("b", 0.9)];
        let picked = select_top_k(scored, 3);
        let ids: Vec<&str> = picked.iter().map(|s| s.pair.id.as_str()).collect();
        assert_eq!(ids, ["b", "a", "m"]);
    }

    #[test]
    fn top_k_matches_brute_force_oracle() {
        // Independent oracle: repeated maximum extraction.
        fn oracle(mut pool: Vec<ScoredPair>, k: usize) -> Vec<ScoredPair> {
            let mut out = Vec::new();
            while out.len() < k && !pool.is_empty() {
                let mut best = 0;
                for i in 1..pool.len() {
                    let better = pool[i].s_final > pool[best].s_final
                        || (pool[i].s_final == pool[best].s_final
                            && pool[i].pair.id < pool[best].pair.id);
                    if better {
                        best = i;
                    }
                }
                out.push(pool.swap_remove(best));
            }
            out
        }

        let mut state = 0xABCDEF12345u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        for _ in 0..50 {
            let n = (next() % 200 + 1) as usize;
            let pool: Vec<ScoredPair> = (0..n)
                .map(|i| {
                    // Coarse scores force plenty of ties.
                    let s = (next() % 10) as f64 / 10.0;
                    sp(&format!("id{i:04}"), s)
                })
                .collect();
            let k = (next() % (n as u64 + 4)) as usize;
            let got = select_top_k(pool.clone(), k);
            let want = oracle(pool, k);
            assert_eq!(
                got.iter().map(|s| s.pair.id.as_str()).collect::<Vec<_>>(),
                want.iter().map(|s| s.pair.id.as_str()).collect::<Vec<_>>()
            );
        }
    }

    #[test]
    fn select_above_uses_strict_threshold() {
        let scored = vec![sp("a", 0.5), sp("b", 0.7), sp("c", 0.5001)];
        let kept = select_above(scored, 0.5);
        let ids: Vec<&str> = kept.iter().map(|s| s.pair.id.as_str()).collect();
        assert_eq!(ids, ["b", "c"]);
    }

    fn tiny_corpus() -> Corpus {
        let pairs = vec![
            ("p1", "xin chào thế giới hôm nay", "你好世界今天天气很好"),
            ("p2", "một hai ba bốn năm", "一二三四五六"),
            ("p3", "trời mưa to quá", "雨下得很大"),
            ("p4", "x", &"过长".repeat(60) as &str), // length-ratio reject
            ("p5", "", "空的"),                      // empty reject
        ]
        .into_iter()
        .map(|(id, s, t)| {
            SentencePair::new(
                id.to_string(),
                LanguageTag::Vi,
                s.to_string(),
                t.to_string(),
                String::new(),
            )
            .unwrap()
        })
        .collect();
        Corpus::from_pairs(LanguageTag::Vi, pairs).unwrap()
    }

    fn tiny_scorer(corpus: &Corpus) -> CharNgramScorer {
        let texts: Vec<String> = corpus
            .pairs
            .iter()
            .map(|p| format!("{}{}", p.source_text, p.target_text))
            .collect();
        CharNgramScorer::new(train_char_ngram(&texts, 4).unwrap())
    }

    #[test]
    fn epds_selects_k_and_audits_the_rest() {
        let corpus = tiny_corpus();
        let cfg = EpdsConfig { k: 2, ..EpdsConfig::default() };
        let outcome = run_epds(&corpus, &cfg, &tiny_scorer(&corpus)).unwrap();
        assert_eq!(outcome.selected.len(), 2);
        assert!(!outcome.shortfall);
        assert_eq!(outcome.audit.len(), corpus.len());
        let drops: Vec<&str> = outcome
            .audit
            .iter()
            .filter_map(|a| a.dropped_reason.as_deref())
            .collect();
        assert!(drops.contains(&"empty_side"));
        assert!(drops.contains(&"length_ratio"));
        assert!(drops.contains(&"below_cutoff"));
        // Ranks are contiguous from 1.
        let mut ranks: Vec<usize> = outcome.audit.iter().filter_map(|a| a.rank).collect();
        ranks.sort_unstable();
        assert_eq!(ranks, vec![1, 2]);
    }

    #[test]
    fn epds_composite_is_rederivable() {
        let corpus = tiny_corpus();
        let cfg = EpdsConfig { k: 3, ..EpdsConfig::default() };
        let (scored, _) = score_corpus(&corpus, &cfg, &tiny_scorer(&corpus)).unwrap();
        for sp in &scored {
            let re = final_score(sp.s_base, sp.s_ppl, sp.s_ifd, &cfg.compose).unwrap();
            assert!((re - sp.s_final).abs() < 1e-12);
            assert!((0.0..=1.0).contains(&sp.s_final));
        }
    }

    #[test]
    fn epds_all_invalid_yields_empty_output_with_audit() {
        let pairs = vec![SentencePair::new(
            "only".into(),
            LanguageTag::Vi,
            "".into(),
            "目标".into(),
            String::new(),
        )
        .unwrap()];
        let corpus = Corpus::from_pairs(LanguageTag::Vi, pairs).unwrap();
        // The scorer never sees a request, so train it on anything.
        let scorer = CharNgramScorer::new(train_char_ngram(&["x"], 2).unwrap());
        let cfg = EpdsConfig { k: 5, ..EpdsConfig::default() };
        let outcome = run_epds(&corpus, &cfg, &scorer).unwrap();
        assert!(outcome.selected.is_empty());
        assert!(outcome.shortfall);
        assert_eq!(outcome.audit.len(), 1);
        assert_eq!(outcome.audit[0].dropped_reason.as_deref(), Some("empty_side"));
    }

    #[test]
    fn epds_strict_mode_errors_on_shortfall() {
        let corpus = tiny_corpus();
        let cfg = EpdsConfig { k: 100, strict: true, ..EpdsConfig::default() };
        let err = run_epds(&corpus, &cfg, &tiny_scorer(&corpus)).unwrap_err();
        assert!(matches!(err, SelectError::InsufficientValidPairs { valid: 3, k: 100 }));
    }

    #[test]
    fn raising_a_selected_pairs_score_never_evicts_it() {
        let mut scored = vec![sp("a", 0.9), sp("b", 0.6), sp("c", 0.3), sp("d", 0.2)];
        let k = 2;
        let before: Vec<String> = select_top_k(scored.clone(), k)
            .iter()
            .map(|s| s.pair.id.clone())
            .collect();
        scored[0].s_final = 0.95; // raise an already-selected pair
        let after: Vec<String> = select_top_k(scored.clone(), k)
            .iter()
            .map(|s| s.pair.id.clone())
            .collect();
        assert!(after.contains(&before[0]));
        // And raising a rejected pair above the cutoff admits it.
        scored[3].s_final = 0.99;
        let admitted = select_top_k(scored, k);
        assert!(admitted.iter().any(|s| s.pair.id == "d"));
    }
}
