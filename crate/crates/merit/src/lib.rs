//! merit: corpus curation and evaluation for low-resource machine
//! translation into Chinese.
//!
//! The library covers the whole data path from noisy bitext to training
//! records and evaluation tables:
//!
//! - **[`corpus`]** — sentence-pair types, ALT-style TSV ingestion,
//!   re-alignment of two record sets by shared sentence id, and the hard
//!   validity gate.
//! - **[`features`]** — five statistical alignment features and their
//!   weighted base score.
//! - **[`lm`]** — conditional-perplexity and instruction-following scores,
//!   served by a remote logprob service or the bundled deterministic
//!   character n-gram model.
//! - **[`select`]** — composite scoring and exact top-K (or threshold)
//!   retention with a full audit trail.
//! - **[`split`]** — exact-size, domain-preserving train/dev/test splits
//!   with integrity compensation and seeded, platform-stable sampling.
//! - **[`sar`]** — stepwise rewards for judge outputs and group-relative
//!   advantage normalization.
//! - **[`metrics`]** — BLEU-4, chrF, ROUGE-L, their composite mean and a
//!   Spearman utility, from scratch.
//! - **[`ltp`]** — language-token-prefixed input assembly and reference
//!   training objectives with analytic gradients.
//! - **[`cli`]** — the `merit` binary: one subcommand per stage, atomic
//!   JSONL outputs with embedded manifests.
//!
//! ## Runnable examples
//!
//! One example per capability, under `examples/`:
//!
//! ```bash
//! cargo run -p merit --example align_corpus        # TSV -> aligned corpus
//! cargo run -p merit --example feature_scores      # statistical features
//! cargo run -p merit --example lm_scores           # perplexity signals
//! cargo run -p merit --example elite_selection     # top-K data selection
//! cargo run -p merit --example integrity_split     # exact-size splits
//! cargo run -p merit --example sar_rewards         # judge-score rewards
//! cargo run -p merit --example ltp_records         # training records
//! cargo run -p merit --example translation_metrics # BLEU/chrF/ROUGE-L
//! cargo run -p merit --example full_pipeline       # everything end to end
//! ```
//!
//! The same flows are available as `merit <subcommand>`; see the README.

pub mod cli;
pub mod config;
pub mod corpus;
pub mod features;
pub mod io;
pub mod lm;
pub mod ltp;
pub mod metrics;
pub mod report;
pub mod sar;
pub mod select;
pub mod split;
mod tokenize;

pub use config::PipelineConfig;
pub use corpus::{Corpus, LanguageTag, SentencePair, ValidityConfig};
pub use features::{BaseScoreConfig, FeatureVector};
pub use lm::{CharNgramModel, CharNgramScorer, LmScore, LogprobScorer, RemoteScorer, ScorerConfig};
pub use ltp::{PromptTemplate, SftRecord};
pub use metrics::{MetricReport, TokenSequence};
pub use sar::{EvalLog, RewardRecord, SarConfig};
pub use select::{ComposeWeights, EpdsConfig, ScoredPair};
pub use split::{SplitResult, SplitSpec};
