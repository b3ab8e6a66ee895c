//! Language-model quality signals: conditional perplexity and the
//! instruction-following discrepancy, plus the two scorer backends that
//! produce them.
//!
//! Scorers speak one wire contract: a request carries (instruction, optional
//! source, target) and the response returns the summed log-probability of
//! the target tokens together with the token count. A remote HTTP service
//! can serve real model logprobs; the bundled character n-gram model is a
//! deterministic offline stand-in with the same contract, so pipelines run
//! identically against either.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ScoreError {
    #[error("scorer unavailable: {0}")]
    ScorerUnavailable(String),
    #[error("non-finite perplexity for target {0:?}")]
    NonFinite(String),
    #[error("cannot score an empty target")]
    EmptyTarget,
    #[error("cannot train an n-gram model on an empty corpus")]
    EmptyCorpus,
    #[error("n-gram order must be at least 1")]
    InvalidOrder,
    #[error("scorer config: {0}")]
    InvalidConfig(String),
}

/// Scorer parameters: `sigma` scales perplexity into the fluency score,
/// `tau` caps the instruction-following ratio, and the remaining fields
/// configure the remote backend.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ScorerConfig {
    pub sigma: f64,
    pub tau: f64,
    pub endpoint: Option<String>,
    pub timeout_secs: u64,
    pub max_in_flight: usize,
}

impl Default for ScorerConfig {
    fn default() -> Self {
        ScorerConfig {
            sigma: 0.01,
            tau: 2.0,
            endpoint: None,
            timeout_secs: 30,
            max_in_flight: 4,
        }
    }
}

impl ScorerConfig {
    pub fn validate(&self) -> Result<(), ScoreError> {
        if !(self.sigma > 0.0) {
            return Err(ScoreError::InvalidConfig(format!(
                "sigma must be positive, got {}",
                self.sigma
            )));
        }
        if !(self.tau > 1.0) {
            return Err(ScoreError::InvalidConfig(format!(
                "tau must exceed 1, got {}",
                self.tau
            )));
        }
        if self.max_in_flight == 0 {
            return Err(ScoreError::InvalidConfig(
                "max_in_flight must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs(self.timeout_secs)
    }
}

/// One scoring request on the wire: score `target` given `instruction` and
/// `source` as preceding context. `source: null` with an empty instruction
/// asks for the fully unconditional score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub instruction: String,
    pub source: Option<String>,
    pub target: String,
}

impl ScoreRequest {
    pub fn conditional(instruction: &str, source: &str, target: &str) -> Self {
        ScoreRequest {
            instruction: instruction.to_string(),
            source: Some(source.to_string()),
            target: target.to_string(),
        }
    }

    pub fn unconditional(target: &str) -> Self {
        ScoreRequest {
            instruction: String::new(),
            source: None,
            target: target.to_string(),
        }
    }
}

/// The wire response: summed natural-log probability over the target
/// tokens and how many tokens were scored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawScore {
    pub logprob_sum: f64,
    pub token_count: u64,
}

impl RawScore {
    /// Per-token geometric-mean perplexity.
    pub fn perplexity(&self) -> Result<f64, ScoreError> {
        if self.token_count == 0 {
            return Err(ScoreError::EmptyTarget);
        }
        let ppl = (-self.logprob_sum / self.token_count as f64).exp();
        if !ppl.is_finite() || ppl <= 0.0 {
            return Err(ScoreError::NonFinite(format!(
                "logprob_sum={} token_count={}",
                self.logprob_sum, self.token_count
            )));
        }
        Ok(ppl)
    }
}

/// Conditional and unconditional perplexities of one target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LmScore {
    pub ppl_cond: f64,
    pub ppl_uncond: f64,
}

/// Anything that can turn score requests into target logprobs. Both
/// backends keep results in input order.
pub trait LogprobScorer: Sync {
    fn score_batch(&self, requests: &[ScoreRequest]) -> Result<Vec<RawScore>, ScoreError>;
}

/// Fluency score 1 / (1 + sigma * ppl): strictly decreasing in perplexity,
/// bounded in (0, 1).
pub fn s_ppl(ppl_cond: f64, sigma: f64) -> f64 {
    debug_assert!(ppl_cond > 0.0 && sigma > 0.0);
    1.0 / (1.0 + sigma * ppl_cond)
}

/// Context-reliance score min(ppl_uncond / ppl_cond, tau) / tau: saturates
/// at 1 once context cuts perplexity by a factor of tau.
pub fn s_ifd(ppl_uncond: f64, ppl_cond: f64, tau: f64) -> f64 {
    debug_assert!(ppl_uncond > 0.0 && ppl_cond > 0.0 && tau > 1.0);
    (ppl_uncond / ppl_cond).min(tau) / tau
}

/// Scores one pair: the conditional request puts instruction and source in
/// front of the target; the unconditional one scores the bare target.
pub fn score_pair(
    scorer: &dyn LogprobScorer,
    instruction: &str,
    x: &str,
    y: &str,
) -> Result<LmScore, ScoreError> {
    if y.is_empty() {
        return Err(ScoreError::EmptyTarget);
    }
    let raw = scorer.score_batch(&[
        ScoreRequest::conditional(instruction, x, y),
        ScoreRequest::unconditional(y),
    ])?;
    Ok(LmScore {
        ppl_cond: raw[0].perplexity()?,
        ppl_uncond: raw[1].perplexity()?,
    })
}

// ---------------------------------------------------------------------------
// Character n-gram fallback
// ---------------------------------------------------------------------------

/// Add-k smoothed character n-gram model. Characters outside the training
/// alphabet share one unknown bucket, so the per-context distribution always
/// sums to 1 over alphabet + unknown.
#[derive(Debug, Clone)]
pub struct CharNgramModel {
    order: usize,
    smoothing: f64,
    alphabet: HashMap<char, u32>,
    /// One table per context length 0..order; key is the mapped context.
    tables: Vec<HashMap<Vec<u32>, ContextStats>>,
}

#[derive(Debug, Clone, Default)]
struct ContextStats {
    total: u64,
    next: HashMap<u32, u64>,
}

const DEFAULT_SMOOTHING: f64 = 0.1;

/// Trains a character 4-gram model with add-0.1 smoothing; see
/// [`CharNgramModel::train`] for other orders.
pub fn train_char_ngram<S: AsRef<str>>(
    corpus: &[S],
    order: usize,
) -> Result<CharNgramModel, ScoreError> {
    CharNgramModel::train(corpus, order, DEFAULT_SMOOTHING)
}

impl CharNgramModel {
    pub fn train<S: AsRef<str>>(
        corpus: &[S],
        order: usize,
        smoothing: f64,
    ) -> Result<Self, ScoreError> {
        if order == 0 {
            return Err(ScoreError::InvalidOrder);
        }
        if corpus.is_empty() || corpus.iter().all(|s| s.as_ref().is_empty()) {
            return Err(ScoreError::EmptyCorpus);
        }
        let mut alphabet: HashMap<char, u32> = HashMap::new();
        for s in corpus {
            for c in s.as_ref().chars() {
                let next_id = alphabet.len() as u32;
                alphabet.entry(c).or_insert(next_id);
            }
        }
        let mut tables: Vec<HashMap<Vec<u32>, ContextStats>> = vec![HashMap::new(); order];
        for s in corpus {
            let seq: Vec<u32> = s.as_ref().chars().map(|c| alphabet[&c]).collect();
            for t in 0..seq.len() {
                for m in 0..order.min(t + 1) {
                    let stats = tables[m].entry(seq[t - m..t].to_vec()).or_default();
                    stats.total += 1;
                    *stats.next.entry(seq[t]).or_insert(0) += 1;
                }
            }
        }
        Ok(CharNgramModel {
            order,
            smoothing,
            alphabet,
            tables,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Alphabet size including the unknown bucket.
    pub fn vocab_size(&self) -> usize {
        self.alphabet.len() + 1
    }

    fn map_char(&self, c: char) -> u32 {
        // The unknown bucket sits one past the trained alphabet.
        self.alphabet
            .get(&c)
            .copied()
            .unwrap_or(self.alphabet.len() as u32)
    }

    /// p(next | context) with add-k smoothing. The context is truncated to
    /// the model order minus one from the right.
    pub fn prob(&self, context: &[char], next: char) -> f64 {
        let mapped: Vec<u32> = context.iter().map(|&c| self.map_char(c)).collect();
        let m = mapped.len().min(self.order - 1);
        let ctx = &mapped[mapped.len() - m..];
        let v = self.vocab_size() as f64;
        let k = self.smoothing;
        let next = self.map_char(next);
        match self.tables[m].get(ctx) {
            Some(stats) => {
                let count = stats.next.get(&next).copied().unwrap_or(0);
                (count as f64 + k) / (stats.total as f64 + k * v)
            }
            None => 1.0 / v,
        }
    }

    /// Sum of ln p over `sequence[start..]`, each position conditioned on
    /// everything before it (window-limited by the model order).
    pub fn logprob_from(&self, sequence: &[char], start: usize) -> f64 {
        let mut sum = 0.0;
        for t in start..sequence.len() {
            let from = t.saturating_sub(self.order - 1);
            sum += self.prob(&sequence[from..t], sequence[t]).ln();
        }
        sum
    }
}

/// Deterministic offline scorer backed by [`CharNgramModel`]. Conditional
/// requests concatenate instruction, source and target and score the target
/// span; unconditional requests score the bare target.
pub struct CharNgramScorer {
    model: CharNgramModel,
}

impl CharNgramScorer {
    pub fn new(model: CharNgramModel) -> Self {
        CharNgramScorer { model }
    }

    pub fn model(&self) -> &CharNgramModel {
        &self.model
    }

    fn score_one(&self, req: &ScoreRequest) -> Result<RawScore, ScoreError> {
        if req.target.is_empty() {
            return Err(ScoreError::EmptyTarget);
        }
        let mut sequence: Vec<char> = req.instruction.chars().collect();
        if let Some(source) = &req.source {
            sequence.extend(source.chars());
        }
        let start = sequence.len();
        sequence.extend(req.target.chars());
        let logprob_sum = self.model.logprob_from(&sequence, start);
        Ok(RawScore {
            logprob_sum,
            token_count: (sequence.len() - start) as u64,
        })
    }
}

impl LogprobScorer for CharNgramScorer {
    fn score_batch(&self, requests: &[ScoreRequest]) -> Result<Vec<RawScore>, ScoreError> {
        requests.iter().map(|r| self.score_one(r)).collect()
    }
}

// ---------------------------------------------------------------------------
// Remote scorer
// ---------------------------------------------------------------------------

/// How many requests travel in one HTTP array POST.
const REMOTE_CHUNK: usize = 32;

/// HTTP client for a logprob service. Single requests POST one JSON object;
/// batches POST JSON arrays in chunks, with at most `max_in_flight` chunks
/// in flight. Results come back in input order.
pub struct RemoteScorer {
    endpoint: String,
    max_in_flight: usize,
    agent: ureq::Agent,
}

impl RemoteScorer {
    pub fn new(endpoint: &str, timeout: Duration, max_in_flight: usize) -> Self {
        let agent = ureq::Agent::new_with_config(
            ureq::Agent::config_builder()
                .timeout_global(Some(timeout))
                .build(),
        );
        RemoteScorer {
            endpoint: endpoint.to_string(),
            max_in_flight: max_in_flight.max(1),
            agent,
        }
    }

    pub fn from_config(cfg: &ScorerConfig) -> Result<Self, ScoreError> {
        cfg.validate()?;
        let endpoint = cfg.endpoint.as_deref().ok_or_else(|| {
            ScoreError::InvalidConfig("remote scorer needs an endpoint".into())
        })?;
        Ok(RemoteScorer::new(endpoint, cfg.timeout(), cfg.max_in_flight))
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    /// Object form of the wire protocol.
    pub fn score_one(&self, request: &ScoreRequest) -> Result<RawScore, ScoreError> {
        let mut resp = self
            .agent
            .post(&self.endpoint)
            .send_json(request)
            .map_err(|e| ScoreError::ScorerUnavailable(e.to_string()))?;
        resp.body_mut()
            .read_json()
            .map_err(|e| ScoreError::ScorerUnavailable(format!("bad response: {e}")))
    }

    fn score_chunk(&self, chunk: &[ScoreRequest]) -> Result<Vec<RawScore>, ScoreError> {
        let mut resp = self
            .agent
            .post(&self.endpoint)
            .send_json(chunk)
            .map_err(|e| ScoreError::ScorerUnavailable(e.to_string()))?;
        let scores: Vec<RawScore> = resp
            .body_mut()
            .read_json()
            .map_err(|e| ScoreError::ScorerUnavailable(format!("bad response: {e}")))?;
        if scores.len() != chunk.len() {
            return Err(ScoreError::ScorerUnavailable(format!(
                "service returned {} scores for {} requests",
                scores.len(),
                chunk.len()
            )));
        }
        Ok(scores)
    }
}

impl LogprobScorer for RemoteScorer {
    fn score_batch(&self, requests: &[ScoreRequest]) -> Result<Vec<RawScore>, ScoreError> {
        if requests.is_empty() {
            return Ok(Vec::new());
        }
        let chunks: Vec<&[ScoreRequest]> = requests.chunks(REMOTE_CHUNK).collect();
        let results: Vec<Mutex<Option<Result<Vec<RawScore>, ScoreError>>>> =
            chunks.iter().map(|_| Mutex::new(None)).collect();
        let cursor = AtomicUsize::new(0);
        let workers = self.max_in_flight.min(chunks.len());
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let idx = cursor.fetch_add(1, Ordering::Relaxed);
                    if idx >= chunks.len() {
                        break;
                    }
                    let outcome = self.score_chunk(chunks[idx]);
                    *results[idx].lock().unwrap() = Some(outcome);
                });
            }
        });
        let mut scores = Vec::with_capacity(requests.len());
        for slot in results {
            let outcome = slot
                .into_inner()
                .unwrap()
                .expect("every chunk is visited by a worker");
            scores.extend(outcome?);
        }
        Ok(scores)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn s_ppl_known_points() {
        assert_eq!(s_ppl(100.0, 0.01), 0.5);
        assert!((s_ppl(300.0, 0.01) - 0.25).abs() < 1e-12);
        // ppl -> 0+ drives the score toward 1.
        assert!(s_ppl(1e-9, 0.01) > 0.999_999);
    }

    #[test]
    fn s_ifd_known_points() {
        assert_eq!(s_ifd(40.0, 20.0, 2.0), 1.0); // ratio == tau saturates
        assert_eq!(s_ifd(20.0, 20.0, 2.0), 0.5); // ratio == tau/2
        assert!((s_ifd(30.0, 20.0, 2.0) - 0.75).abs() < 1e-12);
        assert_eq!(s_ifd(400.0, 20.0, 2.0), 1.0); // stays capped
    }

    #[test]
    fn ngram_probabilities_sum_to_one() {
        let model = train_char_ngram(&["abab", "abba"], 3).unwrap();
        // Every trained character plus one unknown representative.
        let mut alphabet: Vec<char> = vec!['a', 'b'];
        alphabet.push('?');
        for ctx in [&[][..], &['a'][..], &['a', 'b'][..], &['?', '?'][..]] {
            let total: f64 = alphabet.iter().map(|&c| model.prob(ctx, c)).sum();
            assert!(
                (total - 1.0).abs() < 1e-9,
                "context {ctx:?} sums to {total}"
            );
        }
    }

    #[test]
    fn ngram_add_k_arithmetic() {
        // Unigram model on "ab": p(a) = (1 + 0.1) / (2 + 0.1 * 3).
        let model = CharNgramModel::train(&["ab"], 1, 0.1).unwrap();
        let expected = 1.1 / 2.3;
        assert!((model.prob(&[], 'a') - expected).abs() < 1e-12);
        assert!((model.prob(&[], 'b') - expected).abs() < 1e-12);
        assert!((model.prob(&[], 'z') - 0.1 / 2.3).abs() < 1e-12);
    }

    #[test]
    fn ngram_rejects_empty_corpus() {
        assert!(matches!(
            train_char_ngram::<&str>(&[], 4),
            Err(ScoreError::EmptyCorpus)
        ));
        assert!(matches!(
            train_char_ngram(&[""], 4),
            Err(ScoreError::EmptyCorpus)
        ));
    }

    #[test]
    fn scorer_ppl_on_training_text() {
        // Trained only on "abab" (order 4, add-0.1), scoring y = "abab"
        // unconditionally steps through:
        //   p(a)        = (2+0.1)/(4+0.3)
        //   p(b|a)      = (2+0.1)/(2+0.3)
        //   p(a|ab)     = (1+0.1)/(1+0.3)
        //   p(b|aba)    = (1+0.1)/(1+0.3)
        let probs: [f64; 4] = [2.1 / 4.3, 2.1 / 2.3, 1.1 / 1.3, 1.1 / 1.3];
        let expected = (-probs.iter().map(|p| p.ln()).sum::<f64>() / 4.0).exp();

        let scorer = CharNgramScorer::new(train_char_ngram(&["abab"], 4).unwrap());
        let score = score_pair(&scorer, "", "", "abab").unwrap();
        assert!((score.ppl_uncond - expected).abs() < 1e-9);
        assert!(score.ppl_uncond >= 1.0 && score.ppl_uncond < 2.0);
    }

    #[test]
    fn unseen_context_hits_uniform_bound() {
        // With an unseen context every step costs exactly 1/V, so the
        // perplexity equals the smoothed-uniform bound V = |{a,b}| + 1.
        let scorer = CharNgramScorer::new(train_char_ngram(&["abab"], 4).unwrap());
        let score = score_pair(&scorer, "q", "", "xyz").unwrap();
        assert!((score.ppl_cond - 3.0).abs() < 1e-9);
    }

    #[test]
    fn matching_context_beats_garbage_context() {
        // Context determines the continuation: 'A' is always followed by
        // "xxxx", 'B' by "yyyy".
        let corpus: Vec<String> = std::iter::repeat(["Axxxx".to_string(), "Byyyy".to_string()])
            .take(8)
            .flatten()
            .collect();
        let scorer = CharNgramScorer::new(train_char_ngram(&corpus, 4).unwrap());
        let matching = score_pair(&scorer, "", "A", "xxxx").unwrap();
        let garbage = score_pair(&scorer, "", "B", "xxxx").unwrap();
        assert!(matching.ppl_cond <= garbage.ppl_cond);
    }

    #[test]
    fn empty_target_rejected() {
        let scorer = CharNgramScorer::new(train_char_ngram(&["abab"], 4).unwrap());
        assert!(matches!(
            score_pair(&scorer, "", "", ""),
            Err(ScoreError::EmptyTarget)
        ));
    }

    #[test]
    fn raw_score_guards_non_finite() {
        let bad = RawScore { logprob_sum: f64::NEG_INFINITY, token_count: 3 };
        assert!(matches!(bad.perplexity(), Err(ScoreError::NonFinite(_))));
        let empty = RawScore { logprob_sum: -1.0, token_count: 0 };
        assert!(matches!(empty.perplexity(), Err(ScoreError::EmptyTarget)));
    }

    #[test]
    fn bounds_and_monotonicity_hold_on_random_inputs() {
        // Deterministic LCG sweep; no RNG dependency needed here.
        let mut state = 0x2545F4914F6CDD1Du64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..1000 {
            let ppl = 1e-3 + next() * 2000.0;
            let sigma = 1e-4 + next() * 10.0;
            let tau = 1.0 + 1e-6 + next() * 10.0;
            let uncond = 1e-3 + next() * 2000.0;
            let sp = s_ppl(ppl, sigma);
            let si = s_ifd(uncond, ppl, tau);
            assert!(sp > 0.0 && sp < 1.0);
            assert!(si > 0.0 && si <= 1.0);
            // Monotone: worse (higher) conditional perplexity lowers s_ppl
            // and raises the ratio cap usage.
            assert!(s_ppl(ppl * 1.5, sigma) < sp);
            assert!(s_ifd(uncond * 1.5, ppl, tau) >= si);
        }
    }

    // -----------------------------------------------------------------
    // Remote wire protocol
    // -----------------------------------------------------------------

    /// Minimal one-shot HTTP server: answers `n` POSTs by scoring each
    /// request's target length, mirroring the batch/object duality.
    fn spawn_stub_server(n: usize) -> (String, std::thread::JoinHandle<()>) {
        use std::io::{BufRead, BufReader, Read, Write};

        let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let handle = std::thread::spawn(move || {
            for _ in 0..n {
                let (sock, _) = listener.accept().unwrap();
                let mut reader = BufReader::new(sock);
                let mut content_length = 0usize;
                loop {
                    let mut line = String::new();
                    reader.read_line(&mut line).unwrap();
                    let line = line.trim_end();
                    if line.is_empty() {
                        break;
                    }
                    if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                        content_length = v.trim().parse().unwrap();
                    }
                }
                let mut body = vec![0u8; content_length];
                reader.read_exact(&mut body).unwrap();
                let score = |req: &ScoreRequest| RawScore {
                    logprob_sum: -(req.target.chars().count() as f64),
                    token_count: req.target.chars().count() as u64,
                };
                let reply = if body.first() == Some(&b'[') {
                    let reqs: Vec<ScoreRequest> = serde_json::from_slice(&body).unwrap();
                    serde_json::to_string(&reqs.iter().map(score).collect::<Vec<_>>()).unwrap()
                } else {
                    let req: ScoreRequest = serde_json::from_slice(&body).unwrap();
                    serde_json::to_string(&score(&req)).unwrap()
                };
                let mut sock = reader.into_inner();
                write!(
                    sock,
                    "HTTP/1.1 200 OK\r\ncontent-type: application/json\r\ncontent-length: {}\r\n\r\n{}",
                    reply.len(),
                    reply
                )
                .unwrap();
            }
        });
        (format!("http://{addr}/score"), handle)
    }

    #[test]
    fn remote_object_form() {
        let (url, server) = spawn_stub_server(1);
        let scorer = RemoteScorer::new(&url, Duration::from_secs(5), 2);
        let raw = scorer
            .score_one(&ScoreRequest::unconditional("abcde"))
            .unwrap();
        assert_eq!(raw.token_count, 5);
        assert_eq!(raw.logprob_sum, -5.0);
        server.join().unwrap();
    }

    #[test]
    fn remote_batch_keeps_input_order() {
        // 70 requests = 3 chunks over 2 workers.
        let (url, server) = spawn_stub_server(3);
        let scorer = RemoteScorer::new(&url, Duration::from_secs(5), 2);
        let requests: Vec<ScoreRequest> = (1..=70)
            .map(|i| ScoreRequest::unconditional(&"x".repeat(i)))
            .collect();
        let raw = scorer.score_batch(&requests).unwrap();
        let counts: Vec<u64> = raw.iter().map(|r| r.token_count).collect();
        assert_eq!(counts, (1..=70u64).collect::<Vec<_>>());
        server.join().unwrap();
    }

    #[test]
    fn unreachable_endpoint_reports_unavailable() {
        // Bind then drop to get a port that refuses connections.
        let port = {
            let l = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
            l.local_addr().unwrap().port()
        };
        let scorer = RemoteScorer::new(
            &format!("http://127.0.0.1:{port}/score"),
            Duration::from_millis(400),
            1,
        );
        let err = scorer
            .score_batch(&[ScoreRequest::unconditional("x")])
            .unwrap_err();
        assert!(matches!(err, ScoreError::ScorerUnavailable(_)));
    }

    #[test]
    fn backends_agree_when_logprobs_agree() {
        // Feed the remote path the fallback model's own numbers; the final
        // scores must be bit-identical.
        use std::io::{BufRead, BufReader, Read, Write};

        let model = train_char_ngram(&["你好世界", "世界你好"], 4).unwrap();
        let fallback = CharNgramScorer::new(model.clone());
        let requests = [
            ScoreRequest::conditional("译", "hello", "你好"),
            ScoreRequest::unconditional("你好"),
        ];
        let canned = fallback.score_batch(&requests).unwrap();

        let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let canned_json = serde_json::to_string(&canned).unwrap();
        let server = std::thread::spawn(move || {
            let (sock, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(sock);
            let mut content_length = 0usize;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if line.trim_end().is_empty() {
                    break;
                }
                if let Some(v) = line
                    .trim_end()
                    .to_ascii_lowercase()
                    .strip_prefix("content-length:")
                {
                    content_length = v.trim().parse().unwrap();
                }
            }
            let mut body = vec![0u8; content_length];
            reader.read_exact(&mut body).unwrap();
            let mut sock = reader.into_inner();
            write!(
                sock,
                "HTTP/1.1 200 OK\r\ncontent-type: application/json\r\ncontent-length: {}\r\n\r\n{}",
                canned_json.len(),
                canned_json
            )
            .unwrap();
        });

        let remote = RemoteScorer::new(&format!("http://{addr}/"), Duration::from_secs(5), 1);
        let via_remote = remote.score_batch(&requests).unwrap();
        server.join().unwrap();

        assert_eq!(via_remote, canned);
        let lhs = LmScore {
            ppl_cond: via_remote[0].perplexity().unwrap(),
            ppl_uncond: via_remote[1].perplexity().unwrap(),
        };
        let rhs = LmScore {
            ppl_cond: canned[0].perplexity().unwrap(),
            ppl_uncond: canned[1].perplexity().unwrap(),
        };
        assert_eq!(lhs.ppl_cond.to_bits(), rhs.ppl_cond.to_bits());
        assert_eq!(lhs.ppl_uncond.to_bits(), rhs.ppl_uncond.to_bits());
    }
}
