//! Seed-guided LDA.
//!
//! Collapsed Gibbs sampling where the first `seeds.len()` topics are bound to
//! seed sets. Binding is expressed purely through an asymmetric topic-word
//! prior: a seed word of the set bound to topic `k` gets `beta * boost`
//! instead of `beta` in that topic, so the sampling weight of topic `k` for
//! word `w` in document `d` is
//!
//! ```text
//! (n[d][k] + alpha) * (n[k][w] + beta'[k][w]) / (n[k] + sum_v beta'[k][v])
//! ```
//!
//! Documents are processed in `doc_id` order regardless of input order, and a
//! single ChaCha stream seeded from `rng_seed` drives every draw, so a fit is
//! a pure function of (document set, seeds, config).

mod model;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

pub use model::{ModelFile, MODEL_FORMAT, MODEL_VERSION};

use crate::corpus::TokenizedDoc;
use crate::hitl::KeywordLexicon;
use crate::labels::CoiLink;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TopicError {
    #[error("cannot fit a topic model on an empty corpus")]
    EmptyCorpus,
    #[error("{topics} topics cannot host {seed_sets} seed sets")]
    TooFewTopics { topics: usize, seed_sets: usize },
    #[error("invalid LDA configuration: {0}")]
    InvalidConfig(String),
    #[error("document `{0}` appears twice")]
    DuplicateDoc(String),
    #[error("word `{word}` is seeded in both {first} and {second}")]
    SharedSeed { word: String, first: CoiLink, second: CoiLink },
    #[error("topic {topic} out of range (model has {topics})")]
    TopicOutOfRange { topic: usize, topics: usize },
    #[error("count matrices disagree with assignments: {0}")]
    CountMismatch(String),
    #[error("invalid model file: {0}")]
    Format(String),
}

/// One chain-of-infection link and its words.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedSet {
    pub set_id: CoiLink,
    pub words: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaConfig {
    pub topics: usize,
    pub alpha: f64,
    pub beta: f64,
    pub boost: f64,
    pub iterations: usize,
    pub rng_seed: u64,
    /// Record the word log-likelihood every this many sweeps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_every: Option<usize>,
}

impl Default for LdaConfig {
    /// Six seeded topics plus six free ones, with the usual `50/K` and `0.01` priors.
    fn default() -> Self {
        LdaConfig::with_topics(12)
    }
}

impl LdaConfig {
    pub fn with_topics(topics: usize) -> Self {
        LdaConfig {
            topics,
            alpha: 50.0 / topics.max(1) as f64,
            beta: 0.01,
            boost: 50.0,
            iterations: 500,
            rng_seed: 42,
            trace_every: None,
        }
    }

    pub fn validate(&self, seed_sets: usize) -> Result<(), TopicError> {
        let bad = |m: &str| Err(TopicError::InvalidConfig(m.to_string()));
        if self.topics == 0 {
            return bad("topic count must be positive");
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad("alpha must be positive");
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad("beta must be positive");
        }
        if !(self.boost >= 1.0 && self.boost.is_finite()) {
            return bad("boost must be at least 1");
        }
        if self.iterations == 0 {
            return bad("at least one sweep is required");
        }
        if self.topics < seed_sets {
            return Err(TopicError::TooFewTopics { topics: self.topics, seed_sets });
        }
        Ok(())
    }
}

/// Config file shape: any omitted field takes its default, and `alpha`
/// defaults to `50 / topics` for whatever topic count is chosen.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LdaConfigFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub topics: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boost: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rng_seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace_every: Option<usize>,
}

impl LdaConfigFile {
    pub fn resolve(self) -> LdaConfig {
        let mut c = LdaConfig::with_topics(self.topics.unwrap_or(12));
        if let Some(a) = self.alpha {
            c.alpha = a;
        }
        if let Some(b) = self.beta {
            c.beta = b;
        }
        if let Some(b) = self.boost {
            c.boost = b;
        }
        if let Some(i) = self.iterations {
            c.iterations = i;
        }
        if let Some(s) = self.rng_seed {
            c.rng_seed = s;
        }
        c.trace_every = self.trace_every;
        c
    }
}

/// Fitted sampler state. Counts are always derivable from `assignments`.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicModel {
    config: LdaConfig,
    seeds: Vec<SeedSet>,
    vocab: Vec<String>,
    doc_ids: Vec<String>,
    words: Vec<Vec<u32>>,
    assignments: Vec<Vec<u32>>,
    // word-major: word_topic[w * K + k]
    word_topic: Vec<u32>,
    topic_totals: Vec<u64>,
    doc_topic: Vec<u32>,
    prior: Vec<f64>,
    prior_sums: Vec<f64>,
    log_likelihood: Vec<(usize, f64)>,
    warnings: Vec<String>,
}

impl TopicModel {
    pub fn config(&self) -> &LdaConfig {
        &self.config
    }

    pub fn seeds(&self) -> &[SeedSet] {
        &self.seeds
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn num_topics(&self) -> usize {
        self.config.topics
    }

    pub fn word_index(&self, token: &str) -> Option<usize> {
        self.vocab.binary_search_by(|v| v.as_str().cmp(token)).ok()
    }

    /// Topic assignment of every token, per document in `doc_ids` order.
    pub fn assignments(&self) -> &[Vec<u32>] {
        &self.assignments
    }

    /// Vocabulary index of every token, parallel to `assignments`.
    pub fn words(&self) -> &[Vec<u32>] {
        &self.words
    }

    pub fn topic_word_count(&self, topic: usize, word: usize) -> u32 {
        self.word_topic[word * self.config.topics + topic]
    }

    pub fn doc_topic_count(&self, doc: usize, topic: usize) -> u32 {
        self.doc_topic[doc * self.config.topics + topic]
    }

    pub fn topic_total(&self, topic: usize) -> u64 {
        self.topic_totals[topic]
    }

    /// Per-topic token histogram of one document.
    pub fn doc_histogram(&self, doc_id: &str) -> Option<Vec<u32>> {
        let d = self.doc_ids.iter().position(|id| id == doc_id)?;
        let k = self.config.topics;
        Some(self.doc_topic[d * k..(d + 1) * k].to_vec())
    }

    pub fn log_likelihood_trace(&self) -> &[(usize, f64)] {
        &self.log_likelihood
    }

    /// Non-fatal problems noticed while fitting (e.g. seed words absent from the corpus).
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn total_tokens(&self) -> u64 {
        self.words.iter().map(|w| w.len() as u64).sum()
    }

    /// Smoothed topic-word probability.
    pub fn phi(&self, topic: usize, word: usize) -> f64 {
        let k = self.config.topics;
        (self.word_topic[word * k + topic] as f64 + self.prior[word * k + topic])
            / (self.topic_totals[topic] as f64 + self.prior_sums[topic])
    }

    /// Log-likelihood of the words given the current assignments.
    pub fn log_likelihood(&self) -> f64 {
        let k = self.config.topics;
        let mut ll = 0.0;
        for t in 0..k {
            ll += ln_gamma(self.prior_sums[t]) - ln_gamma(self.topic_totals[t] as f64 + self.prior_sums[t]);
            for w in 0..self.vocab.len() {
                let n = self.word_topic[w * k + t];
                if n > 0 {
                    let p = self.prior[w * k + t];
                    ll += ln_gamma(n as f64 + p) - ln_gamma(p);
                }
            }
        }
        ll
    }

    /// Rebuilds both count matrices from the assignments and compares.
    pub fn verify_counts(&self) -> Result<(), TopicError> {
        let (wt, tt, dt) = count_matrices(self.config.topics, self.vocab.len(), &self.words, &self.assignments)?;
        if wt != self.word_topic {
            return Err(TopicError::CountMismatch("topic-word counts".into()));
        }
        if tt != self.topic_totals {
            return Err(TopicError::CountMismatch("topic totals".into()));
        }
        if dt != self.doc_topic {
            return Err(TopicError::CountMismatch("document-topic counts".into()));
        }
        let total = self.total_tokens();
        if self.topic_totals.iter().sum::<u64>() != total {
            return Err(TopicError::CountMismatch("marginal differs from token count".into()));
        }
        Ok(())
    }
}

type Counts = (Vec<u32>, Vec<u64>, Vec<u32>);

fn count_matrices(k: usize, v: usize, words: &[Vec<u32>], assignments: &[Vec<u32>]) -> Result<Counts, TopicError> {
    let mut word_topic = vec![0u32; v * k];
    let mut topic_totals = vec![0u64; k];
    let mut doc_topic = vec![0u32; words.len() * k];
    if words.len() != assignments.len() {
        return Err(TopicError::Format("assignment rows differ from documents".into()));
    }
    for (d, (ws, zs)) in words.iter().zip(assignments).enumerate() {
        if ws.len() != zs.len() {
            return Err(TopicError::Format(format!("document {d}: {} words, {} assignments", ws.len(), zs.len())));
        }
        for (&w, &z) in ws.iter().zip(zs) {
            let (w, z) = (w as usize, z as usize);
            if z >= k || w >= v {
                return Err(TopicError::Format(format!("document {d}: index out of range")));
            }
            word_topic[w * k + z] += 1;
            topic_totals[z] += 1;
            doc_topic[d * k + z] += 1;
        }
    }
    Ok((word_topic, topic_totals, doc_topic))
}

/// Boosted prior `beta'` (word-major) and its per-topic sums.
fn seed_prior(config: &LdaConfig, vocab: &[String], seeds: &[SeedSet]) -> (Vec<f64>, Vec<f64>) {
    let k = config.topics;
    let mut prior = vec![config.beta; vocab.len() * k];
    for (t, set) in seeds.iter().enumerate() {
        for word in &set.words {
            if let Ok(w) = vocab.binary_search(word) {
                prior[w * k + t] = config.beta * config.boost;
            }
        }
    }
    let mut sums = vec![0.0; k];
    for w in 0..vocab.len() {
        for (t, s) in sums.iter_mut().enumerate() {
            *s += prior[w * k + t];
        }
    }
    (prior, sums)
}

fn check_seeds(seeds: &[SeedSet]) -> Result<(), TopicError> {
    let mut owner: HashMap<&str, CoiLink> = HashMap::new();
    for set in seeds {
        for w in &set.words {
            if let Some(prev) = owner.insert(w, set.set_id) {
                if prev != set.set_id {
                    return Err(TopicError::SharedSeed { word: w.clone(), first: prev, second: set.set_id });
                }
            }
        }
    }
    Ok(())
}

/// Fits the seeded model. Topic `i` is bound to `seeds[i]`; remaining topics are free.
pub fn fit(corpus: &[TokenizedDoc], seeds: &[SeedSet], config: &LdaConfig) -> Result<TopicModel, TopicError> {
    config.validate(seeds.len())?;
    check_seeds(seeds)?;
    let mut docs: Vec<&TokenizedDoc> = corpus.iter().collect();
    docs.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
    if let Some(w) = docs.windows(2).find(|w| w[0].doc_id == w[1].doc_id) {
        return Err(TopicError::DuplicateDoc(w[0].doc_id.clone()));
    }
    if docs.iter().all(|d| d.tokens.is_empty()) {
        return Err(TopicError::EmptyCorpus);
    }

    let vocab: Vec<String> = docs
        .iter()
        .flat_map(|d| d.tokens.iter().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut warnings = Vec::new();
    let mut seed_topic: HashMap<u32, u32> = HashMap::new();
    let mut any_seed = seeds.is_empty();
    for (t, set) in seeds.iter().enumerate() {
        let present: Vec<u32> = set
            .words
            .iter()
            .filter_map(|w| vocab.binary_search(w).ok().map(|i| i as u32))
            .collect();
        if present.is_empty() {
            warnings.push(format!("no word of seed set {} occurs in the corpus", set.set_id));
        }
        any_seed |= !present.is_empty();
        for w in present {
            seed_topic.insert(w, t as u32);
        }
    }
    if !any_seed {
        warnings.push("no seed word occurs in the corpus; topics are unseeded".into());
    }
    for w in &warnings {
        tracing::warn!("{w}");
    }

    let words: Vec<Vec<u32>> = docs
        .iter()
        .map(|d| {
            d.tokens
                .iter()
                .map(|t| vocab.binary_search(t).expect("token in vocab") as u32)
                .collect()
        })
        .collect();

    let k = config.topics;
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    // Seed words start in their bound topic, everything else uniformly.
    let assignments: Vec<Vec<u32>> = words
        .iter()
        .map(|ws| {
            ws.iter()
                .map(|w| match seed_topic.get(w) {
                    Some(&t) => t,
                    None => rng.random_range(0..k as u32),
                })
                .collect()
        })
        .collect();
    let (word_topic, topic_totals, doc_topic) = count_matrices(k, vocab.len(), &words, &assignments)?;
    let (prior, prior_sums) = seed_prior(config, &vocab, seeds);

    let mut model = TopicModel {
        config: config.clone(),
        seeds: seeds.to_vec(),
        vocab,
        doc_ids: docs.iter().map(|d| d.doc_id.clone()).collect(),
        words,
        assignments,
        word_topic,
        topic_totals,
        doc_topic,
        prior,
        prior_sums,
        log_likelihood: Vec::new(),
        warnings,
    };

    let mut weights = vec![0.0f64; k];
    for sweep in 1..=config.iterations {
        model.sweep(&mut rng, &mut weights);
        if let Some(every) = config.trace_every {
            if every > 0 && (sweep % every == 0 || sweep == config.iterations) {
                let ll = model.log_likelihood();
                tracing::debug!(sweep, ll, "gibbs sweep");
                model.log_likelihood.push((sweep, ll));
            }
        }
    }
    model.verify_counts()?;
    Ok(model)
}

impl TopicModel {
    fn sweep(&mut self, rng: &mut ChaCha8Rng, weights: &mut [f64]) {
        let k = self.config.topics;
        let alpha = self.config.alpha;
        for d in 0..self.words.len() {
            let doc_row = d * k;
            for i in 0..self.words[d].len() {
                let w = self.words[d][i] as usize;
                let old = self.assignments[d][i] as usize;
                let row = w * k;
                self.word_topic[row + old] -= 1;
                self.topic_totals[old] -= 1;
                self.doc_topic[doc_row + old] -= 1;

                let mut total = 0.0;
                for t in 0..k {
                    let p = (self.doc_topic[doc_row + t] as f64 + alpha)
                        * (self.word_topic[row + t] as f64 + self.prior[row + t])
                        / (self.topic_totals[t] as f64 + self.prior_sums[t]);
                    total += p;
                    weights[t] = total;
                }
                let u = rng.random::<f64>() * total;
                let new = weights.iter().position(|&c| u < c).unwrap_or(k - 1);

                self.word_topic[row + new] += 1;
                self.topic_totals[new] += 1;
                self.doc_topic[doc_row + new] += 1;
                self.assignments[d][i] = new as u32;
            }
        }
    }
}

/// The `n` most probable words of `topic`, highest smoothed probability
/// first and ties in lexicographic order. `n` is clamped to the vocabulary.
pub fn top_words(model: &TopicModel, topic: usize, n: usize) -> Result<Vec<(String, f64)>, TopicError> {
    if topic >= model.num_topics() {
        return Err(TopicError::TopicOutOfRange { topic, topics: model.num_topics() });
    }
    let mut scored: Vec<(usize, f64)> = (0..model.vocab.len()).map(|w| (w, model.phi(topic, w))).collect();
    // vocab is sorted, so index order is lexicographic order
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(scored
        .into_iter()
        .take(n)
        .map(|(w, p)| (model.vocab[w].clone(), p))
        .collect())
}

/// Keyword candidates for human review: each seeded topic's top `n` words,
/// minus anything already seeded or already in the lexicon. An empty result
/// for every set means the expansion has nothing left to offer.
pub fn propose_candidates(model: &TopicModel, lexicon: &KeywordLexicon, n: usize) -> BTreeMap<CoiLink, Vec<String>> {
    let seeded: HashSet<&str> = model
        .seeds
        .iter()
        .flat_map(|s| s.words.iter().map(String::as_str))
        .collect();
    model
        .seeds
        .iter()
        .enumerate()
        .map(|(topic, set)| {
            let words = top_words(model, topic, n)
                .expect("seeded topics are in range")
                .into_iter()
                .map(|(w, _)| w)
                .filter(|w| !seeded.contains(w.as_str()) && !lexicon.contains(w))
                .collect();
            (set.set_id, words)
        })
        .collect()
}
