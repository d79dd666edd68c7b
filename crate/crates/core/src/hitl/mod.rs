//! Human-in-the-loop protocol: the versioned keyword lexicon, baseline
//! similarity scoring, the annotation queue, majority voting and keyword
//! review with termination.

mod lexicon;
mod similarity;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::corpus::TokenizedDoc;
use crate::labels::{CoiLink, Label};
use crate::topics::{self, LdaConfig};

pub use lexicon::{KeywordLexicon, LexiconEntry, LexiconError, LexiconRow, Provenance};
pub use similarity::{cosine, jaccard, BaselineScore, BaselineScorer, Combiner, DEFAULT_THRESHOLD};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HitlError {
    #[error("lexicon has no {0} keywords")]
    EmptyClass(Label),
    #[error("expected {expected} votes, got {got}")]
    WrongVoteCount { expected: usize, got: usize },
    #[error("document {0} is not pending review")]
    NotPending(String),
    #[error("document {0} is already labeled")]
    AlreadyLabeled(String),
    #[error("session has terminated; no further keyword reviews")]
    Terminated,
    #[error("no keyword candidates are pending")]
    NoPendingCandidates,
    #[error("`{0}` is not a pending candidate")]
    UnknownCandidate(String),
    #[error("`{token}` already belongs to the {existing} class")]
    OppositeClass { token: String, existing: Label },
    #[error("label store is empty")]
    EmptyLabelStore,
    #[error("invalid session config: {0}")]
    InvalidConfig(String),
    #[error("labeled record {doc_id}: {message}")]
    BadLabeledRecord { doc_id: String, message: String },
    #[error(transparent)]
    Lexicon(LexiconError),
}

impl From<LexiconError> for HitlError {
    fn from(e: LexiconError) -> Self {
        match e {
            LexiconError::OppositeClass { token, existing } => HitlError::OppositeClass { token, existing },
            other => HitlError::Lexicon(other),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HitlConfig {
    pub combiner: Combiner,
    pub threshold: f64,
    /// Votes per document; must be odd so a majority always exists.
    pub annotators: usize,
}

impl Default for HitlConfig {
    fn default() -> Self {
        HitlConfig { combiner: Combiner::Mean, threshold: DEFAULT_THRESHOLD, annotators: 3 }
    }
}

impl HitlConfig {
    pub fn validate(&self) -> Result<(), HitlError> {
        if self.annotators == 0 || self.annotators.is_multiple_of(2) {
            return Err(HitlError::InvalidConfig(format!("annotator count {} must be odd", self.annotators)));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(HitlError::InvalidConfig(format!("threshold {} outside [0, 1]", self.threshold)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueuedDoc {
    pub doc_id: String,
    pub ensemble_disease: f64,
    pub ensemble_intervention: f64,
    pub max_score: f64,
    pub triggered: Vec<Label>,
}

impl From<&BaselineScore> for QueuedDoc {
    fn from(s: &BaselineScore) -> Self {
        QueuedDoc {
            doc_id: s.doc_id.clone(),
            ensemble_disease: s.ensemble_disease,
            ensemble_intervention: s.ensemble_intervention,
            max_score: s.max_ensemble(),
            triggered: s.triggered.clone(),
        }
    }
}

impl QueuedDoc {
    fn baseline_label(&self) -> Option<Label> {
        match self.triggered.as_slice() {
            [] => None,
            [only] => Some(*only),
            _ if self.ensemble_intervention > self.ensemble_disease => Some(Label::Intervention),
            _ => Some(Label::Disease),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Unanimous,
    Majority,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledDoc {
    pub doc_id: String,
    pub label: Label,
    pub votes: Vec<Label>,
    pub decided_by: Decision,
    /// Lexicon version in force when the votes were cast.
    pub iteration: u32,
    /// What the similarity baseline alone would have said.
    #[serde(default)]
    pub baseline: Option<Label>,
}

/// Majority label of an odd number of votes.
pub fn majority(votes: &[Label]) -> (Label, Decision) {
    let disease = votes.iter().filter(|v| **v == Label::Disease).count();
    let label = if 2 * disease > votes.len() { Label::Disease } else { Label::Intervention };
    let decided_by = if votes.iter().all(|v| *v == label) { Decision::Unanimous } else { Decision::Majority };
    (label, decided_by)
}

/// A reviewer's verdict on one keyword candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum CandidateDecision {
    /// Accept into `set`, or into the set that proposed it when absent.
    Accept {
        #[serde(default)]
        set: Option<CoiLink>,
    },
    Reject,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewOutcome {
    pub version: u32,
    pub accepted: Vec<(String, CoiLink)>,
    pub rejected: Vec<String>,
    pub terminated: bool,
}

/// Line of the labeled dataset file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledRecord {
    pub doc_id: String,
    pub label: Label,
    pub votes: Vec<Label>,
    pub iteration: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledExport {
    pub records: Vec<LabeledRecord>,
    pub counts: BTreeMap<Label, usize>,
}

/// Counters the operator watches to decide when to stop labeling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HitlProgress {
    pub iteration: u32,
    pub terminated: bool,
    pub labeled: usize,
    pub disease: usize,
    pub intervention: usize,
    pub pending_docs: usize,
    pub pending_candidates: usize,
    /// Share of labeled docs where the baseline label matched the human label.
    pub baseline_agreement: Option<f64>,
}

/// Mutable session state that is not already covered by the lexicon and
/// label files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub config: HitlConfig,
    pub lexicon_version: u32,
    pub terminated: bool,
    pub pending_candidates: Option<BTreeMap<CoiLink, Vec<String>>>,
    pub pending_docs: Vec<QueuedDoc>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HitlSession {
    config: HitlConfig,
    lexicon: KeywordLexicon,
    pending_candidates: Option<BTreeMap<CoiLink, Vec<String>>>,
    pending_docs: Vec<QueuedDoc>,
    labeled: BTreeMap<String, LabeledDoc>,
    terminated: bool,
}

impl HitlSession {
    pub fn new(lexicon: KeywordLexicon, config: HitlConfig) -> Result<Self, HitlError> {
        config.validate()?;
        Ok(HitlSession {
            config,
            lexicon,
            pending_candidates: None,
            pending_docs: Vec::new(),
            labeled: BTreeMap::new(),
            terminated: false,
        })
    }

    pub fn from_parts(
        lexicon: KeywordLexicon,
        labeled: Vec<LabeledDoc>,
        state: SessionState,
    ) -> Result<Self, HitlError> {
        let mut session = HitlSession::new(lexicon, state.config)?;
        session.terminated = state.terminated;
        session.pending_candidates = state.pending_candidates;
        for doc in labeled {
            session.check_labeled(&doc)?;
            session.labeled.insert(doc.doc_id.clone(), doc);
        }
        session.pending_docs = state.pending_docs.into_iter().filter(|q| !session.labeled.contains_key(&q.doc_id)).collect();
        Ok(session)
    }

    pub fn state(&self) -> SessionState {
        SessionState {
            config: self.config,
            lexicon_version: self.lexicon.version(),
            terminated: self.terminated,
            pending_candidates: self.pending_candidates.clone(),
            pending_docs: self.pending_docs.clone(),
        }
    }

    pub fn config(&self) -> &HitlConfig {
        &self.config
    }

    pub fn iteration(&self) -> u32 {
        self.lexicon.version()
    }

    pub fn lexicon(&self) -> &KeywordLexicon {
        &self.lexicon
    }

    pub fn is_terminated(&self) -> bool {
        self.terminated
    }

    pub fn pending_docs(&self) -> &[QueuedDoc] {
        &self.pending_docs
    }

    pub fn pending_candidates(&self) -> Option<&BTreeMap<CoiLink, Vec<String>>> {
        self.pending_candidates.as_ref()
    }

    pub fn labeled(&self) -> impl Iterator<Item = &LabeledDoc> {
        self.labeled.values()
    }

    pub fn labeled_doc(&self, doc_id: &str) -> Option<&LabeledDoc> {
        self.labeled.get(doc_id)
    }

    pub fn scorer(&self) -> Result<BaselineScorer, HitlError> {
        BaselineScorer::new(&self.lexicon, self.config.combiner, self.config.threshold)
    }

    /// Scores every document against the current lexicon and queues the
    /// triggered, unlabeled ones.
    pub fn enqueue_for_review<'a>(&mut self, docs: impl IntoIterator<Item = &'a TokenizedDoc>) -> Result<usize, HitlError> {
        let scorer = self.scorer()?;
        let scores: Vec<BaselineScore> = docs.into_iter().map(|d| scorer.score(d)).collect();
        Ok(self.enqueue_scores(&scores))
    }

    /// Queues precomputed scores. Each triggered, unlabeled document enters the
    /// queue at most once; the queue stays ordered by max ensemble descending
    /// with doc id breaking ties.
    pub fn enqueue_scores(&mut self, scores: &[BaselineScore]) -> usize {
        let mut present: BTreeSet<String> = self.pending_docs.iter().map(|q| q.doc_id.clone()).collect();
        let mut added = 0;
        for s in scores {
            if s.triggered.is_empty() || self.labeled.contains_key(&s.doc_id) || present.contains(&s.doc_id) {
                continue;
            }
            present.insert(s.doc_id.clone());
            self.pending_docs.push(QueuedDoc::from(s));
            added += 1;
        }
        self.pending_docs.sort_by(|a, b| b.max_score.total_cmp(&a.max_score).then_with(|| a.doc_id.cmp(&b.doc_id)));
        added
    }

    pub fn record_votes(&mut self, doc_id: &str, votes: &[Label]) -> Result<LabeledDoc, HitlError> {
        if votes.len() != self.config.annotators {
            return Err(HitlError::WrongVoteCount { expected: self.config.annotators, got: votes.len() });
        }
        if self.labeled.contains_key(doc_id) {
            return Err(HitlError::AlreadyLabeled(doc_id.to_string()));
        }
        let pos = self
            .pending_docs
            .iter()
            .position(|q| q.doc_id == doc_id)
            .ok_or_else(|| HitlError::NotPending(doc_id.to_string()))?;
        let queued = self.pending_docs.remove(pos);
        let (label, decided_by) = majority(votes);
        let doc = LabeledDoc {
            doc_id: doc_id.to_string(),
            label,
            votes: votes.to_vec(),
            decided_by,
            iteration: self.iteration(),
            baseline: queued.baseline_label(),
        };
        self.labeled.insert(doc.doc_id.clone(), doc.clone());
        Ok(doc)
    }

    /// Installs the candidate lists a topic model proposed for this iteration.
    pub fn set_candidates(&mut self, candidates: BTreeMap<CoiLink, Vec<String>>) -> Result<(), HitlError> {
        if self.terminated {
            return Err(HitlError::Terminated);
        }
        self.pending_candidates = Some(candidates);
        Ok(())
    }

    /// Applies reviewer decisions atomically: either the whole batch is
    /// applied and the lexicon moves to the next version, or nothing changes.
    /// Candidates without a decision count as rejected.
    pub fn review_candidates(&mut self, decisions: &BTreeMap<String, CandidateDecision>) -> Result<ReviewOutcome, HitlError> {
        if self.terminated {
            return Err(HitlError::Terminated);
        }
        let pending = self.pending_candidates.as_ref().ok_or(HitlError::NoPendingCandidates)?;
        let mut proposed_by: BTreeMap<&str, CoiLink> = BTreeMap::new();
        for (link, words) in pending {
            for w in words {
                proposed_by.entry(w.as_str()).or_insert(*link);
            }
        }
        for token in decisions.keys() {
            if !proposed_by.contains_key(token.as_str()) {
                return Err(HitlError::UnknownCandidate(token.clone()));
            }
        }

        let mut accepted = Vec::new();
        let mut rejected = Vec::new();
        for (token, link) in &proposed_by {
            match decisions.get(*token) {
                Some(CandidateDecision::Accept { set }) => accepted.push((token.to_string(), set.unwrap_or(*link))),
                _ => rejected.push(token.to_string()),
            }
        }
        let next = self.lexicon.next_version(&accepted)?;

        self.lexicon = next;
        self.pending_candidates = None;
        self.terminated = accepted.is_empty();
        Ok(ReviewOutcome { version: self.lexicon.version(), accepted, rejected, terminated: self.terminated })
    }

    /// One full iteration: fit the topic model on the current lexicon's seed
    /// sets, propose the top-`n` candidates, let `decide` review them.
    pub fn expansion_round(
        &mut self,
        corpus: &[TokenizedDoc],
        config: &LdaConfig,
        n: usize,
        decide: impl FnOnce(&BTreeMap<CoiLink, Vec<String>>) -> BTreeMap<String, CandidateDecision>,
    ) -> crate::Result<ReviewOutcome> {
        if self.terminated {
            return Err(HitlError::Terminated.into());
        }
        let seeds = self.lexicon.seed_sets();
        let mut config = config.clone();
        config.topics = config.topics.max(seeds.len());
        let model = topics::fit(corpus, &seeds, &config)?;
        let candidates = topics::propose_candidates(&model, &self.lexicon, n);
        let decisions = decide(&candidates);
        self.set_candidates(candidates)?;
        Ok(self.review_candidates(&decisions)?)
    }

    pub fn export_labeled(&self) -> Result<LabeledExport, HitlError> {
        if self.labeled.is_empty() {
            return Err(HitlError::EmptyLabelStore);
        }
        let mut counts = BTreeMap::from([(Label::Disease, 0), (Label::Intervention, 0)]);
        let records = self
            .labeled
            .values()
            .map(|d| {
                *counts.entry(d.label).or_default() += 1;
                LabeledRecord { doc_id: d.doc_id.clone(), label: d.label, votes: d.votes.clone(), iteration: d.iteration }
            })
            .collect();
        Ok(LabeledExport { records, counts })
    }

    /// Loads exported records into the label store. Records already present
    /// are rejected so a label never changes within a session.
    pub fn import_labeled(&mut self, records: &[LabeledRecord]) -> Result<usize, HitlError> {
        let mut staged = Vec::with_capacity(records.len());
        for r in records {
            if self.labeled.contains_key(&r.doc_id) || staged.iter().any(|d: &LabeledDoc| d.doc_id == r.doc_id) {
                return Err(HitlError::AlreadyLabeled(r.doc_id.clone()));
            }
            let (label, decided_by) = majority(&r.votes);
            let doc = LabeledDoc {
                doc_id: r.doc_id.clone(),
                label,
                votes: r.votes.clone(),
                decided_by,
                iteration: r.iteration,
                baseline: None,
            };
            if label != r.label {
                return Err(HitlError::BadLabeledRecord { doc_id: r.doc_id.clone(), message: "label is not the vote majority".into() });
            }
            self.check_labeled(&doc)?;
            staged.push(doc);
        }
        let n = staged.len();
        for doc in staged {
            self.pending_docs.retain(|q| q.doc_id != doc.doc_id);
            self.labeled.insert(doc.doc_id.clone(), doc);
        }
        Ok(n)
    }

    fn check_labeled(&self, doc: &LabeledDoc) -> Result<(), HitlError> {
        let bad = |m: &str| HitlError::BadLabeledRecord { doc_id: doc.doc_id.clone(), message: m.into() };
        if doc.votes.len() != self.config.annotators {
            return Err(bad(&format!("{} votes, expected {}", doc.votes.len(), self.config.annotators)));
        }
        if majority(&doc.votes) != (doc.label, doc.decided_by) {
            return Err(bad("label is not the vote majority"));
        }
        Ok(())
    }

    pub fn progress(&self) -> HitlProgress {
        let disease = self.labeled.values().filter(|d| d.label == Label::Disease).count();
        let with_baseline: Vec<&LabeledDoc> = self.labeled.values().filter(|d| d.baseline.is_some()).collect();
        let baseline_agreement = (!with_baseline.is_empty()).then(|| {
            with_baseline.iter().filter(|d| d.baseline == Some(d.label)).count() as f64 / with_baseline.len() as f64
        });
        HitlProgress {
            iteration: self.iteration(),
            terminated: self.terminated,
            labeled: self.labeled.len(),
            disease,
            intervention: self.labeled.len() - disease,
            pending_docs: self.pending_docs.len(),
            pending_candidates: self.pending_candidates.as_ref().map_or(0, |c| c.values().map(Vec::len).sum()),
            baseline_agreement,
        }
    }
}
