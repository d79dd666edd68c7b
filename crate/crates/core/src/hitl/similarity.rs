use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::corpus::TokenizedDoc;
use crate::labels::Label;

use super::{HitlError, KeywordLexicon};

/// How the per-class cosine and Jaccard scores are folded into one number.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Combiner {
    #[default]
    Mean,
    Max,
    Min,
}

impl Combiner {
    pub fn combine(self, cosine: f64, jaccard: f64) -> f64 {
        match self {
            Combiner::Mean => (cosine + jaccard) / 2.0,
            Combiner::Max => cosine.max(jaccard),
            Combiner::Min => cosine.min(jaccard),
        }
    }
}

pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Cosine between binary presence vectors of two sets: |A∩B| / sqrt(|A|·|B|).
pub fn cosine(a: &BTreeSet<&str>, b: &BTreeSet<&str>) -> f64 {
    cosine_from_counts(a.intersection(b).count(), a.len(), b.len())
}

pub fn jaccard(a: &BTreeSet<&str>, b: &BTreeSet<&str>) -> f64 {
    jaccard_from_counts(a.intersection(b).count(), a.len(), b.len())
}

fn cosine_from_counts(inter: usize, a: usize, b: usize) -> f64 {
    if a == 0 || b == 0 {
        return 0.0;
    }
    inter as f64 / ((a * b) as f64).sqrt()
}

fn jaccard_from_counts(inter: usize, a: usize, b: usize) -> f64 {
    let union = a + b - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// (cosine, jaccard) of a document set against one keyword set.
fn against(doc: &BTreeSet<&str>, keys: &BTreeSet<String>) -> (f64, f64) {
    let inter = doc.iter().filter(|t| keys.contains(**t)).count();
    (cosine_from_counts(inter, doc.len(), keys.len()), jaccard_from_counts(inter, doc.len(), keys.len()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineScore {
    pub doc_id: String,
    pub cosine_disease: f64,
    pub cosine_intervention: f64,
    pub jaccard_disease: f64,
    pub jaccard_intervention: f64,
    pub ensemble_disease: f64,
    pub ensemble_intervention: f64,
    pub triggered: Vec<Label>,
}

impl BaselineScore {
    /// Assembles a score from its similarity components. `triggered` holds
    /// every class whose ensemble is strictly above `threshold`.
    pub fn from_components(
        doc_id: impl Into<String>,
        (cosine_disease, jaccard_disease): (f64, f64),
        (cosine_intervention, jaccard_intervention): (f64, f64),
        combiner: Combiner,
        threshold: f64,
    ) -> Self {
        let ensemble_disease = combiner.combine(cosine_disease, jaccard_disease);
        let ensemble_intervention = combiner.combine(cosine_intervention, jaccard_intervention);
        let triggered = [(Label::Disease, ensemble_disease), (Label::Intervention, ensemble_intervention)]
            .into_iter()
            .filter(|(_, e)| *e > threshold)
            .map(|(l, _)| l)
            .collect();
        BaselineScore {
            doc_id: doc_id.into(),
            cosine_disease,
            cosine_intervention,
            jaccard_disease,
            jaccard_intervention,
            ensemble_disease,
            ensemble_intervention,
            triggered,
        }
    }

    pub fn ensemble(&self, label: Label) -> f64 {
        match label {
            Label::Disease => self.ensemble_disease,
            Label::Intervention => self.ensemble_intervention,
        }
    }

    pub fn max_ensemble(&self) -> f64 {
        self.ensemble_disease.max(self.ensemble_intervention)
    }

    /// The label the baseline alone would assign: the triggered class with the
    /// higher ensemble, Disease on ties. `None` when nothing triggered.
    pub fn baseline_label(&self) -> Option<Label> {
        match self.triggered.as_slice() {
            [] => None,
            [only] => Some(*only),
            _ if self.ensemble_intervention > self.ensemble_disease => Some(Label::Intervention),
            _ => Some(Label::Disease),
        }
    }
}

/// Scores documents against the two keyword sets of one lexicon version.
#[derive(Debug, Clone)]
pub struct BaselineScorer {
    disease: BTreeSet<String>,
    intervention: BTreeSet<String>,
    combiner: Combiner,
    threshold: f64,
}

impl BaselineScorer {
    pub fn new(lexicon: &KeywordLexicon, combiner: Combiner, threshold: f64) -> Result<Self, HitlError> {
        Self::from_sets(lexicon.disease_keywords(), lexicon.intervention_keywords(), combiner, threshold)
    }

    pub fn from_sets(
        disease: BTreeSet<String>,
        intervention: BTreeSet<String>,
        combiner: Combiner,
        threshold: f64,
    ) -> Result<Self, HitlError> {
        for (label, set) in [(Label::Disease, &disease), (Label::Intervention, &intervention)] {
            if set.is_empty() {
                return Err(HitlError::EmptyClass(label));
            }
        }
        Ok(BaselineScorer { disease, intervention, combiner, threshold })
    }

    pub fn score(&self, doc: &TokenizedDoc) -> BaselineScore {
        let doc_set: BTreeSet<&str> = doc.token_set().collect();
        self.score_set(&doc.doc_id, &doc_set)
    }

    pub fn score_set(&self, doc_id: &str, doc_set: &BTreeSet<&str>) -> BaselineScore {
        BaselineScore::from_components(
            doc_id,
            against(doc_set, &self.disease),
            against(doc_set, &self.intervention),
            self.combiner,
            self.threshold,
        )
    }
}
