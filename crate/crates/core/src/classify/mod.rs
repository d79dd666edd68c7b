//! Keyword-restricted count features and the three classifiers.

mod eval;
mod knn;
mod mnb;
mod svm;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::TokenizedDoc;
use crate::hitl::KeywordLexicon;
use crate::labels::Label;

pub use eval::{
    evaluate, repeated_splits, stratified_split, ClassMetrics, ConfusionMatrix, EvalReport, ModelEval, ModelSpec,
    RepeatedReport, SplitConfig, Summary,
};
pub use knn::{train_knn, KnnParams};
pub use mnb::{train_mnb, MnbParams};
pub use svm::{objective, subgradient, train_svm, LinearScorer, SvmHyper, SvmMode, SvmParams};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ClassifyError {
    #[error("lexicon is empty; there is nothing to featurize")]
    EmptyLexicon,
    #[error("training set contains only {0} documents")]
    SingleClass(Label),
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("k must be odd, got {0}")]
    EvenK(usize),
    #[error("k = {k} exceeds the {n} training documents")]
    KTooLarge { k: usize, n: usize },
    #[error("invalid hyperparameter: {0}")]
    InvalidParam(String),
    #[error("{label} has {count} documents; at least {needed} are required")]
    TooFewDocs { label: Label, count: usize, needed: usize },
    #[error("feature space mismatch: model expects {expected}, data has {found}")]
    FeatureSpaceMismatch { expected: String, found: String },
    #[error("MNB likelihoods for {label} sum to {sum}, not 1")]
    Unnormalized { label: Label, sum: f64 },
    #[error("model file: {0}")]
    Format(String),
}

/// Ordered feature columns: exactly the lexicon's tokens, sorted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct FeatureSpace {
    vocab: Vec<String>,
    index: HashMap<String, usize>,
}

impl From<Vec<String>> for FeatureSpace {
    fn from(mut vocab: Vec<String>) -> Self {
        vocab.sort();
        vocab.dedup();
        let index = vocab.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        FeatureSpace { vocab, index }
    }
}

impl From<FeatureSpace> for Vec<String> {
    fn from(fs: FeatureSpace) -> Self {
        fs.vocab
    }
}

impl FeatureSpace {
    pub fn from_lexicon(lexicon: &KeywordLexicon) -> Result<Self, ClassifyError> {
        if lexicon.is_empty() {
            return Err(ClassifyError::EmptyLexicon);
        }
        Ok(FeatureSpace::from(lexicon.union().into_iter().collect::<Vec<_>>()))
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    pub fn column(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    /// SHA-256 over the newline-joined vocabulary, hex encoded.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for t in &self.vocab {
            h.update(t.as_bytes());
            h.update(b"\n");
        }
        hex::encode(h.finalize())
    }

    pub fn featurize(&self, doc: &TokenizedDoc) -> FeatureVector {
        let counts = doc
            .token_counts
            .iter()
            .filter_map(|(t, &c)| self.column(t).map(|j| (j as u32, c)))
            .collect::<Vec<_>>();
        // token_counts is sorted by token and columns follow token order
        debug_assert!(counts.windows(2).all(|w| w[0].0 < w[1].0));
        FeatureVector { doc_id: doc.doc_id.clone(), counts }
    }
}

/// Sparse count vector: `(column, count)` pairs with increasing columns and
/// positive counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub doc_id: String,
    pub counts: Vec<(u32, u32)>,
}

impl FeatureVector {
    /// Builds a vector from dense counts.
    pub fn from_dense(doc_id: impl Into<String>, dense: &[u32]) -> Self {
        FeatureVector {
            doc_id: doc_id.into(),
            counts: dense.iter().enumerate().filter(|(_, &c)| c > 0).map(|(j, &c)| (j as u32, c)).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn get(&self, column: usize) -> u32 {
        self.counts
            .binary_search_by_key(&(column as u32), |e| e.0)
            .map_or(0, |i| self.counts[i].1)
    }

    pub fn dense(&self, dim: usize) -> Vec<u32> {
        let mut v = vec![0; dim];
        for &(j, c) in &self.counts {
            v[j as usize] = c;
        }
        v
    }

    pub fn sq_norm(&self) -> f64 {
        self.counts.iter().map(|&(_, c)| (c as f64) * (c as f64)).sum()
    }

    pub fn dot(&self, other: &FeatureVector) -> f64 {
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        while i < self.counts.len() && j < other.counts.len() {
            let (a, b) = (self.counts[i], other.counts[j]);
            match a.0.cmp(&b.0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += a.1 as f64 * b.1 as f64;
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }

    pub fn dot_dense(&self, w: &[f64]) -> f64 {
        self.counts.iter().map(|&(j, c)| w[j as usize] * c as f64).sum()
    }

    fn max_column(&self) -> Option<u32> {
        self.counts.last().map(|e| e.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Featurized {
    pub space: FeatureSpace,
    pub vectors: Vec<FeatureVector>,
    /// Documents whose vector is all zeros. They stay in `vectors`.
    pub zero_docs: Vec<String>,
}

pub fn featurize(docs: &[TokenizedDoc], lexicon: &KeywordLexicon) -> Result<Featurized, ClassifyError> {
    let space = FeatureSpace::from_lexicon(lexicon)?;
    let vectors: Vec<FeatureVector> = docs.iter().map(|d| space.featurize(d)).collect();
    let zero_docs = vectors.iter().filter(|v| v.is_zero()).map(|v| v.doc_id.clone()).collect();
    Ok(Featurized { space, vectors, zero_docs })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledVector {
    pub x: FeatureVector,
    pub y: Label,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Mnb,
    Knn,
    Svm,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Mnb, ModelKind::Knn, ModelKind::Svm];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Mnb => "mnb",
            ModelKind::Knn => "knn",
            ModelKind::Svm => "svm",
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mnb" => Ok(ModelKind::Mnb),
            "knn" => Ok(ModelKind::Knn),
            "svm" | "svm-ovr" => Ok(ModelKind::Svm),
            _ => Err(format!("unknown model kind `{s}` (expected mnb, knn or svm)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelParams {
    Mnb(MnbParams),
    Knn(KnnParams),
    Svm(SvmParams),
}

impl ModelParams {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelParams::Mnb(_) => ModelKind::Mnb,
            ModelParams::Knn(_) => ModelKind::Knn,
            ModelParams::Svm(_) => ModelKind::Svm,
        }
    }

    pub fn predict(&self, x: &FeatureVector) -> Label {
        match self {
            ModelParams::Mnb(m) => m.predict(x),
            ModelParams::Knn(m) => m.predict(x),
            ModelParams::Svm(m) => m.predict(x),
        }
    }
}

pub const MODEL_FORMAT: &str = "dengue-classifier";
pub const MODEL_VERSION: u32 = 1;

/// A trained classifier bound to the feature space it was trained on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierModel {
    pub format: String,
    pub version: u32,
    pub feature_space_hash: String,
    pub feature_space: FeatureSpace,
    pub params: ModelParams,
}

impl ClassifierModel {
    pub fn new(space: &FeatureSpace, params: ModelParams) -> Self {
        ClassifierModel {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            feature_space_hash: space.hash(),
            feature_space: space.clone(),
            params,
        }
    }

    pub fn kind(&self) -> ModelKind {
        self.params.kind()
    }

    /// Validates a loaded model file.
    pub fn check(&self) -> Result<(), ClassifyError> {
        if self.format != MODEL_FORMAT {
            return Err(ClassifyError::Format(format!("unexpected format tag `{}`", self.format)));
        }
        if self.version != MODEL_VERSION {
            return Err(ClassifyError::Format(format!("unsupported version {}", self.version)));
        }
        let actual = self.feature_space.hash();
        if actual != self.feature_space_hash {
            return Err(ClassifyError::FeatureSpaceMismatch { expected: self.feature_space_hash.clone(), found: actual });
        }
        Ok(())
    }

    /// Refuses to predict over vectors built from a different feature space.
    pub fn ensure_space(&self, space: &FeatureSpace) -> Result<(), ClassifyError> {
        let found = space.hash();
        if found != self.feature_space_hash {
            return Err(ClassifyError::FeatureSpaceMismatch { expected: self.feature_space_hash.clone(), found });
        }
        Ok(())
    }

    pub fn predict(&self, x: &FeatureVector) -> Label {
        self.params.predict(x)
    }
}

pub(crate) fn check_train(train: &[LabeledVector], dim: usize) -> Result<[usize; 2], ClassifyError> {
    if train.is_empty() {
        return Err(ClassifyError::EmptyTrainingSet);
    }
    let mut counts = [0usize; 2];
    for ex in train {
        counts[ex.y.index()] += 1;
        if ex.x.max_column().is_some_and(|j| j as usize >= dim) {
            return Err(ClassifyError::InvalidParam(format!("{} has a column outside the {dim}-column space", ex.x.doc_id)));
        }
    }
    for l in Label::ALL {
        if counts[l.other().index()] == 0 {
            return Err(ClassifyError::SingleClass(l));
        }
    }
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topics::SeedSet;
    use crate::labels::CoiLink;

    fn lexicon() -> KeywordLexicon {
        KeywordLexicon::from_seeds(&[
            SeedSet { set_id: CoiLink::InfectiousAgent, words: vec!["t".into(), "a".into()] },
            SeedSet { set_id: CoiLink::Reservoir, words: vec!["m".into()] },
        ])
        .unwrap()
    }

    #[test]
    fn zero_vector_flagged() {
        let f = featurize(&[TokenizedDoc::from_strs("z", &["q", "r"])], &lexicon()).unwrap();
        assert_eq!(f.zero_docs, ["z"]);
        assert!(f.vectors[0].is_zero());
    }

    #[test]
    fn repeated_token_count() {
        let f = featurize(&[TokenizedDoc::from_strs("d", &["t", "t", "x", "t", "t"])], &lexicon()).unwrap();
        let col = f.space.column("t").unwrap();
        assert_eq!(f.vectors[0].dense(f.space.len()), (0..3).map(|j| if j == col { 4 } else { 0 }).collect::<Vec<_>>());
    }

    #[test]
    fn space_is_sorted_lexicon_union() {
        let s = FeatureSpace::from_lexicon(&lexicon()).unwrap();
        assert_eq!(s.vocab(), ["a", "m", "t"]);
        assert_eq!(s.hash().len(), 64);
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(json, r#"["a","m","t"]"#);
        assert_eq!(serde_json::from_str::<FeatureSpace>(&json).unwrap(), s);
    }

    #[test]
    fn sparse_ops() {
        let a = FeatureVector::from_dense("a", &[1, 0, 2, 3]);
        let b = FeatureVector::from_dense("b", &[0, 5, 1, 1]);
        assert_eq!(a.dot(&b), 5.0);
        assert_eq!(a.sq_norm(), 14.0);
        assert_eq!(a.get(2), 2);
        assert_eq!(a.get(1), 0);
        assert_eq!(a.dot_dense(&[1.0, 1.0, 0.5, -1.0]), -1.0);
    }
}
