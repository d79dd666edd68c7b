use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{train_knn, train_mnb, train_svm, ClassifyError, LabeledVector, ModelKind, ModelParams, SvmHyper, SvmMode};
use crate::labels::Label;

/// Which model to train, with its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelSpec {
    Mnb { smoothing: f64 },
    Knn { k: usize },
    Svm { hyper: SvmHyper, mode: SvmMode },
}

impl ModelSpec {
    pub fn default_for(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Mnb => ModelSpec::Mnb { smoothing: 1.0 },
            ModelKind::Knn => ModelSpec::Knn { k: 5 },
            ModelKind::Svm => ModelSpec::Svm { hyper: SvmHyper::default(), mode: SvmMode::Ovr },
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            ModelSpec::Mnb { .. } => ModelKind::Mnb,
            ModelSpec::Knn { .. } => ModelKind::Knn,
            ModelSpec::Svm { .. } => ModelKind::Svm,
        }
    }

    pub fn name(&self) -> String {
        match self {
            ModelSpec::Svm { mode: SvmMode::Binary, .. } => "svm-binary".into(),
            ModelSpec::Svm { .. } => "svm-ovr".into(),
            other => other.kind().to_string(),
        }
    }

    pub fn train(&self, train: &[LabeledVector], dim: usize) -> Result<ModelParams, ClassifyError> {
        Ok(match *self {
            ModelSpec::Mnb { smoothing } => ModelParams::Mnb(train_mnb(train, dim, smoothing)?),
            ModelSpec::Knn { k } => ModelParams::Knn(train_knn(train, dim, k)?),
            ModelSpec::Svm { hyper, mode } => ModelParams::Svm(train_svm(train, dim, hyper, mode)?),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub train_ratio: f64,
    pub split_seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig { train_ratio: 0.7, split_seed: 42 }
    }
}

/// Stratified holdout split. Each class is sorted by doc id, shuffled with
/// one stream seeded by `split_seed`, and its first `round(ratio * n)`
/// members go to training. Returns `(train, test)` indices into `labels`,
/// each in ascending order.
pub fn stratified_split(
    ids: &[&str],
    labels: &[Label],
    config: SplitConfig,
) -> Result<(Vec<usize>, Vec<usize>), ClassifyError> {
    if !(config.train_ratio > 0.0 && config.train_ratio < 1.0) {
        return Err(ClassifyError::InvalidParam(format!("train ratio {} outside (0, 1)", config.train_ratio)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.split_seed);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for label in Label::ALL {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == label).collect();
        if members.len() < 2 {
            return Err(ClassifyError::TooFewDocs { label, count: members.len(), needed: 2 });
        }
        if members.len() < 10 {
            tracing::warn!(%label, count = members.len(), "fewer than 10 labeled documents in class");
        }
        members.sort_by(|&a, &b| ids[a].cmp(ids[b]));
        members.shuffle(&mut rng);
        let n_train = ((config.train_ratio * members.len() as f64 + 1e-9).round() as usize).clamp(1, members.len() - 1);
        train.extend_from_slice(&members[..n_train]);
        test.extend_from_slice(&members[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Confusion counts indexed `[actual][predicted]` by `Label::index`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix(pub [[u64; 2]; 2]);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

impl ConfusionMatrix {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (Label, Label)>) -> Self {
        let mut m = [[0u64; 2]; 2];
        for (actual, predicted) in pairs {
            m[actual.index()][predicted.index()] += 1;
        }
        ConfusionMatrix(m)
    }

    pub fn total(&self) -> u64 {
        self.0.iter().flatten().sum()
    }

    pub fn accuracy(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        (self.0[0][0] + self.0[1][1]) as f64 / total as f64
    }

    /// Precision, recall and F1 for one class; an empty denominator gives 0.
    pub fn class_metrics(&self, label: Label) -> ClassMetrics {
        let c = label.index();
        let tp = self.0[c][c] as f64;
        let predicted = (self.0[0][c] + self.0[1][c]) as f64;
        let support = self.0[c][0] + self.0[c][1];
        let ratio = |a: f64, b: f64| if b == 0.0 { 0.0 } else { a / b };
        let precision = ratio(tp, predicted);
        let recall = ratio(tp, support as f64);
        let f1 = ratio(2.0 * precision * recall, precision + recall);
        ClassMetrics { precision, recall, f1, support }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEval {
    pub model: String,
    pub confusion: ConfusionMatrix,
    pub accuracy: f64,
    pub per_class: BTreeMap<Label, ClassMetrics>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub weighted_f1: f64,
}

impl ModelEval {
    pub fn from_confusion(model: impl Into<String>, confusion: ConfusionMatrix) -> Self {
        let per_class: BTreeMap<Label, ClassMetrics> = Label::ALL.iter().map(|&l| (l, confusion.class_metrics(l))).collect();
        let mean = |f: fn(&ClassMetrics) -> f64| per_class.values().map(f).sum::<f64>() / 2.0;
        let total = confusion.total() as f64;
        let weighted_f1 = if total == 0.0 {
            0.0
        } else {
            per_class.values().map(|m| m.f1 * m.support as f64).sum::<f64>() / total
        };
        ModelEval {
            model: model.into(),
            accuracy: confusion.accuracy(),
            macro_precision: mean(|m| m.precision),
            macro_recall: mean(|m| m.recall),
            macro_f1: mean(|m| m.f1),
            weighted_f1,
            per_class,
            confusion,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub split_seed: u64,
    pub train_ratio: f64,
    pub train_count: usize,
    pub test_count: usize,
    /// Test documents with no keyword at all; they are still scored.
    pub zero_vector_test_docs: usize,
    pub models: Vec<ModelEval>,
}

impl EvalReport {
    pub fn model(&self, name: &str) -> Option<&ModelEval> {
        self.models.iter().find(|m| m.model == name)
    }
}

/// Trains each model on the stratified training part and scores it on the rest.
pub fn evaluate(
    data: &[LabeledVector],
    dim: usize,
    specs: &[ModelSpec],
    split: SplitConfig,
) -> Result<EvalReport, ClassifyError> {
    let ids: Vec<&str> = data.iter().map(|e| e.x.doc_id.as_str()).collect();
    let labels: Vec<Label> = data.iter().map(|e| e.y).collect();
    let (train_idx, test_idx) = stratified_split(&ids, &labels, split)?;
    let train: Vec<LabeledVector> = train_idx.iter().map(|&i| data[i].clone()).collect();
    let test: Vec<&LabeledVector> = test_idx.iter().map(|&i| &data[i]).collect();
    let models = specs
        .iter()
        .map(|spec| {
            let model = spec.train(&train, dim)?;
            let confusion = ConfusionMatrix::from_pairs(test.iter().map(|e| (e.y, model.predict(&e.x))));
            Ok(ModelEval::from_confusion(spec.name(), confusion))
        })
        .collect::<Result<Vec<_>, ClassifyError>>()?;
    Ok(EvalReport {
        split_seed: split.split_seed,
        train_ratio: split.train_ratio,
        train_count: train.len(),
        test_count: test.len(),
        zero_vector_test_docs: test.iter().filter(|e| e.x.is_zero()).count(),
        models,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single split.
    pub std_dev: f64,
}

impl Summary {
    fn of(xs: &[f64]) -> Summary {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let std_dev = if xs.len() < 2 {
            0.0
        } else {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        Summary { mean, std_dev }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatedReport {
    pub split_seeds: Vec<u64>,
    pub accuracy: BTreeMap<String, Summary>,
    pub macro_f1: BTreeMap<String, Summary>,
}

/// Runs [`evaluate`] once per split seed and summarizes each model.
pub fn repeated_splits(
    data: &[LabeledVector],
    dim: usize,
    specs: &[ModelSpec],
    train_ratio: f64,
    split_seeds: &[u64],
) -> Result<RepeatedReport, ClassifyError> {
    if split_seeds.is_empty() {
        return Err(ClassifyError::InvalidParam("no split seeds given".into()));
    }
    let mut acc: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut f1: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for &split_seed in split_seeds {
        let report = evaluate(data, dim, specs, SplitConfig { train_ratio, split_seed })?;
        for m in report.models {
            acc.entry(m.model.clone()).or_default().push(m.accuracy);
            f1.entry(m.model).or_default().push(m.macro_f1);
        }
    }
    let summarize = |m: BTreeMap<String, Vec<f64>>| m.into_iter().map(|(k, v)| (k, Summary::of(&v))).collect();
    Ok(RepeatedReport { split_seeds: split_seeds.to_vec(), accuracy: summarize(acc), macro_f1: summarize(f1) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::FeatureVector;
    use crate::labels::Label::{Disease as D, Intervention as I};

    #[test]
    fn hand_confusion_matrix() {
        let m = ModelEval::from_confusion("x", ConfusionMatrix([[50, 10], [5, 35]]));
        assert_eq!(m.accuracy, 0.85);
        let d = m.per_class[&D];
        assert_eq!(d.precision, 50.0 / 55.0);
        assert_eq!(d.recall, 50.0 / 60.0);
        let p = 50.0 / 55.0;
        let r = 50.0 / 60.0;
        assert_eq!(d.f1, 2.0 * p * r / (p + r));
        let i = m.per_class[&I];
        assert_eq!((i.precision, i.recall), (35.0 / 45.0, 35.0 / 40.0));
        assert_eq!(m.macro_f1, (d.f1 + i.f1) / 2.0);
        assert_eq!(m.weighted_f1, (d.f1 * 60.0 + i.f1 * 40.0) / 100.0);
    }

    #[test]
    fn perfect_classifier() {
        let m = ModelEval::from_confusion("p", ConfusionMatrix([[7, 0], [0, 3]]));
        assert_eq!((m.accuracy, m.macro_f1), (1.0, 1.0));
    }

    fn fixture(d: usize, i: usize) -> (Vec<String>, Vec<Label>) {
        let ids = (0..d + i).map(|k| format!("x{k:04}")).collect();
        let labels = (0..d + i).map(|k| if k < d { D } else { I }).collect();
        (ids, labels)
    }

    #[test]
    fn split_is_stratified_and_deterministic() {
        let (ids, labels) = fixture(1045, 505);
        let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
        let (train, test) = stratified_split(&refs, &labels, SplitConfig::default()).unwrap();
        assert_eq!(train.len() + test.len(), 1550);
        let test_d = test.iter().filter(|&&i| labels[i] == D).count();
        // round(0.7 * 1045) = 732 and round(0.7 * 505) = 354 go to training
        assert_eq!((test_d, test.len() - test_d), (1045 - 732, 505 - 354));
        assert_eq!((train, test.clone()), stratified_split(&refs, &labels, SplitConfig::default()).unwrap());

        let majority = ConfusionMatrix::from_pairs(test.iter().map(|&i| (labels[i], D)));
        assert_eq!(majority.accuracy(), 313.0 / 464.0);
    }

    #[test]
    fn too_few_docs() {
        let (ids, labels) = fixture(5, 1);
        let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
        assert_eq!(
            stratified_split(&refs, &labels, SplitConfig::default()),
            Err(ClassifyError::TooFewDocs { label: I, count: 1, needed: 2 })
        );
    }

    #[test]
    fn report_invariants() {
        let data: Vec<LabeledVector> = (0..40)
            .map(|k| {
                let y = if k % 3 == 0 { I } else { D };
                let dense = if y == D { [3, (k % 2) as u32, 0] } else { [0, 1, 2 + (k % 2) as u32] };
                LabeledVector { x: FeatureVector::from_dense(format!("v{k:02}"), &dense), y }
            })
            .collect();
        let specs: Vec<ModelSpec> = ModelKind::ALL.iter().map(|&k| ModelSpec::default_for(k)).collect();
        let r = evaluate(&data, 3, &specs, SplitConfig::default()).unwrap();
        assert_eq!(r.train_count + r.test_count, 40);
        for m in &r.models {
            assert_eq!(m.confusion.total(), r.test_count as u64);
            assert_eq!(m.accuracy, (m.confusion.0[0][0] + m.confusion.0[1][1]) as f64 / r.test_count as f64);
        }
        assert_eq!(r, evaluate(&data, 3, &specs, SplitConfig::default()).unwrap());

        let rep = repeated_splits(&data, 3, &specs, 0.7, &[1, 2, 3]).unwrap();
        assert_eq!(rep.macro_f1.len(), 3);
    }
}
