use serde::{Deserialize, Serialize};

use super::{check_train, ClassifyError, FeatureVector, LabeledVector};
use crate::labels::Label;

/// Lazy k-nearest-neighbour model under cosine distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnParams {
    pub k: usize,
    /// Training set in doc id order.
    pub train: Vec<LabeledVector>,
    /// Answer for queries with no keyword at all.
    pub majority: Label,
}

/// `1 - cos(a, b)`. A zero vector is at distance 1 from everything.
pub fn cosine_distance(a: &FeatureVector, b: &FeatureVector) -> f64 {
    let (na, nb) = (a.sq_norm(), b.sq_norm());
    if na == 0.0 || nb == 0.0 {
        return 1.0;
    }
    1.0 - a.dot(b) / (na.sqrt() * nb.sqrt())
}

pub fn train_knn(train: &[LabeledVector], dim: usize, k: usize) -> Result<KnnParams, ClassifyError> {
    if k == 0 || k.is_multiple_of(2) {
        return Err(ClassifyError::EvenK(k));
    }
    let counts = check_train(train, dim)?;
    if k > train.len() {
        return Err(ClassifyError::KTooLarge { k, n: train.len() });
    }
    let mut stored = train.to_vec();
    stored.sort_by(|a, b| a.x.doc_id.cmp(&b.x.doc_id));
    let majority = if counts[1] > counts[0] { Label::Intervention } else { Label::Disease };
    Ok(KnnParams { k, train: stored, majority })
}

impl KnnParams {
    /// Indices into `train` of the k nearest points, nearest first; equal
    /// distances keep doc id order.
    pub fn neighbours(&self, x: &FeatureVector) -> Vec<usize> {
        let mut d: Vec<(f64, usize)> = self.train.iter().enumerate().map(|(i, t)| (cosine_distance(x, &t.x), i)).collect();
        d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        d.into_iter().take(self.k).map(|(_, i)| i).collect()
    }

    pub fn predict(&self, x: &FeatureVector) -> Label {
        if x.is_zero() {
            return self.majority;
        }
        let disease = self.neighbours(x).into_iter().filter(|&i| self.train[i].y == Label::Disease).count();
        if 2 * disease > self.k {
            Label::Disease
        } else {
            Label::Intervention
        }
    }
}
