use serde::{Deserialize, Serialize};

use super::{check_train, ClassifyError, FeatureVector, LabeledVector};
use crate::labels::Label;

/// Multinomial naive Bayes with additive smoothing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MnbParams {
    pub smoothing: f64,
    /// Indexed by `Label::index`.
    pub log_prior: Vec<f64>,
    /// `log_likelihood[class][column]`.
    pub log_likelihood: Vec<Vec<f64>>,
}

pub fn train_mnb(train: &[LabeledVector], dim: usize, smoothing: f64) -> Result<MnbParams, ClassifyError> {
    if !(smoothing > 0.0 && smoothing.is_finite()) {
        return Err(ClassifyError::InvalidParam(format!("smoothing must be positive, got {smoothing}")));
    }
    let docs = check_train(train, dim)?;
    let mut counts = vec![vec![0u64; dim]; 2];
    for ex in train {
        for &(j, c) in &ex.x.counts {
            counts[ex.y.index()][j as usize] += c as u64;
        }
    }
    let n = train.len() as f64;
    let log_prior = docs.iter().map(|&d| (d as f64 / n).ln()).collect();
    let log_likelihood = counts
        .iter()
        .map(|row| {
            let total: u64 = row.iter().sum();
            let denom = (total as f64 + smoothing * dim as f64).ln();
            row.iter().map(|&c| (c as f64 + smoothing).ln() - denom).collect()
        })
        .collect();
    let params = MnbParams { smoothing, log_prior, log_likelihood };
    params.check_normalized()?;
    Ok(params)
}

impl MnbParams {
    /// Each class's likelihoods must form a distribution over the vocabulary.
    pub fn check_normalized(&self) -> Result<(), ClassifyError> {
        for label in Label::ALL {
            let sum: f64 = self.log_likelihood[label.index()].iter().map(|l| l.exp()).sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(ClassifyError::Unnormalized { label, sum });
            }
        }
        Ok(())
    }

    /// Unnormalized log posterior per class.
    pub fn log_joint(&self, x: &FeatureVector) -> [f64; 2] {
        Label::ALL.map(|l| {
            let ll = &self.log_likelihood[l.index()];
            self.log_prior[l.index()] + x.counts.iter().map(|&(j, c)| c as f64 * ll[j as usize]).sum::<f64>()
        })
    }

    pub fn posterior(&self, x: &FeatureVector) -> [f64; 2] {
        let [a, b] = self.log_joint(x);
        let m = a.max(b);
        let (ea, eb) = ((a - m).exp(), (b - m).exp());
        [ea / (ea + eb), eb / (ea + eb)]
    }

    /// Higher log posterior wins; exact ties go to Disease.
    pub fn predict(&self, x: &FeatureVector) -> Label {
        let [d, i] = self.log_joint(x);
        if i > d {
            Label::Intervention
        } else {
            Label::Disease
        }
    }
}
