use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_train, ClassifyError, FeatureVector, LabeledVector};
use crate::labels::Label;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmHyper {
    pub lambda: f64,
    pub epochs: usize,
    pub rng_seed: u64,
    /// Step size at t = 0; later steps follow `1 / (lambda * (t + t0))`.
    pub initial_step: f64,
}

impl Default for SvmHyper {
    fn default() -> Self {
        SvmHyper { lambda: 1e-4, epochs: 100, rng_seed: 42, initial_step: 0.1 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SvmMode {
    /// One scorer per class, prediction by highest score.
    #[default]
    Ovr,
    /// A single scorer with Disease as the positive class.
    Binary,
}

/// One linear scorer: `w . x + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearScorer {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearScorer {
    pub fn score(&self, x: &FeatureVector) -> f64 {
        x.dot_dense(&self.weights) + self.bias
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub mode: SvmMode,
    pub hyper: SvmHyper,
    /// OVR: one scorer per class in `Label` order. Binary: the Disease scorer.
    pub scorers: Vec<LinearScorer>,
}

impl SvmParams {
    /// Per-class scores. Binary mode reports `(s, -s)`.
    pub fn scores(&self, x: &FeatureVector) -> [f64; 2] {
        match self.mode {
            SvmMode::Ovr => [self.scorers[0].score(x), self.scorers[1].score(x)],
            SvmMode::Binary => {
                let s = self.scorers[0].score(x);
                [s, -s]
            }
        }
    }

    /// Highest score wins; ties go to Disease.
    pub fn predict(&self, x: &FeatureVector) -> Label {
        let [d, i] = self.scores(x);
        if i > d {
            Label::Intervention
        } else {
            Label::Disease
        }
    }
}

/// `(lambda/2)|w|^2 + mean_i max(0, 1 - y_i (w . x_i + b))` with `y = +1` for `positive`.
pub fn objective(train: &[LabeledVector], positive: Label, lambda: f64, s: &LinearScorer) -> f64 {
    let reg = 0.5 * lambda * s.weights.iter().map(|w| w * w).sum::<f64>();
    let hinge: f64 = train
        .iter()
        .map(|ex| (1.0 - sign(ex.y, positive) * s.score(&ex.x)).max(0.0))
        .sum();
    reg + hinge / train.len() as f64
}

/// Subgradient of [`objective`] as `(d/dw, d/db)`. At a kink the zero branch is taken.
pub fn subgradient(train: &[LabeledVector], positive: Label, lambda: f64, s: &LinearScorer) -> (Vec<f64>, f64) {
    let n = train.len() as f64;
    let mut gw: Vec<f64> = s.weights.iter().map(|w| lambda * w).collect();
    let mut gb = 0.0;
    for ex in train {
        let y = sign(ex.y, positive);
        if y * s.score(&ex.x) < 1.0 {
            for &(j, c) in &ex.x.counts {
                gw[j as usize] -= y * c as f64 / n;
            }
            gb -= y / n;
        }
    }
    (gw, gb)
}

fn sign(y: Label, positive: Label) -> f64 {
    if y == positive {
        1.0
    } else {
        -1.0
    }
}

/// Stochastic subgradient descent on the hinge objective. The visiting order
/// is a fresh permutation per epoch drawn from `rng_seed`, applied to the
/// training set sorted by doc id, so the result does not depend on the order
/// the caller passes examples in.
pub fn train_svm(train: &[LabeledVector], dim: usize, hyper: SvmHyper, mode: SvmMode) -> Result<SvmParams, ClassifyError> {
    if !(hyper.lambda > 0.0 && hyper.lambda.is_finite()) {
        return Err(ClassifyError::InvalidParam(format!("lambda must be positive, got {}", hyper.lambda)));
    }
    if !(hyper.initial_step > 0.0 && hyper.initial_step.is_finite()) {
        return Err(ClassifyError::InvalidParam(format!("initial step must be positive, got {}", hyper.initial_step)));
    }
    if hyper.epochs == 0 {
        return Err(ClassifyError::InvalidParam("at least one epoch is required".into()));
    }
    check_train(train, dim)?;
    let mut sorted: Vec<&LabeledVector> = train.iter().collect();
    sorted.sort_by(|a, b| a.x.doc_id.cmp(&b.x.doc_id));

    let mut rng = ChaCha8Rng::seed_from_u64(hyper.rng_seed);
    let mut order: Vec<usize> = (0..sorted.len()).collect();
    let schedule: Vec<Vec<usize>> = (0..hyper.epochs)
        .map(|_| {
            order.shuffle(&mut rng);
            order.clone()
        })
        .collect();

    let positives: &[Label] = match mode {
        SvmMode::Ovr => &Label::ALL,
        SvmMode::Binary => &[Label::Disease],
    };
    let scorers = positives.iter().map(|&p| sgd(&sorted, dim, p, &hyper, &schedule)).collect();
    Ok(SvmParams { mode, hyper, scorers })
}

fn sgd(train: &[&LabeledVector], dim: usize, positive: Label, hyper: &SvmHyper, schedule: &[Vec<usize>]) -> LinearScorer {
    let lambda = hyper.lambda;
    let t0 = 1.0 / (lambda * hyper.initial_step);
    let mut w = vec![0.0f64; dim];
    let mut b = 0.0f64;
    let mut t = 0.0f64;
    for epoch in schedule {
        for &i in epoch {
            let ex = train[i];
            let eta = 1.0 / (lambda * (t + t0));
            let y = sign(ex.y, positive);
            let margin = y * (ex.x.dot_dense(&w) + b);
            let shrink = 1.0 - eta * lambda;
            for wj in w.iter_mut() {
                *wj *= shrink;
            }
            if margin < 1.0 {
                for &(j, c) in &ex.x.counts {
                    w[j as usize] += eta * y * c as f64;
                }
                b += eta * y;
            }
            t += 1.0;
        }
    }
    LinearScorer { weights: w, bias: b }
}
