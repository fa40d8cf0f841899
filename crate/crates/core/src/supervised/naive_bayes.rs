//! Gaussian naive Bayes with empirical class priors.

use serde::{Deserialize, Serialize};

use crate::similarity::Features;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NaiveBayesParams {
    pub variance_floor: f64,
}

impl NaiveBayesParams {
    pub const DEFAULT: NaiveBayesParams = NaiveBayesParams { variance_floor: 1e-9 };
}

impl Default for NaiveBayesParams {
    fn default() -> Self {
        Self::DEFAULT
    }
}

/// Index 0 is the negative class, index 1 the positive class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNaiveBayes {
    pub log_prior: [f64; 2],
    pub mean: [Features; 2],
    pub variance: [Features; 2],
}

impl GaussianNaiveBayes {
    pub fn fit(x: &[Features], y: &[bool], p: &NaiveBayesParams) -> Self {
        let mut count = [0.0f64; 2];
        let mut mean = [[0.0; 4]; 2];
        for (row, &label) in x.iter().zip(y) {
            let c = usize::from(label);
            count[c] += 1.0;
            for f in 0..4 {
                mean[c][f] += row[f];
            }
        }
        for c in 0..2 {
            for f in 0..4 {
                mean[c][f] /= count[c];
            }
        }
        let mut variance = [[0.0; 4]; 2];
        for (row, &label) in x.iter().zip(y) {
            let c = usize::from(label);
            for f in 0..4 {
                variance[c][f] += (row[f] - mean[c][f]).powi(2) / count[c];
            }
        }
        for v in variance.iter_mut().flatten() {
            *v = v.max(p.variance_floor);
        }
        let n = count[0] + count[1];
        Self { log_prior: [(count[0] / n).ln(), (count[1] / n).ln()], mean, variance }
    }

    fn log_joint(&self, c: usize, x: &Features) -> f64 {
        let mut s = self.log_prior[c];
        for f in 0..4 {
            let v = self.variance[c][f];
            s -= 0.5 * ((2.0 * std::f64::consts::PI * v).ln() + (x[f] - self.mean[c][f]).powi(2) / v);
        }
        s
    }

    pub fn predict_proba(&self, x: &Features) -> f64 {
        let (l0, l1) = (self.log_joint(0, x), self.log_joint(1, x));
        let m = l0.max(l1);
        let (e0, e1) = ((l0 - m).exp(), (l1 - m).exp());
        e1 / (e0 + e1)
    }
}
