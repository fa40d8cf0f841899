//! L2-penalized logistic regression fit by full-batch gradient ascent on
//! standardized features.

use serde::{Deserialize, Serialize};

use crate::similarity::Features;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogisticParams {
    pub l2: f64,
    pub learning_rate: f64,
    pub max_iterations: usize,
    /// Stop when the gradient norm drops below this.
    pub tolerance: f64,
}

impl LogisticParams {
    pub const DEFAULT: LogisticParams =
        LogisticParams { l2: 1e-4, learning_rate: 0.5, max_iterations: 2_000, tolerance: 1e-7 };
}

impl Default for LogisticParams {
    fn default() -> Self {
        Self::DEFAULT
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticRegression {
    pub mean: Features,
    pub scale: Features,
    pub weights: Features,
    pub intercept: f64,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl LogisticRegression {
    pub fn fit(x: &[Features], y: &[bool], p: &LogisticParams) -> Self {
        let n = x.len() as f64;
        let mut mean = [0.0; 4];
        for row in x {
            for f in 0..4 {
                mean[f] += row[f];
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        let mut scale = [0.0; 4];
        for row in x {
            for f in 0..4 {
                scale[f] += (row[f] - mean[f]).powi(2) / n;
            }
        }
        for (s, m) in scale.iter_mut().zip(mean) {
            // Constant features keep unit scale.
            *s = if s.sqrt() > 1e-12 * (1.0 + m.abs()) { s.sqrt() } else { 1.0 };
        }
        let z: Vec<Features> = x.iter().map(|row| std::array::from_fn(|f| (row[f] - mean[f]) / scale[f])).collect();

        let mut w = [0.0; 4];
        let mut b = 0.0;
        for _ in 0..p.max_iterations {
            let mut gw = [0.0; 4];
            let mut gb = 0.0;
            for (row, &label) in z.iter().zip(y) {
                let pred = sigmoid(b + (0..4).map(|f| w[f] * row[f]).sum::<f64>());
                let err = f64::from(u8::from(label)) - pred;
                for f in 0..4 {
                    gw[f] += err * row[f] / n;
                }
                gb += err / n;
            }
            for f in 0..4 {
                gw[f] -= p.l2 * w[f];
            }
            let norm = (gw.iter().map(|g| g * g).sum::<f64>() + gb * gb).sqrt();
            for f in 0..4 {
                w[f] += p.learning_rate * gw[f];
            }
            b += p.learning_rate * gb;
            if norm < p.tolerance {
                break;
            }
        }
        Self { mean, scale, weights: w, intercept: b }
    }

    pub fn predict_proba(&self, x: &Features) -> f64 {
        let z: f64 = (0..4).map(|f| self.weights[f] * (x[f] - self.mean[f]) / self.scale[f]).sum();
        sigmoid(self.intercept + z)
    }
}
