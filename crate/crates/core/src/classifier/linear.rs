use alloc::vec::Vec;

use super::{check_dim, BaseClassifier, ClassDistribution};
use crate::{Error, Result};

/// Binary linear classifier: class 1 where `w·x + b > 0`, class 0 otherwise.
///
/// The reported distribution is `(1 - s, s)` with `s = logistic(w·x + b)`, so
/// the argmax agrees with the sign of the score.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    w: Vec<f64>,
    b: f64,
    norm: f64,
}

impl LinearModel {
    pub fn new(w: Vec<f64>, b: f64) -> Result<Self> {
        let norm = libm::sqrt(w.iter().map(|v| v * v).sum());
        if norm.is_nan() || norm <= 0.0 || !norm.is_finite() || !b.is_finite() {
            return Err(Error::InvalidModel("linear model needs a finite nonzero weight vector".into()));
        }
        Ok(LinearModel { w, b, norm })
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn bias(&self) -> f64 {
        self.b
    }

    pub fn weight_norm(&self) -> f64 {
        self.norm
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        self.w.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.b
    }
}

impl BaseClassifier for LinearModel {
    fn num_classes(&self) -> usize {
        2
    }

    fn input_dim(&self) -> usize {
        self.w.len()
    }

    fn classify(&self, x: &[f64]) -> Result<ClassDistribution> {
        check_dim(self.w.len(), x)?;
        ClassDistribution::softmax(&[0.0, self.score(x)])
    }
}
