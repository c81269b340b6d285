use alloc::vec::Vec;

use super::{check_dim, BaseClassifier, ClassDistribution};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    None,
}

/// Dense layer `y = act(W x + b)` with `W` stored row-major, one row per output.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    weights: Vec<f64>,
    bias: Vec<f64>,
    inputs: usize,
    activation: Activation,
}

impl Layer {
    pub fn new(rows: Vec<Vec<f64>>, bias: Vec<f64>, activation: Activation) -> Result<Self> {
        let inputs = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || inputs == 0 {
            return Err(Error::InvalidModel("layer has an empty weight matrix".into()));
        }
        if rows.iter().any(|r| r.len() != inputs) {
            return Err(Error::InvalidModel("ragged weight matrix".into()));
        }
        if bias.len() != rows.len() {
            return Err(Error::InvalidModel(alloc::format!(
                "bias has {} entries for {} outputs",
                bias.len(),
                rows.len()
            )));
        }
        Ok(Layer { weights: rows.concat(), bias, inputs, activation })
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.bias.len()
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .chunks_exact(self.inputs)
            .zip(&self.bias)
            .map(|(row, b)| {
                let z = row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b;
                match self.activation {
                    Activation::Relu => z.max(0.0),
                    Activation::None => z,
                }
            })
            .collect()
    }
}

/// Feed-forward network with a softmax on the last layer's outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    layers: Vec<Layer>,
}

impl MlpModel {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidModel("model has no layers".into()));
        }
        for pair in layers.windows(2) {
            if pair[0].outputs() != pair[1].inputs() {
                return Err(Error::InvalidModel(alloc::format!(
                    "layer output {} does not feed input {}",
                    pair[0].outputs(),
                    pair[1].inputs()
                )));
            }
        }
        Ok(MlpModel { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn logits(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.input_dim(), x)?;
        let mut h = self.layers[0].forward(x);
        for layer in &self.layers[1..] {
            h = layer.forward(&h);
        }
        Ok(h)
    }
}

impl BaseClassifier for MlpModel {
    fn num_classes(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs()
    }

    fn input_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    fn classify(&self, x: &[f64]) -> Result<ClassDistribution> {
        ClassDistribution::softmax(&self.logits(x)?)
    }
}
