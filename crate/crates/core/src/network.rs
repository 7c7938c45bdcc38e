//! Layered dense feedforward networks and forward propagation.
//!
//! Networks serialize to a JSON document:
//!
//! ```json
//! {
//!   "inputs": ["p", "q"],
//!   "layers": [
//!     {
//!       "weights": [[-10.0, 0.0], [0.0, 20.0]],
//!       "biases": [5.0, -10.0],
//!       "activation": { "kind": "sigmoid" }
//!     },
//!     {
//!       "weights": [[10.0, 10.0]],
//!       "biases": [-5.0],
//!       "activation": { "kind": "step", "threshold": 0.0 }
//!     }
//!   ]
//! }
//! ```
//!
//! `weights` is row-major: one row per neuron of the layer, one column per
//! neuron (or input) of the previous layer. Numbers are written in the
//! shortest decimal form that reads back to the identical `f64`.

use serde::{Deserialize, Serialize};

/// Cut used by [`binarize`] unless told otherwise. Values equal to the cut map to 1.
pub const DEFAULT_CUT: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Activation {
    Sigmoid,
    /// Fires (outputs 1) when the pre-activation is at least `threshold`.
    Step {
        threshold: f64,
    },
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Sigmoid => sigmoid(x),
            Activation::Step { threshold } => {
                if x >= threshold {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NetworkError {
    #[error("network needs at least one layer")]
    NoLayers,
    #[error("layer {layer} has no neurons")]
    EmptyLayer { layer: usize },
    #[error("layer {layer}: {biases} biases for {rows} weight rows")]
    BiasMismatch {
        layer: usize,
        rows: usize,
        biases: usize,
    },
    #[error("layer {layer}, row {row}: expected {expected} weights, found {found}")]
    WidthMismatch {
        layer: usize,
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("layer {layer} contains a non-finite parameter")]
    NonFiniteParameter { layer: usize },
    #[error("expected {expected} inputs, got {found}")]
    InputLength { expected: usize, found: usize },
    #[error("input {index} is not finite")]
    NonFiniteInput { index: usize },
    #[error("malformed network document: {0}")]
    Document(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    weights: Vec<Vec<f64>>,
    biases: Vec<f64>,
    activation: Activation,
}

impl Layer {
    /// Builds a layer; row widths are checked against each other here and
    /// against the previous layer when the network is assembled.
    pub fn new(
        weights: Vec<Vec<f64>>,
        biases: Vec<f64>,
        activation: Activation,
    ) -> Result<Self, NetworkError> {
        let layer = Layer {
            weights,
            biases,
            activation,
        };
        let width = layer.weights.first().map_or(0, Vec::len);
        layer.check(0, width)?;
        Ok(layer)
    }

    fn check(&self, index: usize, input_width: usize) -> Result<(), NetworkError> {
        if self.weights.is_empty() {
            return Err(NetworkError::EmptyLayer { layer: index });
        }
        if self.biases.len() != self.weights.len() {
            return Err(NetworkError::BiasMismatch {
                layer: index,
                rows: self.weights.len(),
                biases: self.biases.len(),
            });
        }
        for (row, w) in self.weights.iter().enumerate() {
            if w.len() != input_width {
                return Err(NetworkError::WidthMismatch {
                    layer: index,
                    row,
                    expected: input_width,
                    found: w.len(),
                });
            }
        }
        let finite = self
            .biases
            .iter()
            .chain(self.weights.iter().flatten())
            .all(|x| x.is_finite());
        let threshold_ok = match self.activation {
            Activation::Step { threshold } => threshold.is_finite(),
            Activation::Sigmoid => true,
        };
        if !finite || !threshold_ok {
            return Err(NetworkError::NonFiniteParameter { layer: index });
        }
        Ok(())
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn width(&self) -> usize {
        self.biases.len()
    }

    pub fn input_width(&self) -> usize {
        self.weights[0].len()
    }

    pub(crate) fn params_mut(&mut self) -> (&mut [Vec<f64>], &mut [f64]) {
        (&mut self.weights, &mut self.biases)
    }

    /// `W·input + b`.
    pub fn pre_activation(&self, input: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.biases)
            .map(|(row, b)| b + row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NetworkDoc")]
pub struct Network {
    inputs: Vec<String>,
    layers: Vec<Layer>,
}

#[derive(Deserialize)]
struct NetworkDoc {
    inputs: Vec<String>,
    layers: Vec<Layer>,
}

impl TryFrom<NetworkDoc> for Network {
    type Error = NetworkError;

    fn try_from(doc: NetworkDoc) -> Result<Self, Self::Error> {
        Network::new(doc.inputs, doc.layers)
    }
}

/// How activations travel between layers during [`Network::forward_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Propagation {
    /// Each layer sees the previous layer's sigmoid values unchanged.
    #[default]
    Raw,
    /// Hidden activations are binarized at [`DEFAULT_CUT`] before feeding the
    /// next layer; the final layer's values stay raw. This is gate-level
    /// evaluation: every neuron sees exact 0/1 inputs.
    Binarized,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerTrace {
    pub pre_activation: Vec<f64>,
    pub activation: Vec<f64>,
}

/// Everything computed during one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub input: Vec<f64>,
    pub layers: Vec<LayerTrace>,
}

impl Trace {
    pub fn output(&self) -> &[f64] {
        &self
            .layers
            .last()
            .expect("networks have at least one layer")
            .activation
    }

    pub fn binarize(&self, cut: f64) -> Vec<bool> {
        binarize(self.output(), cut)
    }
}

/// `v ↦ v ≥ cut`.
pub fn binarize(values: &[f64], cut: f64) -> Vec<bool> {
    values.iter().map(|&v| v >= cut).collect()
}

impl Network {
    pub fn new(inputs: Vec<String>, layers: Vec<Layer>) -> Result<Self, NetworkError> {
        if layers.is_empty() {
            return Err(NetworkError::NoLayers);
        }
        let mut width = inputs.len();
        for (i, layer) in layers.iter().enumerate() {
            layer.check(i, width)?;
            width = layer.width();
        }
        Ok(Network { inputs, layers })
    }

    pub fn inputs(&self) -> &[String] {
        &self.inputs
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn input_width(&self) -> usize {
        self.inputs.len()
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().map_or(0, Layer::width)
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn neuron_count(&self) -> usize {
        self.layers.iter().map(Layer::width).sum()
    }

    /// Widths from the input layer through the output layer.
    pub fn topology(&self) -> Vec<usize> {
        std::iter::once(self.input_width())
            .chain(self.layers.iter().map(Layer::width))
            .collect()
    }

    pub fn forward(&self, input: &[f64]) -> Result<Trace, NetworkError> {
        self.forward_with(input, Propagation::Raw)
    }

    pub fn forward_with(&self, input: &[f64], mode: Propagation) -> Result<Trace, NetworkError> {
        if input.len() != self.inputs.len() {
            return Err(NetworkError::InputLength {
                expected: self.inputs.len(),
                found: input.len(),
            });
        }
        if let Some(index) = input.iter().position(|x| !x.is_finite()) {
            return Err(NetworkError::NonFiniteInput { index });
        }
        let mut layers = Vec::with_capacity(self.layers.len());
        let mut current = input.to_vec();
        for (i, layer) in self.layers.iter().enumerate() {
            let pre_activation = layer.pre_activation(&current);
            let activation: Vec<f64> = pre_activation
                .iter()
                .map(|&z| layer.activation.apply(z))
                .collect();
            let last = i + 1 == self.layers.len();
            current = match mode {
                Propagation::Binarized if !last => binarize(&activation, DEFAULT_CUT)
                    .into_iter()
                    .map(f64::from)
                    .collect(),
                _ => activation.clone(),
            };
            layers.push(LayerTrace {
                pre_activation,
                activation,
            });
        }
        Ok(Trace {
            input: input.to_vec(),
            layers,
        })
    }

    pub fn to_document(&self) -> String {
        serde_json::to_string_pretty(self).expect("network serialization cannot fail")
    }

    pub fn from_document(text: &str) -> Result<Self, NetworkError> {
        serde_json::from_str(text).map_err(|e| NetworkError::Document(e.to_string()))
    }
}
