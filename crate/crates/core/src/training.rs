//! Full-batch backpropagation on sigmoid networks and the single-unit perceptron.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::formula::TruthTable;
use crate::network::{Activation, Layer, Network, NetworkError};

/// Name of the generator behind every seeded run, recorded in reports.
pub const RNG_NAME: &str = "chacha20";

/// Loss above which a run is treated as diverged.
pub const DIVERGENCE_LOSS: f64 = 1e6;

pub fn seeded_rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrainError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("example {index}: expected {expected} values, found {found}")]
    RaggedDataset {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("dataset has {data} {what}, network has {network}")]
    Shape {
        what: &'static str,
        data: usize,
        network: usize,
    },
    #[error("layer {layer} uses a step activation, which has no gradient")]
    NotDifferentiable { layer: usize },
    #[error("invalid training spec: {0}")]
    InvalidSpec(String),
    #[error("perceptron needs exactly one target per example, found {0}")]
    NotSingleOutput(usize),
    #[error("training diverged at epoch {}: loss {}", report.epochs_run, report.final_loss)]
    Diverged { report: Box<TrainReport> },
    #[error(transparent)]
    Network(#[from] NetworkError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example {
    pub input: Vec<f64>,
    pub target: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    examples: Vec<Example>,
}

impl Dataset {
    pub fn new(examples: Vec<Example>) -> Result<Self, TrainError> {
        let first = examples.first().ok_or(TrainError::EmptyDataset)?;
        let (ni, nt) = (first.input.len(), first.target.len());
        for (index, e) in examples.iter().enumerate() {
            if e.input.len() != ni {
                return Err(TrainError::RaggedDataset {
                    index,
                    expected: ni,
                    found: e.input.len(),
                });
            }
            if e.target.len() != nt {
                return Err(TrainError::RaggedDataset {
                    index,
                    expected: nt,
                    found: e.target.len(),
                });
            }
        }
        Ok(Dataset { examples })
    }

    /// One example per row, single target; rows in table order.
    pub fn from_truth_table(table: &TruthTable) -> Self {
        let examples = table
            .rows()
            .map(|r| Example {
                input: r.inputs.iter().map(|&b| f64::from(b)).collect(),
                target: vec![f64::from(r.output)],
            })
            .collect();
        Dataset { examples }
    }

    pub fn examples(&self) -> &[Example] {
        &self.examples
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn input_width(&self) -> usize {
        self.examples[0].input.len()
    }

    pub fn target_width(&self) -> usize {
        self.examples[0].target.len()
    }

    fn check(&self, net: &Network) -> Result<(), TrainError> {
        if self.input_width() != net.input_width() {
            return Err(TrainError::Shape {
                what: "inputs",
                data: self.input_width(),
                network: net.input_width(),
            });
        }
        if self.target_width() != net.output_width() {
            return Err(TrainError::Shape {
                what: "targets",
                data: self.target_width(),
                network: net.output_width(),
            });
        }
        Ok(())
    }
}

/// Sum over examples of `½·Σ(target − output)²`.
pub fn loss(net: &Network, data: &Dataset) -> Result<f64, TrainError> {
    data.check(net)?;
    let mut total = 0.0;
    for e in data.examples() {
        let trace = net.forward(&e.input)?;
        total += half_squared_error(trace.output(), &e.target);
    }
    Ok(total)
}

fn half_squared_error(output: &[f64], target: &[f64]) -> f64 {
    0.5 * output
        .iter()
        .zip(target)
        .map(|(o, t)| (t - o) * (t - o))
        .sum::<f64>()
}

/// Largest |target − output| over every example and output unit.
pub fn max_error(net: &Network, data: &Dataset) -> Result<f64, TrainError> {
    data.check(net)?;
    let mut worst: f64 = 0.0;
    for e in data.examples() {
        let trace = net.forward(&e.input)?;
        for (o, t) in trace.output().iter().zip(&e.target) {
            worst = worst.max((t - o).abs());
        }
    }
    Ok(worst)
}

/// Loss gradient, laid out like the network's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub weights: Vec<Vec<Vec<f64>>>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradient {
    fn zeros_like(net: &Network) -> Self {
        Gradient {
            weights: net
                .layers()
                .iter()
                .map(|l| vec![vec![0.0; l.input_width()]; l.width()])
                .collect(),
            biases: net.layers().iter().map(|l| vec![0.0; l.width()]).collect(),
        }
    }

    /// All components flattened: per layer, weights row-major then biases.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend(w.iter().flatten());
            out.extend(b);
        }
        out
    }

    pub fn norm(&self) -> f64 {
        self.flatten().iter().map(|g| g * g).sum::<f64>().sqrt()
    }
}

fn require_sigmoid(net: &Network) -> Result<(), TrainError> {
    match net
        .layers()
        .iter()
        .position(|l| l.activation() != Activation::Sigmoid)
    {
        Some(layer) => Err(TrainError::NotDifferentiable { layer }),
        None => Ok(()),
    }
}

/// Exact gradient of [`loss`] by reverse-mode differentiation, using `σ' = σ(1 − σ)`.
pub fn gradient(net: &Network, data: &Dataset) -> Result<Gradient, TrainError> {
    data.check(net)?;
    require_sigmoid(net)?;
    let mut grad = Gradient::zeros_like(net);
    let layers = net.layers();
    for e in data.examples() {
        let trace = net.forward(&e.input)?;
        // dL/dz for the output layer: (o − t)·o(1 − o)
        let mut delta: Vec<f64> = trace
            .output()
            .iter()
            .zip(&e.target)
            .map(|(o, t)| (o - t) * o * (1.0 - o))
            .collect();
        for l in (0..layers.len()).rev() {
            let prev = if l == 0 {
                &trace.input
            } else {
                &trace.layers[l - 1].activation
            };
            for (j, d) in delta.iter().enumerate() {
                grad.biases[l][j] += d;
                for (g, x) in grad.weights[l][j].iter_mut().zip(prev) {
                    *g += d * x;
                }
            }
            if l > 0 {
                let w = layers[l].weights();
                delta = prev
                    .iter()
                    .enumerate()
                    .map(|(i, a)| {
                        let back: f64 = delta.iter().zip(w).map(|(d, row)| d * row[i]).sum();
                        back * a * (1.0 - a)
                    })
                    .collect();
            }
        }
    }
    Ok(grad)
}

/// Moves every parameter by `−rate·gradient`.
pub fn apply_gradient(net: &mut Network, grad: &Gradient, rate: f64) {
    for (l, layer) in net.layers_mut().iter_mut().enumerate() {
        let (weights, biases) = layer.params_mut();
        for (row, grow) in weights.iter_mut().zip(&grad.weights[l]) {
            for (w, g) in row.iter_mut().zip(grow) {
                *w -= rate * g;
            }
        }
        for (b, g) in biases.iter_mut().zip(&grad.biases[l]) {
            *b -= rate * g;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSpec {
    /// Layer widths, input layer first.
    pub topology: Vec<usize>,
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// Converged once every |target − output| is below this.
    pub target_max_error: f64,
    pub seed: u64,
    /// Initial parameters are uniform in `[-init_scale, init_scale]`.
    pub init_scale: f64,
}

impl Default for TrainSpec {
    fn default() -> Self {
        TrainSpec {
            topology: vec![2, 2, 1],
            learning_rate: 0.5,
            max_epochs: 20_000,
            target_max_error: 0.4,
            seed: 0,
            init_scale: 1.0,
        }
    }
}

impl TrainSpec {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |msg: &str| Err(TrainError::InvalidSpec(msg.to_owned()));
        if self.topology.len() < 2 || self.topology.contains(&0) {
            return bad("topology needs an input width and at least one positive layer width");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning rate must be positive");
        }
        if !(self.init_scale.is_finite() && self.init_scale > 0.0) {
            return bad("init scale must be positive");
        }
        if !(self.target_max_error > 0.0 && self.target_max_error < 1.0) {
            return bad("target max error must lie in (0, 1)");
        }
        Ok(())
    }

    /// Draws the initial network: per layer, per neuron, its weights then its bias.
    pub fn initial_network(&self, inputs: Vec<String>) -> Result<Network, TrainError> {
        self.validate()?;
        let mut rng = seeded_rng(self.seed);
        let s = self.init_scale;
        let mut layers = Vec::with_capacity(self.topology.len() - 1);
        for pair in self.topology.windows(2) {
            let (fan_in, width) = (pair[0], pair[1]);
            let mut weights = Vec::with_capacity(width);
            let mut biases = Vec::with_capacity(width);
            for _ in 0..width {
                weights.push((0..fan_in).map(|_| rng.gen_range(-s..=s)).collect());
                biases.push(rng.gen_range(-s..=s));
            }
            layers.push(Layer::new(weights, biases, Activation::Sigmoid)?);
        }
        Ok(Network::new(inputs, layers)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub spec: TrainSpec,
    pub rng: String,
    pub network: Network,
    /// Gradient steps taken.
    pub epochs_run: usize,
    pub final_loss: f64,
    pub max_error: f64,
    pub converged: bool,
    /// Loss before each step, plus the loss of the final network.
    pub loss_history: Vec<f64>,
}

impl TrainReport {
    /// `epoch,loss` lines with a header.
    pub fn loss_csv(&self) -> String {
        let mut out = String::from("epoch,loss\n");
        for (i, l) in self.loss_history.iter().enumerate() {
            out.push_str(&format!("{i},{l:e}\n"));
        }
        out
    }
}

fn input_names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("x{i}")).collect()
}

/// Trains a freshly initialized network with full-batch gradient descent.
pub fn train_backprop(spec: &TrainSpec, data: &Dataset) -> Result<TrainReport, TrainError> {
    train_backprop_named(spec, data, input_names(data.input_width()))
}

/// [`train_backprop`] with explicit input names on the resulting network.
pub fn train_backprop_named(
    spec: &TrainSpec,
    data: &Dataset,
    inputs: Vec<String>,
) -> Result<TrainReport, TrainError> {
    let mut net = spec.initial_network(inputs)?;
    data.check(&net)?;
    let mut history = Vec::new();
    let mut epochs = 0;
    loop {
        let current = loss(&net, data)?;
        history.push(current);
        let worst = max_error(&net, data)?;
        let report = |net: Network, history: Vec<f64>, converged| TrainReport {
            spec: spec.clone(),
            rng: RNG_NAME.to_owned(),
            network: net,
            epochs_run: epochs,
            final_loss: current,
            max_error: worst,
            converged,
            loss_history: history,
        };
        if !current.is_finite() || current > DIVERGENCE_LOSS {
            return Err(TrainError::Diverged {
                report: Box::new(report(net, history, false)),
            });
        }
        let converged = worst < spec.target_max_error;
        if converged || epochs == spec.max_epochs {
            return Ok(report(net, history, converged));
        }
        let grad = gradient(&net, data)?;
        apply_gradient(&mut net, &grad, spec.learning_rate);
        epochs += 1;
    }
}

/// Presentation order of examples within each perceptron epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ExampleOrder {
    Fixed,
    Shuffled { seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerceptronReport {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub epochs_run: usize,
    /// Misclassified examples under the final weights.
    pub misclassifications: usize,
    pub converged: bool,
    pub order: ExampleOrder,
}

impl PerceptronReport {
    /// The trained unit as a one-layer step network with threshold 0.
    pub fn network(&self) -> Result<Network, NetworkError> {
        let layer = Layer::new(
            vec![self.weights.clone()],
            vec![self.bias],
            Activation::Step { threshold: 0.0 },
        )?;
        Network::new(input_names(self.weights.len()), vec![layer])
    }
}

fn step_output(weights: &[f64], bias: f64, input: &[f64]) -> f64 {
    let sum: f64 = bias + weights.iter().zip(input).map(|(w, x)| w * x).sum::<f64>();
    Activation::Step { threshold: 0.0 }.apply(sum)
}

/// Error-correction rule on one step unit, starting from zero weights and
/// visiting examples in table order.
pub fn train_perceptron(
    data: &Dataset,
    rate: f64,
    max_epochs: usize,
) -> Result<PerceptronReport, TrainError> {
    train_perceptron_ordered(data, rate, max_epochs, ExampleOrder::Fixed)
}

pub fn train_perceptron_ordered(
    data: &Dataset,
    rate: f64,
    max_epochs: usize,
    order: ExampleOrder,
) -> Result<PerceptronReport, TrainError> {
    if data.target_width() != 1 {
        return Err(TrainError::NotSingleOutput(data.target_width()));
    }
    if !(rate.is_finite() && rate > 0.0) {
        return Err(TrainError::InvalidSpec(
            "learning rate must be positive".into(),
        ));
    }
    let mut rng = match order {
        ExampleOrder::Shuffled { seed } => Some(seeded_rng(seed)),
        ExampleOrder::Fixed => None,
    };
    let mut weights = vec![0.0; data.input_width()];
    let mut bias = 0.0;
    let mut visit: Vec<usize> = (0..data.len()).collect();
    let mut epochs = 0;
    let count_errors = |w: &[f64], b: f64| {
        data.examples()
            .iter()
            .filter(|e| step_output(w, b, &e.input) != e.target[0])
            .count()
    };
    while epochs < max_epochs && count_errors(&weights, bias) > 0 {
        if let Some(rng) = rng.as_mut() {
            visit.shuffle(rng);
        }
        for &i in &visit {
            let e = &data.examples()[i];
            let err = e.target[0] - step_output(&weights, bias, &e.input);
            if err != 0.0 {
                for (w, x) in weights.iter_mut().zip(&e.input) {
                    *w += rate * err * x;
                }
                bias += rate * err;
            }
        }
        epochs += 1;
    }
    let misclassifications = count_errors(&weights, bias);
    Ok(PerceptronReport {
        weights,
        bias,
        epochs_run: epochs,
        misclassifications,
        converged: misclassifications == 0,
        order,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compiler::compile;
    use crate::formula::{parse, truth_table};

    fn table_data(s: &str) -> Dataset {
        Dataset::from_truth_table(&truth_table(&parse(s).unwrap()).unwrap())
    }

    fn single(w: f64, b: f64) -> Network {
        let layer = Layer::new(vec![vec![w]], vec![b], Activation::Sigmoid).unwrap();
        Network::new(vec!["x".into()], vec![layer]).unwrap()
    }

    fn example(input: &[f64], target: &[f64]) -> Example {
        Example {
            input: input.to_vec(),
            target: target.to_vec(),
        }
    }

    #[test]
    fn loss_values() {
        let data = Dataset::new(vec![example(&[1.0], &[1.0])]).unwrap();
        assert_eq!(loss(&single(0.0, 0.0), &data).unwrap(), 0.125);
        let exact = Dataset::new(vec![example(&[1.0], &[0.5])]).unwrap();
        assert_eq!(loss(&single(0.0, 0.0), &exact).unwrap(), 0.0);
    }

    #[test]
    fn compiled_implication_loss_is_tiny() {
        let f = parse("p -> q").unwrap();
        let net = compile(&f).unwrap();
        let l = loss(&net, &table_data("p -> q")).unwrap();
        // Raw propagation: worst row sits at σ(-4.93...) rather than σ(-5).
        assert!(l > 0.0 && l < 1e-4, "{l}");
    }

    #[test]
    fn gradient_vanishes_at_exact_fit() {
        let data = Dataset::new(vec![example(&[1.0], &[0.5])]).unwrap();
        let g = gradient(&single(0.0, 0.0), &data).unwrap();
        assert!(g.flatten().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn gradient_rejects_step_layers() {
        let layer = Layer::new(
            vec![vec![1.0]],
            vec![0.0],
            Activation::Step { threshold: 0.0 },
        )
        .unwrap();
        let net = Network::new(vec!["x".into()], vec![layer]).unwrap();
        let data = Dataset::new(vec![example(&[1.0], &[1.0])]).unwrap();
        assert_eq!(
            gradient(&net, &data),
            Err(TrainError::NotDifferentiable { layer: 0 })
        );
    }

    #[test]
    fn shape_mismatch() {
        let data = Dataset::new(vec![example(&[1.0, 0.0], &[1.0])]).unwrap();
        assert!(matches!(
            loss(&single(1.0, 0.0), &data),
            Err(TrainError::Shape { what: "inputs", .. })
        ));
        assert!(matches!(
            Dataset::new(vec![example(&[1.0], &[1.0]), example(&[1.0, 1.0], &[0.0])]),
            Err(TrainError::RaggedDataset { index: 1, .. })
        ));
        assert_eq!(Dataset::new(vec![]), Err(TrainError::EmptyDataset));
    }

    #[test]
    fn spec_validation() {
        let mut spec = TrainSpec::default();
        assert!(spec.validate().is_ok());
        spec.learning_rate = 0.0;
        assert!(spec.validate().is_err());
        let spec = TrainSpec {
            target_max_error: 1.0,
            ..TrainSpec::default()
        };
        assert!(spec.validate().is_err());
        let spec = TrainSpec {
            topology: vec![2],
            ..TrainSpec::default()
        };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn implication_is_learnable() {
        let data = table_data("p -> q");
        let report = train_backprop(&TrainSpec::default(), &data).unwrap();
        assert!(report.converged);
        assert_eq!(report.loss_history.len(), report.epochs_run + 1);
        for (e, want) in data.examples().iter().zip([true, false, true, true]) {
            let out = report.network.forward(&e.input).unwrap().binarize(0.5);
            assert_eq!(out, vec![want]);
        }
    }

    #[test]
    fn unreachable_target_does_not_converge() {
        // Targets 0 and 1 for the same input cannot both be within 0.01.
        let data = Dataset::new(vec![example(&[1.0], &[0.0]), example(&[1.0], &[1.0])]).unwrap();
        let spec = TrainSpec {
            topology: vec![1, 1],
            target_max_error: 0.01,
            max_epochs: 500,
            ..TrainSpec::default()
        };
        let report = train_backprop(&spec, &data).unwrap();
        assert!(!report.converged);
        assert_eq!(report.epochs_run, 500);
    }

    #[test]
    fn divergence_aborts_with_report() {
        // The first step overflows the weight to infinity; the zero input then
        // yields inf·0 = NaN in the next forward pass.
        let data = Dataset::new(vec![example(&[0.0], &[0.0]), example(&[16.0], &[0.0])]).unwrap();
        let spec = TrainSpec {
            topology: vec![1, 1],
            learning_rate: f64::MAX,
            init_scale: 1e-3,
            ..TrainSpec::default()
        };
        match train_backprop(&spec, &data) {
            Err(TrainError::Diverged { report }) => {
                assert_eq!(report.epochs_run, 1);
                assert!(!report.converged);
                assert!(report.final_loss.is_nan());
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn perceptron_learns_or_and_and() {
        for f in ["p | q", "p & q"] {
            let r = train_perceptron(&table_data(f), 1.0, 100).unwrap();
            assert!(r.converged, "{f}");
            assert_eq!(r.misclassifications, 0);
            let net = r.network().unwrap();
            let data = table_data(f);
            for e in data.examples() {
                assert_eq!(net.forward(&e.input).unwrap().output(), e.target.as_slice());
            }
        }
    }

    #[test]
    fn perceptron_fails_on_xor() {
        let r = train_perceptron(&table_data("p & !q | !p & q"), 0.1, 1000).unwrap();
        assert!(!r.converged);
        assert!(r.misclassifications >= 1);
        assert_eq!(r.epochs_run, 1000);
    }

    #[test]
    fn perceptron_needs_single_output() {
        let data = Dataset::new(vec![example(&[1.0], &[1.0, 0.0])]).unwrap();
        assert_eq!(
            train_perceptron(&data, 1.0, 10),
            Err(TrainError::NotSingleOutput(2))
        );
    }
}
