//! Lowering of formulas to sigmoid gate networks.
//!
//! Every gate has weights of magnitude 10 or 20 and a bias chosen so that on
//! exact 0/1 inputs the pre-activation is at least 5 away from zero:
//!
//! | gate     | bias      | weight per input |
//! |----------|-----------|------------------|
//! | NOT      | 5         | -10              |
//! | PASS     | -10       | 20               |
//! | OR(k)    | -5        | 10               |
//! | AND(k)   | 5 - 10k   | 10               |
//!
//! Implications are rewritten to `!x | y` and `◊` is dropped before lowering.
//! Each remaining operator becomes one neuron in the layer equal to its height
//! in the tree; operands from shallower layers are carried forward through
//! PASS neurons so every connection spans exactly one layer.

use serde::Serialize;

use crate::formula::{truth_table, Assignment, Formula, TableError};
use crate::network::{
    binarize, sigmoid, Activation, Layer, Network, NetworkError, Propagation, DEFAULT_CUT,
};

/// Cap on variables for exhaustive verification (65 536 rows).
pub const MAX_VERIFY_VARS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Not,
    Pass,
    Or(usize),
    And(usize),
}

impl Gate {
    pub fn bias(self) -> f64 {
        match self {
            Gate::Not => 5.0,
            Gate::Pass => -10.0,
            Gate::Or(_) => -5.0,
            Gate::And(k) => 5.0 - 10.0 * k as f64,
        }
    }

    pub fn weight(self) -> f64 {
        match self {
            Gate::Not => -10.0,
            Gate::Pass => 20.0,
            Gate::Or(_) | Gate::And(_) => 10.0,
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Gate::Not | Gate::Pass => 1,
            Gate::Or(k) | Gate::And(k) => k,
        }
    }

    /// Smallest |pre-activation| over all 0/1 input combinations.
    pub fn margin(self) -> f64 {
        let k = self.arity();
        (0..1u32 << k)
            .map(|bits| {
                let on = f64::from(bits.count_ones());
                (self.bias() + self.weight() * on).abs()
            })
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CompileError {
    #[error("expected an implication between two variables, got `{0}`")]
    NotAtomicImplication(String),
    #[error(transparent)]
    Table(#[from] TableError),
    #[error("formula has {found} variables; exhaustive verification is capped at {max}")]
    TooManyVariables { found: usize, max: usize },
    #[error(transparent)]
    Network(#[from] NetworkError),
}

/// A compiled network together with the structure it was lowered from.
#[derive(Debug, Clone, PartialEq)]
pub struct Compilation {
    pub network: Network,
    /// The formula actually lowered: `◊` removed, implications rewritten.
    pub lowered: Formula,
    /// Operator nodes of `lowered`, one neuron each.
    pub gate_neurons: usize,
    /// PASS neurons inserted to align depths.
    pub padding: usize,
}

struct Neuron {
    gate: Gate,
    sources: Vec<usize>,
}

struct Builder<'a> {
    vars: &'a [String],
    /// `layers[0]` is unused; inputs occupy layer 0.
    layers: Vec<Vec<Neuron>>,
    padding: usize,
    gates: usize,
}

impl Builder<'_> {
    fn push(&mut self, layer: usize, gate: Gate, sources: Vec<usize>) -> usize {
        let slot = &mut self.layers[layer];
        slot.push(Neuron { gate, sources });
        slot.len() - 1
    }

    /// Carries the value at (`layer`, `pos`) up to `target` with PASS neurons.
    fn pad(&mut self, mut layer: usize, mut pos: usize, target: usize) -> usize {
        while layer < target {
            layer += 1;
            pos = self.push(layer, Gate::Pass, vec![pos]);
            self.padding += 1;
        }
        pos
    }

    /// Places `f`; returns its (layer, position).
    fn place(&mut self, f: &Formula) -> (usize, usize) {
        let (gate, children): (Gate, Vec<&Formula>) = match f {
            Formula::Var(name) => {
                let pos = self
                    .vars
                    .iter()
                    .position(|v| v == name)
                    .expect("variable list comes from the formula");
                return (0, pos);
            }
            Formula::Not(a) => (Gate::Not, vec![a]),
            Formula::And(a, b) => (Gate::And(2), vec![a, b]),
            Formula::Or(a, b) => (Gate::Or(2), vec![a, b]),
            Formula::Implies(..) | Formula::Possibly(_) => {
                unreachable!("lowered before placement")
            }
        };
        let placed: Vec<(usize, usize)> = children.into_iter().map(|c| self.place(c)).collect();
        let layer = 1 + placed.iter().map(|&(l, _)| l).max().unwrap_or(0);
        let sources = placed
            .into_iter()
            .map(|(l, p)| self.pad(l, p, layer - 1))
            .collect();
        self.gates += 1;
        (layer, self.push(layer, gate, sources))
    }
}

/// Lowers `f`, also reporting how many neurons are gates and how many are padding.
pub fn lower(f: &Formula) -> Result<Compilation, CompileError> {
    // Every leaf is a variable, so `vars` is never empty.
    let vars = f.vars();
    let lowered = f.strip_possibly().lower_implications();
    let depth = lowered.height().max(1);
    let mut builder = Builder {
        vars: &vars,
        layers: (0..=depth).map(|_| Vec::new()).collect(),
        padding: 0,
        gates: 0,
    };
    let (layer, pos) = builder.place(&lowered);
    builder.pad(layer, pos, depth);
    let Builder {
        layers: neurons_by_layer,
        padding,
        gates,
        ..
    } = builder;

    let mut width = vars.len();
    let mut layers = Vec::with_capacity(depth);
    for neurons in neurons_by_layer.iter().skip(1) {
        let mut weights = Vec::with_capacity(neurons.len());
        let mut biases = Vec::with_capacity(neurons.len());
        for n in neurons {
            let mut row = vec![0.0; width];
            for &s in &n.sources {
                row[s] += n.gate.weight();
            }
            weights.push(row);
            biases.push(n.gate.bias());
        }
        width = neurons.len();
        layers.push(Layer::new(weights, biases, Activation::Sigmoid)?);
    }
    Ok(Compilation {
        network: Network::new(vars, layers)?,
        lowered,
        gate_neurons: gates,
        padding,
    })
}

/// Compiles `f` to a network whose binarized output reproduces its truth table.
pub fn compile(f: &Formula) -> Result<Network, CompileError> {
    lower(f).map(|c| c.network)
}

/// For `x -> y` over two variables, compiles the counterexample detector `x & !y`.
pub fn compile_incompatibility_probe(f: &Formula) -> Result<Network, CompileError> {
    match f {
        Formula::Implies(x, y)
            if matches!(**x, Formula::Var(_)) && matches!(**y, Formula::Var(_)) =>
        {
            compile(&Formula::and((**x).clone(), Formula::not((**y).clone())))
        }
        other => Err(CompileError::NotAtomicImplication(other.to_string())),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifiedRow {
    pub inputs: Vec<bool>,
    /// Oracle value from [`Formula::eval`].
    pub expected: bool,
    /// Hidden-layer activations under gate-level (binarized) propagation.
    pub hidden: Vec<Vec<f64>>,
    /// Output neuron value when every layer sees exact 0/1 inputs.
    pub output: f64,
    /// Output neuron value with raw sigmoid values propagated end to end.
    pub output_end_to_end: f64,
    pub agrees: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub formula: String,
    pub vars: Vec<String>,
    pub rows: Vec<VerifiedRow>,
    pub agreeing_rows: usize,
    /// Largest |output - expected| over all rows, gate-level propagation.
    pub max_distance: f64,
    /// Largest |output - expected| over all rows, raw propagation.
    pub max_distance_end_to_end: f64,
    pub passed: bool,
}

/// Cross-checks the compiled network against the truth-table oracle on every row.
///
/// A row agrees when the binarized output matches `eval` under both
/// gate-level and raw propagation.
pub fn verify(f: &Formula) -> Result<VerificationReport, CompileError> {
    let network = compile(f)?;
    verify_network(f, &network)
}

/// Like [`verify`] but against an already built network.
pub fn verify_network(f: &Formula, network: &Network) -> Result<VerificationReport, CompileError> {
    let n = f.vars().len();
    if n > MAX_VERIFY_VARS {
        return Err(CompileError::TooManyVariables {
            found: n,
            max: MAX_VERIFY_VARS,
        });
    }
    let table = truth_table(f)?;
    let mut rows = Vec::with_capacity(table.len());
    for row in table.rows() {
        let input: Vec<f64> = row.inputs.iter().map(|&b| f64::from(b)).collect();
        let gated = network.forward_with(&input, Propagation::Binarized)?;
        let raw = network.forward(&input)?;
        let output = gated.output()[0];
        let output_end_to_end = raw.output()[0];
        let agrees = binarize(&[output, output_end_to_end], DEFAULT_CUT)
            .iter()
            .all(|&b| b == row.output);
        let depth = gated.layers.len();
        rows.push(VerifiedRow {
            hidden: gated.layers[..depth - 1]
                .iter()
                .map(|l| l.activation.clone())
                .collect(),
            inputs: row.inputs,
            expected: row.output,
            output,
            output_end_to_end,
            agrees,
        });
    }
    let distance = |pick: fn(&VerifiedRow) -> f64| {
        rows.iter()
            .map(|r| (pick(r) - f64::from(r.expected)).abs())
            .fold(0.0, f64::max)
    };
    let max_distance = distance(|r| r.output);
    let max_distance_end_to_end = distance(|r| r.output_end_to_end);
    let agreeing_rows = rows.iter().filter(|r| r.agrees).count();
    Ok(VerificationReport {
        formula: f.to_string(),
        vars: table.vars().to_vec(),
        passed: agreeing_rows == rows.len(),
        rows,
        agreeing_rows,
        max_distance,
        max_distance_end_to_end,
    })
}

/// Evaluates the compiled network on one assignment, binarized at [`DEFAULT_CUT`].
pub fn network_eval(network: &Network, assignment: &Assignment) -> Option<bool> {
    let input: Option<Vec<f64>> = network
        .inputs()
        .iter()
        .map(|v| assignment.get(v).map(f64::from))
        .collect();
    let trace = network.forward(&input?).ok()?;
    Some(trace.binarize(DEFAULT_CUT)[0])
}

/// σ at the weakest gate margin: the furthest a gate-level output can sit from its bit.
pub fn worst_gate_error() -> f64 {
    sigmoid(-5.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse;

    fn f(s: &str) -> Formula {
        parse(s).unwrap()
    }

    #[test]
    fn gate_catalog_margins() {
        assert_eq!(Gate::Not.margin(), 5.0);
        assert_eq!(Gate::Pass.margin(), 10.0);
        for k in 1..=5 {
            assert_eq!(Gate::Or(k).margin(), 5.0);
            assert_eq!(Gate::And(k).margin(), 5.0);
        }
        assert_eq!(Gate::And(2).bias(), -15.0);
    }

    #[test]
    fn implication_network_has_reference_weights() {
        let net = compile(&f("p -> q")).unwrap();
        assert_eq!(net.inputs(), ["p", "q"]);
        assert_eq!(net.topology(), vec![2, 2, 1]);
        let hidden = &net.layers()[0];
        assert_eq!(hidden.weights(), &[vec![-10.0, 0.0], vec![0.0, 20.0]]);
        assert_eq!(hidden.biases(), &[5.0, -10.0]);
        let out = &net.layers()[1];
        assert_eq!(out.weights(), &[vec![10.0, 10.0]]);
        assert_eq!(out.biases(), &[-5.0]);
    }

    #[test]
    fn implication_hidden_columns() {
        let net = compile(&f("p -> q")).unwrap();
        let expected = [
            ([1.0, 1.0], [false, true], true),
            ([1.0, 0.0], [false, false], false),
            ([0.0, 1.0], [true, true], true),
            ([0.0, 0.0], [true, false], true),
        ];
        for (input, hidden, out) in expected {
            let t = net.forward_with(&input, Propagation::Binarized).unwrap();
            assert_eq!(binarize(&t.layers[0].activation, DEFAULT_CUT), hidden);
            assert_eq!(t.binarize(DEFAULT_CUT), vec![out]);
        }
        let t = net
            .forward_with(&[1.0, 0.0], Propagation::Binarized)
            .unwrap();
        assert!((t.output()[0] - sigmoid(-5.0)).abs() < 1e-15);
    }

    #[test]
    fn single_variable_is_one_pass_neuron() {
        let c = lower(&f("p")).unwrap();
        assert_eq!(c.network.neuron_count(), 1);
        assert_eq!(c.padding, 1);
        assert_eq!(c.network.layers()[0].weights(), &[vec![20.0]]);
        let report = verify(&f("p")).unwrap();
        assert!(report.passed);
        assert!(report.max_distance <= sigmoid(-10.0) + 1e-18);
    }

    #[test]
    fn conjunction_with_negation() {
        let report = verify(&f("p & !q")).unwrap();
        assert!(report.passed);
        let ones: Vec<_> = report
            .rows
            .iter()
            .filter(|r| r.output >= 0.5)
            .map(|r| r.inputs.clone())
            .collect();
        assert_eq!(ones, vec![vec![true, false]]);
    }

    #[test]
    fn probe_is_complement_of_implication() {
        let probe = compile_incompatibility_probe(&f("p -> q")).unwrap();
        let outs: Vec<bool> = [[1.0, 1.0], [1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]
            .iter()
            .map(|x| probe.forward(x).unwrap().binarize(DEFAULT_CUT)[0])
            .collect();
        assert_eq!(outs, vec![false, true, false, false]);
        assert!(matches!(
            compile_incompatibility_probe(&f("p & q")),
            Err(CompileError::NotAtomicImplication(_))
        ));
        assert!(compile_incompatibility_probe(&f("(p & r) -> q")).is_err());
    }

    #[test]
    fn possibility_is_stripped() {
        let a = compile(&f("!p | <>(q & r)")).unwrap();
        let b = compile(&f("!p | (q & r)")).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn structure_counts() {
        // !p | (q & r): OR at 2, NOT and AND at 1, no padding.
        let c = lower(&f("!p | q & r")).unwrap();
        assert_eq!(c.gate_neurons, 3);
        assert_eq!(c.padding, 0);
        // p -> q becomes !p | q: q padded once.
        let c = lower(&f("p -> q")).unwrap();
        assert_eq!((c.gate_neurons, c.padding), (2, 1));
        // q is carried from the inputs up to layer 3.
        let c = lower(&f("!!!p & q")).unwrap();
        assert_eq!(c.network.depth(), 4);
        assert_eq!(c.padding, 3);
        assert_eq!(c.network.neuron_count(), c.gate_neurons + c.padding);
    }

    #[test]
    fn verify_reports_margin_bound() {
        let r = verify(&f("p -> q")).unwrap();
        assert!(r.passed);
        assert_eq!(r.agreeing_rows, 4);
        assert!(r.max_distance <= worst_gate_error() + 1e-15);
    }

    #[test]
    fn verify_variable_cap() {
        let many = (0..17)
            .map(|i| format!("v{i}"))
            .collect::<Vec<_>>()
            .join(" & ");
        assert!(matches!(
            verify(&f(&many)),
            Err(CompileError::TooManyVariables { found: 17, max: 16 })
        ));
    }

    #[test]
    fn network_eval_matches_formula() {
        let formula = f("p -> <>(q & !r)");
        let net = compile(&formula).unwrap();
        let a = Assignment::from_pairs([("p", true), ("q", true), ("r", false)]);
        assert_eq!(network_eval(&net, &a), Some(true));
        let a = Assignment::from_pairs([("p", true), ("q", true), ("r", true)]);
        assert_eq!(network_eval(&net, &a), Some(false));
        assert_eq!(network_eval(&net, &Assignment::new()), None);
    }
}
