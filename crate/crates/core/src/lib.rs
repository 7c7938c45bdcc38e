//! Compile propositional formulas into layered sigmoid gate networks and
//! check them against a brute-force truth-table oracle.
//!
//! Alongside the compiler the crate carries the classical learning models the
//! gate networks are usually compared with: full-batch backpropagation, the
//! single-unit perceptron, and a binary Hopfield memory.

pub mod compiler;
pub mod formula;
pub mod hopfield;
pub mod network;
pub mod training;

pub use compiler::{
    compile, compile_incompatibility_probe, verify, CompileError, VerificationReport,
};
pub use formula::{
    compatible, parse, satisfiable, truth_table, Assignment, Formula, ParseError, TruthTable,
    Verdict,
};
pub use hopfield::{HopfieldNet, Pattern, UpdateOrder};
pub use network::{Activation, Layer, Network, Propagation, Trace};
pub use training::{train_backprop, train_perceptron, Dataset, TrainReport, TrainSpec};
