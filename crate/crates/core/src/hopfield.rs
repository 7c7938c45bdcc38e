//! Binary Hopfield associative memory.
//!
//! States are bipolar (`-1`/`+1`). Storage uses the Hebbian outer-product
//! rule `w_ij = (1/N)·Σ_μ x_i^μ x_j^μ` with a zero diagonal, and recall runs
//! asynchronous sign updates that never raise the energy
//! `E(s) = -½·Σ_ij w_ij s_i s_j`.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::training::seeded_rng;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HopfieldError {
    #[error("no patterns to store")]
    NoPatterns,
    #[error("pattern has length {found}, network size is {expected}")]
    Length { expected: usize, found: usize },
    #[error("cannot parse pattern: {0}")]
    Parse(String),
    #[error("weight matrix must be square, symmetric, finite and zero on the diagonal")]
    InvalidWeights,
}

/// A bipolar vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Pattern(Vec<i8>);

impl Pattern {
    /// Builds a pattern from `±1` entries; anything else is rejected.
    pub fn new(values: Vec<i8>) -> Result<Self, HopfieldError> {
        if values.iter().all(|v| *v == 1 || *v == -1) {
            Ok(Pattern(values))
        } else {
            Err(HopfieldError::Parse("entries must be -1 or +1".into()))
        }
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        Pattern(bits.iter().map(|&b| if b { 1 } else { -1 }).collect())
    }

    pub fn random(n: usize, rng: &mut impl Rng) -> Self {
        Pattern(
            (0..n)
                .map(|_| if rng.gen::<bool>() { 1 } else { -1 })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[i8] {
        &self.0
    }

    pub fn negated(&self) -> Self {
        Pattern(self.0.iter().map(|v| -v).collect())
    }

    /// Copy with the listed positions flipped.
    pub fn flipped(&self, positions: &[usize]) -> Self {
        let mut out = self.0.clone();
        for &i in positions {
            out[i] = -out[i];
        }
        Pattern(out)
    }

    /// Copy with `count` distinct positions flipped, chosen by `rng`.
    pub fn corrupted(&self, count: usize, rng: &mut impl Rng) -> (Self, Vec<usize>) {
        let mut positions: Vec<usize> = (0..self.len()).collect();
        positions.shuffle(rng);
        positions.truncate(count.min(self.len()));
        positions.sort_unstable();
        (self.flipped(&positions), positions)
    }

    pub fn hamming(&self, other: &Pattern) -> usize {
        self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count()
    }

    /// `1`/`0` string.
    pub fn to_bitstring(&self) -> String {
        self.0
            .iter()
            .map(|&v| if v > 0 { '1' } else { '0' })
            .collect()
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_bitstring())
    }
}

/// Accepts `0110`, `-++-`, or comma/space separated `±1` such as `1,-1,-1,1`.
impl FromStr for Pattern {
    type Err = HopfieldError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Err(HopfieldError::Parse("empty pattern".into()));
        }
        if s.contains(|c: char| c == ',' || c.is_whitespace()) {
            return s
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(|t| match t {
                    "1" | "+1" => Ok(1),
                    "-1" => Ok(-1),
                    other => Err(HopfieldError::Parse(format!("bad entry `{other}`"))),
                })
                .collect::<Result<Vec<_>, _>>()
                .map(Pattern);
        }
        s.chars()
            .map(|c| match c {
                '1' | '+' => Ok(1),
                '0' | '-' => Ok(-1),
                other => Err(HopfieldError::Parse(format!("bad character `{other}`"))),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Pattern)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HopfieldNet {
    weights: Vec<Vec<f64>>,
    state: Vec<i8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum UpdateOrder {
    /// Neurons 0..N in order on every sweep.
    Ascending,
    /// A fresh permutation per sweep from a generator seeded once per recall.
    Shuffled { seed: u64 },
}

/// One visited neuron during recall.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecallStep {
    pub sweep: usize,
    pub neuron: usize,
    pub flipped: bool,
    /// Energy after this update.
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Recall {
    pub state: Pattern,
    /// Sweeps performed, including the final one that changed nothing.
    pub sweeps: usize,
    pub flips: usize,
    /// True when the last sweep changed nothing.
    pub stable: bool,
    pub initial_energy: f64,
    pub steps: Vec<RecallStep>,
}

impl Recall {
    /// Initial energy followed by the energy after every update.
    pub fn energy_history(&self) -> Vec<f64> {
        std::iter::once(self.initial_energy)
            .chain(self.steps.iter().map(|s| s.energy))
            .collect()
    }

    /// `step,sweep,neuron,flipped,energy`; step 0 is the probe itself.
    pub fn energy_csv(&self) -> String {
        let mut out = String::from("step,sweep,neuron,flipped,energy\n");
        out.push_str(&format!("0,0,,0,{:e}\n", self.initial_energy));
        for (i, s) in self.steps.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{:e}\n",
                i + 1,
                s.sweep,
                s.neuron,
                u8::from(s.flipped),
                s.energy
            ));
        }
        out
    }
}

impl HopfieldNet {
    /// Hebbian storage of `patterns`; the state starts at the first pattern.
    pub fn store(patterns: &[Pattern], n: usize) -> Result<Self, HopfieldError> {
        let first = patterns.first().ok_or(HopfieldError::NoPatterns)?;
        if let Some(bad) = patterns.iter().find(|p| p.len() != n) {
            return Err(HopfieldError::Length {
                expected: n,
                found: bad.len(),
            });
        }
        let scale = 1.0 / n as f64;
        let mut weights = vec![vec![0.0; n]; n];
        for p in patterns {
            let x = p.values();
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        weights[i][j] += f64::from(x[i] * x[j]);
                    }
                }
            }
        }
        for row in &mut weights {
            for w in row.iter_mut() {
                *w *= scale;
            }
        }
        Ok(HopfieldNet {
            weights,
            state: first.values().to_vec(),
        })
    }

    /// Wraps an explicit weight matrix; the state starts all `+1`.
    pub fn from_weights(weights: Vec<Vec<f64>>) -> Result<Self, HopfieldError> {
        let n = weights.len();
        let ok = weights.iter().enumerate().all(|(i, row)| {
            row.len() == n
                && row[i] == 0.0
                && row
                    .iter()
                    .enumerate()
                    .all(|(j, w)| w.is_finite() && *w == weights[j][i])
        });
        if !ok {
            return Err(HopfieldError::InvalidWeights);
        }
        Ok(HopfieldNet {
            weights,
            state: vec![1; n],
        })
    }

    pub fn size(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn state(&self) -> Pattern {
        Pattern(self.state.clone())
    }

    pub fn set_state(&mut self, state: &Pattern) -> Result<(), HopfieldError> {
        self.check_len(state)?;
        self.state = state.values().to_vec();
        Ok(())
    }

    /// Same network with every weight multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        HopfieldNet {
            weights: self
                .weights
                .iter()
                .map(|r| r.iter().map(|w| w * factor).collect())
                .collect(),
            state: self.state.clone(),
        }
    }

    fn check_len(&self, p: &Pattern) -> Result<(), HopfieldError> {
        if p.len() != self.size() {
            return Err(HopfieldError::Length {
                expected: self.size(),
                found: p.len(),
            });
        }
        Ok(())
    }

    /// Energy of the current state.
    pub fn energy(&self) -> f64 {
        self.energy_of(&self.state)
    }

    fn energy_of(&self, s: &[i8]) -> f64 {
        let mut e = 0.0;
        for (i, row) in self.weights.iter().enumerate() {
            for (j, w) in row.iter().enumerate() {
                e += w * f64::from(s[i]) * f64::from(s[j]);
            }
        }
        -0.5 * e
    }

    pub fn energy_at(&self, p: &Pattern) -> Result<f64, HopfieldError> {
        self.check_len(p)?;
        Ok(self.energy_of(p.values()))
    }

    /// `-½·Σ|w_ij|`, below which no state's energy can fall.
    pub fn energy_floor(&self) -> f64 {
        -0.5 * self.weights.iter().flatten().map(|w| w.abs()).sum::<f64>()
    }

    fn local_field(&self, s: &[i8], i: usize) -> f64 {
        self.weights[i]
            .iter()
            .zip(s)
            .map(|(w, &x)| w * f64::from(x))
            .sum()
    }

    /// Asynchronous recall from `probe`. A neuron whose local field is exactly
    /// zero keeps its state. Stops after a sweep with no flips or after
    /// `max_sweeps` sweeps. The network itself is left untouched.
    pub fn recall(
        &self,
        probe: &Pattern,
        order: UpdateOrder,
        max_sweeps: usize,
    ) -> Result<Recall, HopfieldError> {
        self.check_len(probe)?;
        let n = self.size();
        let mut s = probe.values().to_vec();
        let mut rng = match order {
            UpdateOrder::Shuffled { seed } => Some(seeded_rng(seed)),
            UpdateOrder::Ascending => None,
        };
        let mut visit: Vec<usize> = (0..n).collect();
        let initial_energy = self.energy_of(&s);
        let mut steps = Vec::new();
        let mut flips = 0;
        let mut sweeps = 0;
        let mut stable = false;
        while sweeps < max_sweeps {
            sweeps += 1;
            if let Some(rng) = rng.as_mut() {
                visit.shuffle(rng);
            }
            let mut changed = false;
            for &i in &visit {
                let h = self.local_field(&s, i);
                let next = if h > 0.0 {
                    1
                } else if h < 0.0 {
                    -1
                } else {
                    s[i]
                };
                let flipped = next != s[i];
                s[i] = next;
                if flipped {
                    flips += 1;
                    changed = true;
                }
                steps.push(RecallStep {
                    sweep: sweeps,
                    neuron: i,
                    flipped,
                    energy: self.energy_of(&s),
                });
            }
            if !changed {
                stable = true;
                break;
            }
        }
        Ok(Recall {
            state: Pattern(s),
            sweeps,
            flips,
            stable,
            initial_energy,
            steps,
        })
    }

    /// Runs [`HopfieldNet::recall`] and adopts the final state.
    pub fn settle(
        &mut self,
        order: UpdateOrder,
        max_sweeps: usize,
    ) -> Result<Recall, HopfieldError> {
        let recall = self.recall(&self.state(), order, max_sweeps)?;
        self.state = recall.state.values().to_vec();
        Ok(recall)
    }
}
