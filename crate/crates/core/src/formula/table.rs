use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::Formula;

/// Largest variable count accepted by the brute-force enumerators (2^20 rows).
pub const MAX_TABLE_VARS: usize = 20;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment(BTreeMap<String, bool>);

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, bool)>) -> Self {
        Assignment(pairs.into_iter().map(|(k, v)| (k.to_owned(), v)).collect())
    }

    pub fn from_row(vars: &[String], bits: &[bool]) -> Self {
        Assignment(vars.iter().cloned().zip(bits.iter().copied()).collect())
    }

    pub fn set(&mut self, name: impl Into<String>, value: bool) {
        self.0.insert(name.into(), value);
    }

    pub fn get(&self, name: &str) -> Option<bool> {
        self.0.get(name).copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, bool)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (k, v)) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k}:{}", u8::from(v))?;
        }
        f.write_str("}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TableError {
    #[error("formula has {found} variables; brute-force enumeration is capped at {max}")]
    TooManyVariables { found: usize, max: usize },
}

/// Exhaustive truth table.
///
/// Rows count down from all-ones to all-zeros with the first variable as the
/// most significant bit, so two variables read `11, 10, 01, 00`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthTable {
    vars: Vec<String>,
    outputs: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Row {
    pub inputs: Vec<bool>,
    pub output: bool,
}

/// Input bits of row `index` for `n` variables, in the table's counting order.
pub(crate) fn row_bits(n: usize, index: usize) -> Vec<bool> {
    let code = (1usize << n) - 1 - index;
    (0..n).map(|i| (code >> (n - 1 - i)) & 1 == 1).collect()
}

impl TruthTable {
    /// Builds a table from an explicit output column in counting order.
    pub fn from_outputs(vars: Vec<String>, outputs: Vec<bool>) -> Option<Self> {
        (outputs.len() == 1usize << vars.len()).then_some(TruthTable { vars, outputs })
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn len(&self) -> usize {
        self.outputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outputs.is_empty()
    }

    pub fn outputs(&self) -> &[bool] {
        &self.outputs
    }

    pub fn row(&self, index: usize) -> Row {
        Row {
            inputs: row_bits(self.vars.len(), index),
            output: self.outputs[index],
        }
    }

    pub fn rows(&self) -> impl Iterator<Item = Row> + '_ {
        (0..self.len()).map(|i| self.row(i))
    }

    /// CSV with one column per variable then `y`; truth values as `1`/`0`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for v in &self.vars {
            out.push_str(v);
            out.push(',');
        }
        out.push_str("y\n");
        for row in self.rows() {
            for b in &row.inputs {
                out.push(if *b { '1' } else { '0' });
                out.push(',');
            }
            out.push(if row.output { '1' } else { '0' });
            out.push('\n');
        }
        out
    }

    /// Human-readable grid with `t`/`f` cells, headed by the variables and `label`.
    pub fn render(&self, label: &str) -> String {
        let mut headers: Vec<&str> = self.vars.iter().map(String::as_str).collect();
        headers.push(label);
        let widths: Vec<usize> = headers.iter().map(|h| h.chars().count().max(1)).collect();
        let mut out = String::new();
        let line = |cells: &[&str], out: &mut String| {
            let padded: Vec<String> = cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:^w$}"))
                .collect();
            out.push_str("| ");
            out.push_str(&padded.join(" | "));
            out.push_str(" |\n");
        };
        line(&headers, &mut out);
        let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
        let rule: Vec<&str> = rule.iter().map(String::as_str).collect();
        line(&rule, &mut out);
        for row in self.rows() {
            let mut cells: Vec<&str> = row.inputs.iter().map(|b| tf(*b)).collect();
            cells.push(tf(row.output));
            line(&cells, &mut out);
        }
        out
    }
}

fn tf(b: bool) -> &'static str {
    if b {
        "t"
    } else {
        "f"
    }
}

fn check_size(n: usize) -> Result<(), TableError> {
    if n > MAX_TABLE_VARS {
        return Err(TableError::TooManyVariables {
            found: n,
            max: MAX_TABLE_VARS,
        });
    }
    Ok(())
}

/// Enumerates all `2^n` assignments of the formula's free variables.
pub fn truth_table(f: &Formula) -> Result<TruthTable, TableError> {
    let vars = f.vars();
    check_size(vars.len())?;
    let index: HashMap<&str, usize> = vars
        .iter()
        .enumerate()
        .map(|(i, v)| (v.as_str(), i))
        .collect();
    let outputs = (0..1usize << vars.len())
        .map(|r| f.eval_indexed(&index, &row_bits(vars.len(), r)))
        .collect();
    Ok(TruthTable { vars, outputs })
}

/// Brute-force satisfiability. Returns the first satisfying row in table order.
pub fn satisfiable(f: &Formula) -> Result<Option<Assignment>, TableError> {
    let table = truth_table(f)?;
    let witness = table
        .rows()
        .find(|row| row.output)
        .map(|row| Assignment::from_row(table.vars(), &row.inputs));
    Ok(witness)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Compatible,
    Incompatible,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Compatible => "compatible",
            Verdict::Incompatible => "incompatible",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CompatError {
    #[error("possibility must have the form <>(...), got `{0}`")]
    NotPossibility(String),
    #[error(transparent)]
    Table(#[from] TableError),
}

/// `claim` is incompatible with `◊g` exactly when `claim ∧ g` has no model.
/// Any `◊` nested inside either side is stripped first.
pub fn compatible(claim: &Formula, possibility: &Formula) -> Result<Verdict, CompatError> {
    let Formula::Possibly(inner) = possibility else {
        return Err(CompatError::NotPossibility(possibility.to_string()));
    };
    let joint = Formula::and(claim.strip_possibly(), inner.strip_possibly());
    Ok(match satisfiable(&joint)? {
        Some(_) => Verdict::Compatible,
        None => Verdict::Incompatible,
    })
}
