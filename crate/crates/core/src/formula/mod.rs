//! Propositional formulas with a possibility marker.
//!
//! The AST is the semantic source of truth for everything else in the crate:
//! compiled networks are checked against [`Formula::eval`] and the brute-force
//! [`truth_table`].

mod parser;
mod table;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use parser::{parse, ParseError};
pub use table::{
    compatible, satisfiable, truth_table, Assignment, CompatError, Row, TableError, TruthTable,
    Verdict, MAX_TABLE_VARS,
};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formula {
    Var(String),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    /// `◊g`. Transparent under [`Formula::eval`]; only [`compatible`] gives it force.
    Possibly(Box<Formula>),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("variable `{0}` is not bound by the assignment")]
    Unbound(String),
}

impl Formula {
    pub fn var(name: impl Into<String>) -> Formula {
        Formula::Var(name.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn possibly(f: Formula) -> Formula {
        Formula::Possibly(Box::new(f))
    }

    /// Free variables in order of first occurrence (left to right).
    pub fn vars(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        self.visit_vars(&mut |name| {
            if !out.iter().any(|v| v == name) {
                out.push(name.to_owned());
            }
        });
        out
    }

    fn visit_vars<'a>(&'a self, f: &mut impl FnMut(&'a str)) {
        match self {
            Formula::Var(name) => f(name),
            Formula::Not(a) | Formula::Possibly(a) => a.visit_vars(f),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                a.visit_vars(f);
                b.visit_vars(f);
            }
        }
    }

    /// Number of node levels on the longest root-to-leaf path; a variable has depth 1.
    pub fn depth(&self) -> usize {
        self.height() + 1
    }

    /// Edges on the longest root-to-leaf path; a variable has height 0.
    pub fn height(&self) -> usize {
        match self {
            Formula::Var(_) => 0,
            Formula::Not(a) | Formula::Possibly(a) => 1 + a.height(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                1 + a.height().max(b.height())
            }
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            Formula::Var(_) => 1,
            Formula::Not(a) | Formula::Possibly(a) => 1 + a.node_count(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                1 + a.node_count() + b.node_count()
            }
        }
    }

    pub fn contains_possibly(&self) -> bool {
        match self {
            Formula::Var(_) => false,
            Formula::Possibly(_) => true,
            Formula::Not(a) => a.contains_possibly(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                a.contains_possibly() || b.contains_possibly()
            }
        }
    }

    /// Removes every `◊`, nested ones included (`◊◊p` becomes `p`).
    pub fn strip_possibly(&self) -> Formula {
        match self {
            Formula::Var(name) => Formula::Var(name.clone()),
            Formula::Possibly(a) => a.strip_possibly(),
            Formula::Not(a) => Formula::not(a.strip_possibly()),
            Formula::And(a, b) => Formula::and(a.strip_possibly(), b.strip_possibly()),
            Formula::Or(a, b) => Formula::or(a.strip_possibly(), b.strip_possibly()),
            Formula::Implies(a, b) => Formula::implies(a.strip_possibly(), b.strip_possibly()),
        }
    }

    /// Rewrites every `x -> y` into `!x | y`. Other nodes are kept as they are.
    pub fn lower_implications(&self) -> Formula {
        match self {
            Formula::Var(name) => Formula::Var(name.clone()),
            Formula::Possibly(a) => Formula::possibly(a.lower_implications()),
            Formula::Not(a) => Formula::not(a.lower_implications()),
            Formula::And(a, b) => Formula::and(a.lower_implications(), b.lower_implications()),
            Formula::Or(a, b) => Formula::or(a.lower_implications(), b.lower_implications()),
            Formula::Implies(a, b) => {
                Formula::or(Formula::not(a.lower_implications()), b.lower_implications())
            }
        }
    }

    /// Classical evaluation. `◊g` evaluates as `g`.
    pub fn eval(&self, assignment: &Assignment) -> Result<bool, EvalError> {
        Ok(match self {
            Formula::Var(name) => assignment
                .get(name)
                .ok_or_else(|| EvalError::Unbound(name.clone()))?,
            Formula::Not(a) => !a.eval(assignment)?,
            Formula::Possibly(a) => a.eval(assignment)?,
            Formula::And(a, b) => a.eval(assignment)? & b.eval(assignment)?,
            Formula::Or(a, b) => a.eval(assignment)? | b.eval(assignment)?,
            Formula::Implies(a, b) => !a.eval(assignment)? | b.eval(assignment)?,
        })
    }

    /// Evaluation against a positional row; `index` maps each variable to its slot.
    pub(crate) fn eval_indexed(&self, index: &HashMap<&str, usize>, row: &[bool]) -> bool {
        match self {
            Formula::Var(name) => row[index[name.as_str()]],
            Formula::Not(a) => !a.eval_indexed(index, row),
            Formula::Possibly(a) => a.eval_indexed(index, row),
            Formula::And(a, b) => a.eval_indexed(index, row) & b.eval_indexed(index, row),
            Formula::Or(a, b) => a.eval_indexed(index, row) | b.eval_indexed(index, row),
            Formula::Implies(a, b) => !a.eval_indexed(index, row) | b.eval_indexed(index, row),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Formula::Implies(..) => 1,
            Formula::Or(..) => 2,
            Formula::And(..) => 3,
            Formula::Not(_) | Formula::Possibly(_) => 4,
            Formula::Var(_) => 5,
        }
    }

    fn write(&self, f: &mut fmt::Formatter<'_>, unicode: bool) -> fmt::Result {
        let sym = |ascii: &'static str, uni: &'static str| if unicode { uni } else { ascii };
        match self {
            Formula::Var(name) => f.write_str(name),
            Formula::Not(a) => {
                f.write_str(sym("!", "¬"))?;
                a.write_operand(f, unicode, a.precedence() < 4)
            }
            Formula::Possibly(a) => {
                f.write_str(sym("<>", "◊"))?;
                a.write_operand(f, unicode, a.precedence() < 4)
            }
            Formula::And(a, b) => self.write_binary(f, unicode, a, b, sym(" & ", " ∧ "), false),
            Formula::Or(a, b) => self.write_binary(f, unicode, a, b, sym(" | ", " ∨ "), false),
            Formula::Implies(a, b) => self.write_binary(f, unicode, a, b, sym(" -> ", " → "), true),
        }
    }

    fn write_binary(
        &self,
        f: &mut fmt::Formatter<'_>,
        unicode: bool,
        lhs: &Formula,
        rhs: &Formula,
        op: &str,
        right_assoc: bool,
    ) -> fmt::Result {
        let p = self.precedence();
        let (lp, rp) = (lhs.precedence(), rhs.precedence());
        let (lhs_parens, rhs_parens) = if right_assoc {
            (lp <= p, rp < p)
        } else {
            (lp < p, rp <= p)
        };
        lhs.write_operand(f, unicode, lhs_parens)?;
        f.write_str(op)?;
        rhs.write_operand(f, unicode, rhs_parens)
    }

    fn write_operand(
        &self,
        f: &mut fmt::Formatter<'_>,
        unicode: bool,
        parens: bool,
    ) -> fmt::Result {
        if parens {
            f.write_str("(")?;
            self.write(f, unicode)?;
            f.write_str(")")
        } else {
            self.write(f, unicode)
        }
    }
}

/// ASCII concrete syntax with minimal parentheses; `{:#}` prints the Unicode symbols instead.
impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(f, f.alternate())
    }
}

impl std::str::FromStr for Formula {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}
