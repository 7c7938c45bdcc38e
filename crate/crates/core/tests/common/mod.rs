#![allow(dead_code)]

use logicnet::Formula;
use rand::Rng;
use rand_chacha::ChaCha20Rng;

pub fn vars(names: &[&str]) -> Vec<Formula> {
    names.iter().map(|n| Formula::var(*n)).collect()
}

/// All formulas without `◊` whose depth (variables count as 1) is at most
/// `depth`, built from `leaves`.
pub fn all_formulas(leaves: &[Formula], depth: usize) -> Vec<Formula> {
    let mut all = leaves.to_vec();
    for _ in 1..depth {
        all = grow(&all, leaves);
    }
    all
}

/// One more level on top of `below`: leaves, negations and every binary pairing.
pub fn grow(below: &[Formula], leaves: &[Formula]) -> Vec<Formula> {
    let mut next = leaves.to_vec();
    next.extend(below.iter().map(|f| Formula::not(f.clone())));
    for a in below {
        for b in below {
            next.push(Formula::and(a.clone(), b.clone()));
            next.push(Formula::or(a.clone(), b.clone()));
            next.push(Formula::implies(a.clone(), b.clone()));
        }
    }
    next
}

/// Visits every `◊`-free formula of depth at most `depth` without holding the
/// top level in memory.
pub fn for_each_formula(leaves: &[Formula], depth: usize, mut visit: impl FnMut(&Formula)) {
    if depth <= 1 {
        leaves.iter().for_each(visit);
        return;
    }
    let below = all_formulas(leaves, depth - 1);
    for f in leaves {
        visit(f);
    }
    for f in &below {
        visit(&Formula::not(f.clone()));
    }
    for a in &below {
        for b in &below {
            visit(&Formula::and(a.clone(), b.clone()));
            visit(&Formula::or(a.clone(), b.clone()));
            visit(&Formula::implies(a.clone(), b.clone()));
        }
    }
}

/// Random formula of depth at most `depth` over `names`; `◊` appears occasionally.
pub fn random_formula(rng: &mut ChaCha20Rng, names: &[&str], depth: usize) -> Formula {
    if depth <= 1 || rng.gen_bool(0.2) {
        return Formula::var(names[rng.gen_range(0..names.len())]);
    }
    let sub = |rng: &mut ChaCha20Rng| random_formula(rng, names, depth - 1);
    match rng.gen_range(0..9) {
        0 | 1 => Formula::not(sub(rng)),
        2 | 3 => Formula::and(sub(rng), sub(rng)),
        4 | 5 => Formula::or(sub(rng), sub(rng)),
        6 | 7 => Formula::implies(sub(rng), sub(rng)),
        _ => Formula::possibly(sub(rng)),
    }
}
