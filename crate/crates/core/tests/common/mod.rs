//! Seeded generators and enumeration helpers shared by integration tests.

#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ssmverify_core::arithmetic::Scalar;
use ssmverify_core::compilers::{Action, IlpInstance, MinskyMachine};
use ssmverify_core::ltl::{parse, Formula};
use ssmverify_core::ssm::{Evaluator, LayerTrace, StreamState};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn props() -> Vec<String> {
    vec!["p".to_string(), "q".to_string()]
}

/// Random formula with exactly `size` nodes over `{p, q}`.
pub fn random_formula(rng: &mut impl Rng, size: usize) -> Formula {
    assert!(size >= 1);
    if size == 1 {
        return match rng.gen_range(0..6) {
            0 | 1 => Formula::atom("p"),
            2 | 3 => Formula::atom("q"),
            4 => Formula::True,
            _ => Formula::False,
        };
    }
    if size == 2 || rng.gen_range(0..3) == 0 {
        let inner = random_formula(rng, size - 1);
        return if rng.gen_bool(0.5) {
            Formula::not(inner)
        } else {
            Formula::next(inner)
        };
    }
    let left = rng.gen_range(1..=size - 2);
    let a = random_formula(rng, left);
    let b = random_formula(rng, size - 1 - left);
    match rng.gen_range(0..3) {
        0 => Formula::and(a, b),
        1 => Formula::or(a, b),
        _ => Formula::until(a, b),
    }
}

/// `count` distinct random formulas of size `1..=max_size`.
pub fn formula_sample(count: usize, max_size: usize, seed: u64) -> Vec<Formula> {
    let mut rng = rng(seed);
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count && attempts < 100 * count {
        attempts += 1;
        let size = rng.gen_range(1..=max_size);
        let f = random_formula(&mut rng, size);
        if seen.insert(f.to_string()) {
            out.push(f);
        }
    }
    out
}

/// One or more formulas for each operator, nesting in both directions.
pub const HAND_CORPUS: [&str; 25] = [
    "p",
    "!p",
    "tt",
    "ff",
    "p & q",
    "p | q",
    "X p",
    "p U q",
    "X X p",
    "!X p",
    "X !p",
    "p U X q",
    "X (p U q)",
    "(X p) U q",
    "p U (q U p)",
    "(p U q) U p",
    "!(p U q)",
    "F p",
    "G p",
    "G (p -> X q)",
    "F (p & X q)",
    "p & X (q U p)",
    "(p | X q) U (!p & q)",
    "X X X q",
    "p U (X X q)",
];

pub fn hand_corpus() -> Vec<Formula> {
    HAND_CORPUS
        .iter()
        .map(|s| parse(s).expect("corpus parses"))
        .collect()
}

/// Random valid machine with 2..=max_states states. The start state always
/// has outgoing transitions; other states may have none.
pub fn random_machine(rng: &mut impl Rng, max_states: usize) -> MinskyMachine {
    let n = rng.gen_range(2..=max_states);
    let states: Vec<String> = (0..n).map(|i| format!("q{i}")).collect();
    let accept = rng.gen_range(1..n);
    let mut transitions = Vec::new();
    for q in 0..n {
        let kind = if q == 0 {
            rng.gen_range(1..=2)
        } else {
            rng.gen_range(0..=2)
        };
        let second = rng.gen_bool(0.5);
        match kind {
            1 => {
                let a = if second { Action::Inc2 } else { Action::Inc1 };
                transitions.push((q, a, rng.gen_range(0..n)));
            }
            2 => {
                let (dec, ztest) = if second {
                    (Action::Dec2, Action::Ztest2)
                } else {
                    (Action::Dec1, Action::Ztest1)
                };
                transitions.push((q, dec, rng.gen_range(0..n)));
                transitions.push((q, ztest, rng.gen_range(0..n)));
            }
            _ => {}
        }
    }
    MinskyMachine::new(states, 0, accept, transitions).expect("generated machine is valid")
}

pub fn random_ilp(rng: &mut impl Rng, max_d: usize, max_entry: u64) -> IlpInstance {
    let d = rng.gen_range(1..=max_d);
    let a = (0..d)
        .map(|_| (0..d).map(|_| rng.gen_range(0..=max_entry)).collect())
        .collect();
    let b = (0..d).map(|_| rng.gen_range(0..=max_entry)).collect();
    IlpInstance::new(a, b).expect("square instance")
}

/// Visits every word of length `1..=max_len` in depth-first order,
/// streaming states so each word costs one step.
pub fn for_each_word(eval: &Evaluator, max_len: usize, visit: &mut impl FnMut(&[usize], &Scalar)) {
    fn go(
        eval: &Evaluator,
        state: &StreamState,
        word: &mut Vec<usize>,
        max_len: usize,
        visit: &mut impl FnMut(&[usize], &Scalar),
    ) {
        if word.len() == max_len {
            return;
        }
        for a in 0..eval.alphabet_len() {
            let (next, y) = eval.step(state, a).expect("valid symbol");
            word.push(a);
            visit(word, &y);
            go(eval, &next, word, max_len, visit);
            word.pop();
        }
    }
    go(eval, &eval.initial_state(), &mut Vec::new(), max_len, visit);
}

/// Like [`for_each_word`] with every layer's trace at the last position.
pub fn for_each_word_traced(
    eval: &Evaluator,
    max_len: usize,
    visit: &mut impl FnMut(&[usize], &Scalar, &[LayerTrace]),
) {
    fn go(
        eval: &Evaluator,
        state: &StreamState,
        word: &mut Vec<usize>,
        max_len: usize,
        visit: &mut impl FnMut(&[usize], &Scalar, &[LayerTrace]),
    ) {
        if word.len() == max_len {
            return;
        }
        for a in 0..eval.alphabet_len() {
            let (next, y, trace) = eval.step_traced(state, a).expect("valid symbol");
            word.push(a);
            visit(word, &y, &trace);
            go(eval, &next, word, max_len, visit);
            word.pop();
        }
    }
    go(eval, &eval.initial_state(), &mut Vec::new(), max_len, visit);
}

pub fn random_word(rng: &mut impl Rng, alphabet: &[String], len: usize) -> Vec<String> {
    (0..len)
        .map(|_| alphabet.choose(rng).expect("non-empty alphabet").clone())
        .collect()
}
