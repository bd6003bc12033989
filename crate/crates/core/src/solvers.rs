//! Satisfiability procedures for SSMs.
//!
//! [`sat_bounded`] enumerates words up to a length bound depth-first,
//! streaming hidden states so each word costs one step per symbol.
//! [`sat_fixed`] exploits finiteness of the state space under a fixed-point
//! format and runs a breadth-first reachability search. [`pump_down`]
//! shortens an accepted word by cutting loops between equal states.
//!
//! Both searches return the shortest witness, and among those the least in
//! alphabet order, so their witnesses coincide whenever both succeed.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::arithmetic::{ArithMode, FixedPointFormat, Scalar};
use crate::ssm::{Evaluator, SsmError, SsmModel, StreamState};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolverError {
    #[error("length bound must be at least 1")]
    InvalidBound,
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("thread pool: {0}")]
    Threads(String),
    #[error(transparent)]
    Ssm(#[from] SsmError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Satisfiable,
    UnsatisfiableWithinBound,
    Unsatisfiable,
    ResourceLimitExceeded,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Stats {
    pub states_explored: u64,
    pub max_frontier: u64,
    #[serde(rename = "elapsed_ms", serialize_with = "millis")]
    pub elapsed: Duration,
    pub quantised_constants: usize,
}

fn millis<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64() * 1e3)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SatResult {
    pub verdict: Verdict,
    pub witness: Option<Vec<String>>,
    pub stats: Stats,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LengthEncoding {
    Unary,
    Binary,
}

/// A length bound `n`; binary-encoded bounds denote the limit `2^n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LengthBound {
    pub value: BigUint,
    pub encoding: LengthEncoding,
}

impl LengthBound {
    pub fn unary(n: u64) -> Self {
        Self {
            value: n.into(),
            encoding: LengthEncoding::Unary,
        }
    }

    pub fn binary(n: u64) -> Self {
        Self {
            value: n.into(),
            encoding: LengthEncoding::Binary,
        }
    }

    /// Maximum word length searched.
    pub fn limit(&self) -> BigUint {
        match self.encoding {
            LengthEncoding::Unary => self.value.clone(),
            LengthEncoding::Binary => match self.value.to_u32() {
                Some(n) if n < 64 => BigUint::one() << n,
                // Far beyond anything enumerable; only the resource guards matter.
                _ => BigUint::from(u64::MAX),
            },
        }
    }
}

/// Resource guards; `SSMVERIFY_MAX_STATES` and `SSMVERIFY_MAX_MEM_MB`
/// override the values given here in [`Limits::with_env`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub max_states: u64,
    pub max_mem_mb: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            max_states: 50_000_000,
            max_mem_mb: 4096,
        }
    }
}

impl Limits {
    pub fn with_env(self) -> Self {
        let read = |key: &str| {
            std::env::var(key)
                .ok()
                .and_then(|v| v.trim().parse::<u64>().ok())
        };
        Self {
            max_states: read("SSMVERIFY_MAX_STATES").unwrap_or(self.max_states),
            max_mem_mb: read("SSMVERIFY_MAX_MEM_MB").unwrap_or(self.max_mem_mb),
        }
    }

    fn max_stored(&self, model: &SsmModel) -> u64 {
        // Rough per-state footprint: scalars plus hash map and vector overhead.
        let per_state =
            (model.num_layers() * model.dim() * std::mem::size_of::<Scalar>() + 96) as u64;
        (self.max_mem_mb.saturating_mul(1 << 20) / per_state).max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BoundedOptions {
    /// Skip a state already reached at the same or a smaller depth.
    pub memo: bool,
    pub limits: Limits,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FixedOptions {
    pub length_cap: Option<u64>,
    /// Worker threads for successor computation; 1 is fully sequential.
    pub threads: usize,
    pub limits: Limits,
}

impl Default for FixedOptions {
    fn default() -> Self {
        Self {
            length_cap: None,
            threads: 1,
            limits: Limits::default(),
        }
    }
}

struct Frame {
    state: StreamState,
    next: usize,
}

/// Exhaustive depth-first search over words of length `1..=bound.limit()`.
pub fn sat_bounded(
    model: &SsmModel,
    bound: &LengthBound,
    mode: ArithMode,
    options: &BoundedOptions,
) -> Result<SatResult, SolverError> {
    let started = Instant::now();
    let limit_big = bound.limit();
    if limit_big.is_zero() {
        return Err(SolverError::InvalidBound);
    }
    let mut limit = limit_big.to_u64().unwrap_or(u64::MAX);
    let eval = model.evaluator(mode);
    let sigma = eval.alphabet_len();
    let max_stored = options.limits.max_stored(model);

    let mut explored = 0u64;
    let mut max_frontier = 1u64;
    let mut best: Option<Vec<usize>> = None;
    let mut seen: HashMap<StreamState, u64> = HashMap::new();
    let mut word: Vec<usize> = Vec::new();
    let mut stack = vec![Frame {
        state: eval.initial_state(),
        next: 0,
    }];
    let mut aborted = false;

    while let Some(top) = stack.last_mut() {
        let depth = word.len() as u64;
        if top.next == sigma || depth >= limit {
            stack.pop();
            word.pop();
            continue;
        }
        let a = top.next;
        top.next += 1;
        let (next, y) = eval.step_unchecked(&top.state, a);
        explored += 1;
        if explored > options.limits.max_states || seen.len() as u64 > max_stored {
            aborted = true;
            break;
        }
        let depth = depth + 1;
        if y.is_one() {
            let mut w = word.clone();
            w.push(a);
            best = Some(w);
            // Only strictly shorter witnesses can improve on this one.
            limit = depth - 1;
            continue;
        }
        if depth >= limit {
            continue;
        }
        if options.memo {
            match seen.get(&next) {
                Some(&d) if d <= depth => continue,
                _ => {
                    seen.insert(next.clone(), depth);
                }
            }
        }
        word.push(a);
        stack.push(Frame {
            state: next,
            next: 0,
        });
        max_frontier = max_frontier.max(stack.len() as u64);
    }

    let stats = Stats {
        states_explored: explored,
        max_frontier,
        elapsed: started.elapsed(),
        quantised_constants: eval.quantised_constants(),
    };
    Ok(finish(
        model,
        aborted,
        best,
        Verdict::UnsatisfiableWithinBound,
        stats,
    ))
}

fn finish(
    model: &SsmModel,
    aborted: bool,
    best: Option<Vec<usize>>,
    otherwise: Verdict,
    stats: Stats,
) -> SatResult {
    let (verdict, witness) = match (aborted, best) {
        (true, _) => (Verdict::ResourceLimitExceeded, None),
        (false, Some(w)) => (Verdict::Satisfiable, Some(w)),
        (false, None) => (otherwise, None),
    };
    SatResult {
        verdict,
        witness: witness.map(|w| w.iter().map(|&i| model.alphabet()[i].clone()).collect()),
        stats,
    }
}

/// Breadth-first reachability over the states of `model` under `fmt`.
///
/// Without a length cap the search runs until the reachable state set is
/// exhausted, which makes a negative answer unconditional.
pub fn sat_fixed(
    model: &SsmModel,
    fmt: FixedPointFormat,
    options: &FixedOptions,
) -> Result<SatResult, SolverError> {
    let started = Instant::now();
    let eval = model.evaluator(ArithMode::Fixed(fmt));
    let sigma = eval.alphabet_len();
    let max_stored = options.limits.max_stored(model);
    let pool = if options.threads > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(options.threads)
                .build()
                .map_err(|e| SolverError::Threads(e.to_string()))?,
        )
    } else {
        None
    };

    // parents[id] = (parent id, symbol); the initial state has id 0.
    let mut parents: Vec<(usize, usize)> = vec![(usize::MAX, usize::MAX)];
    let mut visited: HashMap<StreamState, usize> = HashMap::new();
    let initial = eval.initial_state();
    visited.insert(initial.clone(), 0);
    let mut frontier = vec![(initial, 0usize)];
    let mut explored = 0u64;
    let mut max_frontier = 1u64;
    let mut depth = 0u64;
    let mut best = None;
    let mut aborted = false;
    let mut capped = false;

    'levels: while !frontier.is_empty() {
        if options.length_cap.is_some_and(|cap| depth >= cap) {
            capped = true;
            break;
        }
        let expand = |(state, _): &(StreamState, usize)| -> Vec<(StreamState, Scalar)> {
            (0..sigma).map(|a| eval.step_unchecked(state, a)).collect()
        };
        let successors: Vec<Vec<(StreamState, Scalar)>> = match &pool {
            Some(pool) => pool.install(|| frontier.par_iter().map(expand).collect()),
            None => frontier.iter().map(expand).collect(),
        };
        let mut next_frontier = Vec::new();
        for ((_, id), succ) in frontier.iter().zip(successors) {
            for (a, (state, y)) in succ.into_iter().enumerate() {
                explored += 1;
                if y.is_one() {
                    best = Some(path(&parents, *id, a));
                    break 'levels;
                }
                if visited.contains_key(&state) {
                    continue;
                }
                let new_id = parents.len();
                parents.push((*id, a));
                visited.insert(state.clone(), new_id);
                next_frontier.push((state, new_id));
            }
            if explored > options.limits.max_states || visited.len() as u64 > max_stored {
                aborted = true;
                break 'levels;
            }
        }
        frontier = next_frontier;
        max_frontier = max_frontier.max(frontier.len() as u64);
        depth += 1;
    }

    let stats = Stats {
        states_explored: explored,
        max_frontier,
        elapsed: started.elapsed(),
        quantised_constants: eval.quantised_constants(),
    };
    let otherwise = if capped {
        Verdict::UnsatisfiableWithinBound
    } else {
        Verdict::Unsatisfiable
    };
    Ok(finish(model, aborted, best, otherwise, stats))
}

fn path(parents: &[(usize, usize)], mut id: usize, last: usize) -> Vec<usize> {
    let mut word = vec![last];
    while id != 0 {
        let (parent, a) = parents[id];
        word.push(a);
        id = parent;
    }
    word.reverse();
    word
}

/// Cuts segments `a_{i+1} … a_j` between equal states `s_i = s_j` until no
/// state repeats among `s_0, …, s_{n-1}`. The final state `s_n` is left
/// alone: the output on the last symbol depends on `s_{n-1}`, so the last
/// symbol must be kept.
pub fn pump_down<S: AsRef<str>>(
    model: &SsmModel,
    word: &[S],
    fmt: FixedPointFormat,
) -> Result<Vec<String>, SolverError> {
    let eval = model.evaluator(ArithMode::Fixed(fmt));
    let mut w = model.word_indices(word)?;
    if !eval.accepts_indices(&w)? {
        return Err(SolverError::Precondition(format!(
            "word is not accepted under {fmt}"
        )));
    }
    while let Some((i, j)) = first_repeat(&eval, &w)? {
        w.drain(i..j);
    }
    Ok(w.iter().map(|&i| model.alphabet()[i].clone()).collect())
}

/// First pair `i < j < n` with `s_i = s_j` (smallest `j`).
fn first_repeat(eval: &Evaluator, word: &[usize]) -> Result<Option<(usize, usize)>, SolverError> {
    let states = eval.states_along(word)?;
    let mut first: HashMap<&StreamState, usize> = HashMap::new();
    for (j, s) in states[..word.len()].iter().enumerate() {
        if let Some(&i) = first.get(s) {
            return Ok(Some((i, j)));
        }
        first.insert(s, j);
    }
    Ok(None)
}

/// Whether two of the states `s_0, …, s_{n-1}` along `word` coincide.
pub fn has_repeated_state<S: AsRef<str>>(
    model: &SsmModel,
    word: &[S],
    fmt: FixedPointFormat,
) -> Result<bool, SolverError> {
    let eval = model.evaluator(ArithMode::Fixed(fmt));
    let w = model.word_indices(word)?;
    Ok(first_repeat(&eval, &w)?.is_some())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arithmetic::Rational;
    use crate::compilers::{compile_ilp, compile_ltl, IlpInstance};
    use crate::fnn::{compose, gadget_eq, Fnn};
    use crate::ltl::{is_model, parse, parse_letter, Trace};
    use crate::ssm::{accepts, identity_matrix, AffineMap, GateSpec, SsmLayer};

    fn fx6() -> FixedPointFormat {
        FixedPointFormat::fx6()
    }

    fn ilp_example() -> SsmModel {
        compile_ilp(&IlpInstance::new(vec![vec![1, 1], vec![0, 1]], vec![1, 1]).unwrap()).unwrap()
    }

    fn ltl(text: &str) -> SsmModel {
        compile_ltl(&parse(text).unwrap()).unwrap()
    }

    #[test]
    fn bounded_examples() {
        let r = sat_bounded(
            &ilp_example(),
            &LengthBound::unary(2),
            ArithMode::Exact,
            &Default::default(),
        )
        .unwrap();
        assert_eq!(r.verdict, Verdict::Satisfiable);
        assert_eq!(r.witness.unwrap(), ["2"]);

        let r = sat_bounded(
            &ltl("p & !p"),
            &LengthBound::unary(8),
            ArithMode::Exact,
            &Default::default(),
        )
        .unwrap();
        assert_eq!(r.verdict, Verdict::UnsatisfiableWithinBound);
        assert_eq!(r.witness, None);

        let r = sat_bounded(
            &ltl("p"),
            &LengthBound::unary(1),
            ArithMode::Exact,
            &Default::default(),
        )
        .unwrap();
        assert_eq!(r.witness.unwrap(), ["{p}"]);

        assert_eq!(
            sat_bounded(
                &ltl("p"),
                &LengthBound::unary(0),
                ArithMode::Exact,
                &Default::default()
            ),
            Err(SolverError::InvalidBound)
        );
    }

    #[test]
    fn binary_bound_is_a_power_of_two() {
        assert_eq!(LengthBound::binary(3).limit(), BigUint::from(8u32));
        assert_eq!(LengthBound::unary(3).limit(), BigUint::from(3u32));
        // X X X p needs 4 letters: found with 2^2 but not with 3.
        let model = ltl("X X X p");
        let r = sat_bounded(
            &model,
            &LengthBound::binary(2),
            ArithMode::Exact,
            &Default::default(),
        )
        .unwrap();
        assert_eq!(r.witness.unwrap().len(), 4);
        let r = sat_bounded(
            &model,
            &LengthBound::unary(3),
            ArithMode::Exact,
            &Default::default(),
        )
        .unwrap();
        assert_eq!(r.verdict, Verdict::UnsatisfiableWithinBound);
    }

    #[test]
    fn shortest_then_least_witness() {
        // Read backwards: the second letter of the trace comes first.
        let model = ltl("X (p & q)");
        let r = sat_bounded(
            &model,
            &LengthBound::unary(4),
            ArithMode::Exact,
            &Default::default(),
        )
        .unwrap();
        assert_eq!(r.witness.unwrap(), ["{p,q}", "{}"]);
        let memo = BoundedOptions {
            memo: true,
            ..Default::default()
        };
        let m = sat_bounded(&model, &LengthBound::unary(4), ArithMode::Exact, &memo).unwrap();
        assert_eq!(m.witness.unwrap(), ["{p,q}", "{}"]);
    }

    #[test]
    fn fixed_examples() {
        let f = parse("p U q").unwrap();
        let r = sat_fixed(&compile_ltl(&f).unwrap(), fx6(), &Default::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Satisfiable);
        let w = r.witness.unwrap();
        assert!(accepts(&compile_ltl(&f).unwrap(), &w, ArithMode::Fixed(fx6())).unwrap());
        let trace = Trace::new(w.iter().rev().map(|l| parse_letter(l).unwrap()).collect());
        assert!(is_model(&f, &trace));

        let r = sat_fixed(&ltl("p & !p"), fx6(), &Default::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Unsatisfiable);
        assert!(r.stats.states_explored > 0);

        let capped = FixedOptions {
            length_cap: Some(2),
            ..Default::default()
        };
        let r = sat_fixed(&ltl("X X p"), fx6(), &capped).unwrap();
        assert_eq!(r.verdict, Verdict::UnsatisfiableWithinBound);
    }

    /// Identity accumulator whose output tests a coordinate that stays 0.
    fn constant_zero_model() -> SsmModel {
        let d = 2;
        let layer = SsmLayer {
            h0: vec![Rational::zero(); d],
            gate: GateSpec::TimeInvariant(identity_matrix(d)),
            inc: AffineMap::linear(vec![
                vec![Rational::one(), Rational::zero()],
                vec![Rational::zero(); 2],
            ]),
            phi: SsmLayer::project_h(d),
        };
        let out = compose(&gadget_eq(1), &Fnn::select(d, &[1])).unwrap();
        SsmModel::new(
            vec!["a".into(), "b".into()],
            identity_matrix(d),
            vec![layer],
            out,
            d,
        )
        .unwrap()
    }

    #[test]
    fn constant_zero_output_is_unsatisfiable() {
        let r = sat_fixed(&constant_zero_model(), fx6(), &Default::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Unsatisfiable);
        // Coordinate 0 counts `a`: 0, 1, 2, 3, then saturates at 31/8.
        assert!(r.stats.states_explored <= 2 * 8);
    }

    #[test]
    fn threads_do_not_change_results() {
        for f in ["p U q", "X X (p & !q)", "G p & F !p"] {
            let model = ltl(f);
            let one = sat_fixed(&model, fx6(), &Default::default()).unwrap();
            let four = sat_fixed(
                &model,
                fx6(),
                &FixedOptions {
                    threads: 4,
                    ..Default::default()
                },
            )
            .unwrap();
            assert_eq!(one.verdict, four.verdict);
            assert_eq!(one.witness, four.witness);
            assert_eq!(one.stats.states_explored, four.stats.states_explored);
        }
    }

    #[test]
    fn resource_limit_is_reported() {
        let tiny = Limits {
            max_states: 3,
            max_mem_mb: 4096,
        };
        let r = sat_fixed(
            &ltl("X X X X p"),
            fx6(),
            &FixedOptions {
                limits: tiny,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(r.verdict, Verdict::ResourceLimitExceeded);
        assert_eq!(r.witness, None);
        let r = sat_bounded(
            &ltl("X X X X p"),
            &LengthBound::unary(6),
            ArithMode::Exact,
            &BoundedOptions {
                memo: false,
                limits: tiny,
            },
        )
        .unwrap();
        assert_eq!(r.verdict, Verdict::ResourceLimitExceeded);
    }

    /// `x` leaves the state unchanged: its embedding is zero.
    fn noop_model() -> SsmModel {
        let d = 2;
        let layer = SsmLayer {
            h0: vec![Rational::zero(); d],
            gate: GateSpec::TimeInvariant(identity_matrix(d)),
            inc: AffineMap::linear(identity_matrix(d)),
            phi: SsmLayer::project_h(d),
        };
        let out = compose(&gadget_eq(1), &Fnn::select(d, &[1])).unwrap();
        let embedding = vec![
            vec![Rational::one(), Rational::zero()],
            vec![Rational::zero(); 2],
            vec![Rational::zero(), Rational::one()],
        ];
        SsmModel::new(
            vec!["s".into(), "x".into(), "t".into()],
            embedding,
            vec![layer],
            out,
            d,
        )
        .unwrap()
    }

    #[test]
    fn pumping_removes_idle_loops() {
        let model = noop_model();
        let word = ["s", "x", "x", "x", "x", "t"];
        let pumped = pump_down(&model, &word, fx6()).unwrap();
        assert!(pumped.len() <= 3, "{pumped:?}");
        assert_eq!(pumped.first().map(String::as_str), Some("s"));
        assert_eq!(pumped.last().map(String::as_str), Some("t"));
        assert!(accepts(&model, &pumped, ArithMode::Fixed(fx6())).unwrap());
        assert!(!has_repeated_state(&model, &pumped, fx6()).unwrap());
        // Fixpoint.
        assert_eq!(pump_down(&model, &pumped, fx6()).unwrap(), pumped);
        assert!(matches!(
            pump_down(&model, &["s"], fx6()),
            Err(SolverError::Precondition(_))
        ));
    }

    #[test]
    fn deterministic() {
        let model = ltl("(p U q) & X !p");
        let a = sat_fixed(&model, fx6(), &Default::default()).unwrap();
        let b = sat_fixed(&model, fx6(), &Default::default()).unwrap();
        assert_eq!(
            (a.verdict, &a.witness, a.stats.states_explored),
            (b.verdict, &b.witness, b.stats.states_explored)
        );
        let bounded = sat_bounded(
            &model,
            &LengthBound::unary(5),
            ArithMode::Fixed(fx6()),
            &Default::default(),
        )
        .unwrap();
        assert_eq!(bounded.witness, a.witness);
    }

    #[test]
    fn monotone_in_the_bound() {
        let model = ltl("X X p");
        let mut found = false;
        for n in 1..=5 {
            let r = sat_bounded(
                &model,
                &LengthBound::unary(n),
                ArithMode::Exact,
                &Default::default(),
            )
            .unwrap();
            let sat = r.verdict == Verdict::Satisfiable;
            assert!(!found || sat);
            found |= sat;
        }
        assert!(found);
    }
}
