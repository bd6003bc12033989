//! Two-counter Minsky machines, their deterministic simulator, and the
//! compiler into a three-layer SSM accepting exactly the encodings of
//! accepting runs.
//!
//! A run is encoded as the sequence of `(target state, action)` pairs of its
//! steps; the initial configuration `(q0, 0, 0)` is implicit.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_traits::{One, Zero};

use crate::arithmetic::{rat, Rational};
use crate::fnn::{
    compose, concat, concat_all, gadget_and, gadget_eq, gadget_geq0, gadget_implies, gadget_lookup,
    gadget_prev_bit, Fnn,
};
use crate::ssm::{identity_matrix, AffineMap, GateSpec, SsmLayer, SsmModel};

use super::{masked_identity, mat_scale, signed_width, unit_vector, CompileError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Action {
    Inc1,
    Inc2,
    Dec1,
    Dec2,
    Ztest1,
    Ztest2,
}

impl Action {
    pub const ALL: [Action; 6] = [
        Action::Inc1,
        Action::Inc2,
        Action::Dec1,
        Action::Dec2,
        Action::Ztest1,
        Action::Ztest2,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Counter the action touches: 0 or 1.
    pub fn counter(self) -> usize {
        match self {
            Action::Inc1 | Action::Dec1 | Action::Ztest1 => 0,
            Action::Inc2 | Action::Dec2 | Action::Ztest2 => 1,
        }
    }

    /// Counter update `u_i(a)`.
    pub fn delta(self, counter: usize) -> i64 {
        if self.counter() != counter {
            return 0;
        }
        match self {
            Action::Inc1 | Action::Inc2 => 1,
            Action::Dec1 | Action::Dec2 => -1,
            Action::Ztest1 | Action::Ztest2 => 0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Action::Inc1 => "inc1",
            Action::Inc2 => "inc2",
            Action::Dec1 => "dec1",
            Action::Dec2 => "dec2",
            Action::Ztest1 => "ztest1",
            Action::Ztest2 => "ztest2",
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Action {
    type Err = CompileError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Action::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| CompileError::InvalidMachine(format!("unknown action `{s}`")))
    }
}

/// `M = (Q, q0, qf, δ)` with states referred to by index into `states`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinskyMachine {
    states: Vec<String>,
    start: usize,
    accept: usize,
    transitions: BTreeSet<(usize, Action, usize)>,
}

impl MinskyMachine {
    /// Builds and validates a machine. Every state has no outgoing
    /// transition, a single `inc_i` transition, or exactly the pair
    /// `dec_i`, `ztest_i`.
    pub fn new(
        states: Vec<String>,
        start: usize,
        accept: usize,
        transitions: impl IntoIterator<Item = (usize, Action, usize)>,
    ) -> Result<Self, CompileError> {
        let bad = |msg: String| Err(CompileError::InvalidMachine(msg));
        let n = states.len();
        if n == 0 {
            return bad("no states".into());
        }
        if BTreeSet::from_iter(&states).len() != n {
            return bad("duplicate state name".into());
        }
        if let Some(s) = states.iter().find(|s| !valid_state_name(s)) {
            return bad(format!(
                "state name `{s}` must be non-empty and free of `(),;{{}}` and whitespace"
            ));
        }
        if start >= n || accept >= n {
            return bad("start or final state out of range".into());
        }
        let transitions: BTreeSet<_> = transitions.into_iter().collect();
        if let Some(t) = transitions.iter().find(|(q, _, p)| *q >= n || *p >= n) {
            return bad(format!("transition {t:?} refers to an unknown state"));
        }
        for (q, name) in states.iter().enumerate() {
            let mut actions: Vec<Action> = transitions
                .iter()
                .filter(|(p, _, _)| *p == q)
                .map(|(_, a, _)| *a)
                .collect();
            actions.sort();
            let ok = matches!(
                actions.as_slice(),
                [] | [Action::Inc1]
                    | [Action::Inc2]
                    | [Action::Dec1, Action::Ztest1]
                    | [Action::Dec2, Action::Ztest2]
            );
            if !ok {
                let listed: Vec<_> = actions.iter().map(|a| a.name()).collect();
                return bad(format!(
                    "state `{name}` has transitions [{}]; expected one inc_i or the pair dec_i, ztest_i",
                    listed.join(", ")
                ));
            }
        }
        Ok(Self {
            states,
            start,
            accept,
            transitions,
        })
    }

    /// Parses the line format:
    ///
    /// ```text
    /// # comment
    /// start: q0
    /// final: qf
    /// q0 inc1 q1
    /// ```
    ///
    /// States are numbered in order of first appearance.
    pub fn parse(text: &str) -> Result<Self, CompileError> {
        let mut states: Vec<String> = Vec::new();
        let mut intern = |name: &str| match states.iter().position(|s| s == name) {
            Some(i) => i,
            None => {
                states.push(name.to_string());
                states.len() - 1
            }
        };
        let (mut start, mut accept) = (None, None);
        let mut transitions = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| CompileError::Parse {
                line: lineno + 1,
                msg,
            };
            if let Some((key, value)) = line.split_once(':') {
                let value = value.trim();
                if value.is_empty() || value.contains(char::is_whitespace) {
                    return Err(err(format!(
                        "expected a single state after `{}:`",
                        key.trim()
                    )));
                }
                let slot = match key.trim() {
                    "start" => &mut start,
                    "final" => &mut accept,
                    other => return Err(err(format!("unknown header `{other}`"))),
                };
                if slot.is_some() {
                    return Err(err(format!("duplicate `{}` header", key.trim())));
                }
                *slot = Some(intern(value));
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            let [from, action, to] = parts.as_slice() else {
                return Err(err("expected `state action state`".into()));
            };
            let action: Action = action
                .parse()
                .map_err(|_| err(format!("unknown action `{action}`")))?;
            transitions.push((intern(from), action, intern(to)));
        }
        let start = start.ok_or(CompileError::Parse {
            line: 0,
            msg: "missing `start:` header".into(),
        })?;
        let accept = accept.ok_or(CompileError::Parse {
            line: 0,
            msg: "missing `final:` header".into(),
        })?;
        Self::new(states, start, accept, transitions)
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn accept(&self) -> usize {
        self.accept
    }

    pub fn transitions(&self) -> &BTreeSet<(usize, Action, usize)> {
        &self.transitions
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s == name)
    }

    /// `Σ = {(q', a) | (q, a, q') ∈ δ}`, ordered by state index then action.
    pub fn alphabet(&self) -> Vec<(usize, Action)> {
        let set: BTreeSet<(usize, Action)> =
            self.transitions.iter().map(|&(_, a, p)| (p, a)).collect();
        set.into_iter().collect()
    }

    pub fn symbol_name(&self, state: usize, action: Action) -> String {
        format!("({},{})", self.states[state], action)
    }

    /// Inverse of [`symbol_name`](Self::symbol_name).
    pub fn parse_symbol(&self, symbol: &str) -> Option<(usize, Action)> {
        let inner = symbol.trim().strip_prefix('(')?.strip_suffix(')')?;
        let (state, action) = inner.split_once(',')?;
        Some((self.state_index(state.trim())?, action.trim().parse().ok()?))
    }

    /// Applies one step from `(q, c)`; `None` if the step is not valid.
    pub fn apply(&self, q: usize, c: [u64; 2], target: usize, action: Action) -> Option<[u64; 2]> {
        if !self.transitions.contains(&(q, action, target)) {
            return None;
        }
        let i = action.counter();
        let mut next = c;
        match action {
            Action::Inc1 | Action::Inc2 => next[i] = c[i].checked_add(1)?,
            Action::Dec1 | Action::Dec2 => next[i] = c[i].checked_sub(1)?,
            Action::Ztest1 | Action::Ztest2 if c[i] != 0 => return None,
            Action::Ztest1 | Action::Ztest2 => {}
        }
        Some(next)
    }

    /// Whether `word` is the encoding of a valid run from `(q0, 0, 0)` that
    /// ends in `qf`.
    pub fn is_accepting_encoding(&self, word: &[(usize, Action)]) -> bool {
        let mut q = self.start;
        let mut c = [0, 0];
        for &(target, action) in word {
            match self.apply(q, c, target, action) {
                Some(next) => {
                    q = target;
                    c = next;
                }
                None => return false,
            }
        }
        !word.is_empty() && q == self.accept
    }

    /// Symbol-name variant of [`is_accepting_encoding`](Self::is_accepting_encoding).
    pub fn accepts_word<S: AsRef<str>>(&self, word: &[S]) -> bool {
        let decoded: Option<Vec<_>> = word.iter().map(|s| self.parse_symbol(s.as_ref())).collect();
        decoded.is_some_and(|w| self.is_accepting_encoding(&w))
    }
}

fn valid_state_name(s: &str) -> bool {
    !s.is_empty()
        && !s
            .chars()
            .any(|c| c.is_whitespace() || "(),;{}:#".contains(c))
}

impl fmt::Display for MinskyMachine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "start: {}", self.states[self.start])?;
        writeln!(f, "final: {}", self.states[self.accept])?;
        for &(q, a, p) in &self.transitions {
            writeln!(f, "{} {} {}", self.states[q], a, self.states[p])?;
        }
        Ok(())
    }
}

/// An accepting run: the steps taken and the counter values after each
/// step (`counters[0]` is the initial `(0, 0)`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinskyRun {
    pub steps: Vec<(usize, Action)>,
    pub counters: Vec<[u64; 2]>,
}

impl MinskyRun {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// Simulates `machine` deterministically for at most `max_steps` steps and
/// returns the run up to the first visit of `qf` after at least one step.
pub fn minsky_oracle(machine: &MinskyMachine, max_steps: usize) -> Option<MinskyRun> {
    let mut q = machine.start;
    let mut c = [0u64, 0];
    let mut run = MinskyRun {
        steps: Vec::new(),
        counters: vec![c],
    };
    for _ in 0..max_steps {
        // At most one outgoing transition applies in every configuration.
        let (_, action, target) = machine
            .transitions
            .iter()
            .copied()
            .find(|&(p, a, t)| p == q && machine.apply(q, c, t, a).is_some())?;
        c = machine.apply(q, c, target, action)?;
        q = target;
        run.steps.push((target, action));
        run.counters.push(c);
        if q == machine.accept {
            return Some(run);
        }
    }
    None
}

/// Word over the compiled alphabet encoding `run`.
pub fn run_encode(machine: &MinskyMachine, run: &MinskyRun) -> Vec<String> {
    run.steps
        .iter()
        .map(|&(q, a)| machine.symbol_name(q, a))
        .collect()
}

/// Compiles `machine` into a time-invariant, diagonal three-layer SSM over
/// `d = 2|Q| + 9` coordinates: current state, previous state, action,
/// the two counters and a violation accumulator.
pub fn compile_minsky(machine: &MinskyMachine) -> Result<SsmModel, CompileError> {
    let n = machine.states.len();
    let d = 2 * n + 9;
    let cur = |q: usize| q;
    let prev = |q: usize| n + q;
    let act = |a: Action| 2 * n + a.index();
    let counter = |i: usize| 2 * n + 6 + i;
    let chk = 2 * n + 8;

    let sigma = machine.alphabet();
    let alphabet = sigma
        .iter()
        .map(|&(q, a)| machine.symbol_name(q, a))
        .collect();
    let embedding = sigma
        .iter()
        .map(|&(q, a)| {
            let mut v = vec![Rational::zero(); d];
            v[cur(q)] = Rational::one();
            v[prev(q)] = Rational::one();
            v[act(a)] = Rational::one();
            for i in 0..2 {
                v[counter(i)] = Rational::from_integer(a.delta(i).into());
            }
            v
        })
        .collect();

    let id = identity_matrix(d);
    let zeros = || vec![Rational::zero(); d];

    // Counters accumulate; everything else is the current input.
    let accumulate = SsmLayer {
        h0: zeros(),
        gate: GateSpec::TimeInvariant(masked_identity(counter(0), counter(1), d)),
        inc: AffineMap::linear(id.clone()),
        phi: SsmLayer::project_h(d),
    };

    // Previous state via the history register, then the violation checks.
    let decode: Vec<(usize, Fnn)> = (0..n).map(|q| (prev(q), gadget_prev_bit())).collect();
    let stage1 = SsmLayer::pointwise_phi(d, &decode)?;

    let accepted: Vec<Vec<usize>> = machine
        .transitions
        .iter()
        .map(|&(q, a, p)| vec![p, q, a.index()])
        .collect();
    let trans = gadget_lookup(&[n, n, 6], &accepted)?;
    let dec_ok = compose(&gadget_implies(), &concat(&gadget_eq(1), &gadget_geq0()))?;
    let ztest_ok = compose(&gadget_implies(), &concat(&gadget_eq(1), &gadget_eq(0)))?;

    let mut fanout: Vec<usize> = (0..d).collect();
    fanout.extend((0..n).map(cur));
    fanout.extend((0..n).map(prev));
    fanout.extend(Action::ALL.map(act));
    let mut parts = vec![Fnn::identity(d), trans];
    for (i, (dec, ztest)) in [
        (Action::Dec1, Action::Ztest1),
        (Action::Dec2, Action::Ztest2),
    ]
    .into_iter()
    .enumerate()
    {
        fanout.extend([act(dec), counter(i), act(ztest), counter(i)]);
        parts.push(dec_ok.clone());
        parts.push(ztest_ok.clone());
    }
    let checks = compose(&concat_all(&parts), &Fnn::select(d, &fanout))?;
    // Pass through and add the five violation bits onto chk.
    let rows = (0..d)
        .map(|j| {
            let mut w = unit_vector(d + 5, j);
            if j == chk {
                w[d..].iter_mut().for_each(|x| *x = Rational::one());
            }
            (w, Rational::zero())
        })
        .collect();
    let stage2 = compose(&Fnn::linear(d + 5, rows)?, &checks)?;

    let mut h0 = zeros();
    h0[prev(machine.start)] = Rational::one();
    let previous = SsmLayer {
        h0,
        gate: GateSpec::TimeInvariant(mat_scale(
            &masked_identity(prev(0), prev(n - 1), d),
            &rat(1, 4),
        )),
        inc: AffineMap::linear(id.clone()),
        phi: compose(&stage2, &stage1)?,
    };

    let total = SsmLayer {
        h0: zeros(),
        gate: GateSpec::TimeInvariant(masked_identity(chk, chk, d)),
        inc: AffineMap::linear(id),
        phi: SsmLayer::project_h(d),
    };

    let out = compose(
        &compose(&gadget_and(2), &concat(&gadget_eq(0), &gadget_eq(1)))?,
        &Fnn::select(d, &[chk, cur(machine.accept)]),
    )?;
    Ok(SsmModel::new(
        alphabet,
        embedding,
        vec![accumulate, previous, total],
        out,
        d,
    )?)
}

/// Signed fixed-point width (3 fractional bits for the history register)
/// that keeps every coordinate of a compiled machine exact on words of
/// length up to `max_len`: counters reach at most `max_len` in magnitude
/// and the violation sum at most `5 · max_len`.
pub fn minsky_min_bits(max_len: u64) -> u32 {
    signed_width(max_len.saturating_mul(5).max(4) + 2, 3)
}
