//! State space models: stacked layers with the recurrence
//! `h_t = gate(x_t) · h_{t-1} + inc(x_t)` and pointwise output
//! `z_t = phi(h_t, x_t)`, an embedding table and a scalar output network.
//!
//! Evaluation is streaming: [`Evaluator::step`] consumes one symbol and
//! returns the next [`StreamState`] together with the model output at that
//! position. A layer-major evaluator that materialises whole sequences is
//! kept alongside for cross-checking.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arithmetic::{ArithMode, Rational, Scalar};
use crate::fnn::{compose, concat, Fnn, FnnError, PreparedFnn};

pub type Matrix = Vec<Vec<Rational>>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SsmError {
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("empty word undefined: models are evaluated on non-empty words only")]
    EmptyWord,
    #[error("malformed model: {0}")]
    Malformed(String),
    #[error("state does not match model: {0}")]
    StateMismatch(String),
    #[error(transparent)]
    Fnn(#[from] FnnError),
}

/// The gate of a layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GateSpec {
    /// `gate(x) = A` for a constant `d×d` matrix.
    TimeInvariant(Matrix),
    /// `gate(x) = diag(G·x + g0)`.
    DiagonalAffine { g: Matrix, g0: Vec<Rational> },
}

impl GateSpec {
    pub fn zero(d: usize) -> Self {
        GateSpec::TimeInvariant(zero_matrix(d, d))
    }

    /// Whether the gate is a constant matrix.
    pub fn is_time_invariant(&self) -> bool {
        match self {
            GateSpec::TimeInvariant(_) => true,
            GateSpec::DiagonalAffine { g, .. } => g.iter().flatten().all(Zero::is_zero),
        }
    }

    pub fn is_diagonal(&self) -> bool {
        match self {
            GateSpec::TimeInvariant(a) => a
                .iter()
                .enumerate()
                .all(|(i, row)| row.iter().enumerate().all(|(j, v)| i == j || v.is_zero())),
            GateSpec::DiagonalAffine { .. } => true,
        }
    }

    fn dim(&self) -> usize {
        match self {
            GateSpec::TimeInvariant(a) => a.len(),
            GateSpec::DiagonalAffine { g0, .. } => g0.len(),
        }
    }
}

/// `x ↦ B·x + c`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineMap {
    pub b: Matrix,
    pub c: Vec<Rational>,
}

impl AffineMap {
    pub fn linear(b: Matrix) -> Self {
        let d = b.len();
        Self {
            b,
            c: vec![Rational::zero(); d],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SsmLayer {
    pub h0: Vec<Rational>,
    pub gate: GateSpec,
    pub inc: AffineMap,
    /// Pointwise output network on `(h, x)`, input dim `2d`, output dim `d`.
    pub phi: Fnn,
}

impl SsmLayer {
    pub fn dim(&self) -> usize {
        self.h0.len()
    }

    /// `phi` that returns the `h` half of `(h, x)` unchanged.
    pub fn project_h(d: usize) -> Fnn {
        Fnn::select(2 * d, &(0..d).collect::<Vec<_>>())
    }

    /// `phi` applying a one-in/one-out network to selected coordinates of
    /// `h` and passing the others through.
    pub fn pointwise_phi(d: usize, overrides: &[(usize, Fnn)]) -> Result<Fnn, FnnError> {
        let mut parts = Vec::with_capacity(d);
        for i in 0..d {
            match overrides.iter().find(|(k, _)| *k == i) {
                Some((_, net)) => parts.push(net.clone()),
                None => parts.push(Fnn::identity(1)),
            }
        }
        let body = parts
            .iter()
            .skip(1)
            .fold(parts[0].clone(), |acc, p| concat(&acc, p));
        compose(&body, &Self::project_h(d))
    }

    fn validate(&self, d: usize) -> Result<(), SsmError> {
        let bad = |msg: String| Err(SsmError::Malformed(msg));
        if self.h0.len() != d {
            return bad(format!("h0 has length {}, expected {d}", self.h0.len()));
        }
        if self.gate.dim() != d || !square(gate_matrix(&self.gate), d) {
            return bad(format!("gate is not {d}x{d}"));
        }
        if let GateSpec::DiagonalAffine { g0, .. } = &self.gate {
            if g0.len() != d {
                return bad(format!("gate offset has length {}, expected {d}", g0.len()));
            }
        }
        if !square(&self.inc.b, d) || self.inc.c.len() != d {
            return bad(format!("inc is not a {d}-dimensional affine map"));
        }
        if self.phi.input_dim() != 2 * d || self.phi.output_dim() != d {
            return bad(format!(
                "phi maps {} -> {}, expected {} -> {d}",
                self.phi.input_dim(),
                self.phi.output_dim(),
                2 * d
            ));
        }
        Ok(())
    }
}

fn gate_matrix(gate: &GateSpec) -> &Matrix {
    match gate {
        GateSpec::TimeInvariant(a) => a,
        GateSpec::DiagonalAffine { g, .. } => g,
    }
}

fn square(m: &Matrix, d: usize) -> bool {
    m.len() == d && m.iter().all(|row| row.len() == d)
}

pub fn zero_matrix(rows: usize, cols: usize) -> Matrix {
    vec![vec![Rational::zero(); cols]; rows]
}

pub fn identity_matrix(d: usize) -> Matrix {
    let mut m = zero_matrix(d, d);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = Rational::one();
    }
    m
}

/// A complete model `(emb, l_1, …, l_L, out)` over a finite alphabet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SsmModel {
    alphabet: Vec<String>,
    embedding: Vec<Vec<Rational>>,
    layers: Vec<SsmLayer>,
    out: Fnn,
    dim: usize,
}

impl SsmModel {
    /// `embedding[k]` is the embedding of `alphabet[k]`.
    pub fn new(
        alphabet: Vec<String>,
        embedding: Vec<Vec<Rational>>,
        layers: Vec<SsmLayer>,
        out: Fnn,
        dim: usize,
    ) -> Result<Self, SsmError> {
        if alphabet.is_empty() {
            return Err(SsmError::Malformed("empty alphabet".into()));
        }
        if alphabet.len() != embedding.len() {
            return Err(SsmError::Malformed(format!(
                "{} symbols but {} embedding rows",
                alphabet.len(),
                embedding.len()
            )));
        }
        let mut seen = std::collections::HashSet::new();
        for s in &alphabet {
            if !seen.insert(s) {
                return Err(SsmError::Malformed(format!("duplicate symbol `{s}`")));
            }
        }
        if let Some(row) = embedding.iter().find(|e| e.len() != dim) {
            return Err(SsmError::Malformed(format!(
                "embedding of length {}, expected {dim}",
                row.len()
            )));
        }
        for layer in &layers {
            layer.validate(dim)?;
        }
        if out.input_dim() != dim || out.output_dim() != 1 {
            return Err(SsmError::Malformed(format!(
                "out maps {} -> {}, expected {dim} -> 1",
                out.input_dim(),
                out.output_dim()
            )));
        }
        Ok(Self {
            alphabet,
            embedding,
            layers,
            out,
            dim,
        })
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn embedding(&self) -> &[Vec<Rational>] {
        &self.embedding
    }

    pub fn layers(&self) -> &[SsmLayer] {
        &self.layers
    }

    pub fn out(&self) -> &Fnn {
        &self.out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    /// `|S| = |Σ| + L + d`.
    pub fn size(&self) -> usize {
        self.alphabet.len() + self.layers.len() + self.dim
    }

    pub fn symbol_index(&self, symbol: &str) -> Result<usize, SsmError> {
        self.alphabet
            .iter()
            .position(|s| s == symbol)
            .ok_or_else(|| SsmError::UnknownSymbol(symbol.to_string()))
    }

    pub fn word_indices<S: AsRef<str>>(&self, word: &[S]) -> Result<Vec<usize>, SsmError> {
        word.iter().map(|s| self.symbol_index(s.as_ref())).collect()
    }

    pub fn evaluator(&self, mode: ArithMode) -> Evaluator {
        Evaluator::new(self, mode)
    }

    /// Same model with the alphabet (and embedding rows) reordered by `perm`,
    /// where `perm[k]` is the old index of the new `k`-th symbol.
    pub fn permute_alphabet(&self, perm: &[usize]) -> Result<Self, SsmError> {
        let alphabet = perm.iter().map(|&k| self.alphabet[k].clone()).collect();
        let embedding = perm.iter().map(|&k| self.embedding[k].clone()).collect();
        Self::new(
            alphabet,
            embedding,
            self.layers.clone(),
            self.out.clone(),
            self.dim,
        )
    }
}

/// Per-layer hidden vectors `(h^1_t, …, h^L_t)`, enough to continue
/// evaluation one symbol at a time.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StreamState {
    hidden: Vec<Vec<Scalar>>,
    mode: ArithMode,
}

impl StreamState {
    pub fn hidden(&self) -> &[Vec<Scalar>] {
        &self.hidden
    }

    pub fn mode(&self) -> ArithMode {
        self.mode
    }

    /// Whether every entry belongs to the state's arithmetic domain.
    pub fn is_closed(&self) -> bool {
        self.hidden.iter().flatten().all(|v| self.mode.owns(v))
    }
}

#[derive(Debug, Clone)]
enum PreparedGate {
    /// Sparse rows of a constant matrix.
    Constant(Vec<Vec<(usize, Scalar)>>),
    /// Per coordinate: sparse row of `G` and offset `g0`.
    Diagonal(Vec<(Vec<(usize, Scalar)>, Scalar)>),
}

#[derive(Debug, Clone)]
struct PreparedLayer {
    h0: Vec<Scalar>,
    gate: PreparedGate,
    inc: Vec<(Vec<(usize, Scalar)>, Scalar)>,
    phi: PreparedFnn,
}

/// A model bound to one arithmetic mode.
#[derive(Debug, Clone)]
pub struct Evaluator {
    mode: ArithMode,
    embedding: Vec<Vec<Scalar>>,
    layers: Vec<PreparedLayer>,
    out: PreparedFnn,
    quantised: usize,
}

/// What a single layer saw and produced at one position.
#[derive(Debug, Clone)]
pub struct LayerTrace {
    pub input: Vec<Scalar>,
    pub hidden: Vec<Scalar>,
    pub output: Vec<Scalar>,
}

impl Evaluator {
    pub fn new(model: &SsmModel, mode: ArithMode) -> Self {
        let mut quantised = 0;
        let mut convert = |x: &Rational| {
            if !mode.represents(x) {
                quantised += 1;
            }
            mode.scalar(x)
        };
        let mut sparse_row = |row: &[Rational]| -> Vec<(usize, Scalar)> {
            row.iter()
                .enumerate()
                .filter(|(_, v)| !v.is_zero())
                .map(|(j, v)| (j, convert(v)))
                .collect()
        };
        let embedding: Vec<Vec<Scalar>> = model
            .embedding
            .iter()
            .map(|row| row.iter().map(|v| mode.scalar(v)).collect())
            .collect();
        let mut layers = Vec::with_capacity(model.layers.len());
        for layer in &model.layers {
            let gate = match &layer.gate {
                GateSpec::TimeInvariant(a) => {
                    PreparedGate::Constant(a.iter().map(|row| sparse_row(row)).collect())
                }
                GateSpec::DiagonalAffine { g, g0 } => PreparedGate::Diagonal(
                    g.iter()
                        .zip(g0)
                        .map(|(row, off)| (sparse_row(row), mode.scalar(off)))
                        .collect(),
                ),
            };
            let inc = layer
                .inc
                .b
                .iter()
                .zip(&layer.inc.c)
                .map(|(row, c)| (sparse_row(row), mode.scalar(c)))
                .collect();
            let phi = PreparedFnn::new(&layer.phi, mode);
            layers.push(PreparedLayer {
                h0: layer.h0.iter().map(|v| mode.scalar(v)).collect(),
                gate,
                inc,
                phi,
            });
        }
        let out = PreparedFnn::new(&model.out, mode);
        let unrepresentable = model
            .embedding
            .iter()
            .flatten()
            .chain(model.layers.iter().flat_map(|l| l.h0.iter()))
            .chain(model.layers.iter().flat_map(|l| l.inc.c.iter()))
            .chain(model.layers.iter().flat_map(|l| match &l.gate {
                GateSpec::DiagonalAffine { g0, .. } => g0.iter().collect::<Vec<_>>(),
                GateSpec::TimeInvariant(_) => Vec::new(),
            }))
            .filter(|v| !mode.represents(v))
            .count();
        let quantised = quantised
            + unrepresentable
            + layers.iter().map(|l| l.phi.quantised).sum::<usize>()
            + out.quantised;
        Self {
            mode,
            embedding,
            layers,
            out,
            quantised,
        }
    }

    pub fn mode(&self) -> ArithMode {
        self.mode
    }

    pub fn alphabet_len(&self) -> usize {
        self.embedding.len()
    }

    /// Number of model constants that are not exactly representable in the
    /// evaluator's mode and were quantised.
    pub fn quantised_constants(&self) -> usize {
        self.quantised
    }

    pub fn initial_state(&self) -> StreamState {
        StreamState {
            hidden: self.layers.iter().map(|l| l.h0.clone()).collect(),
            mode: self.mode,
        }
    }

    fn dot(&self, row: &[(usize, Scalar)], x: &[Scalar]) -> Scalar {
        let mode = self.mode;
        let mut acc = mode.zero();
        for (j, w) in row {
            let term = match w {
                Scalar::Exact(r) if r.is_one() => x[*j].clone(),
                _ => mode.mul(w, &x[*j]),
            };
            acc = mode.add(&acc, &term);
        }
        acc
    }

    fn layer_step(
        &self,
        layer: &PreparedLayer,
        h: &[Scalar],
        x: &[Scalar],
    ) -> (Vec<Scalar>, Vec<Scalar>) {
        let mode = self.mode;
        let next_h: Vec<Scalar> = (0..h.len())
            .map(|i| {
                let gated = match &layer.gate {
                    PreparedGate::Constant(rows) => self.dot(&rows[i], h),
                    PreparedGate::Diagonal(rows) => {
                        let (row, off) = &rows[i];
                        let g = mode.add(&self.dot(row, x), off);
                        if g.is_zero() {
                            mode.zero()
                        } else {
                            mode.mul(&g, &h[i])
                        }
                    }
                };
                let (row, c) = &layer.inc[i];
                let inc = mode.add(&self.dot(row, x), c);
                mode.add(&gated, &inc)
            })
            .collect();
        let mut phi_in = next_h.clone();
        phi_in.extend_from_slice(x);
        let z = layer.phi.eval(mode, &phi_in);
        (next_h, z)
    }

    fn check_state(&self, state: &StreamState) -> Result<(), SsmError> {
        if state.mode != self.mode {
            return Err(SsmError::StateMismatch(format!(
                "state is in {} mode, evaluator in {}",
                state.mode, self.mode
            )));
        }
        if state.hidden.len() != self.layers.len() {
            return Err(SsmError::StateMismatch(format!(
                "state has {} layers, model has {}",
                state.hidden.len(),
                self.layers.len()
            )));
        }
        Ok(())
    }

    /// Consumes one symbol (by alphabet index).
    pub fn step(
        &self,
        state: &StreamState,
        symbol: usize,
    ) -> Result<(StreamState, Scalar), SsmError> {
        self.check_state(state)?;
        if symbol >= self.embedding.len() {
            return Err(SsmError::UnknownSymbol(format!("#{symbol}")));
        }
        Ok(self.step_unchecked(state, symbol))
    }

    pub(crate) fn step_unchecked(
        &self,
        state: &StreamState,
        symbol: usize,
    ) -> (StreamState, Scalar) {
        let mut x = self.embedding[symbol].clone();
        let mut hidden = Vec::with_capacity(self.layers.len());
        for (layer, h) in self.layers.iter().zip(&state.hidden) {
            let (next_h, z) = self.layer_step(layer, h, &x);
            hidden.push(next_h);
            x = z;
        }
        let y = self
            .out
            .eval(self.mode, &x)
            .pop()
            .expect("out has one output");
        (
            StreamState {
                hidden,
                mode: self.mode,
            },
            y,
        )
    }

    /// Like [`Evaluator::step`] but also reports every layer's input,
    /// updated hidden vector and output.
    pub fn step_traced(
        &self,
        state: &StreamState,
        symbol: usize,
    ) -> Result<(StreamState, Scalar, Vec<LayerTrace>), SsmError> {
        self.check_state(state)?;
        if symbol >= self.embedding.len() {
            return Err(SsmError::UnknownSymbol(format!("#{symbol}")));
        }
        let mut x = self.embedding[symbol].clone();
        let mut hidden = Vec::with_capacity(self.layers.len());
        let mut trace = Vec::with_capacity(self.layers.len());
        for (layer, h) in self.layers.iter().zip(&state.hidden) {
            let (next_h, z) = self.layer_step(layer, h, &x);
            trace.push(LayerTrace {
                input: x,
                hidden: next_h.clone(),
                output: z.clone(),
            });
            hidden.push(next_h);
            x = z;
        }
        let y = self
            .out
            .eval(self.mode, &x)
            .pop()
            .expect("out has one output");
        Ok((
            StreamState {
                hidden,
                mode: self.mode,
            },
            y,
            trace,
        ))
    }

    /// Output on a word given as alphabet indices.
    pub fn run(&self, word: &[usize]) -> Result<Scalar, SsmError> {
        if word.is_empty() {
            return Err(SsmError::EmptyWord);
        }
        let mut state = self.initial_state();
        let mut y = self.mode.zero();
        for &a in word {
            let (next, out) = self.step(&state, a)?;
            state = next;
            y = out;
        }
        Ok(y)
    }

    /// States `s_0, …, s_n` visited on `word` (`s_0` is the initial state).
    pub fn states_along(&self, word: &[usize]) -> Result<Vec<StreamState>, SsmError> {
        let mut states = vec![self.initial_state()];
        for &a in word {
            let (next, _) = self.step(states.last().expect("non-empty"), a)?;
            states.push(next);
        }
        Ok(states)
    }

    pub fn accepts_indices(&self, word: &[usize]) -> Result<bool, SsmError> {
        Ok(self.run(word)?.is_one())
    }

    /// Layer-major evaluation: each layer processes the whole sequence
    /// before the next one starts.
    pub fn run_layer_major(&self, word: &[usize]) -> Result<Scalar, SsmError> {
        if word.is_empty() {
            return Err(SsmError::EmptyWord);
        }
        if let Some(&bad) = word.iter().find(|&&a| a >= self.embedding.len()) {
            return Err(SsmError::UnknownSymbol(format!("#{bad}")));
        }
        let mut xs: Vec<Vec<Scalar>> = word.iter().map(|&a| self.embedding[a].clone()).collect();
        for layer in &self.layers {
            let mut h = layer.h0.clone();
            let mut zs = Vec::with_capacity(xs.len());
            for x in &xs {
                let (next_h, z) = self.layer_step(layer, &h, x);
                h = next_h;
                zs.push(z);
            }
            xs = zs;
        }
        let last = xs.last().expect("non-empty word");
        Ok(self
            .out
            .eval(self.mode, last)
            .pop()
            .expect("out has one output"))
    }
}

/// One streaming step from `state` on `symbol`.
pub fn step(
    model: &SsmModel,
    state: &StreamState,
    symbol: &str,
) -> Result<(StreamState, Scalar), SsmError> {
    let index = model.symbol_index(symbol)?;
    Evaluator::new(model, state.mode).step(state, index)
}

/// `S(w)`: the output at the last position.
pub fn evaluate<S: AsRef<str>>(
    model: &SsmModel,
    word: &[S],
    mode: ArithMode,
) -> Result<Scalar, SsmError> {
    let word = model.word_indices(word)?;
    model.evaluator(mode).run(&word)
}

/// Whether `S(w) = 1` exactly. The empty word yields [`SsmError::EmptyWord`].
pub fn accepts<S: AsRef<str>>(
    model: &SsmModel,
    word: &[S],
    mode: ArithMode,
) -> Result<bool, SsmError> {
    Ok(evaluate(model, word, mode)?.is_one())
}

/// `2^(2·L·d·b)`, the length bound on shortest accepted words at bit-width `b`.
pub fn state_count_bound(model: &SsmModel, bits: u64) -> BigUint {
    let exponent = 2 * model.num_layers() as u64 * model.dim() as u64 * bits;
    BigUint::one() << exponent
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateClasses {
    pub time_invariant: bool,
    pub diagonal: bool,
}

pub fn classify_gates(model: &SsmModel) -> GateClasses {
    GateClasses {
        time_invariant: model.layers.iter().all(|l| l.gate.is_time_invariant()),
        diagonal: model.layers.iter().all(|l| l.gate.is_diagonal()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arithmetic::{int, rat, FixedPointFormat};
    use crate::fnn::gadget_eq;

    /// One layer accumulating the embedding; output tests coordinate 0 for 1.
    fn accumulator(d: usize) -> SsmModel {
        let alphabet = (0..d).map(|i| format!("e{i}")).collect();
        let embedding = identity_matrix(d);
        let layer = SsmLayer {
            h0: vec![Rational::zero(); d],
            gate: GateSpec::TimeInvariant(identity_matrix(d)),
            inc: AffineMap::linear(identity_matrix(d)),
            phi: SsmLayer::project_h(d),
        };
        let out = compose(&gadget_eq(1), &Fnn::select(d, &[0])).unwrap();
        SsmModel::new(alphabet, embedding, vec![layer], out, d).unwrap()
    }

    #[test]
    fn pure_accumulation() {
        let model = accumulator(2);
        let ev = model.evaluator(ArithMode::Exact);
        let states = ev.states_along(&[0, 0, 0]).unwrap();
        let last = &states[3].hidden()[0];
        assert_eq!(last[0], Scalar::Exact(int(3)));
        assert_eq!(last[1], Scalar::Exact(int(0)));
        assert!(accepts(&model, &["e0"], ArithMode::Exact).unwrap());
        assert!(!accepts(&model, &["e0", "e0"], ArithMode::Exact).unwrap());
        assert!(accepts(&model, &["e1", "e0", "e1"], ArithMode::Exact).unwrap());
    }

    #[test]
    fn step_is_deterministic() {
        let model = accumulator(2);
        let s = model.evaluator(ArithMode::Exact).initial_state();
        let (a, ya) = step(&model, &s, "e1").unwrap();
        let (b, yb) = step(&model, &s, "e1").unwrap();
        assert_eq!(a, b);
        assert_eq!(ya, yb);
    }

    #[test]
    fn errors() {
        let model = accumulator(2);
        assert_eq!(
            accepts(&model, &["zz"], ArithMode::Exact),
            Err(SsmError::UnknownSymbol("zz".into()))
        );
        let empty: [&str; 0] = [];
        assert_eq!(
            accepts(&model, &empty, ArithMode::Exact),
            Err(SsmError::EmptyWord)
        );
        let fixed = model
            .evaluator(ArithMode::Fixed(FixedPointFormat::fx6()))
            .initial_state();
        assert!(matches!(
            model.evaluator(ArithMode::Exact).step(&fixed, 0),
            Err(SsmError::StateMismatch(_))
        ));
    }

    #[test]
    fn fixed_mode_saturates_accumulator() {
        let model = accumulator(1);
        let mode = ArithMode::Fixed(FixedPointFormat::fx6());
        let ev = model.evaluator(mode);
        let states = ev.states_along(&[0; 10]).unwrap();
        assert_eq!(states[10].hidden()[0][0].to_rational(), rat(31, 8));
        assert!(states.iter().all(StreamState::is_closed));
    }

    #[test]
    fn bounds_and_size() {
        let model = accumulator(1);
        assert_eq!(state_count_bound(&model, 2), BigUint::from(16u32));
        assert_eq!(state_count_bound(&model, 0), BigUint::one());
        assert_eq!(model.size(), 1 + 1 + 1);
        let three = SsmModel::new(
            vec!["a".into()],
            vec![vec![int(0); 3]],
            vec![
                SsmLayer {
                    h0: vec![int(0); 3],
                    gate: GateSpec::zero(3),
                    inc: AffineMap::linear(identity_matrix(3)),
                    phi: SsmLayer::project_h(3),
                };
                2
            ],
            Fnn::select(3, &[0]),
            3,
        )
        .unwrap();
        assert_eq!(state_count_bound(&three, 6), BigUint::one() << 72u32);
    }

    #[test]
    fn gate_classes() {
        let model = accumulator(2);
        assert_eq!(
            classify_gates(&model),
            GateClasses {
                time_invariant: true,
                diagonal: true
            }
        );
        let no_layers = SsmModel::new(
            vec!["a".into()],
            vec![vec![int(1)]],
            vec![],
            gadget_eq(1),
            1,
        )
        .unwrap();
        assert_eq!(
            classify_gates(&no_layers),
            GateClasses {
                time_invariant: true,
                diagonal: true
            }
        );
        let mut full = identity_matrix(2);
        full[0][1] = int(1);
        assert!(!GateSpec::TimeInvariant(full).is_diagonal());
        let diag = GateSpec::DiagonalAffine {
            g: identity_matrix(2),
            g0: vec![int(0); 2],
        };
        assert!(diag.is_diagonal() && !diag.is_time_invariant());
    }

    #[test]
    fn malformed_models_are_rejected() {
        let bad_out = SsmModel::new(
            vec!["a".into()],
            vec![vec![int(1)]],
            vec![],
            Fnn::identity(2),
            1,
        );
        assert!(bad_out.is_err());
        let dup = SsmModel::new(
            vec!["a".into(), "a".into()],
            vec![vec![int(1)], vec![int(1)]],
            vec![],
            gadget_eq(1),
            1,
        );
        assert!(dup.is_err());
    }
}
