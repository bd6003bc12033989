//! Relu feedforward networks, the composition and concatenation
//! combinators, and the small predicate gadgets the compilers are built from.
//!
//! A node computes `act(sum_i w_i * x_i + bias)` where `act` is relu. The
//! [`Activation::Identity`] tag is an internal convenience for passing
//! possibly-negative values through a layer; [`Fnn::lower_identity`]
//! rewrites hidden identity nodes into relu pairs `x = relu(x) - relu(-x)`.

use std::collections::BTreeSet;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arithmetic::{int, rat, ArithMode, Rational, Scalar};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FnnError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("malformed network: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Identity,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FnnNode {
    pub weights: Vec<Rational>,
    pub bias: Rational,
    pub activation: Activation,
}

impl FnnNode {
    pub fn relu(weights: Vec<Rational>, bias: Rational) -> Self {
        Self {
            weights,
            bias,
            activation: Activation::Relu,
        }
    }

    pub fn identity(weights: Vec<Rational>, bias: Rational) -> Self {
        Self {
            weights,
            bias,
            activation: Activation::Identity,
        }
    }

    /// Node reading a single input coordinate unchanged.
    fn passthrough(input_dim: usize, index: usize) -> Self {
        Self::identity(unit(input_dim, index), Rational::zero())
    }
}

fn unit(dim: usize, index: usize) -> Vec<Rational> {
    let mut v = vec![Rational::zero(); dim];
    v[index] = Rational::one();
    v
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FnnLayer {
    input_dim: usize,
    nodes: Vec<FnnNode>,
}

impl FnnLayer {
    pub fn new(input_dim: usize, nodes: Vec<FnnNode>) -> Result<Self, FnnError> {
        for node in &nodes {
            if node.weights.len() != input_dim {
                return Err(FnnError::DimensionMismatch {
                    expected: input_dim,
                    actual: node.weights.len(),
                });
            }
        }
        Ok(Self { input_dim, nodes })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[FnnNode] {
        &self.nodes
    }

    fn identity(dim: usize) -> Self {
        let nodes = (0..dim).map(|i| FnnNode::passthrough(dim, i)).collect();
        Self {
            input_dim: dim,
            nodes,
        }
    }
}

/// A feedforward network. A network with no layers is the identity on its
/// input dimension.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fnn {
    input_dim: usize,
    layers: Vec<FnnLayer>,
}

impl Fnn {
    pub fn new(input_dim: usize, layers: Vec<FnnLayer>) -> Result<Self, FnnError> {
        let mut dim = input_dim;
        for layer in &layers {
            if layer.input_dim != dim {
                return Err(FnnError::DimensionMismatch {
                    expected: dim,
                    actual: layer.input_dim,
                });
            }
            dim = layer.output_dim();
        }
        Ok(Self { input_dim, layers })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            input_dim: dim,
            layers: Vec::new(),
        }
    }

    /// Single identity-activated affine layer; `rows[k] = (weights, bias)`.
    pub fn linear(
        input_dim: usize,
        rows: Vec<(Vec<Rational>, Rational)>,
    ) -> Result<Self, FnnError> {
        let nodes = rows
            .into_iter()
            .map(|(w, b)| FnnNode::identity(w, b))
            .collect();
        Self::new(input_dim, vec![FnnLayer::new(input_dim, nodes)?])
    }

    /// Projection onto `indices` (in the given order, repeats allowed).
    pub fn select(input_dim: usize, indices: &[usize]) -> Self {
        let nodes = indices
            .iter()
            .map(|&i| FnnNode::passthrough(input_dim, i))
            .collect();
        Self {
            input_dim,
            layers: vec![FnnLayer { input_dim, nodes }],
        }
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers
            .last()
            .map_or(self.input_dim, FnnLayer::output_dim)
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[FnnLayer] {
        &self.layers
    }

    pub fn node_count(&self) -> usize {
        self.layers.iter().map(FnnLayer::output_dim).sum()
    }

    /// Appends identity layers until the network has `depth` layers.
    pub fn pad_to_depth(mut self, depth: usize) -> Self {
        while self.layers.len() < depth {
            let dim = self.output_dim();
            self.layers.push(FnnLayer::identity(dim));
        }
        self
    }

    /// Evaluates the network on `input` entirely within `mode`.
    pub fn eval(&self, input: &[Scalar], mode: ArithMode) -> Result<Vec<Scalar>, FnnError> {
        if input.len() != self.input_dim {
            return Err(FnnError::DimensionMismatch {
                expected: self.input_dim,
                actual: input.len(),
            });
        }
        Ok(PreparedFnn::new(self, mode).eval(mode, input))
    }

    /// Convenience wrapper for exact evaluation on rationals.
    pub fn eval_exact(&self, input: &[Rational]) -> Result<Vec<Rational>, FnnError> {
        let input: Vec<Scalar> = input.iter().cloned().map(Scalar::Exact).collect();
        Ok(self
            .eval(&input, ArithMode::Exact)?
            .iter()
            .map(Scalar::to_rational)
            .collect())
    }

    /// Rewrites every identity node outside the output layer into the relu
    /// pair `relu(z)`, `relu(-z)` and folds the difference into the next
    /// layer's weights. The output layer is left as is: a pure relu output
    /// cannot be negative.
    pub fn lower_identity(&self) -> Fnn {
        let mut layers = self.layers.clone();
        let n = layers.len();
        for l in 0..n.saturating_sub(1) {
            let (head, tail) = layers.split_at_mut(l + 1);
            let layer = &mut head[l];
            let next = &mut tail[0];
            if layer.nodes.iter().all(|v| v.activation == Activation::Relu) {
                continue;
            }
            let mut new_nodes = Vec::new();
            // For each old node, the list of (new index, sign).
            let mut routing = Vec::new();
            for node in &layer.nodes {
                match node.activation {
                    Activation::Relu => {
                        routing.push(vec![(new_nodes.len(), Rational::one())]);
                        new_nodes.push(node.clone());
                    }
                    Activation::Identity => {
                        let pos = new_nodes.len();
                        new_nodes.push(FnnNode::relu(node.weights.clone(), node.bias.clone()));
                        new_nodes.push(FnnNode::relu(
                            node.weights.iter().map(|w| -w).collect(),
                            -node.bias.clone(),
                        ));
                        routing.push(vec![(pos, Rational::one()), (pos + 1, -Rational::one())]);
                    }
                }
            }
            for node in &mut next.nodes {
                let mut weights = vec![Rational::zero(); new_nodes.len()];
                for (old, w) in node.weights.iter().enumerate() {
                    for (idx, sign) in &routing[old] {
                        weights[*idx] = w * sign;
                    }
                }
                node.weights = weights;
            }
            next.input_dim = new_nodes.len();
            layer.nodes = new_nodes;
        }
        Fnn {
            input_dim: self.input_dim,
            layers,
        }
    }
}

/// `outer ∘ inner`: feeds the output of `inner` into `outer`.
pub fn compose(outer: &Fnn, inner: &Fnn) -> Result<Fnn, FnnError> {
    if inner.output_dim() != outer.input_dim {
        return Err(FnnError::DimensionMismatch {
            expected: outer.input_dim,
            actual: inner.output_dim(),
        });
    }
    let mut layers = inner.layers.clone();
    layers.extend(outer.layers.iter().cloned());
    Ok(Fnn {
        input_dim: inner.input_dim,
        layers,
    })
}

/// `first ‖ second`: runs both networks side by side on disjoint input
/// slices, padding the shallower one with identity layers.
pub fn concat(first: &Fnn, second: &Fnn) -> Fnn {
    let depth = first.depth().max(second.depth());
    let a = first.clone().pad_to_depth(depth);
    let b = second.clone().pad_to_depth(depth);
    let mut layers = Vec::with_capacity(depth);
    for (la, lb) in a.layers.iter().zip(&b.layers) {
        let input_dim = la.input_dim + lb.input_dim;
        let mut nodes = Vec::with_capacity(la.output_dim() + lb.output_dim());
        for node in &la.nodes {
            let mut weights = node.weights.clone();
            weights.resize(input_dim, Rational::zero());
            nodes.push(FnnNode {
                weights,
                ..node.clone()
            });
        }
        for node in &lb.nodes {
            let mut weights = vec![Rational::zero(); la.input_dim];
            weights.extend(node.weights.iter().cloned());
            nodes.push(FnnNode {
                weights,
                ..node.clone()
            });
        }
        layers.push(FnnLayer { input_dim, nodes });
    }
    Fnn {
        input_dim: a.input_dim + b.input_dim,
        layers,
    }
}

/// Left fold of [`concat`] over `parts`.
pub fn concat_all(parts: &[Fnn]) -> Fnn {
    parts
        .iter()
        .fold(Fnn::identity(0), |acc, part| concat(&acc, part))
}

fn two_layer(first: Vec<FnnNode>, second: FnnNode) -> Fnn {
    let input_dim = first.first().map_or(0, |v| v.weights.len());
    let hidden = first.len();
    Fnn {
        input_dim,
        layers: vec![
            FnnLayer {
                input_dim,
                nodes: first,
            },
            FnnLayer {
                input_dim: hidden,
                nodes: vec![second],
            },
        ],
    }
}

/// `relu(relu(x - (b-1)) - 2 relu(x - b))`: 1 on the integer `b`, 0 on
/// every other integer.
pub fn gadget_eq(b: i64) -> Fnn {
    two_layer(
        vec![
            FnnNode::relu(vec![int(1)], int(1 - b)),
            FnnNode::relu(vec![int(1)], int(-b)),
        ],
        FnnNode::relu(vec![int(1), int(-2)], Rational::zero()),
    )
}

/// `relu(relu(b + 1 - x) - relu(b - x))`: 1 on integers `<= b`, else 0.
pub fn gadget_leq(b: i64) -> Fnn {
    two_layer(
        vec![
            FnnNode::relu(vec![int(-1)], int(b + 1)),
            FnnNode::relu(vec![int(-1)], int(b)),
        ],
        FnnNode::relu(vec![int(1), int(-1)], Rational::zero()),
    )
}

/// `relu(relu(x + 1) - relu(x))`: 1 on integers `>= 0`, else 0.
pub fn gadget_geq0() -> Fnn {
    two_layer(
        vec![
            FnnNode::relu(vec![int(1)], int(1)),
            FnnNode::relu(vec![int(1)], Rational::zero()),
        ],
        FnnNode::relu(vec![int(1), int(-1)], Rational::zero()),
    )
}

/// Conjunction of `k` bits: equality gadget for `k` applied to the sum.
pub fn gadget_and(k: usize) -> Fnn {
    let k = i64::try_from(k).expect("arity fits in i64");
    let ones = vec![int(1); k as usize];
    two_layer(
        vec![
            FnnNode::relu(ones.clone(), int(1 - k)),
            FnnNode::relu(ones, int(-k)),
        ],
        FnnNode::relu(vec![int(1), int(-2)], Rational::zero()),
    )
}

/// `min(1, x) = relu(x) - relu(-x) - relu(x - 1)`, valid for every scalar.
pub fn gadget_min1() -> Fnn {
    two_layer(
        vec![
            FnnNode::relu(vec![int(1)], Rational::zero()),
            FnnNode::relu(vec![int(-1)], Rational::zero()),
            FnnNode::relu(vec![int(1)], int(-1)),
        ],
        FnnNode::identity(vec![int(1), int(-1), int(-1)], Rational::zero()),
    )
}

/// `1 - min(1, 1 - x + y)` on inputs `(x, y)`: 0 when `x -> y` holds on
/// bits, 1 otherwise.
pub fn gadget_implies() -> Fnn {
    // t = 1 - x + y; min(1, t) = relu(t) - relu(-t) - relu(t - 1).
    // The result is never negative, so the output node can stay relu.
    two_layer(
        vec![
            FnnNode::relu(vec![int(-1), int(1)], int(1)),
            FnnNode::relu(vec![int(1), int(-1)], int(-1)),
            FnnNode::relu(vec![int(-1), int(1)], Rational::zero()),
        ],
        FnnNode::relu(vec![int(-1), int(1), int(1)], int(1)),
    )
}

/// Table lookup over concatenated one-hot blocks.
///
/// `blocks` gives the block widths; each accepted tuple names the hot index
/// in every block. Output is 0 on accepted tuples and 1 on every other
/// well-formed one-hot input, computed as `1 - min(1, sum of ANDs)`.
pub fn gadget_lookup(blocks: &[usize], accepted: &[Vec<usize>]) -> Result<Fnn, FnnError> {
    let input_dim: usize = blocks.iter().sum();
    let offsets: Vec<usize> = blocks
        .iter()
        .scan(0, |acc, &w| {
            let start = *acc;
            *acc += w;
            Some(start)
        })
        .collect();
    let table: BTreeSet<&Vec<usize>> = accepted.iter().collect();
    let capacity: usize = blocks.iter().product();
    if table.len() > capacity {
        return Err(FnnError::Malformed(format!(
            "lookup table has {} entries but only {capacity} tuples exist",
            table.len()
        )));
    }
    let k = i64::try_from(blocks.len()).expect("block count fits in i64");
    let mut first = Vec::with_capacity(2 * table.len());
    for tuple in &table {
        if tuple.len() != blocks.len() || tuple.iter().zip(blocks).any(|(&i, &w)| i >= w) {
            return Err(FnnError::Malformed(format!(
                "lookup tuple {tuple:?} out of range"
            )));
        }
        let mut weights = vec![Rational::zero(); input_dim];
        for (b, &i) in tuple.iter().enumerate() {
            weights[offsets[b] + i] = Rational::one();
        }
        first.push(FnnNode::relu(weights.clone(), int(1 - k)));
        first.push(FnnNode::relu(weights, int(-k)));
    }
    let hidden = first.len();
    let ands: Vec<FnnNode> = (0..table.len())
        .map(|t| {
            let mut w = vec![Rational::zero(); hidden];
            w[2 * t] = int(1);
            w[2 * t + 1] = int(-2);
            FnnNode::relu(w, Rational::zero())
        })
        .collect();
    // The sum of ANDs is non-negative, so 1 - min(1, s) = relu(1 - s).
    let out = FnnNode::relu(vec![int(-1); table.len()], int(1));
    Fnn::new(
        input_dim,
        vec![
            FnnLayer::new(input_dim, first)?,
            FnnLayer::new(hidden, ands)?,
            FnnLayer::new(table.len(), vec![out])?,
        ],
    )
}

/// Previous-bit decoder: maps the history register `r` of the recurrence
/// `r_t = r_{t-1}/4 + x_t` to `x_{t-1}`.
///
/// Admissible registers lie in `[0, 1/8] ∪ [1/4, 1/2] ∪ [1, 9/8] ∪ [5/4, 3/2]`
/// (decoded as 0, 1, 0, 1). All weights, biases and intermediate values stay
/// within `[-4, 31/8]` on the grid of 1/8, so the decoder is exact under
/// `fx:6:3`.
pub fn gadget_prev_bit() -> Fnn {
    let zero = Rational::zero;
    // s = [r >= 1] = relu(2r - 1) - relu(2r - 2); keep r alongside.
    let l1 = vec![
        FnnNode::relu(vec![int(2)], int(-1)),
        FnnNode::relu(vec![int(2)], int(-2)),
        FnnNode::relu(vec![int(1)], zero()),
    ];
    // u = r - s, the register with the current bit removed.
    let l2 = vec![FnnNode::relu(vec![int(-1), int(1), int(1)], zero())];
    // Threshold u at 1/8 .. 1/4 with slope 8, built from slope-2 steps.
    let l3 = vec![FnnNode::relu(vec![int(2)], rat(-1, 4))];
    let l4 = vec![FnnNode::relu(vec![int(2)], zero())];
    let l5 = vec![
        FnnNode::relu(vec![int(2)], zero()),
        FnnNode::relu(vec![int(2)], int(-1)),
    ];
    let l6 = vec![FnnNode::relu(vec![int(1), int(-1)], zero())];
    let layers = vec![
        FnnLayer {
            input_dim: 1,
            nodes: l1,
        },
        FnnLayer {
            input_dim: 3,
            nodes: l2,
        },
        FnnLayer {
            input_dim: 1,
            nodes: l3,
        },
        FnnLayer {
            input_dim: 1,
            nodes: l4,
        },
        FnnLayer {
            input_dim: 1,
            nodes: l5,
        },
        FnnLayer {
            input_dim: 2,
            nodes: l6,
        },
    ];
    Fnn {
        input_dim: 1,
        layers,
    }
}

/// A network bound to one arithmetic mode: sparse terms, constants already
/// brought into the domain.
#[derive(Debug, Clone)]
pub(crate) struct PreparedFnn {
    layers: Vec<Vec<PreparedNode>>,
    /// Number of weights/biases that had to be quantised.
    pub(crate) quantised: usize,
}

#[derive(Debug, Clone)]
struct PreparedNode {
    terms: Vec<(usize, Scalar)>,
    bias: Scalar,
    relu: bool,
}

impl PreparedFnn {
    pub(crate) fn new(net: &Fnn, mode: ArithMode) -> Self {
        let mut quantised = 0;
        let mut convert = |x: &Rational| {
            if !mode.represents(x) {
                quantised += 1;
            }
            mode.scalar(x)
        };
        let layers = net
            .layers
            .iter()
            .map(|layer| {
                layer
                    .nodes
                    .iter()
                    .map(|node| PreparedNode {
                        terms: node
                            .weights
                            .iter()
                            .enumerate()
                            .filter(|(_, w)| !w.is_zero())
                            .map(|(i, w)| (i, convert(w)))
                            .collect(),
                        bias: convert(&node.bias),
                        relu: node.activation == Activation::Relu,
                    })
                    .collect()
            })
            .collect();
        Self { layers, quantised }
    }

    /// Each node accumulates its products in index order, then adds the
    /// bias, then applies the activation. In fixed mode every product and
    /// every partial sum is quantised.
    pub(crate) fn eval(&self, mode: ArithMode, input: &[Scalar]) -> Vec<Scalar> {
        let mut current: Vec<Scalar> = input.to_vec();
        for layer in &self.layers {
            current = layer
                .iter()
                .map(|node| {
                    let mut acc = mode.zero();
                    for (i, w) in &node.terms {
                        acc = mode.add(&acc, &mul_weight(mode, w, &current[*i]));
                    }
                    acc = mode.add(&acc, &node.bias);
                    if node.relu {
                        mode.relu(&acc)
                    } else {
                        acc
                    }
                })
                .collect();
        }
        current
    }
}

fn mul_weight(mode: ArithMode, w: &Scalar, x: &Scalar) -> Scalar {
    match w {
        Scalar::Exact(r) if r.is_one() => x.clone(),
        _ => mode.mul(w, x),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arithmetic::FixedPointFormat;
    use proptest::prelude::*;

    fn eval1(net: &Fnn, x: Rational) -> Rational {
        net.eval_exact(&[x]).unwrap()[0].clone()
    }

    fn eval_fx6(net: &Fnn, input: &[Rational]) -> Vec<Rational> {
        let mode = ArithMode::Fixed(FixedPointFormat::fx6());
        let input: Vec<Scalar> = input.iter().map(|x| mode.scalar(x)).collect();
        net.eval(&input, mode)
            .unwrap()
            .iter()
            .map(Scalar::to_rational)
            .collect()
    }

    #[test]
    fn identity_net() {
        let net = Fnn::identity(2);
        assert_eq!(
            net.eval_exact(&[int(3), int(-2)]).unwrap(),
            vec![int(3), int(-2)]
        );
    }

    #[test]
    fn eq_gadget_examples() {
        assert_eq!(eval1(&gadget_eq(3), int(3)), int(1));
        assert_eq!(eval1(&gadget_eq(3), int(4)), int(0));
        assert_eq!(eval1(&gadget_eq(3), int(2)), int(0));
        assert_eq!(eval1(&gadget_eq(0), int(-4)), int(0));
    }

    #[test]
    fn leq_and_geq_gadgets() {
        assert_eq!(eval1(&gadget_leq(2), int(2)), int(1));
        assert_eq!(eval1(&gadget_leq(2), int(5)), int(0));
        assert_eq!(eval1(&gadget_leq(0), int(-7)), int(1));
        assert_eq!(eval1(&gadget_geq0(), int(0)), int(1));
        assert_eq!(eval1(&gadget_geq0(), int(-1)), int(0));
        assert_eq!(eval1(&gadget_geq0(), int(17)), int(1));
    }

    #[test]
    fn and_gadget() {
        let and3 = gadget_and(3);
        assert_eq!(
            and3.eval_exact(&[int(1), int(1), int(1)]).unwrap(),
            vec![int(1)]
        );
        assert_eq!(
            and3.eval_exact(&[int(1), int(0), int(1)]).unwrap(),
            vec![int(0)]
        );
        assert_eq!(gadget_and(1).eval_exact(&[int(1)]).unwrap(), vec![int(1)]);
    }

    #[test]
    fn min1_gadget() {
        assert_eq!(eval1(&gadget_min1(), rat(1, 2)), rat(1, 2));
        assert_eq!(eval1(&gadget_min1(), int(2)), int(1));
        assert_eq!(eval1(&gadget_min1(), int(-1)), int(-1));
    }

    #[test]
    fn implies_gadget_polarity() {
        let n = gadget_implies();
        let f = |x, y| n.eval_exact(&[int(x), int(y)]).unwrap()[0].clone();
        assert_eq!(f(1, 0), int(1));
        assert_eq!(f(0, 0), int(0));
        assert_eq!(f(1, 1), int(0));
        assert_eq!(f(0, 1), int(0));
    }

    #[test]
    fn compose_examples() {
        let net = compose(&gadget_eq(1), &gadget_leq(0)).unwrap();
        assert_eq!(eval1(&net, int(-5)), int(1));
        // Inner gives N_=0(7) = 0, outer gives N_=0(0) = 1.
        let net = compose(&gadget_eq(0), &gadget_eq(0)).unwrap();
        assert_eq!(eval1(&net, int(7)), int(1));
        assert!(compose(&gadget_and(2), &gadget_eq(0)).is_err());
    }

    #[test]
    fn concat_examples() {
        let net = concat(&gadget_eq(1), &gadget_eq(2));
        assert_eq!(net.input_dim(), 2);
        assert_eq!(net.output_dim(), 2);
        assert_eq!(
            net.eval_exact(&[int(1), int(2)]).unwrap(),
            vec![int(1), int(1)]
        );
        // Identity padding of the shallower side keeps negative values.
        let net = concat(&Fnn::identity(1), &gadget_eq(2));
        assert_eq!(
            net.eval_exact(&[int(-1), int(2)]).unwrap(),
            vec![int(-1), int(1)]
        );
        let lowered = net.lower_identity();
        assert_eq!(
            lowered.eval_exact(&[int(-1), int(2)]).unwrap(),
            vec![int(-1), int(1)]
        );
    }

    #[test]
    fn lookup_gadget() {
        // Blocks (prev state, current state, action); one accepted triple.
        let net = gadget_lookup(&[2, 2, 6], &[vec![0, 1, 0]]).unwrap();
        let encode = |p: usize, c: usize, a: usize| {
            let mut v = vec![int(0); 10];
            v[p] = int(1);
            v[2 + c] = int(1);
            v[4 + a] = int(1);
            v
        };
        for p in 0..2 {
            for c in 0..2 {
                for a in 0..6 {
                    let expected = if (p, c, a) == (0, 1, 0) { 0 } else { 1 };
                    assert_eq!(
                        net.eval_exact(&encode(p, c, a)).unwrap(),
                        vec![int(expected)]
                    );
                }
            }
        }
        let empty = gadget_lookup(&[2, 2, 6], &[]).unwrap();
        assert_eq!(empty.eval_exact(&encode(1, 1, 3)).unwrap(), vec![int(1)]);
        assert!(gadget_lookup(&[2, 2], &[vec![2, 0]]).is_err());
    }

    #[test]
    fn prev_bit_decoder_on_interval_borders() {
        let net = gadget_prev_bit();
        for (r, bit) in [
            (rat(0, 1), 0),
            (rat(1, 8), 0),
            (rat(1, 12), 0),
            (rat(1, 4), 1),
            (rat(1, 3), 1),
            (rat(1, 2), 1),
            (int(1), 0),
            (rat(13, 12), 0),
            (rat(9, 8), 0),
            (rat(5, 4), 1),
            (rat(4, 3), 1),
            (rat(3, 2), 1),
        ] {
            assert_eq!(eval1(&net, r.clone()), int(bit), "r = {r}");
        }
        for k in 0..=12 {
            let r = rat(k, 8);
            let expected = match k {
                0 | 1 | 8 | 9 => Some(0),
                2..=4 | 10..=12 => Some(1),
                _ => None,
            };
            if let Some(bit) = expected {
                assert_eq!(eval_fx6(&net, &[r]), vec![int(bit)], "fx6 r = {k}/8");
            }
        }
    }

    #[test]
    fn gadgets_hold_in_fx6_on_small_integers() {
        // Constants and hidden values (up to |n - b| + 1) must fit in fx6.
        for n in -3..=3 {
            for b in (-2..=2).filter(|b: &i64| (n - b).abs() <= 2) {
                assert_eq!(
                    eval_fx6(&gadget_eq(b), &[int(n)]),
                    vec![int((n == b) as i64)]
                );
                assert_eq!(
                    eval_fx6(&gadget_leq(b), &[int(n)]),
                    vec![int((n <= b) as i64)]
                );
            }
        }
        for n in -3..=2 {
            assert_eq!(
                eval_fx6(&gadget_geq0(), &[int(n)]),
                vec![int((n >= 0) as i64)]
            );
        }
    }

    #[test]
    fn dimension_errors() {
        assert!(gadget_eq(1).eval_exact(&[int(1), int(2)]).is_err());
        assert!(FnnLayer::new(2, vec![FnnNode::relu(vec![int(1)], int(0))]).is_err());
    }

    fn small_net(input_dim: usize) -> impl Strategy<Value = Fnn> {
        let node = move |dim: usize| {
            (
                proptest::collection::vec(-3i64..=3, dim),
                -3i64..=3,
                any::<bool>(),
            )
                .prop_map(|(w, b, relu)| FnnNode {
                    weights: w.into_iter().map(int).collect(),
                    bias: int(b),
                    activation: if relu {
                        Activation::Relu
                    } else {
                        Activation::Identity
                    },
                })
        };
        (1usize..=3, 1usize..=3).prop_flat_map(move |(h, out)| {
            (
                proptest::collection::vec(node(input_dim), h),
                proptest::collection::vec(node(h), out),
            )
                .prop_map(move |(l1, l2)| {
                    Fnn::new(
                        input_dim,
                        vec![
                            FnnLayer::new(input_dim, l1).unwrap(),
                            FnnLayer::new(l2[0].weights.len(), l2).unwrap(),
                        ],
                    )
                    .unwrap()
                })
        })
    }

    proptest! {
        #[test]
        fn concat_is_componentwise(a in small_net(2), b in small_net(1), x in proptest::collection::vec(-5i64..=5, 3)) {
            let x: Vec<Rational> = x.into_iter().map(int).collect();
            let joint = concat(&a, &b).eval_exact(&x).unwrap();
            let mut parts = a.eval_exact(&x[..2]).unwrap();
            parts.extend(b.eval_exact(&x[2..]).unwrap());
            prop_assert_eq!(joint, parts);
        }

        #[test]
        fn compose_is_sequential(a in small_net(2), x in proptest::collection::vec(-5i64..=5, 2)) {
            let x: Vec<Rational> = x.into_iter().map(int).collect();
            let outer = gadget_min1();
            let inner = compose(&Fnn::select(a.output_dim(), &[0]), &a).unwrap();
            let joint = compose(&outer, &inner).unwrap().eval_exact(&x).unwrap();
            let step = outer.eval_exact(&inner.eval_exact(&x).unwrap()).unwrap();
            prop_assert_eq!(joint, step);
            let id = compose(&Fnn::identity(a.output_dim()), &a).unwrap();
            prop_assert_eq!(id.eval_exact(&x).unwrap(), a.eval_exact(&x).unwrap());
        }

        #[test]
        fn lowering_preserves_function(a in small_net(2), x in proptest::collection::vec(-5i64..=5, 2)) {
            let x: Vec<Rational> = x.into_iter().map(int).collect();
            let lowered = a.lower_identity();
            prop_assert!(lowered.layers()[0].nodes().iter().all(|v| v.activation == Activation::Relu));
            prop_assert_eq!(lowered.eval_exact(&x).unwrap(), a.eval_exact(&x).unwrap());
        }

        #[test]
        fn min1_matches_min(n in -400i64..=400, d in 1i64..=100) {
            let x = rat(n, d);
            let expected = if x > int(1) { int(1) } else { x.clone() };
            prop_assert_eq!(eval1(&gadget_min1(), x), expected);
        }
    }
}
