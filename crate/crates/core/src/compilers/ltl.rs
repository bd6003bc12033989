//! LTL_f formula → diagonal-gated SSM accepting the reversed models.
//!
//! Coordinates are laid out as `(propositions, subformulas, constant 1)`.
//! Subformulas are compiled in topological order, one layer each (two for
//! `X`); layer `i` writes the truth value of subformula `i` into its
//! coordinate, which is 0 on entry. Reading the word backwards turns `X`
//! into "previous position" and `U` into "since".

use std::collections::BTreeSet;

use num_traits::Zero;

use crate::arithmetic::Rational;
use crate::fnn::{compose, gadget_eq, gadget_min1, Fnn, FnnLayer, FnnNode};
use crate::ltl::{format_letter, letters_over, subformulas_topo, Formula};
use crate::ssm::{identity_matrix, zero_matrix, AffineMap, GateSpec, Matrix, SsmLayer, SsmModel};

use super::{copy_matrix, mat_add, mat_sub, prev_bit_layer, CompileError};

/// Compiles `formula` over its own atoms.
pub fn compile_ltl(formula: &Formula) -> Result<SsmModel, CompileError> {
    let props: Vec<String> = formula.atoms().into_iter().collect();
    compile_ltl_over(formula, &props)
}

/// Compiles `formula` over the alphabet `2^props`; `props` must contain
/// every atom of the formula.
pub fn compile_ltl_over(formula: &Formula, props: &[String]) -> Result<SsmModel, CompileError> {
    if let Some(missing) = formula.atoms().into_iter().find(|a| !props.contains(a)) {
        return Err(CompileError::MissingProposition(missing));
    }
    let subs = subformulas_topo(formula);
    let np = props.len();
    let k = subs.len();
    let d = np + k + 1;
    let one = np + k;
    let dim_of = |f: &Formula| np + subs.iter().position(|s| s == f).expect("subformula listed");
    let prop_dim = |p: &String| {
        props
            .iter()
            .position(|q| q == p)
            .expect("proposition listed")
    };

    let letters = letters_over(props);
    let alphabet = letters.iter().map(format_letter).collect();
    let embedding = letters
        .iter()
        .map(|letter| {
            let mut v = vec![Rational::zero(); d];
            for p in letter {
                v[prop_dim(p)] = Rational::from_integer(1.into());
            }
            v[one] = Rational::from_integer(1.into());
            v
        })
        .collect();

    let id = identity_matrix(d);
    let copy = |from: usize, to: usize| copy_matrix(from, to, d);
    let plain = |inc: Matrix, phi: Fnn| SsmLayer {
        h0: vec![Rational::zero(); d],
        gate: GateSpec::zero(d),
        inc: AffineMap::linear(inc),
        phi,
    };

    let mut layers = Vec::new();
    for (idx, sub) in subs.iter().enumerate() {
        let i = np + idx;
        match sub {
            Formula::Atom(p) => layers.push(plain(
                mat_add(&id, &copy(prop_dim(p), i)),
                SsmLayer::project_h(d),
            )),
            Formula::True => {
                layers.push(plain(mat_add(&id, &copy(one, i)), SsmLayer::project_h(d)))
            }
            Formula::False => layers.push(plain(id.clone(), SsmLayer::project_h(d))),
            Formula::Not(a) => {
                let inc = mat_sub(&mat_add(&id, &copy(one, i)), &copy(dim_of(a), i));
                layers.push(plain(inc, SsmLayer::project_h(d)));
            }
            // max(0, a + b - 1)
            Formula::And(a, b) => {
                let inc = mat_sub(
                    &mat_add(&mat_add(&id, &copy(dim_of(a), i)), &copy(dim_of(b), i)),
                    &copy(one, i),
                );
                layers.push(plain(inc, SsmLayer::pointwise_phi(d, &[(i, relu1())])?));
            }
            // min(1, a + b)
            Formula::Or(a, b) => {
                let inc = mat_add(&mat_add(&id, &copy(dim_of(a), i)), &copy(dim_of(b), i));
                layers.push(plain(
                    inc,
                    SsmLayer::pointwise_phi(d, &[(i, gadget_min1())])?,
                ));
            }
            // Copy, then replace by the value at the previous position.
            Formula::Next(a) => {
                layers.push(plain(
                    mat_add(&id, &copy(dim_of(a), i)),
                    SsmLayer::project_h(d),
                ));
                layers.push(prev_bit_layer(d, &BTreeSet::from([i]))?);
            }
            // h_i = a·h_i + b, clamped to min(1, h_i) on output.
            Formula::Until(a, b) => {
                let mut g = zero_matrix(d, d);
                g[i][dim_of(a)] = Rational::from_integer(1.into());
                layers.push(SsmLayer {
                    h0: vec![Rational::zero(); d],
                    gate: GateSpec::DiagonalAffine {
                        g,
                        g0: vec![Rational::zero(); d],
                    },
                    inc: AffineMap::linear(mat_add(&id, &copy(dim_of(b), i))),
                    phi: SsmLayer::pointwise_phi(d, &[(i, gadget_min1())])?,
                });
            }
        }
    }

    let out = compose(&gadget_eq(1), &Fnn::select(d, &[dim_of(formula)]))?;
    Ok(SsmModel::new(alphabet, embedding, layers, out, d)?)
}

fn relu1() -> Fnn {
    let layer = FnnLayer::new(
        1,
        vec![FnnNode::relu(
            vec![Rational::from_integer(1.into())],
            Rational::zero(),
        )],
    )
    .expect("1x1 layer");
    Fnn::new(1, vec![layer]).expect("single layer")
}

/// Coordinate of each subformula in a compiled model (same order as
/// [`subformulas_topo`]).
pub fn subformula_dims(formula: &Formula, props: &[String]) -> Vec<(Formula, usize)> {
    subformulas_topo(formula)
        .into_iter()
        .enumerate()
        .map(|(i, f)| (f, props.len() + i))
        .collect()
}

/// Fixed-point width the compiled models need: 6 bits, 3 fractional.
pub const LTL_MIN_BITS: u32 = 6;
