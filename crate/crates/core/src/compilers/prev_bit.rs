//! The history layer: `r_t = r_{t-1}/4 + x_t` on tracked coordinates,
//! decoded back to `x_{t-1}` by a piecewise-linear network.
//!
//! Spacing history bits two binary places apart keeps the four register
//! intervals disjoint after truncation, so decoding is exact in `fx:6:3`.

use std::collections::BTreeSet;

use num_traits::Zero;

use crate::arithmetic::{rat, Rational};
use crate::fnn::gadget_prev_bit;
use crate::ssm::{identity_matrix, zero_matrix, AffineMap, GateSpec, SsmLayer};

use super::CompileError;

/// History layer of dimension `d` tracking the 0/1 coordinates in
/// `positions`; every other coordinate is passed through.
pub fn prev_bit_layer(d: usize, positions: &BTreeSet<usize>) -> Result<SsmLayer, CompileError> {
    let mut gate = zero_matrix(d, d);
    for &k in positions {
        gate[k][k] = rat(1, 4);
    }
    let decoders: Vec<_> = positions.iter().map(|&k| (k, gadget_prev_bit())).collect();
    Ok(SsmLayer {
        h0: vec![Rational::zero(); d],
        gate: GateSpec::TimeInvariant(gate),
        inc: AffineMap::linear(identity_matrix(d)),
        phi: SsmLayer::pointwise_phi(d, &decoders)?,
    })
}
