//! Model-emitting compilers for the three source languages (LTL_f formulas,
//! Minsky machines, 0-1 integer programs), the shared previous-bit layer,
//! and a brute-force oracle for each source language.

use num_traits::{One, Zero};
use thiserror::Error;

use crate::arithmetic::Rational;
use crate::fnn::FnnError;
use crate::ssm::{zero_matrix, Matrix, SsmError};

pub mod ilp;
pub mod ltl;
pub mod minsky;
pub mod prev_bit;

pub use ilp::{compile_ilp, ilp_min_bits, ilp_oracle, IlpInstance};
pub use ltl::{compile_ltl, compile_ltl_over, subformula_dims, LTL_MIN_BITS};
pub use minsky::{
    compile_minsky, minsky_min_bits, minsky_oracle, run_encode, Action, MinskyMachine, MinskyRun,
};
pub use prev_bit::prev_bit_layer;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CompileError {
    #[error("invalid Minsky machine: {0}")]
    InvalidMachine(String),
    #[error("invalid ILP instance: {0}")]
    InvalidInstance(String),
    #[error("proposition `{0}` is used by the formula but missing from the proposition list")]
    MissingProposition(String),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Fnn(#[from] FnnError),
    #[error(transparent)]
    Ssm(#[from] SsmError),
}

/// `C^(i→j) = e_j e_iᵀ`: `(C·x)_j = x_i`, every other entry 0.
pub fn copy_matrix(i: usize, j: usize, d: usize) -> Matrix {
    let mut m = zero_matrix(d, d);
    m[j][i] = Rational::one();
    m
}

/// `E_[i,j]`: diagonal with ones on `i..=j` (0-based, inclusive).
pub fn masked_identity(i: usize, j: usize, d: usize) -> Matrix {
    let mut m = zero_matrix(d, d);
    for (k, row) in m.iter_mut().enumerate().take(j + 1).skip(i) {
        row[k] = Rational::one();
    }
    m
}

pub(crate) fn mat_add(a: &Matrix, b: &Matrix) -> Matrix {
    a.iter()
        .zip(b)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x + y).collect())
        .collect()
}

pub(crate) fn mat_sub(a: &Matrix, b: &Matrix) -> Matrix {
    a.iter()
        .zip(b)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x - y).collect())
        .collect()
}

pub(crate) fn mat_scale(a: &Matrix, s: &Rational) -> Matrix {
    a.iter()
        .map(|r| r.iter().map(|x| x * s).collect())
        .collect()
}

pub(crate) fn unit_vector(d: usize, k: usize) -> Vec<Rational> {
    let mut v = vec![Rational::zero(); d];
    v[k] = Rational::one();
    v
}

/// Signed fixed-point width holding integers of magnitude up to `max_abs`
/// with `frac_bits` fractional bits.
pub(crate) fn signed_width(max_abs: u64, frac_bits: u32) -> u32 {
    let int_bits = 64 - max_abs.leading_zeros();
    int_bits + 1 + frac_bits
}
