//! Executable constructions for state space models (SSMs): exact and
//! fixed-width evaluation, compilers from LTL_f formulas, Minsky machines and
//! 0-1 integer programs into SSMs, and satisfiability procedures with
//! independent brute-force oracles.

pub mod arithmetic;
pub mod compilers;
pub mod fnn;
pub mod formats;
pub mod ltl;
pub mod solvers;
pub mod ssm;
