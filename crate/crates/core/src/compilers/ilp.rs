//! 0-1 integer programs `A v = b` and their single-layer SSM encoding.

use std::fmt;

use num_traits::{One, Zero};

use crate::arithmetic::Rational;
use crate::fnn::{compose, concat_all, gadget_and, gadget_eq, gadget_leq, Fnn};
use crate::ssm::{zero_matrix, AffineMap, GateSpec, SsmLayer, SsmModel};

use super::{signed_width, CompileError};

/// Square instance with natural-number entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IlpInstance {
    a: Vec<Vec<u64>>,
    b: Vec<u64>,
}

impl IlpInstance {
    pub fn new(a: Vec<Vec<u64>>, b: Vec<u64>) -> Result<Self, CompileError> {
        let d = a.len();
        if d == 0 {
            return Err(CompileError::InvalidInstance(
                "dimension must be at least 1".into(),
            ));
        }
        if a.iter().any(|row| row.len() != d) || b.len() != d {
            return Err(CompileError::InvalidInstance(format!(
                "A must be {d}x{d} and b of length {d}"
            )));
        }
        Ok(Self { a, b })
    }

    /// Parses `d`, then `d` rows of `A`, then `b`; whitespace separated,
    /// blank lines and `#` comments ignored.
    pub fn parse(text: &str) -> Result<Self, CompileError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let mut row = |what: &str| -> Result<(usize, Vec<u64>), CompileError> {
            let (line, text) = lines.next().ok_or(CompileError::Parse {
                line: 0,
                msg: format!("missing {what}"),
            })?;
            let values = text
                .split_whitespace()
                .map(|t| t.parse::<u64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| CompileError::Parse {
                    line,
                    msg: format!("{what}: {e}"),
                })?;
            Ok((line, values))
        };
        let (line, header) = row("dimension")?;
        let [d] = header.as_slice() else {
            return Err(CompileError::Parse {
                line,
                msg: "expected the dimension alone".into(),
            });
        };
        let d = usize::try_from(*d).map_err(|_| CompileError::Parse {
            line,
            msg: "dimension too large".into(),
        })?;
        let mut a = Vec::with_capacity(d);
        for i in 0..d {
            let (line, r) = row(&format!("row {} of A", i + 1))?;
            if r.len() != d {
                return Err(CompileError::Parse {
                    line,
                    msg: format!("expected {d} entries, found {}", r.len()),
                });
            }
            a.push(r);
        }
        let (line, b) = row("b")?;
        if b.len() != d {
            return Err(CompileError::Parse {
                line,
                msg: format!("expected {d} entries, found {}", b.len()),
            });
        }
        if let Some((line, _)) = lines.next() {
            return Err(CompileError::Parse {
                line,
                msg: "trailing input".into(),
            });
        }
        Self::new(a, b)
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn a(&self) -> &[Vec<u64>] {
        &self.a
    }

    pub fn b(&self) -> &[u64] {
        &self.b
    }

    pub fn is_solution(&self, v: &[bool]) -> bool {
        v.len() == self.dim()
            && self.a.iter().zip(&self.b).all(|(row, &bi)| {
                let lhs: u128 = row
                    .iter()
                    .zip(v)
                    .filter(|(_, &x)| x)
                    .map(|(&a, _)| u128::from(a))
                    .sum();
                lhs == u128::from(bi)
            })
    }

    /// Indicator vector of a word over `"1".."d"`, or `None` if a symbol
    /// is unknown or repeated.
    pub fn decode_word<S: AsRef<str>>(&self, word: &[S]) -> Option<Vec<bool>> {
        let mut v = vec![false; self.dim()];
        for s in word {
            let i: usize = s.as_ref().parse().ok()?;
            if i == 0 || i > self.dim() || v[i - 1] {
                return None;
            }
            v[i - 1] = true;
        }
        Some(v)
    }
}

impl fmt::Display for IlpInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let line = |r: &[u64]| r.iter().map(u64::to_string).collect::<Vec<_>>().join(" ");
        writeln!(f, "{}", self.dim())?;
        for row in &self.a {
            writeln!(f, "{}", line(row))?;
        }
        writeln!(f, "{}", line(&self.b))
    }
}

/// First solution in binary-counting order (`v_i` is bit `i - 1` of the
/// counter).
pub fn ilp_oracle(inst: &IlpInstance) -> Option<Vec<bool>> {
    let d = inst.dim();
    assert!(d < 64, "exhaustive search limited to d < 64");
    (0u64..1 << d)
        .map(|mask| (0..d).map(|i| mask >> i & 1 == 1).collect::<Vec<_>>())
        .find(|v| inst.is_solution(v))
}

/// Single time-invariant diagonal layer over `2d` coordinates: the first
/// half accumulates `A v`, the second half counts occurrences.
pub fn compile_ilp(inst: &IlpInstance) -> Result<SsmModel, CompileError> {
    let d = inst.dim();
    let alphabet = (1..=d).map(|i| i.to_string()).collect();
    let embedding = (0..d)
        .map(|i| {
            let mut v = vec![Rational::zero(); 2 * d];
            v[i] = Rational::one();
            v
        })
        .collect();
    let mut inc = zero_matrix(2 * d, 2 * d);
    for (i, row) in inst.a.iter().enumerate() {
        for (j, &x) in row.iter().enumerate() {
            inc[i][j] = Rational::from_integer(x.into());
        }
        inc[d + i][i] = Rational::one();
    }
    let mut gate = zero_matrix(2 * d, 2 * d);
    for (k, row) in gate.iter_mut().enumerate() {
        row[k] = Rational::one();
    }
    let layer = SsmLayer {
        h0: vec![Rational::zero(); 2 * d],
        gate: GateSpec::TimeInvariant(gate),
        inc: AffineMap::linear(inc),
        phi: SsmLayer::project_h(2 * d),
    };
    let mut checks: Vec<Fnn> = inst.b.iter().map(|&b| gadget_eq(to_i64(b))).collect();
    checks.extend((0..d).map(|_| gadget_leq(1)));
    let out = compose(&gadget_and(2 * d), &concat_all(&checks))?;
    Ok(SsmModel::new(alphabet, embedding, vec![layer], out, 2 * d)?)
}

fn to_i64(x: u64) -> i64 {
    i64::try_from(x).expect("entry fits in i64")
}

/// Signed integer width (no fractional bits) that represents every
/// constant of the compiled model and every value `A v` can take for a
/// duplicate-free word.
pub fn ilp_min_bits(inst: &IlpInstance) -> u32 {
    let row_sum = inst
        .a
        .iter()
        .map(|r| r.iter().sum::<u64>())
        .max()
        .unwrap_or(0);
    let max_b = inst.b.iter().copied().max().unwrap_or(0);
    signed_width(row_sum.max(max_b).max(2 * inst.dim() as u64) + 2, 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arithmetic::{ArithMode, FixedPointFormat};
    use crate::ssm::{accepts, classify_gates};
    use proptest::prelude::*;

    fn example() -> IlpInstance {
        IlpInstance::new(vec![vec![1, 1], vec![0, 1]], vec![1, 1]).unwrap()
    }

    #[test]
    fn example_words() {
        let model = compile_ilp(&example()).unwrap();
        assert!(accepts(&model, &["2"], ArithMode::Exact).unwrap());
        assert!(!accepts(&model, &["1", "2"], ArithMode::Exact).unwrap());
        assert!(!accepts(&model, &["2", "2"], ArithMode::Exact).unwrap());
        let zero_b = IlpInstance::new(vec![vec![1, 1], vec![0, 1]], vec![0, 0]).unwrap();
        assert!(!accepts(
            &compile_ilp(&zero_b).unwrap(),
            &["1", "1"],
            ArithMode::Exact
        )
        .unwrap());
        let fmt = FixedPointFormat::new(ilp_min_bits(&example()), 0).unwrap();
        assert!(accepts(&model, &["2"], ArithMode::Fixed(fmt)).unwrap());
    }

    #[test]
    fn oracle_examples() {
        assert_eq!(ilp_oracle(&example()), Some(vec![false, true]));
        let zero = IlpInstance::new(vec![vec![2, 3], vec![1, 1]], vec![0, 0]).unwrap();
        assert_eq!(ilp_oracle(&zero), Some(vec![false, false]));
        let id = IlpInstance::new(
            vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]],
            vec![1, 1, 1],
        )
        .unwrap();
        assert_eq!(ilp_oracle(&id), Some(vec![true, true, true]));
        let none = IlpInstance::new(vec![vec![2]], vec![1]).unwrap();
        assert_eq!(ilp_oracle(&none), None);
    }

    #[test]
    fn parse_round_trip() {
        let text = "# instance\n2\n1 1\n0 1\n\n1 1\n";
        let inst = IlpInstance::parse(text).unwrap();
        assert_eq!(inst, example());
        assert_eq!(IlpInstance::parse(&inst.to_string()).unwrap(), inst);
        assert!(matches!(
            IlpInstance::parse("2\n1 1\n0\n1 1\n"),
            Err(CompileError::Parse { line: 3, .. })
        ));
        assert!(IlpInstance::parse("2\n1 1\n0 1\n").is_err());
        assert!(IlpInstance::parse("1\n-1\n0\n").is_err());
    }

    #[test]
    fn shape_and_classes() {
        let model = compile_ilp(&example()).unwrap();
        assert_eq!(model.dim(), 4);
        assert_eq!(model.num_layers(), 1);
        let c = classify_gates(&model);
        assert!(c.time_invariant && c.diagonal);
    }

    fn instance() -> impl Strategy<Value = IlpInstance> {
        (1usize..=3).prop_flat_map(|d| {
            (
                prop::collection::vec(prop::collection::vec(0u64..=3, d), d),
                prop::collection::vec(0u64..=3, d),
            )
                .prop_map(|(a, b)| IlpInstance::new(a, b).unwrap())
        })
    }

    proptest! {
        #[test]
        fn acceptance_matches_decoded_indicator(inst in instance(), word in prop::collection::vec(1usize..=3, 1..5)) {
            let word: Vec<String> = word.into_iter().filter(|&i| i <= inst.dim()).map(|i| i.to_string()).collect();
            prop_assume!(!word.is_empty());
            let model = compile_ilp(&inst).unwrap();
            let expected = inst.decode_word(&word).is_some_and(|v| inst.is_solution(&v));
            prop_assert_eq!(accepts(&model, &word, ArithMode::Exact).unwrap(), expected);
        }

        #[test]
        fn permutation_invariant(inst in instance(), seed in any::<u64>()) {
            let model = compile_ilp(&inst).unwrap();
            let d = inst.dim();
            let mut word: Vec<String> = (1..=d).filter(|i| seed >> i & 1 == 1).map(|i| i.to_string()).collect();
            prop_assume!(!word.is_empty());
            let before = accepts(&model, &word, ArithMode::Exact).unwrap();
            let shift = (seed as usize) % word.len();
            word.rotate_left(shift);
            prop_assert_eq!(accepts(&model, &word, ArithMode::Exact).unwrap(), before);
            word.reverse();
            prop_assert_eq!(accepts(&model, &word, ArithMode::Exact).unwrap(), before);
        }
    }
}
