//! LTL over finite traces: parser, semantics, brute-force satisfiability
//! and the subformula bookkeeping used by the LTL compiler.
//!
//! Grammar (loosest binding first):
//!
//! ```text
//! formula := disj ("->" formula)?
//! disj    := conj ("|" conj)*
//! conj    := until ("&" until)*
//! until   := unary ("U" until)?
//! unary   := ("!" | "X" | "F" | "G") unary | atom | "tt" | "ff" | "(" formula ")"
//! ```
//!
//! `->`, `F` and `G` are lowered while parsing: `a -> b` becomes `!a | b`,
//! `F a` becomes `tt U a` and `G a` becomes `!(tt U !a)`.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigUint;
use num_traits::One;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LtlError {
    #[error("syntax error at offset {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("position {pos} out of range for a trace of length {len}")]
    PositionOutOfRange { pos: usize, len: usize },
    #[error("invalid trace literal: {0}")]
    Trace(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    True,
    False,
    Atom(String),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Next(Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn atom(name: &str) -> Self {
        Formula::Atom(name.to_string())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn next(f: Formula) -> Self {
        Formula::Next(Box::new(f))
    }

    pub fn until(a: Formula, b: Formula) -> Self {
        Formula::Until(Box::new(a), Box::new(b))
    }

    pub fn children(&self) -> Vec<&Formula> {
        match self {
            Formula::True | Formula::False | Formula::Atom(_) => vec![],
            Formula::Not(a) | Formula::Next(a) => vec![a],
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Until(a, b) => vec![a, b],
        }
    }

    /// `|φ|`: number of syntax-tree nodes.
    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }

    pub fn atoms(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<String>) {
        if let Formula::Atom(p) = self {
            out.insert(p.clone());
        }
        for c in self.children() {
            c.collect_atoms(out);
        }
    }

    pub fn contains_until(&self) -> bool {
        matches!(self, Formula::Until(..)) || self.children().iter().any(|c| c.contains_until())
    }

    /// Number of distinct `X` subformulas.
    pub fn next_count(&self) -> usize {
        subformulas_topo(self)
            .iter()
            .filter(|f| matches!(f, Formula::Next(_)))
            .count()
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => f.write_str("tt"),
            Formula::False => f.write_str("ff"),
            Formula::Atom(p) => f.write_str(p),
            Formula::Not(a) => write!(f, "!{a}"),
            Formula::Next(a) => write!(f, "X {a}"),
            Formula::And(a, b) => write!(f, "({a} & {b})"),
            Formula::Or(a, b) => write!(f, "({a} | {b})"),
            Formula::Until(a, b) => write!(f, "({a} U {b})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    Ident(String),
    True,
    False,
    Not,
    And,
    Or,
    Implies,
    Next,
    Until,
    Finally,
    Globally,
    LParen,
    RParen,
}

fn tokenize(text: &str) -> Result<Vec<(usize, Token)>, LtlError> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let start = i;
        let token = match c {
            c if c.is_ascii_whitespace() => {
                i += 1;
                continue;
            }
            '!' => Token::Not,
            '&' => Token::And,
            '|' => Token::Or,
            '(' => Token::LParen,
            ')' => Token::RParen,
            'X' => Token::Next,
            'U' => Token::Until,
            'F' => Token::Finally,
            'G' => Token::Globally,
            '-' if bytes.get(i + 1) == Some(&b'>') => {
                i += 1;
                Token::Implies
            }
            'a'..='z' => {
                let mut j = i + 1;
                while j < bytes.len()
                    && (bytes[j].is_ascii_lowercase()
                        || bytes[j].is_ascii_digit()
                        || bytes[j] == b'_')
                {
                    j += 1;
                }
                let word = &text[i..j];
                i = j - 1;
                match word {
                    "tt" => Token::True,
                    "ff" => Token::False,
                    _ => Token::Ident(word.to_string()),
                }
            }
            other => {
                return Err(LtlError::Syntax {
                    pos: start,
                    msg: format!("unexpected character `{other}`"),
                })
            }
        };
        tokens.push((start, token));
        i += 1;
    }
    Ok(tokens)
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |(o, _)| *o)
    }

    fn error<T>(&self, msg: impl Into<String>) -> Result<T, LtlError> {
        Err(LtlError::Syntax {
            pos: self.offset(),
            msg: msg.into(),
        })
    }

    fn eat(&mut self, token: &Token) -> bool {
        if self.peek() == Some(token) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn implication(&mut self) -> Result<Formula, LtlError> {
        let lhs = self.disjunction()?;
        if self.eat(&Token::Implies) {
            let rhs = self.implication()?;
            return Ok(Formula::or(Formula::not(lhs), rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Formula, LtlError> {
        let mut lhs = self.conjunction()?;
        while self.eat(&Token::Or) {
            lhs = Formula::or(lhs, self.conjunction()?);
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Formula, LtlError> {
        let mut lhs = self.until()?;
        while self.eat(&Token::And) {
            lhs = Formula::and(lhs, self.until()?);
        }
        Ok(lhs)
    }

    fn until(&mut self) -> Result<Formula, LtlError> {
        let lhs = self.unary()?;
        if self.eat(&Token::Until) {
            return Ok(Formula::until(lhs, self.until()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, LtlError> {
        let Some(token) = self.peek().cloned() else {
            return self.error("unexpected end of input");
        };
        self.pos += 1;
        match token {
            Token::Not => Ok(Formula::not(self.unary()?)),
            Token::Next => Ok(Formula::next(self.unary()?)),
            Token::Finally => Ok(Formula::until(Formula::True, self.unary()?)),
            Token::Globally => {
                let body = self.unary()?;
                Ok(Formula::not(Formula::until(
                    Formula::True,
                    Formula::not(body),
                )))
            }
            Token::Ident(p) => Ok(Formula::Atom(p)),
            Token::True => Ok(Formula::True),
            Token::False => Ok(Formula::False),
            Token::LParen => {
                let inner = self.implication()?;
                if !self.eat(&Token::RParen) {
                    return self.error("expected `)`");
                }
                Ok(inner)
            }
            other => {
                self.pos -= 1;
                self.error(format!("unexpected token {other:?}"))
            }
        }
    }
}

/// Parses and lowers a formula.
pub fn parse(text: &str) -> Result<Formula, LtlError> {
    let tokens = tokenize(text)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        end: text.len(),
    };
    let formula = parser.implication()?;
    if parser.pos != parser.tokens.len() {
        return parser.error("trailing input");
    }
    Ok(formula)
}

/// A finite trace; each letter is the set of propositions that hold.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Trace {
    pub letters: Vec<BTreeSet<String>>,
}

impl Trace {
    pub fn new(letters: Vec<BTreeSet<String>>) -> Self {
        Self { letters }
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn reversed(&self) -> Trace {
        Trace {
            letters: self.letters.iter().rev().cloned().collect(),
        }
    }

    /// Parses `{p,q};{};{p}`.
    pub fn parse(text: &str) -> Result<Self, LtlError> {
        let text = text.trim();
        if text.is_empty() {
            return Ok(Trace::default());
        }
        text.split(';')
            .map(|letter| parse_letter(letter.trim()))
            .collect::<Result<Vec<_>, _>>()
            .map(Trace::new)
    }
}

/// Parses one `{p,q}` letter.
pub fn parse_letter(text: &str) -> Result<BTreeSet<String>, LtlError> {
    let inner = text
        .strip_prefix('{')
        .and_then(|t| t.strip_suffix('}'))
        .ok_or_else(|| LtlError::Trace(format!("letter `{text}` is not of the form {{...}}")))?;
    let mut letter = BTreeSet::new();
    for prop in inner.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let valid = prop.starts_with(|c: char| c.is_ascii_lowercase())
            && prop
                .chars()
                .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_');
        if !valid {
            return Err(LtlError::Trace(format!("invalid proposition `{prop}`")));
        }
        letter.insert(prop.to_string());
    }
    Ok(letter)
}

/// Canonical `{p,q}` rendering of a letter (sorted propositions).
pub fn format_letter(letter: &BTreeSet<String>) -> String {
    let props: Vec<&str> = letter.iter().map(String::as_str).collect();
    format!("{{{}}}", props.join(","))
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let letters: Vec<String> = self.letters.iter().map(format_letter).collect();
        f.write_str(&letters.join(";"))
    }
}

/// Truth value of `φ` at every position `1..=n`, by structural recursion
/// over the semantics.
fn truth_table(formula: &Formula, trace: &Trace) -> Vec<bool> {
    let n = trace.len();
    match formula {
        Formula::True => vec![true; n],
        Formula::False => vec![false; n],
        Formula::Atom(p) => trace.letters.iter().map(|a| a.contains(p)).collect(),
        Formula::Not(a) => truth_table(a, trace).into_iter().map(|v| !v).collect(),
        Formula::And(a, b) => {
            let (ta, tb) = (truth_table(a, trace), truth_table(b, trace));
            ta.iter().zip(&tb).map(|(x, y)| *x && *y).collect()
        }
        Formula::Or(a, b) => {
            let (ta, tb) = (truth_table(a, trace), truth_table(b, trace));
            ta.iter().zip(&tb).map(|(x, y)| *x || *y).collect()
        }
        // w,i ⊨ Xφ iff i < n and w,i+1 ⊨ φ (0-based below).
        Formula::Next(a) => {
            let ta = truth_table(a, trace);
            (0..n).map(|i| i + 1 < n && ta[i + 1]).collect()
        }
        // w,i ⊨ φUψ iff some k in i..=n has ψ and φ holds on i..k.
        Formula::Until(a, b) => {
            let (ta, tb) = (truth_table(a, trace), truth_table(b, trace));
            (0..n)
                .map(|i| (i..n).any(|k| tb[k] && (i..k).all(|j| ta[j])))
                .collect()
        }
    }
}

/// `w, i ⊨ φ` with 1-based `i`.
pub fn holds(formula: &Formula, trace: &Trace, i: usize) -> Result<bool, LtlError> {
    if i == 0 || i > trace.len() {
        return Err(LtlError::PositionOutOfRange {
            pos: i,
            len: trace.len(),
        });
    }
    Ok(truth_table(formula, trace)[i - 1])
}

/// `w ⊨ φ`; false for the empty trace.
pub fn is_model(formula: &Formula, trace: &Trace) -> bool {
    !trace.is_empty() && holds(formula, trace, 1).unwrap_or(false)
}

/// Every letter over `props`, in binary-counting order (bit `j` is the
/// `j`-th proposition in the given order).
pub fn letters_over(props: &[String]) -> Vec<BTreeSet<String>> {
    assert!(
        props.len() < 31,
        "too many propositions to enumerate letters"
    );
    (0u32..(1 << props.len()))
        .map(|mask| {
            props
                .iter()
                .enumerate()
                .filter(|(j, _)| mask & (1 << j) != 0)
                .map(|(_, p)| p.clone())
                .collect()
        })
        .collect()
}

/// Every trace of length exactly `len` over `props`, lexicographic with the
/// first letter most significant.
pub fn traces_of_length(props: &[String], len: usize) -> impl Iterator<Item = Trace> {
    let letters = letters_over(props);
    let base = letters.len();
    let total = base
        .checked_pow(len as u32)
        .expect("trace enumeration overflow");
    (0..total).map(move |mut code| {
        let mut word = vec![BTreeSet::new(); len];
        for slot in word.iter_mut().rev() {
            *slot = letters[code % base].clone();
            code /= base;
        }
        Trace::new(word)
    })
}

/// First model of length `1..=max_len` over the formula's own atoms.
pub fn satisfiable_bruteforce(formula: &Formula, max_len: usize) -> Option<Trace> {
    let props: Vec<String> = formula.atoms().into_iter().collect();
    satisfiable_bruteforce_over(formula, &props, max_len)
}

pub fn satisfiable_bruteforce_over(
    formula: &Formula,
    props: &[String],
    max_len: usize,
) -> Option<Trace> {
    (1..=max_len).find_map(|len| traces_of_length(props, len).find(|t| is_model(formula, t)))
}

/// Distinct subformulas, each listed after all of its own subformulas.
pub fn subformulas_topo(formula: &Formula) -> Vec<Formula> {
    fn visit(f: &Formula, out: &mut Vec<Formula>) {
        for c in f.children() {
            visit(c, out);
        }
        if !out.contains(f) {
            out.push(f.clone());
        }
    }
    let mut out = Vec::new();
    visit(formula, &mut out);
    out
}

/// `|φ| · 2^|φ|`.
pub fn small_model_bound(formula: &Formula) -> BigUint {
    size_model_bound(formula.size())
}

pub fn size_model_bound(size: usize) -> BigUint {
    BigUint::from(size) * (BigUint::one() << size)
}
