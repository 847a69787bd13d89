//! Star-free expressions with prefix and infix operators, decided through BD.
//!
//! Concrete syntax: `%` (empty language), letters, `~e`, `e + f`, `Pre(e)`,
//! `Inf(e)`, parentheses. Files carry `alphabet: a b ...` on the first line.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::formula::{Dialect, Formula, Modality};
use crate::semantics::HomogeneousModel;
use crate::solver::{SearchConfig, Solver, SolverError, Verdict};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Empty,
    Letter(String),
    Not(Box<Expr>),
    Union(Box<Expr>, Box<Expr>),
    Pre(Box<Expr>),
    Inf(Box<Expr>),
}

/// An expression together with its alphabet.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RestrictedExpr {
    pub alphabet: Vec<String>,
    pub expr: Expr,
}

pub type Word = Vec<String>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegexError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("letter `{0}` is not in the alphabet")]
    UnknownLetter(String),
    #[error("invalid alphabet: {0}")]
    Alphabet(String),
    #[error("point {point} carries {count} letters")]
    NonConforming { point: usize, count: usize },
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Empty => write!(f, "%"),
            Expr::Letter(a) => write!(f, "{a}"),
            Expr::Not(e) => match **e {
                Expr::Union(..) => write!(f, "~({e})"),
                _ => write!(f, "~{e}"),
            },
            Expr::Union(a, b) => match **b {
                Expr::Union(..) => write!(f, "{a} + ({b})"),
                _ => write!(f, "{a} + {b}"),
            },
            Expr::Pre(e) => write!(f, "Pre({e})"),
            Expr::Inf(e) => write!(f, "Inf({e})"),
        }
    }
}

impl fmt::Display for RestrictedExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "alphabet: {}", self.alphabet.join(" "))?;
        write!(f, "{}", self.expr)
    }
}

fn valid_letter(s: &str) -> bool {
    let mut cs = s.chars();
    matches!(cs.next(), Some(c) if c.is_ascii_lowercase())
        && cs.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && s != "pi"
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    alphabet: &'a [String],
}

impl Parser<'_> {
    fn err(&self, message: impl Into<String>) -> RegexError {
        RegexError::Syntax {
            line: self.line,
            column: self.pos + 1,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<(), RegexError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected `{}`", c as char)))
        }
    }

    fn union(&mut self) -> Result<Expr, RegexError> {
        let mut lhs = self.unary()?;
        while self.peek() == Some(b'+') {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::Union(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, RegexError> {
        match self.peek() {
            Some(b'~') => {
                self.pos += 1;
                Ok(Expr::Not(Box::new(self.unary()?)))
            }
            Some(b'%') => {
                self.pos += 1;
                Ok(Expr::Empty)
            }
            Some(b'(') => {
                self.pos += 1;
                let e = self.union()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let word = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                match word {
                    "Pre" | "Inf" => {
                        self.expect(b'(')?;
                        let e = self.union()?;
                        self.expect(b')')?;
                        Ok(if word == "Pre" {
                            Expr::Pre(Box::new(e))
                        } else {
                            Expr::Inf(Box::new(e))
                        })
                    }
                    _ if self.alphabet.iter().any(|a| a == word) => {
                        Ok(Expr::Letter(word.to_string()))
                    }
                    _ => Err(RegexError::UnknownLetter(word.to_string())),
                }
            }
            Some(c) => Err(self.err(format!("unexpected `{}`", c as char))),
            None => Err(self.err("unexpected end of input")),
        }
    }
}

/// Parses an expression over a given alphabet.
pub fn parse_expr(text: &str, alphabet: &[String]) -> Result<Expr, RegexError> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        line: 1,
        alphabet,
    };
    let e = p.union()?;
    if p.peek().is_some() {
        return Err(p.err("trailing input"));
    }
    Ok(e)
}

/// Parses the two-line file format.
pub fn parse(text: &str) -> Result<RestrictedExpr, RegexError> {
    let mut lines = text
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
    let header = lines
        .next()
        .ok_or_else(|| RegexError::Alphabet("missing header".into()))?;
    let rest = header
        .trim()
        .strip_prefix("alphabet:")
        .ok_or_else(|| RegexError::Alphabet("header must start with `alphabet:`".into()))?;
    let alphabet: Vec<String> = rest.split_whitespace().map(str::to_string).collect();
    if alphabet.is_empty() {
        return Err(RegexError::Alphabet("empty alphabet".into()));
    }
    if let Some(bad) = alphabet
        .iter()
        .find(|a| !valid_letter(a) || *a == "Pre" || *a == "Inf")
    {
        return Err(RegexError::Alphabet(format!(
            "`{bad}` is not a lowercase identifier"
        )));
    }
    let body = lines
        .next()
        .ok_or_else(|| RegexError::Alphabet("missing expression".into()))?;
    let expr = parse_expr(body, &alphabet).map_err(|e| match e {
        RegexError::Syntax {
            column, message, ..
        } => RegexError::Syntax {
            line: 2,
            column,
            message,
        },
        other => other,
    })?;
    Ok(RestrictedExpr { alphabet, expr })
}

/// Membership of a nonempty word.
pub fn member(e: &Expr, w: &[String]) -> bool {
    if w.is_empty() {
        return false;
    }
    match e {
        Expr::Empty => false,
        Expr::Letter(a) => w.len() == 1 && w[0] == *a,
        Expr::Not(e) => !member(e, w),
        Expr::Union(a, b) => member(a, w) || member(b, w),
        Expr::Pre(e) => (1..w.len()).any(|k| member(e, &w[..k])),
        Expr::Inf(e) => (1..w.len()).any(|i| (i + 1..w.len()).any(|j| member(e, &w[i..j]))),
    }
}

/// BD formula whose models at `[0,N]` are exactly the words of the language.
pub fn expr_formula(e: &Expr) -> Formula {
    match e {
        Expr::Empty => Formula::bottom(),
        Expr::Letter(a) => Formula::and(Formula::prop(a), Formula::pi()),
        Expr::Not(e) => Formula::negate(expr_formula(e)),
        Expr::Union(a, b) => Formula::or(expr_formula(a), expr_formula(b)),
        Expr::Pre(e) => Formula::diamond(Modality::B, expr_formula(e)),
        Expr::Inf(e) => Formula::diamond(Modality::D, expr_formula(e)),
    }
}

/// Exactly one letter at every point other than the last one of `[0,N]` with `N > 0`,
/// and at the only point when `N = 0`.
///
/// The last point of a non-point interval is reachable by neither `⟨B⟩` nor `⟨D⟩`;
/// no subformula of a translated expression depends on it.
pub fn alphabet_constraint(alphabet: &[String]) -> Formula {
    let one = Formula::disj(alphabet.iter().map(|a| {
        Formula::conj(
            std::iter::once(Formula::prop(a)).chain(
                alphabet
                    .iter()
                    .filter(|b| *b != a)
                    .map(|b| Formula::not(Formula::prop(b))),
            ),
        )
    }));
    let at_points = Formula::implies(Formula::pi(), one);
    Formula::conj([
        at_points.clone(),
        Formula::boxed(Modality::B, at_points.clone()),
        Formula::boxed(Modality::D, at_points),
    ])
}

pub fn translate(e: &RestrictedExpr) -> Formula {
    Formula::and(expr_formula(&e.expr), alphabet_constraint(&e.alphabet))
}

pub fn word_to_model(w: &[String]) -> HomogeneousModel {
    HomogeneousModel::new(
        w.iter()
            .map(|a| [a.clone()].into_iter().collect())
            .collect(),
    )
}

pub fn model_to_word(m: &HomogeneousModel) -> Result<Word, RegexError> {
    m.points()
        .iter()
        .enumerate()
        .map(|(i, p)| {
            if p.len() == 1 {
                Ok(p.iter().next().unwrap().clone())
            } else {
                Err(RegexError::NonConforming {
                    point: i,
                    count: p.len(),
                })
            }
        })
        .collect()
}

/// Word of a model of [`translate`]; the unconstrained last point takes its
/// first alphabet letter when it does not carry exactly one.
pub fn witness_word(m: &HomogeneousModel, alphabet: &[String]) -> Result<Word, RegexError> {
    let n = m.n();
    let mut out = Vec::with_capacity(n + 1);
    for (i, p) in m.points().iter().enumerate() {
        let own: Vec<&String> = alphabet.iter().filter(|a| p.contains(*a)).collect();
        match own.as_slice() {
            [a] => out.push((*a).clone()),
            _ if i == n && n > 0 => out.push(alphabet[0].clone()),
            _ => {
                return Err(RegexError::NonConforming {
                    point: i,
                    count: own.len(),
                })
            }
        }
    }
    Ok(out)
}

/// All words of length `1..=max_len` in length-lexicographic order.
pub fn words(alphabet: &[String], max_len: usize) -> impl Iterator<Item = Word> + '_ {
    (1..=max_len).flat_map(move |len| {
        let k = alphabet.len();
        let total = k.pow(len as u32);
        (0..total).map(move |mut v| {
            let mut w = vec![String::new(); len];
            for slot in w.iter_mut().rev() {
                *slot = alphabet[v % k].clone();
                v /= k;
            }
            w
        })
    })
}

/// Shortest member up to `max_len`, in length-lexicographic order.
pub fn shortest_member(e: &RestrictedExpr, max_len: usize) -> Option<Word> {
    words(&e.alphabet, max_len).find(|w| member(&e.expr, w))
}

#[derive(Clone, Debug)]
pub struct Emptiness {
    pub verdict: Verdict,
    pub witness: Option<Word>,
}

impl Emptiness {
    pub fn is_empty(&self) -> Option<bool> {
        match self.verdict {
            Verdict::Sat(..) => Some(false),
            Verdict::Unsat(_) => Some(true),
            Verdict::ResourceExhausted(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EmptinessError {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Atoms(#[from] crate::atoms::AtomError),
    #[error(transparent)]
    Word(#[from] RegexError),
    #[error("witness `{0}` is not in the language")]
    NotMember(String),
}

/// Decides emptiness with the solver; a nonempty verdict carries a member word.
pub fn emptiness(e: &RestrictedExpr, cfg: &SearchConfig) -> Result<Emptiness, EmptinessError> {
    let phi = translate(e);
    let mut s = Solver::new(&phi, Dialect::Bd, cfg)?;
    let verdict = s.solve(cfg)?;
    let witness = match verdict.certificate() {
        Some(c) => {
            let w = witness_word(&c.model(), &e.alphabet)?;
            if !member(&e.expr, &w) {
                return Err(EmptinessError::NotMember(w.concat()));
            }
            Some(w)
        }
        None => None,
    };
    Ok(Emptiness { verdict, witness })
}

#[derive(Clone, Debug, Serialize)]
pub struct EmptinessReport {
    pub expression: String,
    pub alphabet: Vec<String>,
    pub verdict: &'static str,
    pub witness: Option<Word>,
    pub stats: crate::solver::Stats,
}

impl EmptinessReport {
    pub fn new(e: &RestrictedExpr, r: &Emptiness) -> Self {
        EmptinessReport {
            expression: e.expr.to_string(),
            alphabet: e.alphabet.clone(),
            verdict: match r.is_empty() {
                Some(true) => "empty",
                Some(false) => "nonempty",
                None => "resource-exhausted",
            },
            witness: r.witness.clone(),
            stats: r.verdict.stats().clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantics::eval;

    fn ab() -> Vec<String> {
        vec!["a".into(), "b".into()]
    }

    fn w(s: &str) -> Word {
        s.chars().map(|c| c.to_string()).collect()
    }

    fn e(s: &str) -> Expr {
        parse_expr(s, &ab()).unwrap()
    }

    #[test]
    fn membership_examples() {
        assert!(member(&e("Pre(a)"), &w("ab")));
        assert!(!member(&e("Pre(a)"), &w("a")));
        assert!(member(&e("Inf(a)"), &w("bab")));
        assert!(!member(&e("Inf(a)"), &w("ab")));
        for x in words(&ab(), 4) {
            assert!(member(&e("~%"), &x));
        }
    }

    #[test]
    fn parse_print_round_trip() {
        for s in ["~(a + Pre(b))", "Inf(~%) + a + b", "~~Pre(Inf(a))"] {
            let x = e(s);
            assert_eq!(e(&x.to_string()), x);
        }
        assert!(matches!(
            parse_expr("c", &ab()),
            Err(RegexError::UnknownLetter(_))
        ));
        assert!(parse_expr("Pre(a", &ab()).is_err());
    }

    #[test]
    fn file_format() {
        let r = parse("alphabet: a b\n~Pre(a)\n").unwrap();
        assert_eq!(r.alphabet, ab());
        assert!(parse("a b\nPre(a)").is_err());
    }

    #[test]
    fn word_model_bijection() {
        let m = word_to_model(&w("ab"));
        assert_eq!(m.n(), 1);
        assert!(m.holds_at(0, "a") && m.holds_at(1, "b"));
        for x in words(&ab(), 4) {
            assert_eq!(model_to_word(&word_to_model(&x)).unwrap(), x);
        }
        let bad = HomogeneousModel::from_points(vec![vec!["a", "b"]]);
        assert!(model_to_word(&bad).is_err());
    }

    #[test]
    fn translation_agrees_with_membership() {
        let corpus = [
            "a",
            "~a",
            "Pre(a)",
            "Inf(b)",
            "~(Pre(a) + Inf(b))",
            "Pre(~Pre(b))",
            "Inf(~a + Pre(b))",
            "%",
        ];
        for s in corpus {
            let r = RestrictedExpr {
                alphabet: ab(),
                expr: e(s),
            };
            let phi = translate(&r);
            for x in words(&ab(), 4) {
                let m = word_to_model(&x);
                assert_eq!(
                    member(&r.expr, &x),
                    eval(&m, 0, m.n(), &phi),
                    "{s} on {x:?}"
                );
            }
        }
    }

    #[test]
    fn emptiness_examples() {
        let cfg = SearchConfig::default();
        let run = |s: &str| {
            let r = RestrictedExpr {
                alphabet: ab(),
                expr: e(s),
            };
            emptiness(&r, &cfg).unwrap()
        };
        let r = run("~%");
        assert_eq!(r.is_empty(), Some(false));
        assert_eq!(r.witness.unwrap().len(), 1);
        assert_eq!(run("~(~Pre(a) + ~Pre(b))").is_empty(), Some(true));
        let r = run("Inf(a)");
        assert_eq!(r.witness.unwrap().len(), 3);
        assert_eq!(run("%").is_empty(), Some(true));
    }
}
