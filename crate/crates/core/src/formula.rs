//! Formula AST for BD and ABD, with the ASCII concrete syntax.
//!
//! The stored tree only uses the primitive kinds; every derived connective
//! is expanded by the constructors below (and therefore by the parser).

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Dialect {
    #[serde(rename = "bd")]
    Bd,
    #[serde(rename = "abd")]
    Abd,
}

impl Dialect {
    pub fn name(self) -> &'static str {
        match self {
            Dialect::Bd => "bd",
            Dialect::Abd => "abd",
        }
    }
}

impl std::str::FromStr for Dialect {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "bd" | "BD" => Ok(Dialect::Bd),
            "abd" | "ABD" => Ok(Dialect::Abd),
            other => Err(format!("unknown dialect `{other}` (expected bd or abd)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Modality {
    B,
    D,
    A,
}

impl Modality {
    pub const ALL: [Modality; 3] = [Modality::B, Modality::D, Modality::A];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn letter(self) -> char {
        match self {
            Modality::B => 'B',
            Modality::D => 'D',
            Modality::A => 'A',
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    Top,
    Prop(String),
    Not(Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Diamond(Modality, Box<Formula>),
}

impl Formula {
    pub fn top() -> Self {
        Formula::Top
    }

    pub fn bottom() -> Self {
        Formula::Not(Box::new(Formula::Top))
    }

    pub fn prop(name: &str) -> Self {
        Formula::Prop(name.to_string())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    /// Complement: strips one negation instead of stacking a second one.
    pub fn negate(f: Formula) -> Self {
        match f {
            Formula::Not(inner) => *inner,
            other => Formula::not(other),
        }
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::not(Formula::or(Formula::negate(a), Formula::negate(b)))
    }

    pub fn implies(a: Formula, b: Formula) -> Self {
        Formula::or(Formula::negate(a), b)
    }

    pub fn iff(a: Formula, b: Formula) -> Self {
        Formula::and(
            Formula::implies(a.clone(), b.clone()),
            Formula::implies(b, a),
        )
    }

    pub fn diamond(m: Modality, f: Formula) -> Self {
        Formula::Diamond(m, Box::new(f))
    }

    pub fn boxed(m: Modality, f: Formula) -> Self {
        Formula::not(Formula::diamond(m, Formula::negate(f)))
    }

    /// `[B]⊥`, true exactly on point intervals.
    pub fn pi() -> Self {
        Formula::boxed(Modality::B, Formula::bottom())
    }

    /// `[G]ψ = ψ ∧ [B]ψ ∧ [A]ψ ∧ [B][A]ψ`: ψ on every subinterval of `[0,N]` when evaluated there.
    pub fn global(f: Formula) -> Self {
        let ba = Formula::boxed(Modality::B, Formula::boxed(Modality::A, f.clone()));
        let a = Formula::boxed(Modality::A, f.clone());
        let b = Formula::boxed(Modality::B, f.clone());
        Formula::and(f, Formula::and(b, Formula::and(a, ba)))
    }

    pub fn eventually(f: Formula) -> Self {
        Formula::negate(Formula::global(Formula::negate(f)))
    }

    pub fn conj<I: IntoIterator<Item = Formula>>(items: I) -> Self {
        let mut items: Vec<Formula> = items.into_iter().collect();
        match items.len() {
            0 => Formula::Top,
            _ => {
                let mut acc = items.pop().unwrap();
                while let Some(f) = items.pop() {
                    acc = Formula::and(f, acc);
                }
                acc
            }
        }
    }

    pub fn disj<I: IntoIterator<Item = Formula>>(items: I) -> Self {
        let mut items: Vec<Formula> = items.into_iter().collect();
        match items.len() {
            0 => Formula::bottom(),
            _ => {
                let mut acc = items.pop().unwrap();
                while let Some(f) = items.pop() {
                    acc = Formula::or(f, acc);
                }
                acc
            }
        }
    }

    /// Number of AST nodes.
    pub fn size(&self) -> usize {
        match self {
            Formula::Top | Formula::Prop(_) => 1,
            Formula::Not(a) | Formula::Diamond(_, a) => 1 + a.size(),
            Formula::Or(a, b) => 1 + a.size() + b.size(),
        }
    }

    pub fn letters(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_letters(&mut out);
        out
    }

    fn collect_letters(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::Top => {}
            Formula::Prop(p) => {
                out.insert(p.clone());
            }
            Formula::Not(a) | Formula::Diamond(_, a) => a.collect_letters(out),
            Formula::Or(a, b) => {
                a.collect_letters(out);
                b.collect_letters(out);
            }
        }
    }

    pub fn uses(&self, m: Modality) -> bool {
        match self {
            Formula::Top | Formula::Prop(_) => false,
            Formula::Not(a) => a.uses(m),
            Formula::Diamond(k, a) => *k == m || a.uses(m),
            Formula::Or(a, b) => a.uses(m) || b.uses(m),
        }
    }

    pub fn dialect(&self) -> Dialect {
        if self.uses(Modality::A) {
            Dialect::Abd
        } else {
            Dialect::Bd
        }
    }

    /// True for `⊤`, `¬⊤`, `¬¬⊤`, ...
    pub fn is_constant(&self) -> bool {
        match self {
            Formula::Top => true,
            Formula::Not(a) => a.is_constant(),
            _ => false,
        }
    }

    /// Value of a constant formula.
    pub fn constant_value(&self) -> Option<bool> {
        match self {
            Formula::Top => Some(true),
            Formula::Not(a) => a.constant_value().map(|v| !v),
            _ => None,
        }
    }

    /// Distinct subformulas, each listed once, children before parents.
    pub fn subformulas(&self) -> Vec<Formula> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        self.collect_subformulas(&mut seen, &mut out);
        out
    }

    fn collect_subformulas(&self, seen: &mut BTreeSet<Formula>, out: &mut Vec<Formula>) {
        if seen.contains(self) {
            return;
        }
        match self {
            Formula::Top | Formula::Prop(_) => {}
            Formula::Not(a) | Formula::Diamond(_, a) => a.collect_subformulas(seen, out),
            Formula::Or(a, b) => {
                a.collect_subformulas(seen, out);
                b.collect_subformulas(seen, out);
            }
        }
        seen.insert(self.clone());
        out.push(self.clone());
    }
}

const PREC_OR: u8 = 1;
const PREC_UNARY: u8 = 2;

impl Formula {
    fn write_prec(&self, f: &mut fmt::Formatter<'_>, ctx: u8) -> fmt::Result {
        match self {
            Formula::Top => write!(f, "T"),
            Formula::Prop(p) => write!(f, "{p}"),
            Formula::Not(inner) => match inner.as_ref() {
                Formula::Top => write!(f, "F"),
                Formula::Diamond(Modality::B, t) if **t == Formula::Top => write!(f, "pi"),
                other => {
                    write!(f, "!")?;
                    other.write_prec(f, PREC_UNARY)
                }
            },
            Formula::Diamond(m, inner) => {
                write!(f, "<{}>", m.letter())?;
                inner.write_prec(f, PREC_UNARY)
            }
            Formula::Or(a, b) => {
                let paren = ctx > PREC_OR;
                if paren {
                    write!(f, "(")?;
                }
                a.write_prec(f, PREC_OR)?;
                write!(f, " | ")?;
                // `|` is left-associative, so a right operand that is itself a disjunction needs parentheses.
                b.write_prec(f, PREC_OR + 1)?;
                if paren {
                    write!(f, ")")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_prec(f, 0)
    }
}

pub fn print_formula(f: &Formula) -> String {
    f.to_string()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Top,
    Bottom,
    Pi,
    Not,
    And,
    Or,
    Implies,
    Iff,
    Diamond(char),
    Box(char),
    LParen,
    RParen,
    Eof,
}

struct Lexer<'a> {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    col: usize,
    _src: &'a str,
}

#[derive(Clone, Copy)]
struct Pos {
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            chars: src.chars().collect(),
            pos: 0,
            line: 1,
            col: 1,
            _src: src,
        }
    }

    fn peek_at(&self, k: usize) -> Option<char> {
        self.chars.get(self.pos + k).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn err(&self, at: Pos, message: impl Into<String>) -> ParseError {
        ParseError {
            line: at.line,
            column: at.col,
            message: message.into(),
        }
    }

    fn tokens(mut self) -> Result<Vec<(Tok, Pos)>, ParseError> {
        let mut out = Vec::new();
        loop {
            while matches!(self.peek_at(0), Some(c) if c.is_whitespace()) {
                self.bump();
            }
            let at = Pos {
                line: self.line,
                col: self.col,
            };
            let Some(c) = self.peek_at(0) else {
                out.push((Tok::Eof, at));
                return Ok(out);
            };
            let tok = match c {
                '(' => {
                    self.bump();
                    Tok::LParen
                }
                ')' => {
                    self.bump();
                    Tok::RParen
                }
                '!' => {
                    self.bump();
                    Tok::Not
                }
                '&' => {
                    self.bump();
                    Tok::And
                }
                '|' => {
                    self.bump();
                    Tok::Or
                }
                '-' => {
                    self.bump();
                    if self.peek_at(0) != Some('>') {
                        return Err(self.err(at, "expected `->`"));
                    }
                    self.bump();
                    Tok::Implies
                }
                '<' => {
                    if self.peek_at(1) == Some('-') && self.peek_at(2) == Some('>') {
                        self.bump();
                        self.bump();
                        self.bump();
                        Tok::Iff
                    } else if matches!(self.peek_at(1), Some('B' | 'D' | 'A' | 'G'))
                        && self.peek_at(2) == Some('>')
                    {
                        self.bump();
                        let m = self.bump().unwrap();
                        self.bump();
                        Tok::Diamond(m)
                    } else {
                        return Err(self.err(at, "expected `<->` or a modality such as `<B>`"));
                    }
                }
                '[' => {
                    if matches!(self.peek_at(1), Some('B' | 'D' | 'A' | 'G'))
                        && self.peek_at(2) == Some(']')
                    {
                        self.bump();
                        let m = self.bump().unwrap();
                        self.bump();
                        Tok::Box(m)
                    } else {
                        return Err(self.err(at, "expected a modality such as `[B]`"));
                    }
                }
                c if c.is_ascii_alphabetic() || c == '_' => {
                    let mut s = String::new();
                    while matches!(self.peek_at(0), Some(c) if c.is_ascii_alphanumeric() || c == '_')
                    {
                        s.push(self.bump().unwrap());
                    }
                    match s.as_str() {
                        "T" => Tok::Top,
                        "F" => Tok::Bottom,
                        "pi" => Tok::Pi,
                        _ => Tok::Ident(s),
                    }
                }
                other => return Err(self.err(at, format!("unexpected character `{other}`"))),
            };
            out.push((tok, at));
        }
    }
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    pos: usize,
    dialect: Dialect,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn at(&self) -> Pos {
        self.toks[self.pos].1
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, message: impl Into<String>) -> ParseError {
        let at = self.at();
        ParseError {
            line: at.line,
            column: at.col,
            message: message.into(),
        }
    }

    fn iff(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.implication()?;
        if *self.peek() == Tok::Iff {
            self.next();
            let rhs = self.iff()?;
            return Ok(Formula::iff(lhs, rhs));
        }
        Ok(lhs)
    }

    fn implication(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.disjunction()?;
        if *self.peek() == Tok::Implies {
            self.next();
            let rhs = self.implication()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Formula, ParseError> {
        let mut acc = self.conjunction()?;
        while *self.peek() == Tok::Or {
            self.next();
            let rhs = self.conjunction()?;
            acc = Formula::or(acc, rhs);
        }
        Ok(acc)
    }

    fn conjunction(&mut self) -> Result<Formula, ParseError> {
        let mut acc = self.unary()?;
        while *self.peek() == Tok::And {
            self.next();
            let rhs = self.unary()?;
            acc = Formula::and(acc, rhs);
        }
        Ok(acc)
    }

    fn modality(&self, c: char) -> Result<Option<Modality>, ParseError> {
        let m = match c {
            'B' => Modality::B,
            'D' => Modality::D,
            'A' => Modality::A,
            _ => {
                if self.dialect == Dialect::Bd {
                    return Err(self.err("`[G]`/`<G>` need the A modality (ABD dialect)"));
                }
                return Ok(None);
            }
        };
        if m == Modality::A && self.dialect == Dialect::Bd {
            return Err(self.err("modality A is not available in the BD dialect"));
        }
        Ok(Some(m))
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        match self.peek().clone() {
            Tok::Not => {
                self.next();
                Ok(Formula::not(self.unary()?))
            }
            Tok::Diamond(c) => {
                let m = self.modality(c)?;
                self.next();
                let arg = self.unary()?;
                Ok(match m {
                    Some(m) => Formula::diamond(m, arg),
                    None => Formula::eventually(arg),
                })
            }
            Tok::Box(c) => {
                let m = self.modality(c)?;
                self.next();
                let arg = self.unary()?;
                Ok(match m {
                    Some(m) => Formula::boxed(m, arg),
                    None => Formula::global(arg),
                })
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<Formula, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.next();
                Ok(Formula::Prop(s))
            }
            Tok::Top => {
                self.next();
                Ok(Formula::Top)
            }
            Tok::Bottom => {
                self.next();
                Ok(Formula::bottom())
            }
            Tok::Pi => {
                self.next();
                Ok(Formula::pi())
            }
            Tok::LParen => {
                self.next();
                let inner = self.iff()?;
                if *self.peek() != Tok::RParen {
                    return Err(self.err("expected `)`"));
                }
                self.next();
                Ok(inner)
            }
            Tok::Eof => Err(self.err("unexpected end of input")),
            other => Err(self.err(format!("unexpected token {other:?}"))),
        }
    }
}

/// Parses a formula of the given dialect; `<A>`, `[A]`, `[G]` and `<G>` are rejected in BD.
pub fn parse_formula(text: &str, dialect: Dialect) -> Result<Formula, ParseError> {
    let toks = Lexer::new(text).tokens()?;
    let mut p = Parser {
        toks,
        pos: 0,
        dialect,
    };
    let f = p.iff()?;
    if *p.peek() != Tok::Eof {
        return Err(p.err("trailing input"));
    }
    Ok(f)
}
