//! Exponential-corridor tiling: instances, a direct prefix/period solver, the
//! ABD encoding, and decoding of models back into tilings.
//!
//! Grid point `(x, y)` is model point `x·(C+1) + y`; a point carries its tile
//! letter `t<i>` and the bits `b1..b<c>` of `y`, with `b1` least significant.
//! The marker `p` covers a column tiled like the last one.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::formula::{Formula, Modality};
use crate::semantics::HomogeneousModel;

const B: Modality = Modality::B;
const A: Modality = Modality::A;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TilingInstance {
    /// Largest tile index; tiles are `0..=max_tile`.
    pub max_tile: usize,
    /// Bit width `c`; columns have `2^c` cells.
    pub bits: usize,
    pub horizontal: BTreeSet<(usize, usize)>,
    pub vertical: BTreeSet<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InstanceError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("missing `{0}` line")]
    Missing(&'static str),
    #[error("bit width must be between 1 and 16, got {0}")]
    Bits(usize),
    #[error("pair ({0}, {1}) mentions a tile above the maximum")]
    TileRange(usize, usize),
}

impl TilingInstance {
    pub fn new(
        max_tile: usize,
        bits: usize,
        horizontal: impl IntoIterator<Item = (usize, usize)>,
        vertical: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, InstanceError> {
        let t = TilingInstance {
            max_tile,
            bits,
            horizontal: horizontal.into_iter().collect(),
            vertical: vertical.into_iter().collect(),
        };
        t.check()?;
        Ok(t)
    }

    fn check(&self) -> Result<(), InstanceError> {
        if !(1..=16).contains(&self.bits) {
            return Err(InstanceError::Bits(self.bits));
        }
        if let Some(&(i, j)) = self
            .horizontal
            .iter()
            .chain(&self.vertical)
            .find(|&&(i, j)| i > self.max_tile || j > self.max_tile)
        {
            return Err(InstanceError::TileRange(i, j));
        }
        Ok(())
    }

    /// `C = 2^c − 1`, the top row index.
    pub fn top(&self) -> usize {
        (1 << self.bits) - 1
    }

    pub fn height(&self) -> usize {
        self.top() + 1
    }

    /// Model point of grid point `(x, y)`.
    pub fn map(&self, x: usize, y: usize) -> usize {
        x * self.height() + y
    }

    pub fn unmap(&self, n: usize) -> (usize, usize) {
        (n / self.height(), n % self.height())
    }

    pub fn tile_letter(i: usize) -> String {
        format!("t{i}")
    }

    pub fn bit_letter(i: usize) -> String {
        format!("b{i}")
    }

    pub const MARKER: &'static str = "p";

    /// Tile letters, then bit letters, then the marker.
    pub fn letters(&self) -> Vec<String> {
        (0..=self.max_tile)
            .map(Self::tile_letter)
            .chain((1..=self.bits).map(Self::bit_letter))
            .chain([Self::MARKER.to_string()])
            .collect()
    }

    /// Parses `tiles: T`, `bits: c`, `h: i j` and `v: i j` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, InstanceError> {
        let (mut tiles, mut bits) = (None, None);
        let (mut h, mut v) = (Vec::new(), Vec::new());
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| InstanceError::Syntax {
                line: k + 1,
                message,
            };
            let (key, rest) = line
                .split_once(':')
                .ok_or_else(|| err("expected `key: value`".into()))?;
            let nums: Vec<usize> = rest
                .split_whitespace()
                .map(|s| s.parse().map_err(|_| err(format!("`{s}` is not a number"))))
                .collect::<Result<_, _>>()?;
            match (key.trim(), nums.as_slice()) {
                ("tiles", &[t]) => tiles = Some(t),
                ("bits", &[c]) => bits = Some(c),
                ("h", &[i, j]) => h.push((i, j)),
                ("v", &[i, j]) => v.push((i, j)),
                ("tiles" | "bits", _) => return Err(err("expected one number".into())),
                ("h" | "v", _) => return Err(err("expected two numbers".into())),
                (other, _) => return Err(err(format!("unknown key `{other}`"))),
            }
        }
        Self::new(
            tiles.ok_or(InstanceError::Missing("tiles"))?,
            bits.ok_or(InstanceError::Missing("bits"))?,
            h,
            v,
        )
    }
}

impl fmt::Display for TilingInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "tiles: {}", self.max_tile)?;
        writeln!(f, "bits: {}", self.bits)?;
        for (i, j) in &self.horizontal {
            writeln!(f, "h: {i} {j}")?;
        }
        for (i, j) in &self.vertical {
            writeln!(f, "v: {i} {j}")?;
        }
        Ok(())
    }
}

/// Columns `0..=prefix+period`, each bottom to top; column `prefix` equals the last one.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TilingWitness {
    pub prefix: usize,
    pub period: usize,
    pub grid: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{0}")]
pub struct WitnessError(pub String);

impl TilingWitness {
    pub fn tile(&self, x: usize, y: usize) -> usize {
        self.grid[x][y]
    }

    pub fn validate(&self, t: &TilingInstance) -> Result<(), WitnessError> {
        let err = |s: String| Err(WitnessError(s));
        if self.period == 0 {
            return err("period must be positive".into());
        }
        if self.grid.len() != self.prefix + self.period + 1 {
            return err(format!(
                "expected {} columns, found {}",
                self.prefix + self.period + 1,
                self.grid.len()
            ));
        }
        for (x, col) in self.grid.iter().enumerate() {
            if col.len() != t.height() {
                return err(format!(
                    "column {x} has {} cells, expected {}",
                    col.len(),
                    t.height()
                ));
            }
            if let Some(y) = col.iter().position(|&k| k > t.max_tile) {
                return err(format!("cell ({x}, {y}) has unknown tile {}", col[y]));
            }
            if col[0] != 0 {
                return err(format!("column {x} has bottom tile {}", col[0]));
            }
            if col[t.top()] != t.max_tile {
                return err(format!("column {x} has top tile {}", col[t.top()]));
            }
            for y in 0..t.top() {
                if !t.vertical.contains(&(col[y], col[y + 1])) {
                    return err(format!(
                        "cells ({x}, {y}) and ({x}, {}) break the vertical relation",
                        y + 1
                    ));
                }
            }
        }
        for x in 0..self.grid.len() - 1 {
            for y in 0..t.height() {
                if !t
                    .horizontal
                    .contains(&(self.grid[x][y], self.grid[x + 1][y]))
                {
                    return err(format!(
                        "cells ({x}, {y}) and ({}, {y}) break the horizontal relation",
                        x + 1
                    ));
                }
            }
        }
        if self.grid[self.prefix] != self.grid[self.prefix + self.period] {
            return err(format!(
                "column {} differs from column {}",
                self.prefix,
                self.prefix + self.period
            ));
        }
        Ok(())
    }

    /// The model of the encoding induced by this tiling; `p` marks column `prefix`.
    pub fn to_model(&self, t: &TilingInstance) -> HomogeneousModel {
        let mut points = Vec::with_capacity(self.grid.len() * t.height());
        for (x, col) in self.grid.iter().enumerate() {
            for (y, &k) in col.iter().enumerate() {
                let mut s = BTreeSet::new();
                s.insert(TilingInstance::tile_letter(k));
                for i in 1..=t.bits {
                    if y >> (i - 1) & 1 == 1 {
                        s.insert(TilingInstance::bit_letter(i));
                    }
                }
                if x == self.prefix {
                    s.insert(TilingInstance::MARKER.to_string());
                }
                points.push(s);
            }
        }
        HomogeneousModel::new(points)
    }
}

/// Columns satisfying the boundary and vertical conditions.
fn legal_columns(t: &TilingInstance) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut col = vec![0];
    fn go(t: &TilingInstance, col: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if col.len() == t.height() {
            if *col.last().unwrap() == t.max_tile {
                out.push(col.clone());
            }
            return;
        }
        let last = *col.last().unwrap();
        for &(i, j) in t.vertical.range((last, 0)..=(last, usize::MAX)) {
            debug_assert_eq!(i, last);
            col.push(j);
            go(t, col, out);
            col.pop();
        }
    }
    go(t, &mut col, &mut out);
    out
}

/// First witness in (prefix + period, prefix) order within the bounds.
pub fn brute_force_tiling(
    t: &TilingInstance,
    max_prefix: usize,
    max_period: usize,
) -> Option<TilingWitness> {
    let cols = legal_columns(t);
    let adj: Vec<Vec<usize>> = cols
        .iter()
        .map(|a| {
            (0..cols.len())
                .filter(|&j| {
                    a.iter()
                        .zip(&cols[j])
                        .all(|(&u, &v)| t.horizontal.contains(&(u, v)))
                })
                .collect()
        })
        .collect();
    fn walk(adj: &[Vec<usize>], seq: &mut Vec<usize>, len: usize, prefix: usize) -> bool {
        if seq.len() == len {
            return seq[prefix] == seq[len - 1];
        }
        let last = *seq.last().unwrap();
        for &n in &adj[last] {
            seq.push(n);
            if walk(adj, seq, len, prefix) {
                return true;
            }
            seq.pop();
        }
        false
    }
    for total in 1..=max_prefix + max_period {
        for prefix in 0..total.min(max_prefix + 1) {
            let period = total - prefix;
            if period > max_period {
                continue;
            }
            for start in 0..cols.len() {
                let mut seq = vec![start];
                if walk(&adj, &mut seq, total + 1, prefix) {
                    return Some(TilingWitness {
                        prefix,
                        period,
                        grid: seq.into_iter().map(|i| cols[i].clone()).collect(),
                    });
                }
            }
        }
    }
    None
}

fn tile(i: usize) -> Formula {
    Formula::prop(&TilingInstance::tile_letter(i))
}

fn bit(i: usize) -> Formula {
    Formula::prop(&TilingInstance::bit_letter(i))
}

fn dia(m: Modality, f: Formula) -> Formula {
    Formula::diamond(m, f)
}

fn at_point(f: Formula) -> Formula {
    Formula::and(Formula::pi(), f)
}

/// Intervals `[n, n+1]`.
fn unit() -> Formula {
    Formula::and(
        Formula::boxed(B, Formula::pi()),
        Formula::not(Formula::pi()),
    )
}

/// The named conjuncts of the encoding, in order.
#[derive(Clone, Debug)]
pub struct Encoding {
    pub parts: Vec<(&'static str, Formula)>,
}

impl Encoding {
    pub fn formula(&self) -> Formula {
        Formula::conj(self.parts.iter().map(|(_, f)| f.clone()))
    }

    pub fn part(&self, name: &str) -> Option<&Formula> {
        self.parts.iter().find(|(n, _)| *n == name).map(|(_, f)| f)
    }
}

/// `[n, n']` with `n < n'` and bits `i..=c` equal at both ends.
fn equal_from(t: &TilingInstance, i: usize) -> Formula {
    Formula::and(
        Formula::not(Formula::pi()),
        Formula::conj(
            (i..=t.bits).map(|j| Formula::iff(dia(B, at_point(bit(j))), dia(A, at_point(bit(j))))),
        ),
    )
}

/// On `[n, n+1]`: bits `i..=c` of `n+1` are those of `n` plus a carry into bit `i`.
fn plus_from(t: &TilingInstance, i: usize) -> Formula {
    if i == t.bits {
        return Formula::and(Formula::not(dia(B, bit(i))), dia(A, bit(i)));
    }
    Formula::and(
        Formula::implies(
            dia(B, bit(i)),
            Formula::and(dia(A, at_point(Formula::not(bit(i)))), plus_from(t, i + 1)),
        ),
        Formula::implies(
            dia(B, Formula::not(bit(i))),
            Formula::and(dia(A, bit(i)), equal_from(t, i + 1)),
        ),
    )
}

fn pair_disj(rel: &BTreeSet<(usize, usize)>) -> Formula {
    Formula::disj(
        rel.iter()
            .map(|&(i, j)| Formula::and(dia(B, tile(i)), dia(A, tile(j)))),
    )
}

pub fn encode_parts(t: &TilingInstance) -> Encoding {
    let g = Formula::global;
    let tiles = 0..=t.max_tile;
    let bits = 1..=t.bits;
    let all_zero = Formula::conj(bits.clone().map(|i| Formula::not(bit(i))));
    let all_one = Formula::conj(bits.clone().map(bit));

    let exists = g(Formula::implies(
        Formula::pi(),
        Formula::disj(tiles.clone().map(tile)),
    ));
    let unique = g(Formula::conj(tiles.clone().map(|i| {
        Formula::implies(
            at_point(tile(i)),
            Formula::conj(
                tiles
                    .clone()
                    .filter(|&j| j != i)
                    .map(|j| Formula::not(tile(j))),
            ),
        )
    })));
    let boundaries = Formula::and(
        dia(B, at_point(all_zero.clone())),
        Formula::boxed(A, all_one.clone()),
    );
    let wrap = Formula::and(
        Formula::conj(bits.clone().map(|i| dia(B, bit(i)))),
        Formula::conj(bits.clone().map(|i| dia(A, at_point(Formula::not(bit(i)))))),
    );
    let up = g(Formula::implies(unit(), Formula::or(wrap, plus_from(t, 1))));
    let corners = g(Formula::and(
        Formula::implies(at_point(all_zero.clone()), tile(0)),
        Formula::implies(at_point(all_one), tile(t.max_tile)),
    ));
    let eq = equal_from(t, 1);
    let eq_min = Formula::and(eq.clone(), Formula::boxed(B, Formula::not(eq.clone())));
    let horizontal = g(Formula::implies(
        Formula::and(Formula::pi(), dia(A, eq.clone())),
        dia(A, Formula::and(eq_min, pair_disj(&t.horizontal))),
    ));
    let below_top = Formula::disj(bits.clone().map(|i| dia(B, Formula::not(bit(i)))));
    let vertical = g(Formula::implies(
        Formula::and(unit(), below_top),
        pair_disj(&t.vertical),
    ));
    let p = Formula::prop(TilingInstance::MARKER);
    let marked_column = Formula::and(
        p.clone(),
        Formula::conj(
            bits.clone()
                .map(|i| Formula::and(dia(B, at_point(Formula::not(bit(i)))), dia(A, bit(i)))),
        ),
    );
    let repeats = g(Formula::implies(
        at_point(p),
        dia(
            A,
            Formula::conj([
                eq.clone(),
                Formula::boxed(A, Formula::not(eq)),
                Formula::conj(tiles.map(|i| Formula::iff(dia(B, tile(i)), dia(A, tile(i))))),
            ]),
        ),
    ));
    let prefix = Formula::and(dia(B, dia(A, marked_column)), repeats);
    Encoding {
        parts: vec![
            ("ψ_∃", exists),
            ("ψ_!", unique),
            ("ψ_boundaries", boundaries),
            ("ψ_↑", up),
            ("ψ_{0,C}", corners),
            ("ψ_⇒", horizontal),
            ("ψ_⇑", vertical),
            ("ψ_prefix", prefix),
        ],
    }
}

/// ABD formula satisfiable iff the instance tiles the corridor.
pub fn encode(t: &TilingInstance) -> Formula {
    encode_parts(t).formula()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("model violates {conjunct}: {detail}")]
pub struct DecodeError {
    pub conjunct: &'static str,
    pub detail: String,
}

/// Reads the tiling off a model of [`encode`].
pub fn decode_model(
    m: &HomogeneousModel,
    t: &TilingInstance,
) -> Result<TilingWitness, DecodeError> {
    let fail = |conjunct, detail: String| Err(DecodeError { conjunct, detail });
    let h = t.height();
    let mut tiles = Vec::with_capacity(m.n() + 1);
    for n in 0..=m.n() {
        let here: Vec<usize> = (0..=t.max_tile)
            .filter(|&i| m.holds_at(n, &TilingInstance::tile_letter(i)))
            .collect();
        match here.as_slice() {
            [] => return fail("ψ_∃", format!("point {n} has no tile")),
            [k] => tiles.push(*k),
            _ => return fail("ψ_!", format!("point {n} has tiles {here:?}")),
        }
    }
    if !(m.n() + 1).is_multiple_of(h) {
        return fail(
            "ψ_boundaries",
            format!("{} points is not a multiple of {h}", m.n() + 1),
        );
    }
    for n in 0..=m.n() {
        let y: usize = (1..=t.bits)
            .filter(|&i| m.holds_at(n, &TilingInstance::bit_letter(i)))
            .map(|i| 1 << (i - 1))
            .sum();
        if y != n % h {
            return fail(
                "ψ_↑",
                format!("point {n} encodes row {y}, expected {}", n % h),
            );
        }
    }
    let grid: Vec<Vec<usize>> = tiles.chunks(h).map(<[usize]>::to_vec).collect();
    let last = grid.len() - 1;
    let marked = (0..last).find(|&x| {
        (0..h).all(|y| m.holds_at(t.map(x, y), TilingInstance::MARKER)) && grid[x] == grid[last]
    });
    let Some(prefix) = marked.or_else(|| (0..last).find(|&x| grid[x] == grid[last])) else {
        return fail("ψ_prefix", "no column is tiled like the last one".into());
    };
    let w = TilingWitness {
        prefix,
        period: last - prefix,
        grid,
    };
    w.validate(t).map_err(|e| {
        let conjunct = if e.0.contains("bottom") || e.0.contains("top") {
            "ψ_{0,C}"
        } else if e.0.contains("horizontal") {
            "ψ_⇒"
        } else {
            "ψ_⇑"
        };
        DecodeError {
            conjunct,
            detail: e.0,
        }
    })?;
    Ok(w)
}

/// Oracle height bound matching [`brute_force_tiling`] bounds.
pub fn oracle_bound(t: &TilingInstance, max_prefix: usize, max_period: usize) -> usize {
    (max_prefix + max_period + 1) * t.height() - 1
}

/// Small instances with one bit, mixing positive and negative ones.
pub fn toy_instances() -> Vec<TilingInstance> {
    let mk = |tmax, h: &[(usize, usize)], v: &[(usize, usize)]| {
        TilingInstance::new(tmax, 1, h.iter().copied(), v.iter().copied()).unwrap()
    };
    vec![
        mk(1, &[(0, 0), (1, 1)], &[(0, 1)]),
        mk(1, &[(0, 0), (1, 1)], &[]),
        mk(1, &[], &[(0, 1)]),
        mk(1, &[(0, 0)], &[(0, 1)]),
        mk(1, &[(0, 1), (1, 0)], &[(0, 1)]),
        mk(0, &[(0, 0)], &[(0, 0)]),
        mk(0, &[], &[(0, 0)]),
        mk(2, &[(0, 0), (2, 2)], &[(0, 2)]),
        mk(2, &[(0, 0), (1, 1), (2, 2)], &[(0, 1), (1, 2)]),
        mk(2, &[(0, 0), (2, 1), (1, 2)], &[(0, 2)]),
        mk(2, &[(0, 0), (2, 2), (1, 1)], &[(0, 1)]),
        mk(2, &[(0, 0), (0, 1), (1, 1), (2, 2)], &[(0, 2), (1, 2)]),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{parse_formula, print_formula, Dialect};
    use crate::semantics::eval;

    fn positive() -> TilingInstance {
        TilingInstance::new(1, 1, [(0, 0), (1, 1)], [(0, 1)]).unwrap()
    }

    #[test]
    fn instance_format_round_trip() {
        let t = positive();
        assert_eq!(TilingInstance::parse(&t.to_string()).unwrap(), t);
        assert!(TilingInstance::parse("tiles: 1\n").is_err());
        assert!(matches!(
            TilingInstance::parse("tiles: 1\nbits: 1\nh: 0 2\n"),
            Err(InstanceError::TileRange(0, 2))
        ));
        assert_eq!(t.map(2, 1), 5);
        assert_eq!(t.unmap(5), (2, 1));
        assert_eq!(t.letters().len(), 2 + 1 + 1);
    }

    #[test]
    fn brute_force_examples() {
        let w = brute_force_tiling(&positive(), 2, 2).unwrap();
        assert_eq!((w.prefix, w.period), (0, 1));
        assert_eq!(w.grid, vec![vec![0, 1], vec![0, 1]]);
        w.validate(&positive()).unwrap();
        let mut t = positive();
        t.vertical.clear();
        assert!(brute_force_tiling(&t, 2, 2).is_none());
        let mut t = positive();
        t.horizontal.clear();
        assert!(brute_force_tiling(&t, 2, 2).is_none());
    }

    #[test]
    fn witness_models_satisfy_encoding() {
        // Two bits: columns of four cells, checked by direct evaluation.
        let t =
            TilingInstance::new(2, 2, [(0, 0), (1, 1), (2, 2)], [(0, 1), (1, 1), (1, 2)]).unwrap();
        let w = brute_force_tiling(&t, 1, 2).unwrap();
        let m = w.to_model(&t);
        let phi = encode_parts(&t);
        for (name, f) in &phi.parts {
            assert!(eval(&m, 0, m.n(), f), "{name}");
        }
        assert_eq!(decode_model(&m, &t).unwrap(), w);
    }

    #[test]
    fn broken_models_name_the_conjunct() {
        let t = positive();
        let w = brute_force_tiling(&t, 1, 1).unwrap();
        let mut pts: Vec<Vec<String>> = w
            .to_model(&t)
            .points()
            .iter()
            .map(|s| s.iter().cloned().collect())
            .collect();
        pts[1].push("t0".into());
        let e = decode_model(&HomogeneousModel::from_points(pts.clone()), &t).unwrap_err();
        assert_eq!(e.conjunct, "ψ_!");
        pts.truncate(3);
        pts[1].retain(|s| s != "t0");
        let e = decode_model(&HomogeneousModel::from_points(pts), &t).unwrap_err();
        assert_eq!(e.conjunct, "ψ_boundaries");
    }

    #[test]
    fn encoding_is_abd_text() {
        let f = encode(&positive());
        assert_eq!(f.dialect(), Dialect::Abd);
        let letters: Vec<String> = f.letters().into_iter().collect();
        assert_eq!(letters, vec!["b1", "p", "t0", "t1"]);
        assert_eq!(parse_formula(&print_formula(&f), Dialect::Abd).unwrap(), f);
    }
}
