//! Column shadings, shading classes, fingerprints, covered points, row
//! blueprints and the contraction of compass structures.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use thiserror::Error;

use crate::atoms::{AtomId, AtomTable};
use crate::formula::{Dialect, Modality};
use crate::semantics::CompassStructure;

pub type ClassId = u32;

/// Hash-consed atom sequences; a class is identified by its block atoms.
#[derive(Clone, Debug, Default)]
pub struct ClassTable {
    seqs: Vec<Vec<AtomId>>,
    index: HashMap<Vec<AtomId>, ClassId>,
}

impl ClassTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, seq: &[AtomId]) -> ClassId {
        if let Some(&id) = self.index.get(seq) {
            return id;
        }
        let id = self.seqs.len() as ClassId;
        self.seqs.push(seq.to_vec());
        self.index.insert(seq.to_vec(), id);
        id
    }

    pub fn get(&self, id: ClassId) -> &[AtomId] {
        &self.seqs[id as usize]
    }

    pub fn find(&self, seq: &[AtomId]) -> Option<ClassId> {
        self.index.get(seq).copied()
    }

    pub fn len(&self) -> usize {
        self.seqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seqs.is_empty()
    }

    /// Position of the block whose potential equals that of `atom`.
    pub fn position(&self, t: &AtomTable, id: ClassId, atom: AtomId) -> Option<usize> {
        let d = t.delta_up(atom);
        self.get(id).iter().position(|&a| t.delta_up(a) == d)
    }

    /// Block atom following the one at the level of `atom`.
    pub fn next(&self, t: &AtomTable, id: ClassId, atom: AtomId) -> Option<AtomId> {
        let i = self.position(t, id, atom)?;
        self.get(id).get(i + 1).copied()
    }
}

/// Column shape: blocks `(atom, exponent)` starting at row `start`.
///
/// In BD every row of a block carries the block atom; in ABD the block atom
/// is the first atom of a run of rows with equal potential.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FlatBSequence {
    pub start: usize,
    pub blocks: Vec<(AtomId, usize)>,
}

impl FlatBSequence {
    pub fn new(blocks: Vec<(AtomId, usize)>) -> Self {
        FlatBSequence { start: 0, blocks }
    }

    pub fn len(&self) -> usize {
        self.blocks.iter().map(|b| b.1).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn atoms(&self) -> Vec<AtomId> {
        self.blocks.iter().map(|b| b.0).collect()
    }

    /// `Sh[i]` for 1-based `i`: the block atom covering the `i`-th row.
    pub fn at(&self, i: usize) -> Option<AtomId> {
        let mut acc = 0;
        for &(a, k) in &self.blocks {
            acc += k;
            if i >= 1 && i <= acc {
                return Some(a);
            }
        }
        None
    }

    /// Checks the decreasing flat B-sequence conditions on the block atoms.
    pub fn check_decreasing(&self, t: &AtomTable) -> Result<(), String> {
        let Some(&(first, _)) = self.blocks.first() else {
            return Err("empty sequence".into());
        };
        if !t.is_initial(first) {
            return Err("first atom is not initial".into());
        }
        for w in self.blocks.windows(2) {
            let (f, g) = (w[0].0, w[1].0);
            if f == g {
                return Err("consecutive blocks share an atom".into());
            }
            if t.delta_up(g) >= t.delta_up(f) {
                return Err("potential does not strictly decrease".into());
            }
            let (df, dg) = (t.req(f, Modality::D), t.req(g, Modality::D));
            if df & dg != df {
                return Err("D-requests shrink".into());
            }
            let (pf, pg) = (t.atom(f).props(), t.atom(g).props());
            if pg & !pf != 0 {
                return Err("letters grow".into());
            }
            let (bf, bg) = (t.req(f, Modality::B), t.req(g, Modality::B));
            if t.dialect() == Dialect::Bd {
                if !t.b_succ(g, f) {
                    return Err("blocks not linked by the B-successor relation".into());
                }
            } else if bg & (bf | t.obs(f, Modality::B)) != bf | t.obs(f, Modality::B) {
                return Err("B-requests do not absorb observables".into());
            }
        }
        for &(a, k) in &self.blocks {
            if k == 0 {
                return Err("zero exponent".into());
            }
            if k > 1 && t.dialect() == Dialect::Bd && !t.is_b_reflexive(a) {
                return Err("repeated B-irreflexive atom".into());
            }
        }
        Ok(())
    }
}

/// `s1 ∼ s2`: same block atoms.
pub fn equiv(s1: &FlatBSequence, s2: &FlatBSequence) -> bool {
    s1.blocks.len() == s2.blocks.len() && s1.blocks.iter().zip(&s2.blocks).all(|(a, b)| a.0 == b.0)
}

pub fn class_of(classes: &mut ClassTable, s: &FlatBSequence) -> ClassId {
    classes.intern(&s.atoms())
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("sequences are not equivalent")]
    NotEquivalent,
    #[error("contraction needs rows y < y2 within the grid")]
    BadRows,
    #[error("rows {0} and {1} have different blueprints")]
    BlueprintMismatch(usize, usize),
}

/// `s1 < s2`: strictly longer, and every prefix of blocks ends no later.
pub fn dominates(s1: &FlatBSequence, s2: &FlatBSequence) -> Result<bool, AnalysisError> {
    if !equiv(s1, s2) {
        return Err(AnalysisError::NotEquivalent);
    }
    let (l1, l2) = (s1.len(), s2.len());
    if l1 <= l2 {
        return Ok(false);
    }
    let slack = l1 - l2;
    let (mut k, mut h) = (0, 0);
    for (a, b) in s1.blocks.iter().zip(&s2.blocks) {
        k += a.1;
        h += b.1;
        if k > slack + h {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Shading of column `x`: BD groups equal atoms, ABD groups equal potentials.
pub fn shading(g: &CompassStructure, x: usize) -> FlatBSequence {
    let t = g.table();
    let mut blocks: Vec<(AtomId, usize)> = Vec::new();
    for y in x..=g.n() {
        let a = g.get(x, y);
        match blocks.last_mut() {
            Some((b, k)) if t.delta_up(*b) == t.delta_up(a) => *k += 1,
            _ => blocks.push((a, 1)),
        }
    }
    FlatBSequence { start: x, blocks }
}

pub type Pair = (ClassId, AtomId);

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Fingerprint {
    pub class: ClassId,
    pub atom: AtomId,
    pub right: BTreeSet<Pair>,
}

/// Required number of equal-fingerprint columns to the right for coverage.
pub fn coverage_need(t: &AtomTable, atom: AtomId) -> usize {
    t.delta_up(atom) as usize + 1
}

/// Coverage computed on a pair sequence alone.
pub fn is_covered_in_sequence(t: &AtomTable, seq: &[Pair], i: usize) -> bool {
    covered_positions(t, seq)[i]
}

/// Coverage flag of every position of a pair sequence.
pub fn covered_positions(t: &AtomTable, seq: &[Pair]) -> Vec<bool> {
    let n = seq.len();
    // Right-sets, identified by interning: rs[i] = set of pairs at positions > i.
    let mut set_ids: HashMap<BTreeSet<Pair>, usize> = HashMap::new();
    let mut rs = vec![0usize; n];
    let mut cur: BTreeSet<Pair> = BTreeSet::new();
    set_ids.insert(cur.clone(), 0);
    for i in (0..n).rev() {
        let next = set_ids.len();
        rs[i] = *set_ids.entry(cur.clone()).or_insert(next);
        cur.insert(seq[i]);
    }
    let mut counts: HashMap<(Pair, usize), usize> = HashMap::new();
    let mut out = vec![false; n];
    for i in (0..n).rev() {
        let key = (seq[i], rs[i]);
        let c = counts.get(&key).copied().unwrap_or(0);
        out[i] = c >= coverage_need(t, seq[i].1);
        *counts.entry(key).or_insert(0) += 1;
    }
    out
}

/// Per-compass analysis with interned column classes.
pub struct Analysis<'a> {
    g: &'a CompassStructure,
    shadings: Vec<FlatBSequence>,
    classes: Vec<ClassId>,
}

impl<'a> Analysis<'a> {
    pub fn new(g: &'a CompassStructure, table: &mut ClassTable) -> Self {
        let shadings: Vec<FlatBSequence> = (0..=g.n()).map(|x| shading(g, x)).collect();
        let classes = shadings.iter().map(|s| class_of(table, s)).collect();
        Analysis {
            g,
            shadings,
            classes,
        }
    }

    pub fn compass(&self) -> &CompassStructure {
        self.g
    }

    pub fn shading(&self, x: usize) -> &FlatBSequence {
        &self.shadings[x]
    }

    pub fn class(&self, x: usize) -> ClassId {
        self.classes[x]
    }

    pub fn pair(&self, x: usize, y: usize) -> Pair {
        (self.classes[x], self.g.get(x, y))
    }

    /// `S_→(x,y)` over the columns `x < x' ≤ y`.
    pub fn s_right(&self, x: usize, y: usize) -> BTreeSet<Pair> {
        (x + 1..=y).map(|x2| self.pair(x2, y)).collect()
    }

    pub fn fingerprint(&self, x: usize, y: usize) -> Fingerprint {
        Fingerprint {
            class: self.classes[x],
            atom: self.g.get(x, y),
            right: self.s_right(x, y),
        }
    }

    pub fn row_pairs(&self, y: usize) -> Vec<Pair> {
        (0..=y).map(|x| self.pair(x, y)).collect()
    }

    /// The first `Δ↑+1` columns to the right sharing the fingerprint of `(x,y)`, if there are enough.
    pub fn coverers(&self, x: usize, y: usize) -> Option<Vec<usize>> {
        let need = coverage_need(self.g.table(), self.g.get(x, y));
        let fp = self.fingerprint(x, y);
        let mut out = Vec::new();
        for x2 in x + 1..=y {
            if self.fingerprint(x2, y) == fp {
                out.push(x2);
                if out.len() == need {
                    return Some(out);
                }
            }
        }
        None
    }

    pub fn is_covered(&self, x: usize, y: usize) -> bool {
        self.coverers(x, y).is_some()
    }

    pub fn witnesses(&self, y: usize) -> Vec<usize> {
        let cov = covered_positions(self.g.table(), &self.row_pairs(y));
        (0..=y).filter(|&x| !cov[x]).collect()
    }

    pub fn row_blueprint(&self, y: usize) -> Vec<Pair> {
        self.witnesses(y)
            .into_iter()
            .map(|x| self.pair(x, y))
            .collect()
    }

    /// Nearest non-covered column at or right of `x` with the fingerprint of `(x,y)`.
    pub fn closest_wit(&self, x: usize, y: usize) -> usize {
        let wit: BTreeSet<usize> = self.witnesses(y).into_iter().collect();
        if wit.contains(&x) {
            return x;
        }
        let fp = self.fingerprint(x, y);
        (x + 1..=y)
            .find(|&x2| wit.contains(&x2) && self.fingerprint(x2, y) == fp)
            .expect("a covered point has a non-covered equal to its right")
    }
}

/// Blueprint dump: one `classId:atomId` line per witness.
pub fn blueprint_dump(bp: &[Pair]) -> String {
    let mut s = String::new();
    for (c, a) in bp {
        let _ = writeln!(s, "{c}:{a}");
    }
    s
}

/// Cuts rows `y+1..=y2` out of `g`, rerouting the columns left of `y` through their closest witnesses.
pub fn contract(
    g: &CompassStructure,
    y: usize,
    y2: usize,
    classes: &mut ClassTable,
) -> Result<CompassStructure, AnalysisError> {
    if y >= y2 || y2 > g.n() {
        return Err(AnalysisError::BadRows);
    }
    let an = Analysis::new(g, classes);
    if an.row_blueprint(y) != an.row_blueprint(y2) {
        return Err(AnalysisError::BlueprintMismatch(y, y2));
    }
    let w1 = an.witnesses(y);
    let w2 = an.witnesses(y2);
    let bar: HashMap<usize, usize> = w1.iter().copied().zip(w2.iter().copied()).collect();
    let delta = y2 - y;
    let route: Vec<usize> = (0..=y).map(|x| bar[&an.closest_wit(x, y)]).collect();
    Ok(CompassStructure::from_fn(
        g.table().clone(),
        g.n() - delta,
        |x, yy| {
            if yy <= y {
                g.get(x, yy)
            } else if x > y {
                g.get(x + delta, yy + delta)
            } else {
                g.get(route[x], yy + delta)
            }
        },
    ))
}

/// First pair of rows `y < y2` with equal blueprints.
pub fn repeated_blueprints(
    g: &CompassStructure,
    classes: &mut ClassTable,
) -> Option<(usize, usize)> {
    let an = Analysis::new(g, classes);
    let mut seen: HashMap<Vec<Pair>, usize> = HashMap::new();
    for y in 0..=g.n() {
        let bp = an.row_blueprint(y);
        if let Some(&y0) = seen.get(&bp) {
            return Some((y0, y));
        }
        seen.insert(bp, y);
    }
    None
}

/// Contracts until all rows have pairwise distinct blueprints.
pub fn contract_fully(
    g: &CompassStructure,
    classes: &mut ClassTable,
) -> Result<CompassStructure, AnalysisError> {
    let mut cur = g.clone();
    while let Some((y, y2)) = repeated_blueprints(&cur, classes) {
        cur = contract(&cur, y, y2, classes)?;
    }
    Ok(cur)
}

/// Base-2 logarithms of the quantitative bounds, as functions of `|φ|`.
#[derive(Clone, Debug, PartialEq)]
pub struct Bounds {
    pub phi: usize,
    /// `log2` of the shading-class bound `2^{4|φ|²+6|φ|+2}`.
    pub classes_log2: f64,
    /// `log2` of the blueprint-length bound `(4|φ|+2)·2^{8|φ|²+14|φ|+6}`.
    pub blueprint_len_log2: f64,
    /// `log2 log2` of the row-count bound `M`.
    pub rows_log2_log2: f64,
}

impl Bounds {
    pub fn new(phi: usize) -> Self {
        let p = phi as f64;
        let classes_log2 = 4.0 * p * p + 6.0 * p + 2.0;
        let blueprint_len_log2 = (4.0 * p + 2.0).log2() + 8.0 * p * p + 14.0 * p + 6.0;
        // log2 M = 2(|φ|+1)(4|φ|²+7|φ|+3) · 2^{8|φ|²+14|φ|+6}.
        let rows_log2_log2 =
            (2.0 * (p + 1.0) * (4.0 * p * p + 7.0 * p + 3.0)).log2() + 8.0 * p * p + 14.0 * p + 6.0;
        Bounds {
            phi,
            classes_log2,
            blueprint_len_log2,
            rows_log2_log2,
        }
    }

    pub fn symbolic(&self) -> String {
        format!(
            "classes <= 2^{:.0}; blueprint length <= 2^{:.2}; rows M <= 2^(2^{:.2})",
            self.classes_log2, self.blueprint_len_log2, self.rows_log2_log2
        )
    }

    /// True when `count` is within the blueprint-length bound.
    pub fn admits_blueprint_len(&self, count: usize) -> bool {
        (count.max(1) as f64).log2() <= self.blueprint_len_log2
    }
}
