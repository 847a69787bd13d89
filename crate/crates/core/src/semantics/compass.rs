//! Compass structures: atom-labelled triangles, their validation, and the
//! conversions to and from homogeneous models.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::atoms::{AtomError, AtomId, AtomKey, AtomTable};
use crate::closure::Closure;
use crate::formula::{Dialect, Formula, Modality};

use super::eval::{table as eval_table, tri, Compiled};
use super::model::HomogeneousModel;

#[derive(Clone, Debug)]
pub struct CompassStructure {
    table: Arc<AtomTable>,
    n: usize,
    grid: Vec<AtomId>,
}

impl PartialEq for CompassStructure {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.table, &other.table) && self.n == other.n && self.grid == other.grid
    }
}

impl Eq for CompassStructure {}

impl CompassStructure {
    /// Builds a structure from rows `grid[y] = [L(0,y), …, L(y,y)]`.
    pub fn from_rows(table: Arc<AtomTable>, rows: Vec<Vec<AtomId>>) -> Self {
        assert!(!rows.is_empty());
        let n = rows.len() - 1;
        let mut grid = Vec::with_capacity(tri(n, n) + 1);
        for (y, row) in rows.into_iter().enumerate() {
            assert_eq!(row.len(), y + 1, "row {y} has the wrong width");
            grid.extend(row);
        }
        CompassStructure { table, n, grid }
    }

    /// Builds a structure from a labelling function.
    pub fn from_fn(
        table: Arc<AtomTable>,
        n: usize,
        mut f: impl FnMut(usize, usize) -> AtomId,
    ) -> Self {
        let mut grid = Vec::with_capacity(tri(n, n) + 1);
        for y in 0..=n {
            for x in 0..=y {
                grid.push(f(x, y));
            }
        }
        CompassStructure { table, n, grid }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn table(&self) -> &Arc<AtomTable> {
        &self.table
    }

    pub fn get(&self, x: usize, y: usize) -> AtomId {
        assert!(
            x <= y && y <= self.n,
            "({x},{y}) outside the grid of height {}",
            self.n
        );
        self.grid[tri(x, y)]
    }

    pub fn set(&mut self, x: usize, y: usize, a: AtomId) {
        assert!(x <= y && y <= self.n);
        self.grid[tri(x, y)] = a;
    }

    pub fn row(&self, y: usize) -> &[AtomId] {
        &self.grid[tri(0, y)..=tri(y, y)]
    }

    /// Sub-triangle with `(x0, x0)` as its bottom-left point and `(x0, y1)` as root.
    pub fn rerooted(&self, x0: usize, y1: usize) -> Self {
        assert!(x0 <= y1 && y1 <= self.n);
        Self::from_fn(self.table.clone(), y1 - x0, |x, y| self.get(x + x0, y + x0))
    }

    /// Letters of the diagonal point `(x,x)`, as a mask over `closure().letters()`.
    pub fn point_props(&self, x: usize) -> u64 {
        self.table.atom(self.get(x, x)).props()
    }

    pub fn to_json(&self, phi: Option<&Formula>) -> String {
        serde_json::to_string(&self.to_dump(phi)).expect("compass serializes")
    }

    pub fn to_dump(&self, phi: Option<&Formula>) -> CompassDump {
        let mut local: BTreeMap<AtomId, usize> = BTreeMap::new();
        let mut order = Vec::new();
        let mut grid = Vec::with_capacity(self.n + 1);
        for y in 0..=self.n {
            let mut row = Vec::with_capacity(y + 1);
            for &a in self.row(y) {
                let next = local.len();
                let idx = *local.entry(a).or_insert_with(|| {
                    order.push(a);
                    next
                });
                row.push(idx);
            }
            grid.push(row);
        }
        let abd = self.table.dialect() == Dialect::Abd;
        let cl = self.table.closure();
        CompassDump {
            dialect: self.table.dialect(),
            formula: phi.map(|f| f.to_string()),
            n: self.n,
            atoms: order.iter().map(|&a| self.table.member_names(a)).collect(),
            marks: abd.then(|| {
                order
                    .iter()
                    .map(|&a| {
                        (0..cl.args(Modality::A).len())
                            .map(|k| self.table.atom(a).mark(k).symbol().to_string())
                            .collect()
                    })
                    .collect()
            }),
            grid,
        }
    }

    /// Rebuilds a structure from its JSON dump, given the atom table of the same closure.
    pub fn from_dump(table: Arc<AtomTable>, dump: &CompassDump) -> Result<Self, String> {
        let cl = table.closure();
        let mut ids = Vec::new();
        for (i, names) in dump.atoms.iter().enumerate() {
            let mut members = Vec::new();
            for s in names {
                let f =
                    crate::formula::parse_formula(s, Dialect::Abd).map_err(|e| e.to_string())?;
                members.push(
                    cl.index_of(&f)
                        .ok_or_else(|| format!("`{s}` is not in the closure"))?,
                );
            }
            let candidates: Vec<AtomId> = table
                .ids()
                .filter(|&a| {
                    let mine: Vec<usize> = table.atom(a).members().collect();
                    let mut want = members.clone();
                    want.sort_unstable();
                    mine == want
                })
                .filter(|&a| match &dump.marks {
                    None => true,
                    Some(marks) => (0..cl.args(Modality::A).len()).all(|k| {
                        marks[i].get(k).map(String::as_str)
                            == Some(&table.atom(a).mark(k).symbol().to_string())
                    }),
                })
                .collect();
            match candidates.as_slice() {
                [a] => ids.push(*a),
                _ => {
                    return Err(format!(
                        "atom {i} does not name a unique atom of the closure"
                    ))
                }
            }
        }
        if dump.grid.len() != dump.n + 1 {
            return Err("grid height does not match N".into());
        }
        let mut rows = Vec::new();
        for (y, row) in dump.grid.iter().enumerate() {
            if row.len() != y + 1 {
                return Err(format!("row {y} has the wrong width"));
            }
            let mut r = Vec::new();
            for &i in row {
                r.push(
                    *ids.get(i)
                        .ok_or_else(|| format!("atom index {i} out of range"))?,
                );
            }
            rows.push(r);
        }
        Ok(Self::from_rows(table, rows))
    }

    /// Triangular text rendering, top row first, with an atom legend.
    pub fn render_text(&self) -> String {
        let dump = self.to_dump(None);
        let w = dump.atoms.len().to_string().len().max(1);
        let mut out = String::new();
        for y in (0..=self.n).rev() {
            let _ = write!(out, "{y:>3} |");
            for idx in &dump.grid[y] {
                let _ = write!(out, " {idx:>w$}");
            }
            out.push('\n');
        }
        let _ = write!(out, "    +");
        for x in 0..=self.n {
            let _ = write!(out, " {:>w$}", x % 10);
        }
        out.push('\n');
        for (i, a) in dump.atoms.iter().enumerate() {
            let _ = write!(out, "{i:>w$}: {{{}}}", a.join(", "));
            if let Some(m) = &dump.marks {
                if !m[i].is_empty() {
                    let _ = write!(out, " [{}]", m[i].join(""));
                }
            }
            out.push('\n');
        }
        out
    }

    /// Graphviz rendering: one node per point, B-edges along columns.
    pub fn render_dot(&self) -> String {
        let dump = self.to_dump(None);
        let mut out = String::from("digraph compass {\n  node [shape=box];\n");
        for y in 0..=self.n {
            for x in 0..=y {
                let _ = writeln!(
                    out,
                    "  p{x}_{y} [label=\"({x},{y}) a{}\", pos=\"{x},{y}!\"];",
                    dump.grid[y][x]
                );
            }
        }
        for y in 0..self.n {
            for x in 0..=y {
                let _ = writeln!(out, "  p{x}_{} -> p{x}_{y} [label=\"B\"];", y + 1);
            }
        }
        out.push_str("}\n");
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompassDump {
    pub dialect: Dialect,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub formula: Option<String>,
    #[serde(rename = "N")]
    pub n: usize,
    pub atoms: Vec<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub marks: Option<Vec<Vec<String>>>,
    pub grid: Vec<Vec<usize>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ViolationKind {
    InitialFormula,
    BConsistency,
    DiagonalBRequest,
    DConsistency,
    DFulfilment,
    Homogeneity,
    AConsistency,
    AFulfilment,
    MarkingTransition,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub at: (usize, usize),
    pub other: Option<(usize, usize)>,
    /// Offending closure member, when one can be singled out.
    pub formula: Option<usize>,
}

fn first_bit(m: u64) -> Option<usize> {
    (m != 0).then(|| m.trailing_zeros() as usize)
}

/// All conditions except the initial formula, first violation per kind in row-major order.
fn structural(g: &CompassStructure) -> Vec<Violation> {
    let t = g.table();
    let cl = t.closure();
    let abd = t.dialect() == Dialect::Abd;
    let n = g.n();
    let mut found: BTreeMap<ViolationKind, Violation> = BTreeMap::new();
    let mut report = |v: Violation| {
        found.entry(v.kind).or_insert(v);
    };
    let (bm, dm, am) = (Modality::B, Modality::D, Modality::A);
    for y in 0..=n {
        for x in 0..=y {
            let f = g.get(x, y);
            let fa = t.atom(f);
            if x == y && fa.req(bm) != 0 {
                report(Violation {
                    kind: ViolationKind::DiagonalBRequest,
                    at: (x, y),
                    other: None,
                    formula: first_bit(fa.req(bm)).map(|k| cl.diamond_member(bm, k)),
                });
            }
            if y > x {
                let below = g.get(x, y - 1);
                let ba = t.atom(below);
                let want = ba.req(bm) | ba.obs(bm);
                if fa.req(bm) != want {
                    report(Violation {
                        kind: ViolationKind::BConsistency,
                        at: (x, y),
                        other: Some((x, y - 1)),
                        formula: first_bit(fa.req(bm) ^ want).map(|k| cl.diamond_member(bm, k)),
                    });
                } else if abd && !t.b_succ(f, below) {
                    report(Violation {
                        kind: ViolationKind::MarkingTransition,
                        at: (x, y),
                        other: Some((x, y - 1)),
                        formula: None,
                    });
                }
            }
            let mut seen_d = 0u64;
            for y2 in x + 1..y {
                for x2 in x + 1..=y2 {
                    let h = g.get(x2, y2);
                    seen_d |= t.obs(h, dm);
                    if !t.d_succ(f, h) {
                        let ha = t.atom(h);
                        let need = ha.req(dm) | ha.obs(dm);
                        report(Violation {
                            kind: ViolationKind::DConsistency,
                            at: (x, y),
                            other: Some((x2, y2)),
                            formula: first_bit(need & !fa.req(dm))
                                .map(|k| cl.diamond_member(dm, k)),
                        });
                    }
                }
            }
            let unmet = fa.req(dm) & !seen_d;
            if unmet != 0 {
                report(Violation {
                    kind: ViolationKind::DFulfilment,
                    at: (x, y),
                    other: None,
                    formula: first_bit(unmet).map(|k| cl.diamond_member(dm, k)),
                });
            }
            let p = (x..=y).fold(u64::MAX, |acc, z| acc & g.point_props(z));
            if fa.props() != p {
                report(Violation {
                    kind: ViolationKind::Homogeneity,
                    at: (x, y),
                    other: None,
                    formula: first_bit(fa.props() ^ p).map(|li| cl.letter_member(li)),
                });
            }
            if abd {
                let diag = t.atom(g.get(y, y));
                if fa.req(am) != diag.req(am) {
                    report(Violation {
                        kind: ViolationKind::AConsistency,
                        at: (x, y),
                        other: Some((y, y)),
                        formula: first_bit(fa.req(am) ^ diag.req(am))
                            .map(|k| cl.diamond_member(am, k)),
                    });
                }
                if y == n && !fa.is_final() {
                    report(Violation {
                        kind: ViolationKind::AFulfilment,
                        at: (x, y),
                        other: None,
                        formula: first_bit(fa.pending()).map(|k| cl.diamond_member(am, k)),
                    });
                }
            }
        }
    }
    found.into_values().collect()
}

/// Violations of the compass conditions for `phi`; empty iff `g` is a `phi`-compass structure.
pub fn validate_compass(g: &CompassStructure, phi: &Formula) -> Vec<Violation> {
    let mut out = structural(g);
    let t = g.table();
    let ok = match phi.constant_value() {
        Some(v) => v,
        None => match t.closure().index_of(phi) {
            Some(i) => t.contains(g.get(0, g.n()), i),
            None => false,
        },
    };
    if !ok {
        out.push(Violation {
            kind: ViolationKind::InitialFormula,
            at: (0, g.n()),
            other: None,
            formula: t.closure().index_of(phi),
        });
    }
    out.sort_by_key(|v| (v.at.1, v.at.0, v.kind));
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConversionError {
    #[error(transparent)]
    Atoms(#[from] AtomError),
    #[error("structure violates the compass conditions: {0:?}")]
    Invalid(Vec<Violation>),
    #[error("no atom matches the labelling of ({0},{1})")]
    NoAtom(usize, usize),
}

/// The compass induced by a model, over a fresh atom table for `phi`.
pub fn model_to_compass(
    m: &HomogeneousModel,
    phi: &Formula,
    dialect: Dialect,
) -> Result<CompassStructure, ConversionError> {
    let table = Arc::new(AtomTable::new(Closure::new(phi, dialect))?);
    model_to_compass_in(&table, m)
}

/// The compass induced by a model, over an existing atom table.
pub fn model_to_compass_in(
    table: &Arc<AtomTable>,
    m: &HomogeneousModel,
) -> Result<CompassStructure, ConversionError> {
    let cl = table.closure();
    let mut c = Compiled::new();
    let mut diamonds: [Vec<usize>; 3] = Default::default();
    let mut args: [Vec<usize>; 3] = Default::default();
    for md in Modality::ALL {
        for k in 0..cl.args(md).len() {
            diamonds[md.index()].push(c.add(cl.member(cl.diamond_member(md, k))));
            args[md.index()].push(c.add(cl.arg_formula(md, k)));
        }
    }
    let letters: Vec<usize> = cl
        .letters()
        .iter()
        .map(|l| c.add(&Formula::Prop(l.clone())))
        .collect();
    let vals = eval_table(&c, m);
    let abd = table.dialect() == Dialect::Abd;
    let n = m.n();
    let a_idx = Modality::A.index();
    let mut grid = Vec::with_capacity(tri(n, n) + 1);
    for y in 0..=n {
        for x in 0..=y {
            let mut key = AtomKey {
                req: [0; 3],
                props: 0,
                pending: 0,
                forbidden: 0,
            };
            for md in Modality::ALL {
                for (k, &node) in diamonds[md.index()].iter().enumerate() {
                    if vals.get(node, x, y) {
                        key.req[md.index()] |= 1 << k;
                    }
                }
            }
            for (li, &node) in letters.iter().enumerate() {
                if vals.get(node, x, y) {
                    key.props |= 1 << li;
                }
            }
            if abd {
                for (k, &arg) in args[a_idx].iter().enumerate() {
                    let seen = (x..=y).any(|y2| vals.get(arg, x, y2));
                    if seen {
                        continue;
                    }
                    if vals.get(diamonds[a_idx][k], x, x) {
                        key.pending |= 1 << k;
                    } else {
                        key.forbidden |= 1 << k;
                    }
                }
            }
            grid.push(table.lookup(&key).ok_or(ConversionError::NoAtom(x, y))?);
        }
    }
    Ok(CompassStructure {
        table: table.clone(),
        n,
        grid,
    })
}

/// Reads the model off the diagonal of a valid structure.
pub fn compass_to_model(g: &CompassStructure) -> Result<HomogeneousModel, ConversionError> {
    let v = structural(g);
    if !v.is_empty() {
        return Err(ConversionError::Invalid(v));
    }
    Ok(diagonal_model(g))
}

/// The model of the diagonal letters, without validation.
pub fn diagonal_model(g: &CompassStructure) -> HomogeneousModel {
    let letters = g.table().closure().letters();
    let points = (0..=g.n())
        .map(|z| {
            let p = g.point_props(z);
            letters
                .iter()
                .enumerate()
                .filter(|(i, _)| p >> i & 1 == 1)
                .map(|(_, s)| s.clone())
                .collect()
        })
        .collect();
    HomogeneousModel::new(points)
}
