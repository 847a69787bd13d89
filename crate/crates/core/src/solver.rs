//! Row-blueprint search deciding satisfiability of BD and ABD formulas.
//!
//! A state is the sequence of `(class, atom)` pairs of the non-covered points
//! of one row. A transition picks the atom of the next diagonal point; every
//! existing pair is updated deterministically, the row is rejected if some
//! position has no atom, and covered pairs are dropped.
//!
//! Classes are the realized block sequences of columns (up to `≡_¬A` in ABD),
//! extended as columns advance rather than guessed up front.

use std::collections::{HashMap, HashSet, VecDeque};
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::analysis::{covered_positions, Bounds, ClassId, ClassTable, Pair};
use crate::atoms::{AtomError, AtomId, AtomKey, AtomTable};
use crate::closure::Closure;
use crate::formula::{Dialect, Formula, Modality};
use crate::semantics::{
    diagonal_model, eval, model_to_compass_in, validate_compass, CompassStructure,
    HomogeneousModel, Violation,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchOrder {
    BreadthFirst,
    DepthFirst,
}

#[derive(Clone, Debug)]
pub struct SearchConfig {
    pub max_states: usize,
    pub max_queue: usize,
    pub atomic_cap: usize,
    pub order: SearchOrder,
    pub report_bounds: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            max_states: 2_000_000,
            max_queue: 2_000_000,
            atomic_cap: crate::atoms::DEFAULT_ATOMIC_CAP,
            order: SearchOrder::BreadthFirst,
            report_bounds: false,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Stats {
    pub states: usize,
    pub frontier_peak: usize,
    pub classes: usize,
    pub atoms: usize,
    pub max_row_len: usize,
    pub certificate_height: Option<usize>,
    /// Accepting rows whose trace did not yield a certificate.
    pub spurious_accepts: usize,
    /// Certificates taken from the extracted model after re-expansion failed.
    pub reexpansion_fallbacks: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bounds: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exhausted: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct SolverRow {
    pub pairs: Vec<Pair>,
}

/// One transition: chosen diagonal atom and the pair sequence before and after removal.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Step {
    pub diagonal: AtomId,
    pub pre: Vec<Pair>,
    pub kept: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Trace {
    pub initial: SolverRow,
    pub steps: Vec<Step>,
    /// Position, in the last row, of the pair containing the formula.
    pub accept: usize,
}

impl Trace {
    /// Diagonal atoms from the bottom row up.
    pub fn diagonals(&self) -> Vec<AtomId> {
        std::iter::once(self.initial.pairs[0].1)
            .chain(self.steps.iter().map(|s| s.diagonal))
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct Certificate {
    pub trace: Trace,
    pub compass: CompassStructure,
}

impl Certificate {
    pub fn model(&self) -> HomogeneousModel {
        diagonal_model(&self.compass)
    }
}

#[derive(Clone, Debug)]
pub enum Verdict {
    Sat(Box<Certificate>, Stats),
    Unsat(Stats),
    ResourceExhausted(Stats),
}

impl Verdict {
    pub fn stats(&self) -> &Stats {
        match self {
            Verdict::Sat(_, s) | Verdict::Unsat(s) | Verdict::ResourceExhausted(s) => s,
        }
    }

    pub fn is_sat(&self) -> bool {
        matches!(self, Verdict::Sat(..))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Sat(..) => "sat",
            Verdict::Unsat(_) => "unsat",
            Verdict::ResourceExhausted(_) => "resource-exhausted",
        }
    }

    pub fn certificate(&self) -> Option<&Certificate> {
        match self {
            Verdict::Sat(c, _) => Some(c),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolverError {
    #[error(transparent)]
    Atoms(#[from] AtomError),
    #[error("trace does not replay: {0}")]
    BadTrace(String),
    #[error("reconstructed structure is not a compass: {0:?}")]
    Invalid(Vec<Violation>),
}

/// How a certificate was obtained from a trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reconstruction {
    /// Covered columns re-expanded from their coverers.
    Expanded,
    /// Canonical compass of the model read off the diagonal.
    FromModel,
}

/// Search context for one formula.
pub struct Solver {
    phi: Formula,
    table: Arc<AtomTable>,
    classes: ClassTable,
    diagonals: Vec<AtomId>,
    /// Atom signature ignoring `Req_A`; class entries are signatures.
    sig: Vec<AtomId>,
    extend: HashMap<(ClassId, AtomId), ClassId>,
    base: HashMap<([u64; 3], u64), AtomId>,
    alive: Vec<bool>,
    phi_member: Option<usize>,
    constant: Option<bool>,
}

/// Column continuation: `g` can sit one row above `f` in the same column,
/// up to the `Req_B` update which callers check.
fn column_above(t: &AtomTable, f: AtomId, g: AtomId) -> bool {
    let (dm, am) = (Modality::D, Modality::A);
    let (fa, ga) = (t.atom(f), t.atom(g));
    fa.req(dm) & !ga.req(dm) == 0
        && ga.props() & !fa.props() == 0
        && (t.dialect() == Dialect::Bd
            || t.marks_above(ga.obs(am), f) == (ga.pending(), ga.forbidden()))
}

/// Live atoms from which a live atom containing `member` is reachable up the column.
fn reaches_member(t: &AtomTable, alive: &[bool], member: usize) -> Vec<bool> {
    let bm = Modality::B;
    let mut by_req_b: HashMap<u64, Vec<AtomId>> = HashMap::new();
    for a in t.ids().filter(|&a| alive[a as usize] && !t.is_point(a)) {
        by_req_b.entry(t.req(a, bm)).or_default().push(a);
    }
    let mut good: Vec<bool> = t
        .ids()
        .map(|a| alive[a as usize] && t.contains(a, member))
        .collect();
    loop {
        let mut grew = false;
        for a in t.ids() {
            if good[a as usize] || !alive[a as usize] {
                continue;
            }
            let rb = t.req(a, bm) | t.obs(a, bm);
            if by_req_b.get(&rb).is_some_and(|gs| {
                gs.iter()
                    .any(|&g| good[g as usize] && column_above(t, a, g))
            }) {
                good[a as usize] = true;
                grew = true;
            }
        }
        if !grew {
            return good;
        }
    }
}

/// Atoms that can occur in a compass: no request names an argument that no
/// live atom observes, and (ABD) some column continuation reaches a final atom.
pub fn live_atoms(t: &AtomTable) -> Vec<bool> {
    let (bm, dm, am) = (Modality::B, Modality::D, Modality::A);
    // A point has no proper subintervals, so it carries no B- or D-request.
    let mut alive: Vec<bool> = t
        .ids()
        .map(|a| !t.is_point(a) || (t.req(a, bm) == 0 && t.req(a, dm) == 0))
        .collect();
    let abd = t.dialect() == Dialect::Abd;
    let mut by_req_b: HashMap<u64, Vec<AtomId>> = HashMap::new();
    for a in t.ids().filter(|&a| !t.is_point(a)) {
        by_req_b.entry(t.req(a, bm)).or_default().push(a);
    }
    let above = |f: AtomId, g: AtomId| column_above(t, f, g);
    loop {
        let mut seen = [0u64; 3];
        for a in t.ids().filter(|&a| alive[a as usize]) {
            for m in Modality::ALL {
                seen[m.index()] |= t.obs(a, m);
            }
        }
        // A B- or D-request needs a live witness whose own requests of that kind
        // (and, for B, whose D-requests) are requests of the requester. Witnesses
        // end below the top row, so some live atom sits above them.
        let mut wit: [Vec<(u64, u64, u64)>; 2] = [Vec::new(), Vec::new()];
        let extendable = |a: AtomId| {
            by_req_b
                .get(&(t.req(a, bm) | t.obs(a, bm)))
                .is_some_and(|gs| gs.iter().any(|&g| alive[g as usize] && above(a, g)))
        };
        // In ABD the witness row is not the top row either.
        let inner_req_a: HashSet<u64> = t
            .ids()
            .filter(|&a| abd && alive[a as usize] && t.is_point(a) && extendable(a))
            .map(|a| t.req(a, am))
            .collect();
        let inner = |a: AtomId| extendable(a) && (!abd || inner_req_a.contains(&t.req(a, am)));
        for a in t.ids().filter(|&a| alive[a as usize] && inner(a)) {
            let (ob, od) = (t.obs(a, bm), t.obs(a, dm));
            if ob != 0 {
                wit[0].push((ob, ob | t.req(a, bm), t.req(a, dm)));
            }
            if od != 0 {
                wit[1].push((od, od | t.req(a, dm), 0));
            }
        }
        for w in &mut wit {
            w.sort_unstable();
            w.dedup();
        }
        let witnessed = |a: AtomId| {
            let rd = t.req(a, dm);
            [(bm, &wit[0]), (dm, &wit[1])].iter().all(|&(m, ws)| {
                let r = t.req(a, m);
                let mut need = r;
                while need != 0 {
                    let bit = need & need.wrapping_neg();
                    if !ws
                        .iter()
                        .any(|&(o, c, d)| o & bit != 0 && c & !r == 0 && d & !rd == 0)
                    {
                        return false;
                    }
                    need &= need - 1;
                }
                true
            })
        };
        // A row shares its A-requests with its diagonal point.
        let point_req_a: HashSet<u64> = t
            .ids()
            .filter(|&a| alive[a as usize] && t.is_point(a))
            .map(|a| t.req(a, am))
            .collect();
        let mut next: Vec<bool> = t
            .ids()
            .map(|a| {
                alive[a as usize]
                    && (!abd || point_req_a.contains(&t.req(a, am)))
                    && t.req(a, am) & !seen[am.index()] == 0
                    && t.atom(a).pending() & !seen[am.index()] == 0
                    && witnessed(a)
            })
            .collect();
        // Least fixpoint: atoms reachable up a column from a point.
        let mut grounded: Vec<bool> = t.ids().map(|a| next[a as usize] && t.is_point(a)).collect();
        let mut stack: Vec<AtomId> = t.ids().filter(|&a| grounded[a as usize]).collect();
        while let Some(a) = stack.pop() {
            if let Some(gs) = by_req_b.get(&(t.req(a, bm) | t.obs(a, bm))) {
                for &g in gs {
                    if next[g as usize] && !grounded[g as usize] && above(a, g) {
                        grounded[g as usize] = true;
                        stack.push(g);
                    }
                }
            }
        }
        next = grounded;
        if abd {
            // Least fixpoint: atoms from which a final atom is reachable up the column.
            // The top row shares its A-requests with a final point.
            let final_req_a: HashSet<u64> = t
                .ids()
                .filter(|&a| next[a as usize] && t.is_point(a) && t.is_final(a))
                .map(|a| t.req(a, am))
                .collect();
            let mut good: Vec<bool> = t
                .ids()
                .map(|a| next[a as usize] && t.is_final(a) && final_req_a.contains(&t.req(a, am)))
                .collect();
            loop {
                let mut grew = false;
                for a in t.ids() {
                    if good[a as usize] || !next[a as usize] {
                        continue;
                    }
                    let rb = t.req(a, bm) | t.obs(a, bm);
                    if by_req_b
                        .get(&rb)
                        .is_some_and(|gs| gs.iter().any(|&g| good[g as usize] && above(a, g)))
                    {
                        good[a as usize] = true;
                        grew = true;
                    }
                }
                if !grew {
                    break;
                }
            }
            next = good;
        }
        if next == alive {
            return alive;
        }
        alive = next;
    }
}

impl Solver {
    pub fn new(phi: &Formula, dialect: Dialect, cfg: &SearchConfig) -> Result<Self, AtomError> {
        let cl = Closure::new(phi, dialect);
        let table = Arc::new(AtomTable::with_cap(cl, cfg.atomic_cap)?);
        Ok(Self::with_table(phi, table))
    }

    pub fn with_table(phi: &Formula, table: Arc<AtomTable>) -> Self {
        let t = &*table;
        let (bm, dm) = (Modality::B, Modality::D);
        let alive = live_atoms(t);
        let diagonals: Vec<AtomId> = t
            .ids()
            .filter(|&a| {
                alive[a as usize] && t.is_point(a) && t.req(a, bm) == 0 && t.req(a, dm) == 0
            })
            .collect();
        let mut base = HashMap::new();
        let mut sigs: HashMap<AtomKey, AtomId> = HashMap::new();
        let mut sig = Vec::with_capacity(t.len());
        for a in t.ids() {
            let k = t.atom(a).key();
            base.entry((k.req, k.props)).or_insert(a);
            let mut s = k;
            s.req[Modality::A.index()] = 0;
            let next = sigs.len() as AtomId;
            sig.push(*sigs.entry(s).or_insert(next));
        }
        Solver {
            phi: phi.clone(),
            phi_member: t.closure().index_of(phi),
            constant: phi.constant_value(),
            table,
            classes: ClassTable::new(),
            diagonals,
            sig,
            extend: HashMap::new(),
            base,
            alive,
        }
    }

    pub fn table(&self) -> &Arc<AtomTable> {
        &self.table
    }

    pub fn classes(&self) -> &ClassTable {
        &self.classes
    }

    pub fn formula(&self) -> &Formula {
        &self.phi
    }

    /// Diagonal atoms: points without B- or D-requests.
    pub fn diagonal_atoms(&self) -> &[AtomId] {
        &self.diagonals
    }

    fn class_of_diagonal(&mut self, d: AtomId) -> ClassId {
        self.classes.intern(&[self.sig[d as usize]])
    }

    fn advance(&mut self, c: ClassId, g: AtomId) -> ClassId {
        let s = self.sig[g as usize];
        if *self.classes.get(c).last().unwrap() == s {
            return c;
        }
        if let Some(&n) = self.extend.get(&(c, s)) {
            return n;
        }
        let mut seq = self.classes.get(c).to_vec();
        seq.push(s);
        let n = self.classes.intern(&seq);
        self.extend.insert((c, s), n);
        n
    }

    /// One row of a trace per diagonal atom.
    pub fn initial_rows(&mut self) -> Vec<SolverRow> {
        self.diagonals
            .clone()
            .into_iter()
            .map(|d| SolverRow {
                pairs: vec![(self.class_of_diagonal(d), d)],
            })
            .collect()
    }

    /// Atoms of the next row for the given current atoms (left to right) and
    /// new diagonal atom, or `None` if some position admits no atom.
    pub fn next_atoms(&self, row: &[AtomId], d: AtomId) -> Option<Vec<AtomId>> {
        let t = &*self.table;
        let (bm, dm, am) = (Modality::B, Modality::D, Modality::A);
        let abd = t.dialect() == Dialect::Abd;
        let req_a = if abd { t.req(d, am) } else { 0 };
        let pd = t.atom(d).props();
        let mut out = vec![0; row.len()];
        let mut union_d = 0u64;
        for i in (0..row.len()).rev() {
            let f = row[i];
            let fa = t.atom(f);
            let mut req = [0u64; 3];
            req[bm.index()] = fa.req(bm) | fa.obs(bm);
            req[dm.index()] = fa.req(dm) | union_d;
            req[am.index()] = req_a;
            let props = fa.props() & pd;
            let b = *self.base.get(&(req, props))?;
            out[i] = if abd {
                let (pending, forbidden) = t.marks_above(t.obs(b, am), f);
                t.lookup(&AtomKey {
                    req,
                    props,
                    pending,
                    forbidden,
                })?
            } else {
                b
            };
            if !self.alive[out[i] as usize] {
                return None;
            }
            union_d |= fa.obs(dm) | fa.req(dm);
        }
        Some(out)
    }

    /// Successor of `row` when the next diagonal atom is `d`.
    pub fn step(&mut self, row: &[Pair], d: AtomId) -> Option<Step> {
        if !self.diagonals.contains(&d) {
            return None;
        }
        let atoms: Vec<AtomId> = row.iter().map(|p| p.1).collect();
        let next = self.next_atoms(&atoms, d)?;
        let mut pre: Vec<Pair> = row
            .iter()
            .zip(next)
            .map(|(&(c, _), g)| (self.advance(c, g), g))
            .collect();
        pre.push((self.class_of_diagonal(d), d));
        let cov = covered_positions(&self.table, &pre);
        let kept = (0..pre.len()).filter(|&i| !cov[i]).collect();
        Some(Step {
            diagonal: d,
            pre,
            kept,
        })
    }

    /// All successors of a row, with the diagonal atom chosen for each.
    pub fn successors(&mut self, row: &SolverRow) -> Vec<(AtomId, SolverRow)> {
        let mut out = Vec::new();
        for d in self.diagonals.clone() {
            if let Some(st) = self.step(&row.pairs, d) {
                let pairs = st.kept.iter().map(|&i| st.pre[i]).collect();
                out.push((d, SolverRow { pairs }));
            }
        }
        out
    }

    fn accepting_at(&self, row: &[Pair]) -> Option<usize> {
        let t = &*self.table;
        if t.dialect() == Dialect::Abd && !row.iter().all(|p| t.is_final(p.1)) {
            return None;
        }
        match self.constant {
            Some(true) => Some(row.len() - 1),
            Some(false) => None,
            None => {
                let m = self.phi_member?;
                row.iter().position(|p| t.contains(p.1, m))
            }
        }
    }

    /// Some live atom holds the formula in a row whose diagonal can be final.
    fn phi_can_hold(&self) -> bool {
        let t = &*self.table;
        let Some(m) = self.phi_member else {
            return false;
        };
        let am = Modality::A;
        let top_req_a: Vec<u64> = self
            .diagonals
            .iter()
            .filter(|&&d| t.is_final(d))
            .map(|&d| t.req(d, am))
            .collect();
        // Every column starts at a diagonal atom.
        let reach = reaches_member(t, &self.alive, m);
        self.diagonals.iter().any(|&d| reach[d as usize])
            && t.ids().any(|a| {
                self.alive[a as usize] && t.contains(a, m) && top_req_a.contains(&t.req(a, am))
            })
    }

    pub fn is_accepting(&self, row: &SolverRow) -> bool {
        self.accepting_at(&row.pairs).is_some()
    }

    pub fn solve(&mut self, cfg: &SearchConfig) -> Result<Verdict, SolverError> {
        let mut stats = Stats {
            atoms: self.table.len(),
            ..Stats::default()
        };
        if cfg.report_bounds {
            stats.bounds = Some(Bounds::new(self.table.closure().phi_size()).symbolic());
        }
        struct Node {
            row: Vec<Pair>,
            parent: u32,
            diagonal: AtomId,
        }
        let mut nodes: Vec<Node> = Vec::new();
        let mut visited: HashMap<Vec<Pair>, u32> = HashMap::new();
        let mut frontier: VecDeque<u32> = VecDeque::new();
        let no_atom_holds_phi = self.constant.is_none() && !self.phi_can_hold();
        if !no_atom_holds_phi {
            for r in self.initial_rows() {
                if visited.contains_key(&r.pairs) {
                    continue;
                }
                let id = nodes.len() as u32;
                visited.insert(r.pairs.clone(), id);
                nodes.push(Node {
                    row: r.pairs,
                    parent: u32::MAX,
                    diagonal: 0,
                });
                frontier.push_back(id);
            }
        }
        let finish = |mut s: Stats, nodes: usize, me: &Self| {
            s.states = nodes;
            s.classes = me.classes.len();
            s
        };
        loop {
            stats.frontier_peak = stats.frontier_peak.max(frontier.len());
            let next = match cfg.order {
                SearchOrder::BreadthFirst => frontier.pop_front(),
                SearchOrder::DepthFirst => frontier.pop_back(),
            };
            let Some(id) = next else { break };
            stats.max_row_len = stats.max_row_len.max(nodes[id as usize].row.len());
            if let Some(pos) = self.accepting_at(&nodes[id as usize].row) {
                let mut chain = vec![id];
                let mut cur = id;
                while nodes[cur as usize].parent != u32::MAX {
                    cur = nodes[cur as usize].parent;
                    chain.push(cur);
                }
                chain.reverse();
                let initial = SolverRow {
                    pairs: nodes[chain[0] as usize].row.clone(),
                };
                let mut steps = Vec::new();
                let mut row = initial.pairs.clone();
                for &n in &chain[1..] {
                    let st = self
                        .step(&row, nodes[n as usize].diagonal)
                        .ok_or_else(|| SolverError::BadTrace("step rejected on replay".into()))?;
                    row = st.kept.iter().map(|&i| st.pre[i]).collect();
                    if row != nodes[n as usize].row {
                        return Err(SolverError::BadTrace("replayed row differs".into()));
                    }
                    steps.push(st);
                }
                let trace = Trace {
                    initial,
                    steps,
                    accept: pos,
                };
                match self.certify(&trace) {
                    Ok((compass, how)) => {
                        if how == Reconstruction::FromModel {
                            stats.reexpansion_fallbacks += 1;
                        }
                        stats.certificate_height = Some(compass.n());
                        let stats = finish(stats, nodes.len(), self);
                        return Ok(Verdict::Sat(
                            Box::new(Certificate { trace, compass }),
                            stats,
                        ));
                    }
                    Err(_) => stats.spurious_accepts += 1,
                }
            }
            let row = SolverRow {
                pairs: nodes[id as usize].row.clone(),
            };
            for (d, s) in self.successors(&row) {
                if visited.contains_key(&s.pairs) {
                    continue;
                }
                if nodes.len() >= cfg.max_states {
                    stats.exhausted = Some("state limit".into());
                    return Ok(Verdict::ResourceExhausted(finish(stats, nodes.len(), self)));
                }
                let nid = nodes.len() as u32;
                visited.insert(s.pairs.clone(), nid);
                nodes.push(Node {
                    row: s.pairs,
                    parent: id,
                    diagonal: d,
                });
                frontier.push_back(nid);
                if frontier.len() > cfg.max_queue {
                    stats.exhausted = Some("queue limit".into());
                    return Ok(Verdict::ResourceExhausted(finish(stats, nodes.len(), self)));
                }
            }
        }
        Ok(Verdict::Unsat(finish(stats, nodes.len(), self)))
    }

    /// Certificate for a trace: re-expansion first, then the canonical compass of
    /// the model on the diagonal, each re-rooted at the accepting point and validated.
    pub fn certify(
        &mut self,
        trace: &Trace,
    ) -> Result<(CompassStructure, Reconstruction), SolverError> {
        let expanded = self.reconstruct(trace);
        if let Ok(g) = expanded {
            return Ok((g, Reconstruction::Expanded));
        }
        let (full, x, y) = self.expand(trace)?;
        let root = sub_model(&diagonal_model(&full), x, y);
        if !eval(&root, 0, root.n(), &self.phi) {
            return Err(expanded.unwrap_err());
        }
        let g = model_to_compass_in(&self.table, &root)
            .map_err(|e| SolverError::BadTrace(e.to_string()))?;
        let v = validate_compass(&g, &self.phi);
        if !v.is_empty() {
            return Err(SolverError::Invalid(v));
        }
        Ok((g, Reconstruction::FromModel))
    }

    /// Replays a trace, re-expanding covered columns from their coverers, and
    /// returns the validated compass rooted at the accepting point.
    pub fn reconstruct(&mut self, trace: &Trace) -> Result<CompassStructure, SolverError> {
        let (full, x, y) = self.expand(trace)?;
        let g = full.rerooted(x, y);
        let v = validate_compass(&g, &self.phi);
        if !v.is_empty() {
            return Err(SolverError::Invalid(v));
        }
        Ok(g)
    }

    fn expand(&mut self, trace: &Trace) -> Result<(CompassStructure, usize, usize), SolverError> {
        let bad = |s: &str| SolverError::BadTrace(s.to_string());
        if trace.initial.pairs.len() != 1 {
            return Err(bad("initial row must have one pair"));
        }
        let mut labels: Vec<Vec<AtomId>> = vec![vec![trace.initial.pairs[0].1]];
        let mut cols: Vec<usize> = vec![0];
        let mut row: Vec<Pair> = trace.initial.pairs.clone();
        let mut follow: Vec<Option<usize>> = vec![None];
        for (y, st) in trace.steps.iter().enumerate() {
            let replay = self
                .step(&row, st.diagonal)
                .ok_or_else(|| bad("step rejected"))?;
            if replay != *st {
                return Err(bad("step differs from replay"));
            }
            let mut next = vec![0; y + 2];
            for (i, &c) in cols.iter().enumerate() {
                next[c] = st.pre[i].1;
            }
            next[y + 1] = st.diagonal;
            follow.push(None);
            for x in (0..=y).rev() {
                if let Some(l) = follow[x] {
                    next[x] = next[l];
                }
            }
            labels.push(next);
            let mut abs = cols.clone();
            abs.push(y + 1);
            // A dropped pair follows the nearest position to its right with the same fingerprint.
            let cov = covered_positions(&self.table, &st.pre);
            let rights = right_sets(&st.pre);
            for i in 0..st.pre.len() {
                if cov[i] {
                    let j = (i + 1..st.pre.len())
                        .find(|&j| st.pre[j] == st.pre[i] && rights[j] == rights[i])
                        .ok_or_else(|| bad("covered pair without coverer"))?;
                    follow[abs[i]] = Some(abs[j]);
                }
            }
            cols = st.kept.iter().map(|&i| abs[i]).collect();
            row = st.kept.iter().map(|&i| st.pre[i]).collect();
        }
        let pos = trace.accept;
        if pos >= cols.len() {
            return Err(bad("accepting position out of range"));
        }
        let top = labels.len() - 1;
        Ok((
            CompassStructure::from_rows(self.table.clone(), labels),
            cols[pos],
            top,
        ))
    }
}

fn sub_model(m: &HomogeneousModel, x: usize, y: usize) -> HomogeneousModel {
    HomogeneousModel::new(m.points()[x..=y].to_vec())
}

fn right_sets(seq: &[Pair]) -> Vec<Vec<Pair>> {
    let mut out = vec![Vec::new(); seq.len()];
    let mut cur: Vec<Pair> = Vec::new();
    for i in (0..seq.len()).rev() {
        out[i] = cur.clone();
        if let Err(p) = cur.binary_search(&seq[i]) {
            cur.insert(p, seq[i]);
        }
    }
    out
}

/// Decides `phi` in the given dialect.
pub fn solve(phi: &Formula, dialect: Dialect, cfg: &SearchConfig) -> Result<Verdict, SolverError> {
    let mut s = Solver::new(phi, dialect, cfg)?;
    s.solve(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crosscheck::random_corpus;
    use crate::formula::parse_formula;
    use crate::semantics::{brute_force_sat, eval, model_to_compass_in, validate_compass};

    fn verdict(s: &str, d: Dialect) -> Verdict {
        solve(&parse_formula(s, d).unwrap(), d, &SearchConfig::default()).unwrap()
    }

    #[test]
    fn during_contradiction_is_unsat() {
        assert!(matches!(
            verdict("p & <D>!p", Dialect::Bd),
            Verdict::Unsat(_)
        ));
        assert!(matches!(
            verdict("p & <D>!p & [B]p", Dialect::Abd),
            Verdict::Unsat(_)
        ));
    }

    #[test]
    fn two_prefixes_need_height_two() {
        let v = verdict("<B>p & <B>!p", Dialect::Bd);
        let c = v.certificate().expect("sat");
        assert_eq!(c.compass.n(), 2);
        let phi = parse_formula("<B>p & <B>!p", Dialect::Bd).unwrap();
        assert!(eval(&c.model(), 0, 2, &phi));
        assert_eq!(validate_compass(&c.compass, &phi), vec![]);
    }

    #[test]
    fn point_formula_has_height_zero() {
        let v = verdict("pi", Dialect::Bd);
        assert_eq!(v.certificate().expect("sat").compass.n(), 0);
    }

    #[test]
    fn meets_is_decided_in_abd() {
        assert!(verdict("<A>p & !p", Dialect::Abd).is_sat());
        assert!(matches!(
            verdict("<A>p & [B]F & [A]!p", Dialect::Abd),
            Verdict::Unsat(_)
        ));
    }

    // Rows of an oracle compass are reproduced by the row update.
    #[test]
    fn next_atoms_matches_oracle_rows() {
        let cfg = SearchConfig::default();
        let mut checked = 0;
        for d in [Dialect::Bd, Dialect::Abd] {
            for phi in random_corpus(17, 120, &["p", "q"], 6, d) {
                let Some(m) = brute_force_sat(&phi, 4).unwrap() else {
                    continue;
                };
                let s = Solver::new(&phi, d, &cfg).unwrap();
                let g = model_to_compass_in(s.table(), &m).unwrap();
                for y in 0..g.n() {
                    let next = s.next_atoms(g.row(y), g.get(y + 1, y + 1));
                    assert_eq!(next.as_deref(), Some(&g.row(y + 1)[..=y]), "{phi} row {y}");
                    checked += 1;
                }
            }
        }
        assert!(checked > 100, "{checked}");
    }
}
