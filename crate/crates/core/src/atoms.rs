//! Atoms and marked atoms over a closure, interned into an [`AtomTable`].
//!
//! Request, observable and box projections are bitmasks over the argument
//! list `args(R)` of the closure; letters are a bitmask over `letters()`.

use std::collections::HashMap;
use std::fmt::Write as _;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::closure::{Closure, Node, Ref};
use crate::formula::{Dialect, Modality};

pub type AtomId = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mark {
    Pending,
    Satisfied,
    Forbidden,
}

impl Mark {
    pub fn symbol(self) -> char {
        match self {
            Mark::Pending => '◇',
            Mark::Satisfied => '◆',
            Mark::Forbidden => '■',
        }
    }
}

/// Projection key; by construction it determines the atom.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AtomKey {
    pub req: [u64; 3],
    pub props: u64,
    pub pending: u64,
    pub forbidden: u64,
}

#[derive(Clone, Debug)]
pub struct Atom {
    members: FixedBitSet,
    key: AtomKey,
    obs: [u64; 3],
    delta: u32,
}

impl Atom {
    pub fn contains(&self, member: usize) -> bool {
        self.members.contains(member)
    }

    pub fn holds(&self, r: Ref) -> bool {
        match r {
            Ref::True => true,
            Ref::False => false,
            Ref::Member(i) => self.members.contains(i),
        }
    }

    pub fn members(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.ones()
    }

    pub fn key(&self) -> AtomKey {
        self.key
    }

    pub fn req(&self, m: Modality) -> u64 {
        self.key.req[m.index()]
    }

    pub fn obs(&self, m: Modality) -> u64 {
        self.obs[m.index()]
    }

    pub fn props(&self) -> u64 {
        self.key.props
    }

    pub fn pending(&self) -> u64 {
        self.key.pending
    }

    pub fn forbidden(&self) -> u64 {
        self.key.forbidden
    }

    pub fn mark(&self, k: usize) -> Mark {
        if self.key.pending >> k & 1 == 1 {
            Mark::Pending
        } else if self.key.forbidden >> k & 1 == 1 {
            Mark::Forbidden
        } else {
            Mark::Satisfied
        }
    }

    pub fn delta_up(&self) -> u32 {
        self.delta
    }

    pub fn is_final(&self) -> bool {
        self.key.pending == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AtomError {
    #[error("closure has {atomic} independent members; enumeration cap is {cap}")]
    TooLarge { atomic: usize, cap: usize },
}

/// Upper bound on the number of independent members (letters and diamonds) enumerated eagerly.
pub const DEFAULT_ATOMIC_CAP: usize = 22;

#[derive(Debug)]
pub struct AtomTable {
    cl: Closure,
    atoms: Vec<Atom>,
    lookup: HashMap<AtomKey, AtomId>,
}

fn mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// The three-part (plus pending) potential of an atom, from its counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DeltaParts {
    pub b_args: u32,
    pub b_req: u32,
    pub b_obs_unrequested: u32,
    pub d_args: u32,
    pub d_req: u32,
    pub letters: u32,
    pub negated_letters: u32,
    pub pending: u32,
}

impl DeltaParts {
    pub fn total(&self) -> u32 {
        (2 * self.b_args - 2 * self.b_req - self.b_obs_unrequested)
            + (self.d_args - self.d_req)
            + (self.letters - self.negated_letters)
            + self.pending
    }
}

impl AtomTable {
    pub fn new(cl: Closure) -> Result<Self, AtomError> {
        Self::with_cap(cl, DEFAULT_ATOMIC_CAP)
    }

    pub fn with_cap(cl: Closure, cap: usize) -> Result<Self, AtomError> {
        let atomic: Vec<usize> = (0..cl.len())
            .filter(|&i| matches!(cl.node(i), Node::Prop(_) | Node::Diamond(..)))
            .collect();
        let n_args: usize = Modality::ALL.iter().map(|m| cl.args(*m).len()).sum();
        if atomic.len() > cap || cl.letters().len() > 64 || n_args > 64 * 3 {
            return Err(AtomError::TooLarge {
                atomic: atomic.len(),
                cap,
            });
        }
        for m in Modality::ALL {
            if cl.args(m).len() > 64 {
                return Err(AtomError::TooLarge {
                    atomic: atomic.len(),
                    cap,
                });
            }
        }
        let abd = cl.dialect() == Dialect::Abd;
        let mut table = AtomTable {
            cl,
            atoms: Vec::new(),
            lookup: HashMap::new(),
        };
        let n = table.cl.len();
        for bits in 0u64..(1u64 << atomic.len()) {
            let mut members = FixedBitSet::with_capacity(n);
            for (j, &i) in atomic.iter().enumerate() {
                if bits >> j & 1 == 1 {
                    members.insert(i);
                }
            }
            for i in 0..n {
                let v = match table.cl.node(i) {
                    Node::Prop(_) | Node::Diamond(..) => continue,
                    Node::Not(r) => !holds(&members, r),
                    Node::Or(a, b) => holds(&members, a) || holds(&members, b),
                };
                members.set(i, v);
            }
            let (key, obs) = table.project(&members);
            let point = !members.contains(table.cl.b_top());
            if abd && point {
                // `[A]ψ ∈ F ⇒ ψ ∈ F` at points: an argument true here is its own A-witness.
                let a_ok = (obs[2] & !key.req[2]) == 0;
                if !a_ok {
                    continue;
                }
            }
            if !abd {
                table.push(members, key, obs);
                continue;
            }
            let n_a = table.cl.args(Modality::A).len();
            // Free positions: off-point arguments that are false here.
            let free: Vec<usize> = if point {
                Vec::new()
            } else {
                (0..n_a).filter(|k| obs[2] >> k & 1 == 0).collect()
            };
            let (base_pending, base_forbidden) = if point {
                let unsat = !obs[2] & mask(n_a);
                (unsat & key.req[2], unsat & !key.req[2])
            } else {
                (0, 0)
            };
            let combos = 3usize.pow(free.len() as u32);
            for mut c in 0..combos {
                let mut pending = base_pending;
                let mut forbidden = base_forbidden;
                for &k in &free {
                    match c % 3 {
                        0 => pending |= 1 << k,
                        1 => {}
                        _ => forbidden |= 1 << k,
                    }
                    c /= 3;
                }
                let key = AtomKey {
                    pending,
                    forbidden,
                    ..key
                };
                table.push(members.clone(), key, obs);
            }
        }
        Ok(table)
    }

    fn project(&self, members: &FixedBitSet) -> (AtomKey, [u64; 3]) {
        let mut req = [0u64; 3];
        let mut obs = [0u64; 3];
        for m in Modality::ALL {
            for (k, &arg) in self.cl.args(m).iter().enumerate() {
                if members.contains(self.cl.diamond_member(m, k)) {
                    req[m.index()] |= 1 << k;
                }
                if holds(members, arg) {
                    obs[m.index()] |= 1 << k;
                }
            }
        }
        let mut props = 0u64;
        for li in 0..self.cl.letters().len() {
            if members.contains(self.cl.letter_member(li)) {
                props |= 1 << li;
            }
        }
        (
            AtomKey {
                req,
                props,
                pending: 0,
                forbidden: 0,
            },
            obs,
        )
    }

    fn push(&mut self, members: FixedBitSet, key: AtomKey, obs: [u64; 3]) {
        let parts = self.parts(&key, &obs);
        let id = self.atoms.len() as AtomId;
        self.atoms.push(Atom {
            members,
            key,
            obs,
            delta: parts.total(),
        });
        self.lookup.insert(key, id);
    }

    fn parts(&self, key: &AtomKey, obs: &[u64; 3]) -> DeltaParts {
        let b = Modality::B.index();
        let d = Modality::D.index();
        let n_letters = self.cl.letters().len() as u32;
        DeltaParts {
            b_args: self.cl.args(Modality::B).len() as u32,
            b_req: key.req[b].count_ones(),
            b_obs_unrequested: (obs[b] & !key.req[b]).count_ones(),
            d_args: self.cl.args(Modality::D).len() as u32,
            d_req: key.req[d].count_ones(),
            letters: n_letters,
            negated_letters: n_letters - key.props.count_ones(),
            pending: key.pending.count_ones(),
        }
    }

    pub fn delta_parts(&self, id: AtomId) -> DeltaParts {
        let a = self.atom(id);
        self.parts(&a.key, &a.obs)
    }

    pub fn closure(&self) -> &Closure {
        &self.cl
    }

    pub fn dialect(&self) -> Dialect {
        self.cl.dialect()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = AtomId> {
        0..self.atoms.len() as AtomId
    }

    pub fn atom(&self, id: AtomId) -> &Atom {
        &self.atoms[id as usize]
    }

    pub fn lookup(&self, key: &AtomKey) -> Option<AtomId> {
        self.lookup.get(key).copied()
    }

    pub fn args_mask(&self, m: Modality) -> u64 {
        mask(self.cl.args(m).len())
    }

    pub fn req(&self, id: AtomId, m: Modality) -> u64 {
        self.atom(id).req(m)
    }

    pub fn obs(&self, id: AtomId, m: Modality) -> u64 {
        self.atom(id).obs(m)
    }

    /// Bit `k` set iff `[R]¬ψ_k ∈ F`, i.e. `⟨R⟩ψ_k ∉ F`.
    pub fn box_(&self, id: AtomId, m: Modality) -> u64 {
        !self.atom(id).req(m) & self.args_mask(m)
    }

    pub fn contains(&self, id: AtomId, member: usize) -> bool {
        self.atom(id).contains(member)
    }

    pub fn is_point(&self, id: AtomId) -> bool {
        !self.contains(id, self.cl.b_top())
    }

    /// Initial atoms: `Req_B(F) = ∅`.
    pub fn is_initial(&self, id: AtomId) -> bool {
        self.req(id, Modality::B) == 0
    }

    pub fn delta_up(&self, id: AtomId) -> u32 {
        self.atom(id).delta
    }

    pub fn is_final(&self, id: AtomId) -> bool {
        self.atom(id).is_final()
    }

    /// Marking forced on `f` when sitting above `g` in a column.
    pub fn marks_above(&self, f_obs_a: u64, g: AtomId) -> (u64, u64) {
        let ga = self.atom(g);
        // Pending arguments that now hold become satisfied; the rest is inherited.
        let pending = ga.key.pending & !f_obs_a;
        (pending, ga.key.forbidden)
    }

    /// `F →_B G`, including the marking transition in ABD.
    pub fn b_succ(&self, f: AtomId, g: AtomId) -> bool {
        let (fa, ga) = (self.atom(f), self.atom(g));
        let b = Modality::B.index();
        if fa.key.req[b] != ga.key.req[b] | ga.obs[b] {
            return false;
        }
        if self.dialect() == Dialect::Abd {
            let (pending, forbidden) = self.marks_above(fa.obs[Modality::A.index()], g);
            return fa.key.pending == pending && fa.key.forbidden == forbidden;
        }
        true
    }

    /// `F →_D G`.
    pub fn d_succ(&self, f: AtomId, g: AtomId) -> bool {
        let (fa, ga) = (self.atom(f), self.atom(g));
        let d = Modality::D.index();
        let need = ga.key.req[d] | ga.obs[d];
        fa.key.req[d] & need == need
    }

    pub fn is_b_reflexive(&self, f: AtomId) -> bool {
        let a = self.atom(f);
        let b = Modality::B.index();
        a.obs[b] & !a.key.req[b] == 0
    }

    pub fn is_d_reflexive(&self, f: AtomId) -> bool {
        self.d_succ(f, f)
    }

    /// One line per atom: the sorted member list, then markings in ABD.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for id in self.ids() {
            let _ = writeln!(out, "{}", self.describe(id));
        }
        out
    }

    pub fn describe(&self, id: AtomId) -> String {
        let a = self.atom(id);
        let names: Vec<String> = a.members().map(|i| self.cl.member(i).to_string()).collect();
        let mut s = format!("{{{}}}", names.join(", "));
        if self.dialect() == Dialect::Abd && !self.cl.args(Modality::A).is_empty() {
            let marks: Vec<String> = (0..self.cl.args(Modality::A).len())
                .map(|k| {
                    format!(
                        "{}:{}",
                        self.cl.describe(self.cl.args(Modality::A)[k]),
                        a.mark(k).symbol()
                    )
                })
                .collect();
            let _ = write!(s, " [{}]", marks.join(", "));
        }
        s
    }

    /// Closure-member names of an atom, in closure order.
    pub fn member_names(&self, id: AtomId) -> Vec<String> {
        self.atom(id)
            .members()
            .map(|i| self.cl.member(i).to_string())
            .collect()
    }
}

fn holds(members: &FixedBitSet, r: Ref) -> bool {
    match r {
        Ref::True => true,
        Ref::False => false,
        Ref::Member(i) => members.contains(i),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{parse_formula, Formula};

    fn table(s: &str, d: Dialect) -> AtomTable {
        AtomTable::new(Closure::new(&parse_formula(s, d).unwrap(), d)).unwrap()
    }

    fn member(t: &AtomTable, s: &str) -> usize {
        let d = t.dialect();
        t.closure()
            .index_of(&parse_formula(s, d).unwrap())
            .unwrap_or_else(|| panic!("{s} not in closure"))
    }

    fn find(t: &AtomTable, with: &[&str]) -> Vec<AtomId> {
        t.ids()
            .filter(|&id| with.iter().all(|s| t.contains(id, member(t, s))))
            .collect()
    }

    /// Definition-level check: exactly one of each complementary pair, disjunction rule.
    fn consistent(cl: &Closure, set: &FixedBitSet) -> bool {
        (0..cl.len()).all(|i| {
            let ok_pair = set.contains(i) != set.contains(cl.neg(i));
            let ok_node = match cl.node(i) {
                Node::Or(a, b) => set.contains(i) == (holds(set, a) || holds(set, b)),
                Node::Not(r) => set.contains(i) == !holds(set, r),
                _ => true,
            };
            ok_pair && ok_node
        })
    }

    #[test]
    fn begins_p_has_eight_atoms_matching_subset_enumeration() {
        let t = table("<B>p", Dialect::Bd);
        assert_eq!(t.len(), 8);
        let cl = t.closure();
        let n = cl.len();
        let mut count = 0;
        for bits in 0u64..(1 << n) {
            let mut s = FixedBitSet::with_capacity(n);
            for i in 0..n {
                s.set(i, bits >> i & 1 == 1);
            }
            if consistent(cl, &s) {
                count += 1;
                assert!(t.ids().any(|id| t.atom(id).members == s));
            }
        }
        assert_eq!(count, 8);
    }

    #[test]
    fn disjunction_rule() {
        let t = table("p | q", Dialect::Bd);
        let or = member(&t, "p | q");
        let (p, q) = (member(&t, "p"), member(&t, "q"));
        let (np, nq) = (member(&t, "!p"), member(&t, "!q"));
        for id in t.ids() {
            if t.contains(id, or) {
                assert!(t.contains(id, p) || t.contains(id, q));
            } else {
                assert!(t.contains(id, np) && t.contains(id, nq));
            }
        }
    }

    #[test]
    fn abd_without_a_arguments_matches_bd() {
        let b = table("p", Dialect::Bd);
        let a = table("p", Dialect::Abd);
        assert_eq!(a.len(), 4);
        assert_eq!(b.len(), 4);
        assert!(a
            .ids()
            .all(|id| a.atom(id).key.pending == 0 && a.atom(id).key.forbidden == 0));
    }

    #[test]
    fn projections_for_begins_p() {
        let t = table("<B>p", Dialect::Bd);
        let cl = t.closure();
        let p_slot = cl
            .args(Modality::B)
            .iter()
            .position(|r| *r == cl.resolve(&Formula::prop("p")).unwrap())
            .unwrap();
        let top_slot = cl
            .args(Modality::B)
            .iter()
            .position(|r| *r == Ref::True)
            .unwrap();
        let both = (1 << p_slot) | (1 << top_slot);
        for f in find(&t, &["<B>p", "<B>T"]) {
            assert_eq!(t.req(f, Modality::B), both);
        }
        for g in find(&t, &["!<B>p", "pi", "p"]) {
            assert_eq!(t.req(g, Modality::B), 0);
            assert_eq!(t.obs(g, Modality::B), both);
        }
        let f = find(&t, &["<B>p", "<B>T", "!p"])[0];
        let g = find(&t, &["!<B>p", "pi", "p"])[0];
        assert!(t.b_succ(f, g));
        for id in t.ids() {
            let boxed = t.box_(id, Modality::B);
            assert_eq!(boxed | t.req(id, Modality::B), t.args_mask(Modality::B));
            assert_eq!(boxed & t.req(id, Modality::B), 0);
            if t.is_initial(id) {
                assert_eq!(t.is_b_reflexive(id), t.obs(id, Modality::B) == 0);
            }
        }
    }

    #[test]
    fn during_successor_examples() {
        let t = table("<D>!q", Dialect::Bd);
        let f = find(&t, &["<D>!q"]);
        let g = find(&t, &["!<D>!q", "!q"]);
        for &a in &f {
            for &b in &g {
                assert!(t.d_succ(a, b));
            }
        }
        for h in find(&t, &["!<D>!q", "q"]) {
            assert!(t.ids().all(|a| t.d_succ(a, h)));
        }
    }

    #[test]
    fn d_succ_is_transitive_and_boxes_propagate() {
        for s in ["<D>!q", "<D>(p | <D>q)", "<B><D>p & [D]q"] {
            let t = table(s, Dialect::Bd);
            let cl = t.closure();
            for f in t.ids() {
                for g in t.ids() {
                    if t.d_succ(f, g) {
                        for h in t.ids() {
                            if t.d_succ(g, h) {
                                assert!(t.d_succ(f, h));
                            }
                        }
                    }
                    for m in [Modality::B, Modality::D] {
                        let rel = if m == Modality::B {
                            t.b_succ(f, g)
                        } else {
                            t.d_succ(f, g)
                        };
                        if !rel {
                            continue;
                        }
                        let boxed = t.box_(f, m);
                        for (k, &arg) in cl.args(m).iter().enumerate() {
                            if boxed >> k & 1 == 1 {
                                assert!(!t.atom(g).holds(arg), "box not inherited in {s}");
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn determinacy_and_bounds() {
        for (s, d) in [
            ("<B>p", Dialect::Bd),
            ("<D>(p | <B>q)", Dialect::Bd),
            ("<A>p & pi", Dialect::Abd),
            ("<B><A>!p | <D>q", Dialect::Abd),
        ] {
            let t = table(s, d);
            let size = t.closure().phi_size() as u32;
            let bound = if d == Dialect::Bd { size + 1 } else { 2 * size };
            assert!(t.len() as u64 <= 1u64 << bound, "{s}");
            for f in t.ids() {
                for g in t.ids() {
                    let same = t.atom(f).key == t.atom(g).key;
                    assert_eq!(same, f == g);
                    if d == Dialect::Bd {
                        let proj = |x: AtomId| {
                            (
                                t.req(x, Modality::B),
                                t.req(x, Modality::D),
                                t.atom(x).props(),
                            )
                        };
                        assert_eq!(proj(f) == proj(g), f == g);
                    }
                }
                if d == Dialect::Bd {
                    assert!(t.delta_up(f) <= 4 * size + 1);
                }
            }
        }
    }

    #[test]
    fn worked_delta_example() {
        let f1 = DeltaParts {
            b_args: 1,
            b_req: 0,
            b_obs_unrequested: 0,
            d_args: 0,
            d_req: 0,
            letters: 1,
            negated_letters: 0,
            pending: 0,
        };
        let f2 = DeltaParts {
            b_obs_unrequested: 1,
            ..f1
        };
        let f3 = DeltaParts { b_req: 1, ..f1 };
        assert_eq!((f1.total(), f2.total(), f3.total()), (3, 2, 1));
    }

    #[test]
    fn point_with_pending_request_is_not_final() {
        let t = table("<A>p", Dialect::Abd);
        let pts = find(&t, &["pi", "<A>p", "!p"]);
        assert!(!pts.is_empty());
        for id in pts {
            assert_eq!(t.atom(id).mark(0), Mark::Pending);
            assert!(!t.is_final(id));
        }
        for id in find(&t, &["pi", "!<A>p"]) {
            assert_eq!(t.atom(id).mark(0), Mark::Forbidden);
        }
    }

    #[test]
    fn delta_non_increasing_along_b_chains() {
        let t = table("<B>(p | <D>q) | <D>!p", Dialect::Bd);
        for f in t.ids() {
            for g in t.ids() {
                if t.b_succ(f, g)
                    && t.req(f, Modality::D) & t.req(g, Modality::D) == t.req(g, Modality::D)
                    && t.atom(f).props() & !t.atom(g).props() == 0
                {
                    assert!(t.delta_up(f) <= t.delta_up(g));
                }
            }
        }
    }
}
