//! Closure of a formula: subformulas, their complements, `⟨B⟩⊤` and `[B]⊥`.
//!
//! Constants (`⊤`, `¬⊤`, ...) are not members; references to them resolve to
//! [`Ref::True`] / [`Ref::False`].

use std::collections::HashMap;

use crate::formula::{Dialect, Formula, Modality};

/// A reference to a closure member or to a constant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Ref {
    True,
    False,
    Member(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Node {
    /// Positive letter, with its index in [`Closure::letters`].
    Prop(usize),
    Not(Ref),
    Or(Ref, Ref),
    /// `⟨R⟩ψ`, with the index of ψ in `args(R)`.
    Diamond(Modality, usize),
}

#[derive(Clone, Debug)]
pub struct Closure {
    dialect: Dialect,
    root: usize,
    members: Vec<Formula>,
    nodes: Vec<Node>,
    index: HashMap<Formula, usize>,
    neg: Vec<usize>,
    letters: Vec<String>,
    letter_member: Vec<usize>,
    args: [Vec<Ref>; 3],
    arg_formulas: [Vec<Formula>; 3],
    diamond_member: [Vec<usize>; 3],
    b_top: usize,
}

/// `f` with every `¬¬ψ` replaced by `ψ`, so that complementation is an involution on members.
fn canonical(f: &Formula) -> Formula {
    match f {
        Formula::Not(a) => match &**a {
            Formula::Not(b) => canonical(b),
            _ => Formula::not(canonical(a)),
        },
        Formula::Or(a, b) => Formula::or(canonical(a), canonical(b)),
        Formula::Diamond(m, a) => Formula::diamond(*m, canonical(a)),
        Formula::Top | Formula::Prop(_) => f.clone(),
    }
}

impl Closure {
    /// Builds the closure of `phi`. The dialect is ABD when `phi` mentions `⟨A⟩` or when requested.
    pub fn new(phi: &Formula, dialect: Dialect) -> Self {
        let dialect = if phi.uses(Modality::A) {
            Dialect::Abd
        } else {
            dialect
        };
        let phi = &canonical(phi);
        let mut raw: Vec<Formula> = Vec::new();
        let b_top = Formula::diamond(Modality::B, Formula::Top);
        let mut pool: Vec<Formula> = phi.subformulas();
        pool.extend(b_top.subformulas());
        for f in pool {
            if f.is_constant() {
                continue;
            }
            let c = Formula::negate(f.clone());
            raw.push(f);
            raw.push(c);
        }
        raw.sort_by(|a, b| a.size().cmp(&b.size()).then_with(|| a.cmp(b)));
        raw.dedup();

        let mut index = HashMap::new();
        for (i, f) in raw.iter().enumerate() {
            index.insert(f.clone(), i);
        }
        let resolve = |f: &Formula, index: &HashMap<Formula, usize>| -> Ref {
            match f.constant_value() {
                Some(true) => Ref::True,
                Some(false) => Ref::False,
                None => Ref::Member(index[f]),
            }
        };

        let mut letters: Vec<String> = phi.letters().into_iter().collect();
        letters.sort();
        let mut letter_member = vec![usize::MAX; letters.len()];
        let mut args: [Vec<Ref>; 3] = Default::default();
        let mut arg_formulas: [Vec<Formula>; 3] = Default::default();
        let mut diamond_member: [Vec<usize>; 3] = Default::default();
        let mut nodes = Vec::with_capacity(raw.len());
        for (i, f) in raw.iter().enumerate() {
            let node = match f {
                Formula::Prop(p) => {
                    let li = letters.binary_search(p).expect("letter of phi");
                    letter_member[li] = i;
                    Node::Prop(li)
                }
                Formula::Not(a) => Node::Not(resolve(a, &index)),
                Formula::Or(a, b) => Node::Or(resolve(a, &index), resolve(b, &index)),
                Formula::Diamond(m, a) => {
                    let k = m.index();
                    let slot = args[k].len();
                    args[k].push(resolve(a, &index));
                    arg_formulas[k].push((**a).clone());
                    diamond_member[k].push(i);
                    Node::Diamond(*m, slot)
                }
                Formula::Top => unreachable!("constants are not members"),
            };
            nodes.push(node);
        }
        let neg = raw
            .iter()
            .map(|f| index[&Formula::negate(f.clone())])
            .collect();
        let root = match phi.constant_value() {
            Some(_) => usize::MAX,
            None => index[phi],
        };
        Closure {
            dialect,
            root,
            b_top: index[&b_top],
            members: raw,
            nodes,
            index,
            neg,
            letters,
            letter_member,
            args,
            arg_formulas,
            diamond_member,
        }
    }

    pub fn dialect(&self) -> Dialect {
        self.dialect
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// `|φ| = |CL|/2`.
    pub fn phi_size(&self) -> usize {
        self.members.len() / 2
    }

    /// Member index of the input formula, or `None` if it is a constant.
    pub fn root(&self) -> Option<usize> {
        (self.root != usize::MAX).then_some(self.root)
    }

    pub fn members(&self) -> &[Formula] {
        &self.members
    }

    pub fn member(&self, i: usize) -> &Formula {
        &self.members[i]
    }

    pub fn node(&self, i: usize) -> Node {
        self.nodes[i]
    }

    pub fn index_of(&self, f: &Formula) -> Option<usize> {
        self.index.get(&canonical(f)).copied()
    }

    /// Resolves a formula to a member or constant.
    pub fn resolve(&self, f: &Formula) -> Option<Ref> {
        match f.constant_value() {
            Some(true) => Some(Ref::True),
            Some(false) => Some(Ref::False),
            None => self.index_of(f).map(Ref::Member),
        }
    }

    pub fn neg(&self, i: usize) -> usize {
        self.neg[i]
    }

    pub fn letters(&self) -> &[String] {
        &self.letters
    }

    pub fn letter_member(&self, letter: usize) -> usize {
        self.letter_member[letter]
    }

    /// Arguments ψ with `⟨R⟩ψ ∈ CL`, in closure order of the diamonds.
    pub fn args(&self, m: Modality) -> &[Ref] {
        &self.args[m.index()]
    }

    pub fn arg_formula(&self, m: Modality, k: usize) -> &Formula {
        &self.arg_formulas[m.index()][k]
    }

    /// Member index of `⟨R⟩ψ_k`.
    pub fn diamond_member(&self, m: Modality, k: usize) -> usize {
        self.diamond_member[m.index()][k]
    }

    /// Member index of `⟨B⟩⊤`.
    pub fn b_top(&self) -> usize {
        self.b_top
    }

    /// Member index of `[B]⊥`.
    pub fn pi(&self) -> usize {
        self.neg[self.b_top]
    }

    pub fn describe(&self, r: Ref) -> String {
        match r {
            Ref::True => "T".into(),
            Ref::False => "F".into(),
            Ref::Member(i) => self.members[i].to_string(),
        }
    }
}
