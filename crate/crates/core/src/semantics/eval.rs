//! Direct evaluation of formulas on homogeneous models.

use std::collections::HashMap;

use crate::formula::{Formula, Modality};

use super::model::HomogeneousModel;

#[derive(Clone, Copy, Debug)]
enum CNode {
    Top,
    Prop(usize),
    Not(usize),
    Or(usize, usize),
    Diamond(Modality, usize),
}

/// Hash-consed formula DAG; node ids are topologically ordered.
#[derive(Clone, Debug, Default)]
pub struct Compiled {
    nodes: Vec<CNode>,
    index: HashMap<Formula, usize>,
    letters: Vec<String>,
}

impl Compiled {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn of(f: &Formula) -> (Self, usize) {
        let mut c = Self::new();
        let root = c.add(f);
        (c, root)
    }

    pub fn add(&mut self, f: &Formula) -> usize {
        if let Some(&i) = self.index.get(f) {
            return i;
        }
        let node = match f {
            Formula::Top => CNode::Top,
            Formula::Prop(p) => {
                let li = match self.letters.iter().position(|l| l == p) {
                    Some(li) => li,
                    None => {
                        self.letters.push(p.clone());
                        self.letters.len() - 1
                    }
                };
                CNode::Prop(li)
            }
            Formula::Not(a) => CNode::Not(self.add(a)),
            Formula::Or(a, b) => {
                let a = self.add(a);
                CNode::Or(a, self.add(b))
            }
            Formula::Diamond(m, a) => CNode::Diamond(*m, self.add(a)),
        };
        self.nodes.push(node);
        let id = self.nodes.len() - 1;
        self.index.insert(f.clone(), id);
        id
    }

    pub fn letters(&self) -> &[String] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Row-major index of `[x,y]` in a triangle.
#[inline]
pub fn tri(x: usize, y: usize) -> usize {
    y * (y + 1) / 2 + x
}

/// Truth table of every compiled node on every interval of one model.
pub struct Table {
    n: usize,
    width: usize,
    vals: Vec<bool>,
}

impl Table {
    pub fn get(&self, node: usize, x: usize, y: usize) -> bool {
        debug_assert!(x <= y && y <= self.n);
        self.vals[node * self.width + tri(x, y)]
    }
}

/// Evaluates with point masks over `c.letters()` (bit `i` = letter `i`).
pub fn evaluate_masks(c: &Compiled, n: usize, masks: &[u64], out: &mut Vec<bool>) {
    let width = tri(n, n) + 1;
    out.clear();
    out.resize(c.nodes.len() * width, false);
    for (id, node) in c.nodes.iter().enumerate() {
        let base = id * width;
        for y in 0..=n {
            for x in 0..=y {
                let v = match *node {
                    CNode::Top => true,
                    CNode::Prop(li) => (x..=y).all(|z| masks[z] >> li & 1 == 1),
                    CNode::Not(a) => !out[a * width + tri(x, y)],
                    CNode::Or(a, b) => out[a * width + tri(x, y)] || out[b * width + tri(x, y)],
                    CNode::Diamond(Modality::B, a) => (x..y).any(|y2| out[a * width + tri(x, y2)]),
                    CNode::Diamond(Modality::D, a) => {
                        (x + 1..y).any(|x2| (x2..y).any(|y2| out[a * width + tri(x2, y2)]))
                    }
                    CNode::Diamond(Modality::A, a) => (y..=n).any(|y2| out[a * width + tri(y, y2)]),
                };
                out[base + tri(x, y)] = v;
            }
        }
    }
}

pub fn masks_for(c: &Compiled, m: &HomogeneousModel) -> Vec<u64> {
    (0..=m.n())
        .map(|z| {
            c.letters
                .iter()
                .enumerate()
                .filter(|(_, l)| m.holds_at(z, l))
                .fold(0u64, |acc, (i, _)| acc | 1 << i)
        })
        .collect()
}

pub fn table(c: &Compiled, m: &HomogeneousModel) -> Table {
    let masks = masks_for(c, m);
    let mut vals = Vec::new();
    evaluate_masks(c, m.n(), &masks, &mut vals);
    Table {
        n: m.n(),
        width: tri(m.n(), m.n()) + 1,
        vals,
    }
}

/// Truth of `f` at `[x,y]` in `m`.
pub fn eval(m: &HomogeneousModel, x: usize, y: usize, f: &Formula) -> bool {
    assert!(
        x <= y && y <= m.n(),
        "interval [{x},{y}] outside [0,{}]",
        m.n()
    );
    let (c, root) = Compiled::of(f);
    table(&c, m).get(root, x, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{parse_formula, Dialect};

    fn f(s: &str) -> Formula {
        parse_formula(s, Dialect::Abd).unwrap()
    }

    #[test]
    fn uniform_model_letters_hold_everywhere() {
        let m = HomogeneousModel::uniform(3, &["p"]);
        for y in 0..=3 {
            for x in 0..=y {
                assert!(eval(&m, x, y, &f("p")));
            }
        }
    }

    #[test]
    fn begins_example() {
        let m = HomogeneousModel::from_points(vec![vec!["p"], vec![], vec![]]);
        assert!(eval(&m, 0, 2, &f("<B>p")));
        assert!(eval(&m, 0, 2, &f("<B>!p")));
        // Exhaustive rescan of prefixes.
        let witnesses: Vec<usize> = (0..2).filter(|&y| eval(&m, 0, y, &f("p"))).collect();
        assert_eq!(witnesses, vec![0]);
    }

    #[test]
    fn points_have_no_proper_subintervals() {
        let m = HomogeneousModel::uniform(2, &["p"]);
        for x in 0..=2 {
            assert!(!eval(&m, x, x, &f("<B>T")));
            assert!(!eval(&m, x, x, &f("<D>T")));
            assert!(eval(&m, x, x, &f("pi")));
        }
        assert!(!eval(&m, 0, 1, &f("<D>T")));
        assert!(eval(&m, 0, 2, &f("<D>T")));
    }

    #[test]
    fn after_reaches_right_neighbours() {
        let m = HomogeneousModel::from_points(vec![vec![], vec!["q"], vec!["q"]]);
        assert!(eval(&m, 0, 1, &f("<A>q")));
        assert!(eval(&m, 0, 0, &f("!<A>q")));
        assert!(eval(&m, 1, 2, &f("<A>q")));
    }
}
