//! Executable structural properties of compasses and closures, checked over corpora.

use serde::Serialize;

use crate::analysis::{dominates, equiv, Analysis, ClassTable};
use crate::atoms::AtomTable;
use crate::formula::{Dialect, Formula, Modality};
use crate::semantics::{eval, CompassStructure, HomogeneousModel};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Property {
    /// A strict growth of `Req_B` up a column leaves a B-irreflexive atom behind.
    BStep,
    /// Equal atoms up a column iff B-reflexive with equal letters and `Req_D`.
    BDeterminization,
    /// Columns are decreasing flat B-sequences with at most `4|φ|+2` blocks.
    FlatShadings,
    /// Equivalent shadings are ordered left to right by dominance.
    ShadingOrder,
    /// A covered column agrees with its first coverer from the covered row up.
    CoveredStability,
    /// Coverage persists upwards.
    CoveredMonotone,
    /// `⟨A⟩ψ` depends only on the right endpoint.
    AProp,
    ClosureSize,
    AtomCount,
    PotentialRange,
    MinimalSequenceLength,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PropertyViolation {
    pub property: Property,
    pub at: Option<(usize, usize)>,
    pub detail: String,
}

fn violation(
    property: Property,
    at: Option<(usize, usize)>,
    detail: impl Into<String>,
) -> PropertyViolation {
    PropertyViolation {
        property,
        at,
        detail: detail.into(),
    }
}

pub fn check_b_step(g: &CompassStructure) -> Vec<PropertyViolation> {
    let t = g.table();
    let mut out = Vec::new();
    for x in 0..=g.n() {
        for y in x..g.n() {
            let (f, h) = (g.get(x, y), g.get(x, y + 1));
            let (rf, rh) = (t.req(f, Modality::B), t.req(h, Modality::B));
            if rf & !rh == 0 && rf != rh && t.is_b_reflexive(f) {
                out.push(violation(
                    Property::BStep,
                    Some((x, y)),
                    "B-requests grow above a B-reflexive atom",
                ));
            }
        }
    }
    out
}

/// Both directions; in ABD atoms are compared on `Req_B`, `Req_D` and letters.
pub fn check_b_determinization(g: &CompassStructure) -> Vec<PropertyViolation> {
    let t = g.table();
    let (bm, dm) = (Modality::B, Modality::D);
    let same = |f, h| {
        if t.dialect() == Dialect::Bd {
            f == h
        } else {
            t.req(f, bm) == t.req(h, bm)
                && t.req(f, dm) == t.req(h, dm)
                && t.atom(f).props() == t.atom(h).props()
        }
    };
    let mut out = Vec::new();
    for x in 0..=g.n() {
        for y in x..g.n() {
            let (f, h) = (g.get(x, y), g.get(x, y + 1));
            let cond = t.is_b_reflexive(f)
                && t.atom(f).props() == t.atom(h).props()
                && t.req(f, dm) == t.req(h, dm);
            if same(f, h) != cond {
                out.push(violation(
                    Property::BDeterminization,
                    Some((x, y)),
                    format!(
                        "equal = {}, reflexive with equal letters and D-requests = {cond}",
                        same(f, h)
                    ),
                ));
            }
        }
    }
    out
}

pub fn check_flat_shadings(an: &Analysis, phi_size: usize) -> Vec<PropertyViolation> {
    let g = an.compass();
    let t = g.table();
    let mut out = Vec::new();
    for x in 0..=g.n() {
        let s = an.shading(x);
        if let Err(e) = s.check_decreasing(t) {
            out.push(violation(Property::FlatShadings, Some((x, x)), e));
        }
        if s.blocks.len() > 4 * phi_size + 2 {
            out.push(violation(
                Property::FlatShadings,
                Some((x, x)),
                format!("{} blocks exceed {}", s.blocks.len(), 4 * phi_size + 2),
            ));
        }
    }
    out
}

pub fn check_shading_order(an: &Analysis) -> Vec<PropertyViolation> {
    let n = an.compass().n();
    let mut out = Vec::new();
    for x in 0..=n {
        for x2 in x + 1..=n {
            let (s1, s2) = (an.shading(x), an.shading(x2));
            if equiv(s1, s2) && !dominates(s1, s2).unwrap_or(false) {
                out.push(violation(
                    Property::ShadingOrder,
                    Some((x, x2)),
                    "equivalent shadings without dominance",
                ));
            }
        }
    }
    out
}

pub fn check_covered_stability(an: &Analysis) -> Vec<PropertyViolation> {
    let g = an.compass();
    let n = g.n();
    let mut out = Vec::new();
    for y in 0..=n {
        for x in 0..=y {
            let Some(cov) = an.coverers(x, y) else {
                continue;
            };
            let x0 = cov[0];
            if let Some(y2) = (y..=n).find(|&y2| g.get(x, y2) != g.get(x0, y2)) {
                out.push(violation(
                    Property::CoveredStability,
                    Some((x, y)),
                    format!("column {x} differs from its coverer {x0} at row {y2}"),
                ));
            }
            if y < n && !an.is_covered(x, y + 1) {
                out.push(violation(
                    Property::CoveredMonotone,
                    Some((x, y)),
                    "coverage lost one row up",
                ));
            }
        }
    }
    out
}

/// All compass properties above.
pub fn check_compass(
    g: &CompassStructure,
    phi_size: usize,
    classes: &mut ClassTable,
) -> Vec<PropertyViolation> {
    let an = Analysis::new(g, classes);
    let mut out = check_b_step(g);
    out.extend(check_b_determinization(g));
    out.extend(check_flat_shadings(&an, phi_size));
    out.extend(check_shading_order(&an));
    out.extend(check_covered_stability(&an));
    out
}

/// `⟨A⟩ψ` holds on `[x,z]` iff on `[y,z]`, for every `⟨A⟩` subformula of `phi`.
pub fn check_a_prop(m: &HomogeneousModel, phi: &Formula) -> Vec<PropertyViolation> {
    let mut out = Vec::new();
    for f in phi.subformulas() {
        if !matches!(f, Formula::Diamond(Modality::A, _)) {
            continue;
        }
        for z in 0..=m.n() {
            let base = eval(m, z, z, &f);
            if let Some(x) = (0..z).find(|&x| eval(m, x, z, &f) != base) {
                out.push(violation(
                    Property::AProp,
                    Some((x, z)),
                    format!(
                        "{} depends on the left endpoint",
                        crate::formula::print_formula(&f)
                    ),
                ));
            }
        }
    }
    out
}

/// Closure size, atom count and potential bounds for one atom table.
pub fn check_counting_bounds(t: &AtomTable, phi_size: usize) -> Vec<PropertyViolation> {
    let mut out = Vec::new();
    let cl = t.closure().len();
    if cl > 2 * phi_size + 2 {
        out.push(violation(
            Property::ClosureSize,
            None,
            format!("{cl} > {}", 2 * phi_size + 2),
        ));
    }
    let abd = t.dialect() == Dialect::Abd;
    let exp = if abd { 2 * phi_size } else { phi_size + 1 };
    if exp < 64 && t.len() as u64 > 1u64 << exp {
        out.push(violation(
            Property::AtomCount,
            None,
            format!("{} > 2^{exp}", t.len()),
        ));
    }
    let max_delta = t.ids().map(|a| t.delta_up(a) as usize).max().unwrap_or(0);
    if !abd && max_delta > 4 * phi_size + 1 {
        out.push(violation(
            Property::PotentialRange,
            None,
            format!("{max_delta} > {}", 4 * phi_size + 1),
        ));
    }
    // A minimal B-sequence samples one row per potential value.
    if abd && max_delta + 1 > 5 * phi_size + 1 {
        out.push(violation(
            Property::MinimalSequenceLength,
            None,
            format!("{} > {}", max_delta + 1, 5 * phi_size + 1),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_formula;
    use crate::semantics::{brute_force_sat, model_to_compass};

    #[test]
    fn small_satisfying_compasses_have_no_violations() {
        for (s, d) in [
            ("<B>p & <D>!p", Dialect::Bd),
            ("<B><B>T & [D]p", Dialect::Bd),
            ("<A>p & <B>!p", Dialect::Abd),
            ("<D><A>q & p", Dialect::Abd),
        ] {
            let phi = parse_formula(s, d).unwrap();
            let m = brute_force_sat(&phi, 5).unwrap().unwrap();
            let g = model_to_compass(&m, &phi, d).unwrap();
            let mut classes = ClassTable::new();
            assert_eq!(check_compass(&g, phi.size(), &mut classes), vec![], "{s}");
            assert_eq!(check_a_prop(&m, &phi), vec![], "{s}");
            assert_eq!(check_counting_bounds(g.table(), phi.size()), vec![], "{s}");
        }
    }

    #[test]
    fn a_prop_holds_on_a_small_model() {
        let m = HomogeneousModel::from_points(vec![vec!["p"], vec![], vec!["p"]]);
        let phi = parse_formula("<A>p", Dialect::Abd).unwrap();
        assert!(check_a_prop(&m, &phi).is_empty());
    }
}
