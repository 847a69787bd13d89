//! Exhaustive model search.

use rayon::prelude::*;
use thiserror::Error;

use crate::formula::Formula;

use super::eval::{evaluate_masks, tri, Compiled};
use super::model::HomogeneousModel;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("enumeration at N={n} needs 2^{bits} valuations, above the budget of 2^{budget_bits}")]
    Budget {
        n: usize,
        bits: usize,
        budget_bits: usize,
    },
}

/// Default budget: at most 2^26 valuations per height.
pub const DEFAULT_BUDGET_BITS: usize = 26;

pub fn brute_force_sat(f: &Formula, max_n: usize) -> Result<Option<HomogeneousModel>, OracleError> {
    brute_force_sat_with(f, max_n, DEFAULT_BUDGET_BITS)
}

/// First model in (N ascending, valuation ascending) order satisfying `f` at `[0,N]`.
///
/// Valuations are ordered lexicographically as `(pointval(0), …, pointval(N))`,
/// each point read as a bitmask over the sorted letters of `f`.
pub fn brute_force_sat_with(
    f: &Formula,
    max_n: usize,
    budget_bits: usize,
) -> Result<Option<HomogeneousModel>, OracleError> {
    let letters: Vec<String> = f.letters().into_iter().collect();
    let mut c = Compiled::new();
    // Register letters first so that mask bit `i` is the `i`-th sorted letter.
    for l in &letters {
        c.add(&Formula::Prop(l.clone()));
    }
    let root = c.add(f);
    let l = letters.len();
    for n in 0..=max_n {
        let bits = l * (n + 1);
        if bits > budget_bits {
            return Err(OracleError::Budget {
                n,
                bits,
                budget_bits,
            });
        }
        let count: u64 = 1 << bits;
        let lmask = if l == 0 { 0 } else { (1u64 << l) - 1 };
        let decode =
            |v: u64| -> Vec<u64> { (0..=n).map(|z| (v >> ((n - z) * l)) & lmask).collect() };
        let found = (0..count)
            .into_par_iter()
            .map_init(Vec::new, |scratch, v| {
                let masks = decode(v);
                evaluate_masks(&c, n, &masks, scratch);
                let width = tri(n, n) + 1;
                (v, scratch[root * width + tri(0, n)])
            })
            .find_first(|(_, ok)| *ok);
        if let Some((v, _)) = found {
            let masks = decode(v);
            let points = masks
                .iter()
                .map(|m| {
                    letters
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| m >> i & 1 == 1)
                        .map(|(_, s)| s.clone())
                        .collect()
                })
                .collect();
            return Ok(Some(HomogeneousModel::new(points)));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{parse_formula, Dialect};
    use crate::semantics::eval::eval;

    fn f(s: &str) -> Formula {
        parse_formula(s, Dialect::Abd).unwrap()
    }

    #[test]
    fn begins_top_needs_two_points() {
        let m = brute_force_sat(&f("<B>T"), 4).unwrap().unwrap();
        assert_eq!(m.n(), 1);
    }

    #[test]
    fn unsatisfiable_examples() {
        assert!(brute_force_sat(&f("pi & <D>p"), 5).unwrap().is_none());
        assert!(brute_force_sat(&f("p & <D>!p"), 5).unwrap().is_none());
    }

    #[test]
    fn first_model_is_minimal_and_satisfies() {
        let g = f("<B>p & <B>!p");
        let m = brute_force_sat(&g, 4).unwrap().unwrap();
        assert_eq!(m.n(), 2);
        assert!(eval(&m, 0, m.n(), &g));
    }

    #[test]
    fn budget_is_enforced() {
        assert!(matches!(
            brute_force_sat_with(&f("p & q & <D>r"), 10, 8),
            Err(OracleError::Budget { .. })
        ));
    }
}
