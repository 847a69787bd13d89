//! Differential testing of the solver against exhaustive model search.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::formula::{print_formula, Dialect, Formula, Modality};
use crate::semantics::{brute_force_sat, compass_to_model, eval, validate_compass, OracleError};
use crate::solver::{solve, SearchConfig, Verdict};

/// Formula constructors allowed in generated corpora.
fn unary_kinds(dialect: Dialect) -> Vec<Option<Modality>> {
    let mut k = vec![None, Some(Modality::B), Some(Modality::D)];
    if dialect == Dialect::Abd {
        k.push(Some(Modality::A));
    }
    k
}

fn unary(kind: Option<Modality>, f: Formula) -> Formula {
    match kind {
        None => Formula::not(f),
        Some(m) => Formula::diamond(m, f),
    }
}

/// Every formula of AST size `1..=max_size` over `letters` built from `⊤`, letters, `¬`, `∨`
/// and the diamonds of the dialect, in (size, construction) order.
pub fn exhaustive_corpus(letters: &[&str], max_size: usize, dialect: Dialect) -> Vec<Formula> {
    let kinds = unary_kinds(dialect);
    let mut by_size: Vec<Vec<Formula>> = vec![Vec::new(); max_size + 1];
    if max_size == 0 {
        return Vec::new();
    }
    by_size[1].push(Formula::Top);
    by_size[1].extend(letters.iter().map(|l| Formula::prop(l)));
    for s in 2..=max_size {
        let mut cur = Vec::new();
        for &k in &kinds {
            for f in &by_size[s - 1] {
                cur.push(unary(k, f.clone()));
            }
        }
        for ls in 1..s - 1 {
            let rs = s - 1 - ls;
            for a in &by_size[ls] {
                for b in &by_size[rs] {
                    cur.push(Formula::or(a.clone(), b.clone()));
                }
            }
        }
        by_size[s] = cur;
    }
    by_size.into_iter().flatten().collect()
}

/// A random formula of exactly `size` AST nodes.
pub fn random_formula<R: Rng>(
    rng: &mut R,
    letters: &[&str],
    size: usize,
    dialect: Dialect,
) -> Formula {
    let kinds = unary_kinds(dialect);
    match size {
        0 | 1 => {
            let i = rng.gen_range(0..=letters.len());
            if i == letters.len() {
                Formula::Top
            } else {
                Formula::prop(letters[i])
            }
        }
        2 => {
            let k = kinds[rng.gen_range(0..kinds.len())];
            unary(k, random_formula(rng, letters, 1, dialect))
        }
        _ => {
            if rng.gen_bool(0.5) {
                let k = kinds[rng.gen_range(0..kinds.len())];
                unary(k, random_formula(rng, letters, size - 1, dialect))
            } else {
                let l = rng.gen_range(1..size - 1);
                Formula::or(
                    random_formula(rng, letters, l, dialect),
                    random_formula(rng, letters, size - 1 - l, dialect),
                )
            }
        }
    }
}

/// `count` random formulas with sizes uniform in `1..=max_size`.
pub fn random_corpus(
    seed: u64,
    count: usize,
    letters: &[&str],
    max_size: usize,
    dialect: Dialect,
) -> Vec<Formula> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let s = rng.gen_range(1..=max_size);
            random_formula(&mut rng, letters, s, dialect)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    /// Both sides found a model.
    BothSat,
    /// Neither side found a model.
    BothUnsat,
    /// Solver found a validated model taller than the oracle cap.
    SatBeyondCap,
    Disagree,
    SolverExhausted,
    OracleBudget,
    /// Certificate fails validation or its model falsifies the formula.
    BadCertificate,
}

#[derive(Clone, Debug, Serialize)]
pub struct ItemReport {
    pub formula: String,
    pub solver: &'static str,
    pub oracle_n: Option<usize>,
    pub solver_n: Option<usize>,
    pub outcome: Outcome,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CrosscheckReport {
    pub dialect: Dialect,
    pub max_n: usize,
    pub total: usize,
    pub both_sat: usize,
    pub both_unsat: usize,
    pub sat_beyond_cap: usize,
    pub disagreements: usize,
    pub exhausted: usize,
    pub oracle_budget: usize,
    pub bad_certificates: usize,
    /// Items other than plain agreement, in corpus order.
    pub issues: Vec<ItemReport>,
}

impl CrosscheckReport {
    /// No disagreement, bad certificate, or incomplete run.
    pub fn clean(&self) -> bool {
        self.disagreements == 0
            && self.bad_certificates == 0
            && self.exhausted == 0
            && self.oracle_budget == 0
    }
}

/// Compares the solver with the oracle on one formula.
pub fn check_one(f: &Formula, dialect: Dialect, max_n: usize, cfg: &SearchConfig) -> ItemReport {
    let formula = print_formula(f);
    let mut item = ItemReport {
        formula,
        solver: "",
        oracle_n: None,
        solver_n: None,
        outcome: Outcome::BothUnsat,
        detail: None,
    };
    let oracle = match brute_force_sat(f, max_n) {
        Ok(m) => m,
        Err(e @ OracleError::Budget { .. }) => {
            item.outcome = Outcome::OracleBudget;
            item.detail = Some(e.to_string());
            return item;
        }
    };
    item.oracle_n = oracle.as_ref().map(|m| m.n());
    let verdict = match solve(f, dialect, cfg) {
        Ok(v) => v,
        Err(e) => {
            item.outcome = Outcome::BadCertificate;
            item.detail = Some(e.to_string());
            return item;
        }
    };
    item.solver = verdict.name();
    item.outcome = match (&verdict, &oracle) {
        (Verdict::ResourceExhausted(s), _) => {
            item.detail = s.exhausted.clone();
            Outcome::SolverExhausted
        }
        (Verdict::Sat(cert, _), _) => {
            let g = &cert.compass;
            item.solver_n = Some(g.n());
            let violations = validate_compass(g, f);
            match compass_to_model(g) {
                _ if !violations.is_empty() => {
                    item.detail = Some(format!("compass violates {:?}", violations[0].kind));
                    Outcome::BadCertificate
                }
                Ok(m) if eval(&m, 0, m.n(), f) => match &oracle {
                    Some(_) => Outcome::BothSat,
                    None if g.n() > max_n => Outcome::SatBeyondCap,
                    None => Outcome::Disagree,
                },
                Ok(_) => {
                    item.detail = Some("extracted model does not satisfy the formula".into());
                    Outcome::BadCertificate
                }
                Err(e) => {
                    item.detail = Some(e.to_string());
                    Outcome::BadCertificate
                }
            }
        }
        (Verdict::Unsat(_), None) => Outcome::BothUnsat,
        (Verdict::Unsat(_), Some(_)) => Outcome::Disagree,
    };
    item
}

/// Runs [`check_one`] over a corpus in parallel; the report is independent of scheduling.
pub fn crosscheck(
    formulas: &[Formula],
    dialect: Dialect,
    max_n: usize,
    cfg: &SearchConfig,
) -> CrosscheckReport {
    let items: Vec<ItemReport> = formulas
        .par_iter()
        .map(|f| check_one(f, dialect, max_n, cfg))
        .collect();
    let count = |o: Outcome| items.iter().filter(|i| i.outcome == o).count();
    CrosscheckReport {
        dialect,
        max_n,
        total: items.len(),
        both_sat: count(Outcome::BothSat),
        both_unsat: count(Outcome::BothUnsat),
        sat_beyond_cap: count(Outcome::SatBeyondCap),
        disagreements: count(Outcome::Disagree),
        exhausted: count(Outcome::SolverExhausted),
        oracle_budget: count(Outcome::OracleBudget),
        bad_certificates: count(Outcome::BadCertificate),
        issues: items
            .into_iter()
            .filter(|i| {
                !matches!(
                    i.outcome,
                    Outcome::BothSat | Outcome::BothUnsat | Outcome::SatBeyondCap
                )
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exhaustive_counts() {
        // Sizes 1..=3 over {p} with ¬, ⟨B⟩, ⟨D⟩: 2 + 6 + (18 + 4).
        assert_eq!(exhaustive_corpus(&["p"], 3, Dialect::Bd).len(), 30);
        assert!(exhaustive_corpus(&["p"], 5, Dialect::Bd)
            .iter()
            .all(|f| f.size() <= 5));
    }

    #[test]
    fn random_sizes_are_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for s in 1..12 {
            assert_eq!(
                random_formula(&mut rng, &["p", "q"], s, Dialect::Abd).size(),
                s
            );
        }
    }

    #[test]
    fn random_corpus_is_seeded() {
        let a = random_corpus(3, 20, &["p", "q"], 9, Dialect::Bd);
        let b = random_corpus(3, 20, &["p", "q"], 9, Dialect::Bd);
        assert_eq!(a, b);
    }
}
