//! Acceptance gate: one line per criterion, non-zero exit if any fails.

use std::process::ExitCode;
use std::time::Instant;

use homsat::analysis::{contract, contract_fully, repeated_blueprints, ClassTable};
use homsat::crosscheck::{crosscheck, exhaustive_corpus, random_corpus, CrosscheckReport, Outcome};
use homsat::lemmas::{check_a_prop, check_compass, check_counting_bounds};
use homsat::regex::{self, RestrictedExpr};
use homsat::semantics::model_to_compass;
use homsat::tiling::{brute_force_tiling, decode_model, encode, oracle_bound, toy_instances};
use homsat::{
    brute_force_sat, eval, print_formula, solve, validate_compass, AtomTable, Closure, Dialect,
    Formula, HomogeneousModel, SearchConfig,
};

const BD_EXHAUSTIVE_SIZE: usize = 5;
const BD_RANDOM: usize = 1000;
const BD_RANDOM_SIZE: usize = 9;
const BD_MAX_N: usize = 6;
const ABD_EXHAUSTIVE_SIZE: usize = 7;
const ABD_RANDOM: usize = 500;
const ABD_RANDOM_SIZE: usize = 7;
const ABD_MAX_N: usize = 5;
const SEED: u64 = 20_240_601;
const LEMMA_STRUCTURES: usize = 200;
const LEMMA_MAX_N: usize = 6;
const CONTRACTIONS: usize = 20;
const REGEX_WORD_LEN: usize = 6;
const TOY_INSTANCES: usize = 10;

struct Line {
    id: usize,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn cfg() -> SearchConfig {
    SearchConfig::default()
}

fn summary(r: &CrosscheckReport) -> String {
    format!(
        "{} formulas, {} both sat, {} both unsat, {} sat beyond cap, {} disagreements, {} exhausted, {} bad certificates",
        r.total, r.both_sat, r.both_unsat, r.sat_beyond_cap, r.disagreements, r.exhausted, r.bad_certificates
    )
}

fn issues(r: &CrosscheckReport) -> String {
    r.issues
        .iter()
        .take(5)
        .map(|i| format!("; {:?} {}", i.outcome, i.formula))
        .collect()
}

struct Corpora {
    bd: Vec<Formula>,
    abd: Vec<Formula>,
    bd_report: CrosscheckReport,
    abd_report: CrosscheckReport,
}

fn differential(
    d: Dialect,
    exhaustive: usize,
    random: usize,
    random_size: usize,
    max_n: usize,
) -> (Vec<Formula>, CrosscheckReport) {
    let mut corpus = exhaustive_corpus(&["p"], exhaustive, d);
    corpus.extend(random_corpus(SEED, random, &["p", "q"], random_size, d));
    let r = crosscheck(&corpus, d, max_n, &cfg());
    (corpus, r)
}

fn criterion_1(c: &Corpora) -> Line {
    let r = &c.bd_report;
    Line {
        id: 1,
        name: "differential satisfiability (BD)",
        pass: r.disagreements == 0 && r.exhausted == 0 && r.oracle_budget == 0,
        detail: format!("{}{}", summary(r), issues(r)),
    }
}

fn criterion_2(c: &Corpora) -> Line {
    let r = &c.abd_report;
    Line {
        id: 2,
        name: "differential satisfiability (ABD)",
        pass: r.disagreements == 0 && r.exhausted == 0 && r.oracle_budget == 0,
        detail: format!("{}{}", summary(r), issues(r)),
    }
}

fn criterion_3(c: &Corpora) -> Line {
    let sat = |r: &CrosscheckReport| r.both_sat + r.sat_beyond_cap;
    let bad = c.bd_report.bad_certificates + c.abd_report.bad_certificates;
    let bad_items: String = c
        .bd_report
        .issues
        .iter()
        .chain(&c.abd_report.issues)
        .filter(|i| i.outcome == Outcome::BadCertificate)
        .take(5)
        .map(|i| format!("; {} ({})", i.formula, i.detail.clone().unwrap_or_default()))
        .collect();
    Line {
        id: 3,
        name: "certificate soundness",
        pass: bad == 0,
        detail: format!(
            "{} sat verdicts, {bad} certificates failing validation or evaluation{bad_items}",
            sat(&c.bd_report) + sat(&c.abd_report)
        ),
    }
}

fn criterion_4() -> Line {
    let mut structures = 0;
    let mut violations = Vec::new();
    let mut by_dialect = [0usize; 2];
    for (k, d) in [Dialect::Bd, Dialect::Abd].into_iter().enumerate() {
        for f in random_corpus(SEED + 4, 300, &["p", "q"], 8, d) {
            let Ok(Some(m)) = brute_force_sat(&f, LEMMA_MAX_N) else {
                continue;
            };
            let g = model_to_compass(&m, &f, d).expect("oracle model converts");
            let mut classes = ClassTable::new();
            let mut v = check_compass(&g, f.size(), &mut classes);
            if d == Dialect::Abd {
                v.extend(check_a_prop(&m, &f));
            }
            structures += 1;
            by_dialect[k] += 1;
            violations.extend(v.into_iter().map(|v| (print_formula(&f), v)));
        }
    }
    Line {
        id: 4,
        name: "compass structural properties",
        pass: structures >= LEMMA_STRUCTURES && violations.is_empty(),
        detail: format!(
            "{structures} structures ({} BD, {} ABD, N <= {LEMMA_MAX_N}), {} violations{}",
            by_dialect[0],
            by_dialect[1],
            violations.len(),
            violations
                .iter()
                .take(3)
                .map(|(f, v)| format!("; {f}: {:?} at {:?}", v.property, v.at))
                .collect::<String>()
        ),
    }
}

/// Periodic models over `{p, q}` with period `k` and `n + 1` points.
fn periodic_models(n: usize) -> Vec<HomogeneousModel> {
    let patterns: [&[&[&str]]; 5] = [
        &[&["p"]],
        &[&["p"], &[]],
        &[&["p", "q"], &["q"]],
        &[&["p"], &["q"], &[]],
        &[&[], &["p"], &["p", "q"]],
    ];
    patterns
        .iter()
        .map(|pat| {
            HomogeneousModel::from_points((0..=n).map(|i| pat[i % pat.len()].to_vec()).collect())
        })
        .collect()
}

fn criterion_5() -> Line {
    let mut done = 0;
    let mut failures = Vec::new();
    let models = periodic_models(14);
    'outer: for d in [Dialect::Bd, Dialect::Abd] {
        for f in random_corpus(SEED + 5, 400, &["p", "q"], 6, d) {
            for m in &models {
                if done >= 2 * CONTRACTIONS {
                    break 'outer;
                }
                if !eval(m, 0, m.n(), &f) {
                    continue;
                }
                let g = model_to_compass(m, &f, d).expect("model converts");
                let mut classes = ClassTable::new();
                let Some((y, y2)) = repeated_blueprints(&g, &mut classes) else {
                    continue;
                };
                done += 1;
                let name = print_formula(&f);
                match contract(&g, y, y2, &mut classes) {
                    Ok(h) => {
                        if h.n() != g.n() - (y2 - y) {
                            failures.push(format!("{name}: height {}", h.n()));
                        }
                        if !validate_compass(&h, &f).is_empty() {
                            failures.push(format!("{name}: contracted compass invalid"));
                        }
                    }
                    Err(e) => failures.push(format!("{name}: {e}")),
                }
                match contract_fully(&g, &mut classes) {
                    Ok(h) => {
                        if repeated_blueprints(&h, &mut classes).is_some()
                            || !validate_compass(&h, &f).is_empty()
                        {
                            failures.push(format!("{name}: iterated contraction"));
                        }
                    }
                    Err(e) => failures.push(format!("{name}: {e}")),
                }
            }
        }
    }
    Line {
        id: 5,
        name: "contraction",
        pass: done >= CONTRACTIONS && failures.is_empty(),
        detail: format!(
            "{done} structures with repeated blueprints, {} failures{}",
            failures.len(),
            failures
                .iter()
                .take(3)
                .map(|f| format!("; {f}"))
                .collect::<String>()
        ),
    }
}

fn criterion_6(c: &Corpora) -> Line {
    let mut tables = 0;
    let mut violations = Vec::new();
    for (d, corpus) in [(Dialect::Bd, &c.bd), (Dialect::Abd, &c.abd)] {
        for f in corpus {
            let t = AtomTable::new(Closure::new(f, d)).expect("corpus closures are small");
            tables += 1;
            violations.extend(
                check_counting_bounds(&t, f.size())
                    .into_iter()
                    .map(|v| format!("{}: {:?} {}", print_formula(f), v.property, v.detail)),
            );
        }
    }
    Line {
        id: 6,
        name: "counting bounds",
        pass: violations.is_empty(),
        detail: format!(
            "{tables} closures, {} violations{}",
            violations.len(),
            violations
                .iter()
                .take(3)
                .map(|v| format!("; {v}"))
                .collect::<String>()
        ),
    }
}

fn regex_corpus() -> Vec<RestrictedExpr> {
    let alphabet = vec!["a".to_string(), "b".to_string()];
    include_str!("data/regex_corpus.txt")
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|l| RestrictedExpr {
            alphabet: alphabet.clone(),
            expr: regex::parse_expr(l, &alphabet).expect("corpus expression parses"),
        })
        .collect()
}

fn criterion_7() -> Line {
    let corpus = regex_corpus();
    let mut failures = Vec::new();
    let (mut empty, mut nonempty) = (0, 0);
    for e in &corpus {
        let enumerated = regex::shortest_member(e, REGEX_WORD_LEN);
        match regex::emptiness(e, &cfg()) {
            Ok(r) => match (r.is_empty(), &r.witness, &enumerated) {
                (Some(true), _, None) => empty += 1,
                (Some(false), Some(w), Some(_)) if regex::member(&e.expr, w) => nonempty += 1,
                (v, w, en) => failures.push(format!(
                    "{}: solver {v:?} witness {w:?}, enumeration {en:?}",
                    e.expr
                )),
            },
            Err(err) => failures.push(format!("{}: {err}", e.expr)),
        }
    }
    Line {
        id: 7,
        name: "regex emptiness",
        pass: corpus.len() == 30 && failures.is_empty(),
        detail: format!(
            "{} expressions, {empty} empty, {nonempty} nonempty with member witnesses, {} mismatches{}",
            corpus.len(),
            failures.len(),
            failures.iter().take(3).map(|f| format!("; {f}")).collect::<String>()
        ),
    }
}

fn criterion_8() -> Line {
    let (max_prefix, max_period) = (0, 1);
    let instances = toy_instances();
    let (mut pos, mut neg) = (0, 0);
    let mut failures = Vec::new();
    for (k, t) in instances.iter().enumerate() {
        let tiled = brute_force_tiling(t, max_prefix, max_period);
        let model = brute_force_sat(&encode(t), oracle_bound(t, max_prefix, max_period))
            .expect("within budget");
        match (&tiled, &model) {
            (Some(_), Some(m)) => match decode_model(m, t) {
                Ok(_) => pos += 1,
                Err(e) => failures.push(format!("instance {k}: {e}")),
            },
            (None, None) => neg += 1,
            _ => failures.push(format!(
                "instance {k}: tiling {}, formula {}",
                tiled.is_some(),
                model.is_some()
            )),
        }
    }
    Line {
        id: 8,
        name: "tiling reduction",
        pass: instances.len() >= TOY_INSTANCES && pos > 0 && neg > 0 && failures.is_empty(),
        detail: format!(
            "{} instances, {pos} positive with decoded witnesses, {neg} negative, {} mismatches{}",
            instances.len(),
            failures.len(),
            failures
                .iter()
                .take(3)
                .map(|f| format!("; {f}"))
                .collect::<String>()
        ),
    }
}

fn reports_json() -> String {
    let corpus = random_corpus(SEED + 9, 300, &["p", "q"], 8, Dialect::Abd);
    let mut out = serde_json::to_string(&crosscheck(&corpus, Dialect::Abd, 4, &cfg())).unwrap();
    for f in corpus.iter().take(40) {
        let v = solve(f, Dialect::Abd, &cfg()).unwrap();
        out += &serde_json::to_string(v.stats()).unwrap();
        if let Some(c) = v.certificate() {
            out += &c.compass.to_json(Some(f));
        }
    }
    for e in regex_corpus().iter().take(10) {
        let r = regex::emptiness(e, &cfg()).unwrap();
        out += &serde_json::to_string(&regex::EmptinessReport::new(e, &r)).unwrap();
    }
    out
}

fn criterion_9() -> Line {
    let (a, b) = (reports_json(), reports_json());
    Line {
        id: 9,
        name: "determinism",
        pass: a == b,
        detail: format!(
            "two runs produced {} and {} bytes of JSON, identical: {}",
            a.len(),
            b.len(),
            a == b
        ),
    }
}

fn main() -> ExitCode {
    let start = Instant::now();
    let (bd, bd_report) = differential(
        Dialect::Bd,
        BD_EXHAUSTIVE_SIZE,
        BD_RANDOM,
        BD_RANDOM_SIZE,
        BD_MAX_N,
    );
    let (abd, abd_report) = differential(
        Dialect::Abd,
        ABD_EXHAUSTIVE_SIZE,
        ABD_RANDOM,
        ABD_RANDOM_SIZE,
        ABD_MAX_N,
    );
    let corpora = Corpora {
        bd,
        abd,
        bd_report,
        abd_report,
    };
    let lines = vec![
        criterion_1(&corpora),
        criterion_2(&corpora),
        criterion_3(&corpora),
        criterion_4(),
        criterion_5(),
        criterion_6(&corpora),
        criterion_7(),
        criterion_8(),
        criterion_9(),
    ];
    for l in &lines {
        println!(
            "criterion {} {:<36} {}  {}",
            l.id,
            l.name,
            if l.pass { "PASS" } else { "FAIL" },
            l.detail
        );
    }
    let failed = lines.iter().filter(|l| !l.pass).count();
    println!(
        "acceptance: {} of {} criteria pass ({:.1}s)",
        lines.len() - failed,
        lines.len(),
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
