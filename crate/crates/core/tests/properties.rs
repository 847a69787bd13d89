use homsat::crosscheck::random_formula;
use homsat::regex::{expr_formula, member, translate, word_to_model, words, Expr, RestrictedExpr};
use homsat::semantics::{eval, validate_compass};
use homsat::{
    parse_formula, print_formula, solve, AtomTable, Closure, Dialect, Formula, HomogeneousModel,
    Modality, SearchConfig, Verdict,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn formula(seed: u64, size: usize, d: Dialect) -> Formula {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_formula(&mut rng, &["p", "q"], size, d)
}

fn dialect() -> impl Strategy<Value = Dialect> {
    prop_oneof![Just(Dialect::Bd), Just(Dialect::Abd)]
}

fn model() -> impl Strategy<Value = HomogeneousModel> {
    prop::collection::vec((any::<bool>(), any::<bool>()), 1..6).prop_map(|pts| {
        HomogeneousModel::from_points(
            pts.into_iter()
                .map(|(p, q)| {
                    [(p, "p"), (q, "q")]
                        .into_iter()
                        .filter(|x| x.0)
                        .map(|x| x.1)
                        .collect::<Vec<_>>()
                })
                .collect(),
        )
    })
}

fn expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        Just(Expr::Empty),
        Just(Expr::Letter("a".into())),
        Just(Expr::Letter("b".into())),
    ];
    leaf.prop_recursive(4, 12, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|e| Expr::Not(Box::new(e))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Union(Box::new(a), Box::new(b))),
            inner.clone().prop_map(|e| Expr::Pre(Box::new(e))),
            inner.prop_map(|e| Expr::Inf(Box::new(e))),
        ]
    })
}

fn ab() -> Vec<String> {
    vec!["a".into(), "b".into()]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn print_parse_round_trip(seed in any::<u64>(), size in 1usize..12, d in dialect()) {
        let f = formula(seed, size, d);
        prop_assert_eq!(parse_formula(&print_formula(&f), d).unwrap(), f);
    }

    #[test]
    fn closure_negation_is_an_involution(seed in any::<u64>(), size in 1usize..10, d in dialect()) {
        let cl = Closure::new(&formula(seed, size, d), d);
        prop_assert_eq!(cl.len() % 2, 0);
        for i in 0..cl.len() {
            prop_assert_ne!(cl.neg(i), i);
            prop_assert_eq!(cl.neg(cl.neg(i)), i);
        }
    }

    #[test]
    fn bd_atoms_are_determined_by_requests_and_letters(seed in any::<u64>(), size in 1usize..7) {
        let t = AtomTable::new(Closure::new(&formula(seed, size, Dialect::Bd), Dialect::Bd)).unwrap();
        let mut seen = std::collections::HashSet::new();
        for a in t.ids() {
            let key = (t.req(a, Modality::B), t.req(a, Modality::D), t.atom(a).props());
            prop_assert!(seen.insert(key));
        }
    }

    #[test]
    fn successor_relations_propagate_boxes(seed in any::<u64>(), size in 1usize..6, d in dialect()) {
        let t = AtomTable::new(Closure::new(&formula(seed, size, d), d)).unwrap();
        // A boxed argument slot of `f` is false in every successor.
        for f in t.ids() {
            for g in t.ids() {
                for m in [Modality::B, Modality::D] {
                    let succ = if m == Modality::B { t.b_succ(f, g) } else { t.d_succ(f, g) };
                    if succ {
                        prop_assert_eq!(t.box_(f, m) & t.obs(g, m), 0);
                    }
                }
            }
        }
    }

    #[test]
    fn letters_hold_homogeneously(m in model()) {
        let p = Formula::prop("p");
        for x in 0..=m.n() {
            for y in x..=m.n() {
                prop_assert_eq!(eval(&m, x, y, &p), (x..=y).all(|z| m.holds_at(z, "p")));
            }
        }
    }

    #[test]
    fn meets_depends_only_on_the_right_endpoint(m in model(), seed in any::<u64>(), size in 1usize..6) {
        let f = Formula::Diamond(Modality::A, Box::new(formula(seed, size, Dialect::Abd)));
        for z in 0..=m.n() {
            let base = eval(&m, z, z, &f);
            for x in 0..z {
                prop_assert_eq!(eval(&m, x, z, &f), base);
            }
        }
    }

    #[test]
    fn sat_certificates_are_sound(seed in any::<u64>(), size in 1usize..8, d in dialect()) {
        let phi = formula(seed, size, d);
        let v = solve(&phi, d, &SearchConfig::default()).unwrap();
        if let Verdict::Sat(c, _) = &v {
            let m = c.model();
            prop_assert!(eval(&m, 0, m.n(), &phi));
            prop_assert_eq!(validate_compass(&c.compass, &phi), vec![]);
        }
    }

    #[test]
    fn double_negation_preserves_membership(e in expr()) {
        let nn = Expr::Not(Box::new(Expr::Not(Box::new(e.clone()))));
        for w in words(&ab(), 4) {
            prop_assert_eq!(member(&nn, &w), member(&e, &w));
        }
    }

    #[test]
    fn prefix_and_infix_length_laws(e in expr()) {
        let (pre, inf) = (Expr::Pre(Box::new(e.clone())), Expr::Inf(Box::new(e)));
        for w in words(&ab(), 4) {
            prop_assert!(!member(&pre, &w) || w.len() >= 2);
            prop_assert!(!member(&inf, &w) || w.len() >= 3);
        }
    }

    #[test]
    fn translation_matches_membership(e in expr()) {
        let r = RestrictedExpr { alphabet: ab(), expr: e };
        let phi = translate(&r);
        for w in words(&ab(), 4) {
            let m = word_to_model(&w);
            prop_assert_eq!(eval(&m, 0, m.n(), &phi), member(&r.expr, &w), "{}", print_formula(&expr_formula(&r.expr)));
        }
    }
}
