//! Fixed inputs shared by the benchmarks.

use homsat::{parse_formula, Dialect, Formula};

/// Named formulas spanning quick Sat, Unsat and deeper searches.
pub fn formulas() -> Vec<(&'static str, Formula, Dialect)> {
    [
        ("prefixes", "<B>p & <B>!p", Dialect::Bd),
        ("nested-during", "<D><D>p & [B]!p", Dialect::Bd),
        ("unsat-during", "p & <D>!p & [B]p", Dialect::Bd),
        ("infix-chain", "<D>(p & <D>(!p & <D>p))", Dialect::Bd),
        ("meets", "<A>(p & <B>!p) & <D>q", Dialect::Abd),
        ("meets-unsat", "<B>!<A>!p & [D]!p & <B><B>T", Dialect::Abd),
    ]
    .into_iter()
    .map(|(name, s, d)| {
        (
            name,
            parse_formula(s, d).expect("benchmark formula parses"),
            d,
        )
    })
    .collect()
}
