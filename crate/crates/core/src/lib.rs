//! Satisfiability checking for the interval temporal logics BD and ABD over
//! finite linear orders under the homogeneity assumption.

pub mod analysis;
pub mod atoms;
pub mod closure;
pub mod crosscheck;
pub mod formula;
pub mod lemmas;
pub mod regex;
pub mod semantics;
pub mod solver;
pub mod tiling;

pub use atoms::{Atom, AtomError, AtomId, AtomKey, AtomTable, Mark};
pub use closure::{Closure, Node, Ref};
pub use formula::{parse_formula, print_formula, Dialect, Formula, Modality, ParseError};
pub use semantics::{
    brute_force_sat, compass_to_model, eval, model_to_compass, validate_compass, CompassStructure,
    HomogeneousModel, Violation, ViolationKind,
};
pub use solver::{solve, SearchConfig, SearchOrder, Solver, Stats, Verdict};
