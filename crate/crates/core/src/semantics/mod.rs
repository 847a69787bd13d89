//! Homogeneous models, the trusted evaluation oracle, and compass structures.

pub mod brute;
pub mod compass;
pub mod eval;
pub mod model;

pub use brute::{brute_force_sat, brute_force_sat_with, OracleError};
pub use compass::{
    compass_to_model, diagonal_model, model_to_compass, model_to_compass_in, validate_compass,
    CompassDump, CompassStructure, ConversionError, Violation, ViolationKind,
};
pub use eval::{eval, Compiled};
pub use model::HomogeneousModel;
