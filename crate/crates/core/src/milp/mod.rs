//! Linearized MILP of the hub-location problem, with LP/MPS writers and
//! encode/decode between routing plans and variable values.

mod build;
mod model;
mod write;

pub use build::{
    build_linearized_model, build_model, decode_solution, encode_solution, expected_size, names, parse_values,
    values_to_string, BuildError, DecodeError, EncodeError, ModelOptions, ModelSize, ValuesError, INTEGRALITY_TOL,
    RESIDUAL_TOL,
};
pub use model::{Constraint, MilpModel, ModelError, Residual, Sense, VarKind, Variable};
pub use write::{emit_lp, emit_mps, format_number};
