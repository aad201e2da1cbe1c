//! Structured-grid solver and experiment harness for the generalized Hughes
//! crowd model: a β-family of non-separable mean-field-game systems coupling a
//! Fokker–Planck density equation to a (quasi-)stationary HJB equation, plus a
//! particle simulator of the underlying controlled SDE.

// `!(x > 0.0)` is used on purpose so NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod coupling;
pub mod error;
pub mod fp;
pub mod grid;
pub mod hjb;
pub mod io;
pub mod linsolve;
pub mod model;
pub mod particles;
pub mod render;
mod viridis;

pub use error::{GridError, ModelError, SolverError};
pub use grid::{
    Boundaries, BoundarySpec, EdgeCondition, Grid2D, Quantity, ScalarField, VectorField,
};
pub use model::ModelParams;
