//! Nonlinear Anderson lattice: dynamics, Birkhoff normal form and
//! small-divisor measure estimates on finite windows.

pub mod algebra;
pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod lattice;
pub mod measure;
pub mod normal_form;
pub mod potential;

pub use dynamics::{Boundary, ModelParams};
pub use error::{Error, Result};
pub use lattice::{DiffusionTrace, LatticeState, TraceMetadata};
pub use potential::{IntegerVector, Potential};
