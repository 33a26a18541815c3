//! Density-based topology optimization of 2D continua loaded by
//! design-dependent fluidic pressure.
//!
//! Pressure is modelled with Darcy flow through the design domain plus a
//! drainage sink inside solid material; the nodal pressure field is turned
//! into consistent nodal forces, and compliance is minimized under a volume
//! constraint with MMA. Load sensitivities are obtained with one extra
//! adjoint solve on the flow system.

// index loops mirror the element formulas; negated comparisons reject NaN
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod driver;
pub mod element;
pub mod error;
pub mod filters;
pub mod flow;
pub mod linalg;
pub mod mesh;
pub mod mma;
pub mod problems;
pub mod sensitivity;
pub mod structure;

pub use error::{Error, Result};
