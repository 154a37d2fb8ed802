//! Solver for the two-dimensional time-fractional Navier–Stokes equations
//!
//! ```text
//! ᶜD_t^α u + (u·∇)u − νΔu + ∇p = f,   div u = 0,   u|∂Ω = 0,
//! ```
//!
//! discretised with a convolution-quadrature rule for the fractional integral
//! in time and inf-sup stable mixed finite elements in space.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fem;
pub mod frac_quadrature;
pub mod geometry;
pub mod harness;
pub mod jacobi;
pub mod saddle;
pub mod stepper;

pub use error::{Error, Result};
