//! Numerical laboratory for the electrostatically actuated MEMS membrane with
//! curvature.
//!
//! The free-boundary potential problem between the ground plate and the
//! deflected membrane is pulled back to the fixed rectangle
//! `(-1, 1) x (0, 1)`, where it is discretized with a nine-point stencil. On
//! top of that sit a semi-implicit time stepper for the quasilinear membrane
//! equation, a Newton/continuation solver for steady states, and the
//! small-aspect-ratio limit model.
//!
//! The crate is `no_std` and only needs `alloc`; IO lives in the `mems-fbp`
//! companion crate.

#![cfg_attr(not(test), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

mod error;
mod math;

pub mod elliptic;
pub mod evolution;
pub mod numerics;
pub mod small_aspect;
pub mod steady;
pub mod transform;
pub mod verification;

pub use error::{Error, Result};
pub use numerics::{Grid1D, Grid2D};
pub use transform::MembraneState;
