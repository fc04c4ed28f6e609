//! Pseudo-spectral simulator for three-dimensional free-surface incompressible
//! Euler flow with surface tension, posed on a fixed slab through a
//! terrain-following flattening map, plus diagnostics for breakdown monitoring.

// `!(x > 0.0)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Component loops index several 3-vectors and 3x3 matrices in step.
#![allow(clippy::needless_range_loop)]

pub mod error;
pub mod geometry;
pub mod operators;
pub mod diagnostics;
pub mod dynamics;
pub mod elliptic;
pub mod initial;
pub mod spectral;
pub mod verification;

pub use error::{BreakdownCondition, Error, Result};
