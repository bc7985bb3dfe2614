//! Ground states of k-coupled cubic Schrödinger systems
//!
//! ```text
//! -Δu_j + λ_j u_j = μ_j u_j³ + Σ_{i≠j} β_ij u_i² u_j   on ℝ^N, N ∈ {1,2,3}
//! ```
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is a pure function of its
//! inputs; file formats and the command line live in the `cnls` crate.
#![cfg_attr(not(any(feature = "std", test)), no_std)]
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod blocks;
pub mod error;
pub mod linalg;
pub mod math;
pub mod model;
pub mod overlap;
pub mod scalar;
pub mod solver;

pub use error::{Error, Result};
pub use model::{build_system, ConstraintPartition, FieldVector, Grid, SystemParams, SystemSpec};
