//! Reconstruction of periodic functions from subsampled rank-1 lattices.
//!
//! The pipeline builds a hyperbolic cross `I`, finds a rank-1 lattice that is
//! reconstructing for `I`, draws a random subsample under a discrete density,
//! optionally sparsifies it further with a barrier greedy, and solves the
//! weighted least-squares problem with FFT-based operators.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiments;
pub mod fourier;
pub mod index_sets;
pub mod lattice;
mod linalg;
pub mod mz;
pub mod rng;
pub mod solver;
pub mod subsampling;
pub mod testfuncs;

pub use error::{Error, Result};
pub use fourier::{OperatorKind, SystemOperator};
pub use index_sets::{hyperbolic_cross, IndexSet, SmoothnessWeight};
pub use lattice::{lattice_points, search_generator, Rank1Lattice, SamplePlan, SearchSchedule};
pub use mz::SpectralBounds;
pub use num_complex::Complex64;
