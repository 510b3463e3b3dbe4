//! Parallel global and local optimization (PGLO) of noisy black-box functions.
//!
//! Each iteration fits an additive global + local Gaussian-process surrogate,
//! picks promising regions with a penalized batch expected-improvement
//! criterion on the global model, starts parallel pattern searches inside
//! those regions from modified-EI starting points, and finally spends extra
//! replications on the evaluated points with an OCBA rule.

pub mod acquisition;
pub mod allocation;
pub mod archive;
pub mod bench;
pub mod design;
pub mod direct_search;
pub mod engine;
pub mod error;
pub mod kmeans;
pub mod rng;
pub mod surrogate;

pub use archive::{DesignArchive, DesignPoint};
pub use design::Bounds;
pub use error::{PgloError, Result};
pub use surrogate::{AglgpModel, Prediction, RegionPartition};
