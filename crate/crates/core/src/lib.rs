//! Cokernels of random matrices over `Z` and `Z/aZ`: exact Smith normal
//! forms, finite abelian group counting, matrix models, limiting
//! distributions, isotropy criteria and a Monte Carlo moment harness.

pub mod config;
pub mod error;
pub mod group;
pub mod harness;
pub mod isotropy;
pub mod limits;
pub mod linalg;
pub mod models;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use group::FiniteAbelianGroup;
pub use linalg::{cokernel, cokernel_mod, smith_normal_form, ExactMatrix, SmithDecomposition};
pub use models::{EntryDistribution, MatrixModel, ModelKind};
pub use rng::SeedSpec;
