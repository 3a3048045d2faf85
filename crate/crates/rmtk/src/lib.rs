//! Random matrix theory toolkit.
//!
//! Ensembles and their limiting spectral laws, Stieltjes and free-probability
//! transforms, Tracy–Widom statistics and spiked models, together with three
//! applications: eigenvalue-based spectrum sensing, large-system multiuser
//! receivers and spectral diagnostics of random neural networks.

pub mod ensembles;
pub mod error;
pub mod extremes;
pub mod laws;
pub mod linalg;
pub mod nn;
pub mod massive;
pub mod multiuser;
pub mod poly;
pub mod quad;
pub mod rng;
pub mod sensing;
pub mod spiked;
pub mod special;
pub mod transforms;
pub mod validation;

pub use error::{Error, Result};
pub use linalg::{FMat, Field};
pub use num_complex::Complex64 as C64;
pub use rng::Seed;
