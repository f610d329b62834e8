//! Data-driven predictive control built on Willems' fundamental lemma.
//!
//! The crate is organised bottom-up:
//!
//! * [`matlib`]: SVD, pseudoinverse and row-space projections.
//! * [`hankel`]: trajectories, block-Hankel libraries, Hankel projection.
//! * [`plants`]: ground-truth simulators and seeded data collection.
//! * [`qp`]: dense primal-dual interior-point QP solver with l1 terms.
//! * [`slra`]: iterative structured low-rank denoising of output Hankels.
//! * [`variants`]: model-based MPC and the DeePC family of controllers.

pub mod error;
pub mod hankel;
pub mod io;
pub mod matlib;
pub mod plants;
pub mod qp;
pub mod rng;
pub mod slra;
pub mod variants;

pub use error::{Error, Result};
pub use hankel::{HankelPartition, Trajectory};
pub use matlib::{Mat, Vector};
