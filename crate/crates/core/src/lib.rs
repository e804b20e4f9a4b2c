//! Numerical laboratory for studying how iterative optimizers generalize.
//!
//! The crate bundles three synthetic problem families with analytically known
//! population risk, the projected first- and second-order optimizers used to
//! train on them, exact evaluators for a family of stability / excess-risk /
//! landscape bounds, and Monte-Carlo harnesses that measure the corresponding
//! quantities so the two sides can be compared.

pub mod bounds;
pub mod constants;
pub mod dataset;
pub mod error;
pub mod geometry;
pub mod landscape;
pub mod linalg;
pub mod optimizers;
pub mod problems;
pub mod rng;
pub mod stability;
pub mod stats;

pub mod cli;

pub use constants::ConstantsBundle;
pub use dataset::{Dataset, Sample};
pub use error::{Error, Result};
pub use geometry::{BallDomain, ParamVector};
pub use problems::ProblemSpec;
