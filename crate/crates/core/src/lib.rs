//! Quality-diversity evolution of agent-drawn line images.
//!
//! The pipeline runs genotype → drawing → raster → (fitness, feature cell),
//! and a MAP-Elites loop keeps the fittest drawing found for every cell of a
//! 2-D visual-feature grid. Supporting modules calibrate the fitness proxy
//! from artist rankings (direct scores and Glicko pairwise tournaments).

pub mod diversity;
pub mod draw;
mod error;
pub mod fitness;
pub mod genome;
pub mod image;
pub mod metrics;
pub mod noise;
pub mod qd;
pub mod ranking;
pub mod rng;

pub use error::{Error, Result};
