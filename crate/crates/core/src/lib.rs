//! Downsampling for distribution-free property testing and agnostic learning
//! under product distributions on R^d.
//!
//! A sample from an unknown product distribution induces an r-block partition
//! of R^d whose cells have nearly equal mass. Problems over R^d then reduce to
//! problems over the uniform distribution on the grid `[r]^d`, where Walsh
//! analysis, brute-force learning and grid testers apply.

pub mod bbs;
pub mod blockgrid;
pub mod concepts;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod learners;
pub mod product_dist;
pub mod rng;
pub mod stats;
pub mod testers;
pub mod walsh;

pub use error::{Error, Result};
