//! Simulated word learning: a synthetic tutor names random objects with
//! words, and standard classifiers learn to do the same from examples.

pub mod config;
pub mod data;
pub mod error;
pub mod exec;
pub mod harness;
pub mod learner;
pub mod metrics;
pub mod rng;
pub mod tutor;

pub use error::{Error, Result};
