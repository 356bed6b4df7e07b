//! Economical caching of layered (scalable) video in two-tier cellular
//! networks: coverage and rate analytics, a point-process simulator, the
//! revenue/cost model and cache placement optimizers.

pub mod content;
pub mod economics;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod optimizer;
pub mod seeds;
pub mod simulator;

pub use error::{Error, Result};
