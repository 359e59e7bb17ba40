//! Deterministic planar-pushing simulation, planning and benchmarking.

pub mod aer;
pub mod baseline;
pub mod bench;
pub mod env;
pub mod error;
pub mod geometry;
pub mod perception;
pub mod planner;
pub mod server;
pub mod sim;
pub mod world;

pub use error::{Error, Result};

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/introduction.md")]
mod book_introduction {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/scenarios.md")]
mod book_scenarios {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/perception.md")]
mod book_perception {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/planning.md")]
mod book_planning {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/environment.md")]
mod book_environment {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/replay.md")]
mod book_replay {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/baseline.md")]
mod book_baseline {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/benchmarks.md")]
mod book_benchmarks {}
