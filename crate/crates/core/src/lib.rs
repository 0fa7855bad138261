//! Microscopic simulator of jaywalking pedestrians with a foveated field of
//! view and working memory, plus a seeded batch experiment harness.

pub mod config;
pub mod fov;
pub mod geom;
pub mod memory;
pub mod pedestrian;
pub mod road;
pub mod scenario;
pub mod stats;
pub mod sweep;
pub mod traffic;
pub mod world;

pub use scenario::{Scenario, ValidationError};
pub use world::{run, RunMetrics, RunOutput, RunSummary};
