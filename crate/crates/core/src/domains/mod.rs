//! Benchmark Goal-POMDPs.

pub mod contact;
pub mod dist;
pub mod fixtures;
pub mod grid;
pub mod line_world;
pub mod navigation;
pub mod raycast;

pub use contact::{
    contact_toy_model, hypothesis_block, planted_partition, ContactToy, ContactWorld, Sweep,
};
pub use dist::DistTable;
pub use grid::{Cell, GridMap, LidarSpec, MapFixture, MotionPrimitive, Pose, Sidecar};
pub use line_world::{corridor, line_world, LineWorld};
pub use navigation::{
    indoor_start_uncertainty_model, indoor_stochastic_model, outdoor_model, NavigationMode,
    NavigationPomdp, Sensor,
};
pub use raycast::{cast_ray, raycast, scan};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("map format: {0}")]
    MapFormat(String),

    #[error("config: {0}")]
    Config(String),

    #[error("fixture: {0}")]
    Fixture(String),
}
