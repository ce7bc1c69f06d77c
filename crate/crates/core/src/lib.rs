//! Belief-space planning for eye-in-hand object search.
//!
//! A camera on a robot arm looks for a known object on a gridded table.
//! Each snapshot is taken from a block center at one of several zoom
//! levels and reports whether any part of the object is in view. The
//! search is modeled as a finite POMDP whose reward is the mode of the
//! belief, then solved exactly (small horizons), with point-based value
//! iteration, or greedily, and evaluated in a seeded simulator.

pub mod belief;
pub mod error;
pub mod observation;
pub mod planner;
pub mod pomdp;
pub mod sim;
pub mod world;

pub use belief::{Belief, Hypothesis};
pub use error::{Error, Result};
pub use observation::{validate_model, Observation, ObservationModel, Violation};
pub use planner::{AlphaVector, AlphaVectorSet, Objective, Policy, Termination};
pub use pomdp::{PomdpModel, Variant};
pub use sim::{EpisodeConfig, EpisodeResult, Metrics, PolicyKind, TruthSource};
pub use world::{BlockId, CameraView, DistanceBand, GridWorld, ObjectPose, ObjectSpec, Zoom};
