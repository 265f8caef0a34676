//! Two-vehicle overtaking duel on a straight track: a sampling planner and a
//! learned end-state planner with a safety fallback, both against a blocking
//! opponent.
//!
//! The geometry, curve and planning modules are generic over [`Scalar`];
//! simulation, environment and evaluation run in `f64`. The aliases below fix
//! the scalar to `f64` for convenience.

pub mod collision;
pub mod config;
pub mod dynamics;
pub mod env;
pub mod error;
pub mod eval;
pub mod feasibility;
pub mod planner;
pub mod plot;
pub mod policy;
pub mod polynomial;
pub mod safety;
pub mod sampling;
pub mod scalar;
pub mod sim;
pub mod track;
pub mod trajectory;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type TrackModel = track::TrackModel<f64>;
pub type CurvilinearState = dynamics::CurvilinearState<f64>;
pub type BlockingParams = dynamics::BlockingParams<f64>;
pub type Kinematics = polynomial::Kinematics<f64>;
pub type FrenetState = trajectory::FrenetState<f64>;
pub type Trajectory = trajectory::Trajectory<f64>;
pub type TrajectoryPoint = trajectory::TrajectoryPoint<f64>;
pub type SamplingConfig = sampling::SamplingConfig<f64>;
pub type EndState = sampling::EndState<f64>;
pub type FeasibilityLimits = feasibility::FeasibilityLimits<f64>;
pub type GgTable = feasibility::GgTable<f64>;
pub type CostWeights = planner::CostWeights<f64>;
pub type PolicyWeights = policy::PolicyWeights<f64>;
