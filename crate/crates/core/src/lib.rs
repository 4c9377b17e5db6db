//! Leader-follower game with adaptive roles for interactive motion planning.
//!
//! The core math ([`game`], [`actions`], [`lfg`], [`role`], [`branch_mpc`])
//! is generic over the scalar type; the aliases below fix it to `f64`, which
//! is what the [`sim`] harness runs on.

pub mod actions;
pub mod branch_mpc;
pub mod error;
pub mod game;
pub mod lfg;
pub mod model;
pub mod role;
pub mod scalar;
pub mod sim;

pub use error::{Error, Result};
pub use game::{Agent, Axis};
pub use lfg::Role;
pub use role::PlausibleMap;
pub use scalar::Scalar;

pub type VehicleState = game::VehicleState<f64>;
pub type GameState = game::GameState<f64>;
pub type RewardParams = game::RewardParams<f64>;
pub type SafetyParams = game::SafetyParams<f64>;
pub type ActionTrajectory = actions::ActionTrajectory<f64>;
pub type ActionGenParams = actions::ActionGenParams<f64>;
pub type PayoffMatrix = lfg::PayoffMatrix<f64>;
pub type GamePayoffs = lfg::GamePayoffs<f64>;
pub type GameModel = model::GameModel<f64>;
pub type StageGame = model::StageGame<f64>;
pub type RoleBelief = role::RoleBelief<f64>;
pub type LikelihoodParams = role::LikelihoodParams<f64>;
pub type TransitionMatrix = role::TransitionMatrix<f64>;
pub type MpcParams = branch_mpc::MpcParams<f64>;
pub type BranchTree = branch_mpc::BranchTree<f64>;
pub type BranchMpc = branch_mpc::BranchMpc<f64>;
