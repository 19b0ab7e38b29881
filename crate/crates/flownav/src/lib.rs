//! UAV point-mass navigation in 2D turbulent flow fields.
//!
//! The crate bundles a snapshot-based flow environment, ray-cast obstacle
//! sensing, RK4 dynamics, a from-scratch dense+LSTM policy network with
//! analytic gradients, a recurrent PPO trainer, feedforward PPO and TD3
//! baselines, and the evaluation/export harness behind the `flownav` CLI.

pub mod checkpoint;
pub mod config;
pub mod dynamics;
pub mod env;
pub mod flow;
pub mod geometry;
pub mod harness;
pub mod nn;
pub mod policy;
pub mod ppo;
pub mod td3;
pub mod vec2;

pub use dynamics::{ActionCmd, UavState};
pub use env::{EnvConfig, NavEnv, Observation, Outcome, RewardConfig, StepResult};
pub use flow::{load_flow, save_flow, synth_flow, FlowSnapshotSet, SynthFlowConfig};
pub use geometry::{Obstacle, Rect, World};
pub use vec2::Vec2;
