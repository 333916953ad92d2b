//! DRL-EG: soft actor-critic with demonstration-guided exploration.
//!
//! The crate is organized around six pieces:
//!
//! - [`numerics`]: MLPs with hand-written backprop, Adam, seeded RNG streams.
//! - [`envs`]: dependency-free continuous-control environments.
//! - [`replay`]: the agent replay buffer and the expert demonstration set.
//! - [`sac`]: the maximum-entropy actor-critic learner.
//! - [`guidance`]: discriminators and guiders built from demonstrations, and
//!   the gate that swaps expert-like actions in during exploration.
//! - [`harness`]: seeded end-to-end training, comparisons, and metrics export.

pub mod envs;
pub mod error;
pub mod guidance;
pub mod harness;
pub mod numerics;
pub mod replay;
pub mod sac;

pub use error::{Error, Result};
