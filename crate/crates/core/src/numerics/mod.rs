//! Dense-network numerical kernel: MLPs with analytic gradients, Adam, and
//! stream-splittable RNG. Everything learned in this crate sits on top of
//! these pieces.

pub mod adam;
pub mod mlp;
pub mod rng;

pub use adam::{adam_step, AdamCheckpoint, AdamState, Optimizer};
pub use mlp::{BatchTrace, LayerCheckpoint, Mlp, MlpCheckpoint, MlpGrads};
pub use rng::{gaussian_sample, Rng};
