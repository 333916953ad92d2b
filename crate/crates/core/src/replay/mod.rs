//! Storage for the agent replay buffer and the expert demonstration set.

mod buffer;
mod demo;

pub use buffer::{Batch, ReplayBuffer};
pub use demo::{collect_demos, DemoSet};
