//! End-to-end training: seeded loops, periodic evaluation feeding the gate,
//! comparative experiments, and metrics export.

mod compare;
mod config;
mod pretrain;
mod record;
mod train;

pub use compare::{compare, Comparison, MethodCurve, MethodResult, RunFailure};
pub use config::{preset_config, TrainConfig};
pub use pretrain::bc_pretrain;
pub use record::{EvalRow, RunRecord};
pub use train::{eval_seed, evaluate_checkpointed_policy, streams, train, TrainOutput};
