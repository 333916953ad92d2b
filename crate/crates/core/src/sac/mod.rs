//! Maximum-entropy actor-critic learner: squashed-Gaussian policy, twin soft
//! Q-networks with a Polyak value target, the regression targets and gradient
//! updates that train them, and a tabular soft-iteration oracle.

mod checkpoint;
mod critics;
mod policy;
pub mod tabular;
mod update;

pub use checkpoint::{CheckpointBundle, LearnerState, OptimizerCheckpoint, BUNDLE_VERSION};
pub use critics::{polyak_update, ActionCritic, SoftCritics};
pub use policy::{GaussianPolicy, PolicySample, LOG_SIGMA_MAX, LOG_SIGMA_MIN};
pub use tabular::{soft_iteration, soft_residual, TabularMdp};
pub use update::{compute_targets, policy_update, q_update, v_update, Targets};
