//! Demonstration-driven guidance: discriminators deciding whether a state is
//! close enough to the expert data to be guided, guiders producing
//! expert-like actions, and the gate composing them into action selection.

mod bc;
mod functional;
mod gate;
mod gmm;

pub use bc::{train_bc_guider, BcGuider};
pub use functional::{FunctionalDiscriminator, FunctionalGuider, StateScaler, SCALE_FLOOR};
pub use gate::{
    build_gate, Discriminator, DiscriminatorKind, GuidanceConfig, GuidanceGate, Guider, GuiderKind,
};
pub use gmm::{fit_gmm, gmm_density, GmmDiscriminator, VARIANCE_FLOOR};
