//! Functional discriminator and guider: exhaustive nearest-neighbor scans
//! over the demonstration set.
//!
//! Distances are Euclidean after dividing each state dimension by the
//! demo-set standard deviation (floored), so a single threshold works across
//! environments with differently scaled observations.

use crate::error::{Error, Result};
use crate::numerics::Rng;
use crate::replay::DemoSet;

pub const SCALE_FLOOR: f64 = 1e-6;

/// Per-dimension normalization used before all distance computations.
#[derive(Debug, Clone, PartialEq)]
pub struct StateScaler {
    pub scales: Vec<f64>,
}

impl StateScaler {
    pub fn from_demos(demos: &DemoSet) -> Self {
        Self {
            scales: demos.state_scales(SCALE_FLOOR),
        }
    }

    pub fn unit(dim: usize) -> Self {
        Self {
            scales: vec![1.0; dim],
        }
    }

    pub fn distance_sq(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .zip(&self.scales)
            .map(|((x, y), s)| {
                let d = (x - y) / s;
                d * d
            })
            .sum()
    }
}

/// Scans the demo states for the nearest one; ties break to the lowest index.
fn nearest_index(states: &[Vec<f64>], scaler: &StateScaler, query: &[f64]) -> (usize, f64) {
    let mut best = 0usize;
    let mut best_d = f64::INFINITY;
    for (i, s) in states.iter().enumerate() {
        let d = scaler.distance_sq(s, query);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    (best, best_d)
}

/// "Can this state be guided?" decided by nearest-demo-state distance
/// against the threshold `T₂`.
#[derive(Debug, Clone)]
pub struct FunctionalDiscriminator {
    demo_states: Vec<Vec<f64>>,
    scaler: StateScaler,
    t2: f64,
}

impl FunctionalDiscriminator {
    pub fn new(demo_states: Vec<Vec<f64>>, scaler: StateScaler, t2: f64) -> Result<Self> {
        if demo_states.is_empty() {
            return Err(Error::InvalidArgument(
                "functional discriminator needs at least one demo state".to_string(),
            ));
        }
        if t2 <= 0.0 {
            return Err(Error::InvalidArgument("T2 must be > 0".to_string()));
        }
        Ok(Self {
            demo_states,
            scaler,
            t2,
        })
    }

    pub fn from_demos(demos: &DemoSet, t2: f64) -> Result<Self> {
        Self::new(
            demos.states().map(|s| s.to_vec()).collect(),
            StateScaler::from_demos(demos),
            t2,
        )
    }

    pub fn t2(&self) -> f64 {
        self.t2
    }

    /// True iff the nearest normalized distance is within `T₂`.
    pub fn discriminate(&self, state: &[f64]) -> Result<bool> {
        if state.len() != self.scaler.scales.len() {
            return Err(Error::DimensionMismatch {
                context: "FunctionalDiscriminator::discriminate",
                expected: self.scaler.scales.len(),
                got: state.len(),
            });
        }
        let (_, d2) = nearest_index(&self.demo_states, &self.scaler, state);
        Ok(d2.sqrt() <= self.t2)
    }
}

/// Produces the action of the nearest demonstration state plus Gaussian
/// noise, clipped into the action box.
#[derive(Debug, Clone)]
pub struct FunctionalGuider {
    pairs: Vec<(Vec<f64>, Vec<f64>)>,
    scaler: StateScaler,
    sigma: Vec<f64>,
    action_low: Vec<f64>,
    action_high: Vec<f64>,
}

impl FunctionalGuider {
    pub fn new(
        pairs: Vec<(Vec<f64>, Vec<f64>)>,
        scaler: StateScaler,
        sigma: Vec<f64>,
        action_low: Vec<f64>,
        action_high: Vec<f64>,
    ) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::Usage(
                "functional guider needs a nonempty demo set".to_string(),
            ));
        }
        if sigma.iter().any(|&s| s < 0.0) {
            return Err(Error::InvalidArgument(
                "guider noise must be nonnegative".to_string(),
            ));
        }
        Ok(Self {
            pairs,
            scaler,
            sigma,
            action_low,
            action_high,
        })
    }

    pub fn from_demos(demos: &DemoSet, sigma: Vec<f64>, low: &[f64], high: &[f64]) -> Result<Self> {
        Self::new(
            demos.pairs.clone(),
            StateScaler::from_demos(demos),
            sigma,
            low.to_vec(),
            high.to_vec(),
        )
    }

    /// Nearest-neighbor action plus `N(0, σ²)` noise, clipped to bounds.
    pub fn guide(&self, state: &[f64], rng: &mut Rng) -> Result<Vec<f64>> {
        if state.len() != self.scaler.scales.len() {
            return Err(Error::DimensionMismatch {
                context: "FunctionalGuider::guide",
                expected: self.scaler.scales.len(),
                got: state.len(),
            });
        }
        let states: Vec<&Vec<f64>> = self.pairs.iter().map(|(s, _)| s).collect();
        // Linear scan, identical order to the discriminator's.
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for (i, s) in states.iter().enumerate() {
            let d = self.scaler.distance_sq(s, state);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        let base = &self.pairs[best].1;
        Ok(base
            .iter()
            .enumerate()
            .map(|(j, &a)| {
                let noisy = if self.sigma[j] > 0.0 {
                    a + self.sigma[j] * rng.standard_normal()
                } else {
                    a
                };
                noisy.clamp(self.action_low[j], self.action_high[j])
            })
            .collect())
    }
}
