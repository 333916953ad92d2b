//! Diagonal-covariance Gaussian mixture over demonstration states, fitted by
//! EM, used as a density-threshold discriminator.

use crate::error::{Error, Result};
use crate::numerics::Rng;

pub const VARIANCE_FLOOR: f64 = 1e-6;

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_7;

/// Mixture weights on the simplex, per-component means and diagonal
/// variances, and the density threshold `T` above which a state counts as
/// guidable.
#[derive(Debug, Clone)]
pub struct GmmDiscriminator {
    pub weights: Vec<f64>,
    /// `means[k][j]`
    pub means: Vec<Vec<f64>>,
    /// `variances[k][j]`, floored at [`VARIANCE_FLOOR`].
    pub variances: Vec<Vec<f64>>,
    pub threshold: f64,
    /// Total log-likelihood after each EM iteration.
    pub log_likelihood_trace: Vec<f64>,
}

impl GmmDiscriminator {
    pub fn k(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.means.first().map_or(0, |m| m.len())
    }

    /// Log-density of one mixture component at `state`.
    fn component_log_density(&self, k: usize, state: &[f64]) -> f64 {
        let mut lp = 0.0;
        for ((x, m), v) in state.iter().zip(&self.means[k]).zip(&self.variances[k]) {
            let d = x - m;
            lp += -HALF_LN_2PI - 0.5 * v.ln() - 0.5 * d * d / v;
        }
        lp
    }

    /// Exact mixture density `Σ_k ω_k φ(s | μ_k, σ_k²)`.
    pub fn density(&self, state: &[f64]) -> Result<f64> {
        if state.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "GmmDiscriminator::density",
                expected: self.dim(),
                got: state.len(),
            });
        }
        Ok(self
            .weights
            .iter()
            .enumerate()
            .map(|(k, w)| w * self.component_log_density(k, state).exp())
            .sum())
    }

    /// True iff the density exceeds the threshold `T`.
    pub fn discriminate(&self, state: &[f64]) -> Result<bool> {
        Ok(self.density(state)? > self.threshold)
    }
}

/// Free-function form of [`GmmDiscriminator::density`].
pub fn gmm_density(disc: &GmmDiscriminator, state: &[f64]) -> Result<f64> {
    disc.density(state)
}

/// k-means++-style seeding: the first center uniformly, each next center
/// with probability proportional to squared distance from the chosen ones.
fn kmeanspp_centers(states: &[Vec<f64>], k: usize, rng: &mut Rng) -> Vec<Vec<f64>> {
    let mut centers = vec![states[rng.index(states.len())].clone()];
    let mut d2: Vec<f64> = states
        .iter()
        .map(|s| dist_sq(s, &centers[0]))
        .collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total <= 0.0 {
            // All points coincide with a center; fall back to uniform.
            states[rng.index(states.len())].clone()
        } else {
            let mut target = rng.uniform() * total;
            let mut chosen = states.len() - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            states[chosen].clone()
        };
        for (i, s) in states.iter().enumerate() {
            d2[i] = d2[i].min(dist_sq(s, &next));
        }
        centers.push(next);
    }
    centers
}

fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

fn logsumexp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Fits a diagonal GMM by EM and self-calibrates the density threshold to the
/// 5th percentile of the fitted density over the training states.
///
/// Stops once the total log-likelihood improves by less than `tol` between
/// iterations, or after `max_iters`. A collapsing component has its variance
/// floored and a warning is emitted.
pub fn fit_gmm(
    states: &[Vec<f64>],
    k: usize,
    max_iters: usize,
    tol: f64,
    rng: &mut Rng,
) -> Result<GmmDiscriminator> {
    if k == 0 {
        return Err(Error::InvalidArgument("fit_gmm: K must be >= 1".to_string()));
    }
    if states.len() < k {
        return Err(Error::InvalidArgument(format!(
            "fit_gmm: need at least K = {k} states, got {}",
            states.len()
        )));
    }
    let n = states.len();
    let dim = states[0].len();
    if states.iter().any(|s| s.len() != dim) {
        return Err(Error::InvalidArgument(
            "fit_gmm: ragged state dimensions".to_string(),
        ));
    }

    // Global per-dimension variance seeds every component.
    let mut global_mean = vec![0.0; dim];
    for s in states {
        for (m, x) in global_mean.iter_mut().zip(s) {
            *m += x;
        }
    }
    for m in &mut global_mean {
        *m /= n as f64;
    }
    let mut global_var = vec![0.0; dim];
    for s in states {
        for ((v, x), m) in global_var.iter_mut().zip(s).zip(&global_mean) {
            let d = x - m;
            *v += d * d;
        }
    }
    for v in &mut global_var {
        *v = (*v / n as f64).max(VARIANCE_FLOOR);
    }

    let mut disc = GmmDiscriminator {
        weights: vec![1.0 / k as f64; k],
        means: kmeanspp_centers(states, k, rng),
        variances: vec![global_var.clone(); k],
        threshold: 0.0,
        log_likelihood_trace: Vec::new(),
    };

    let mut resp = vec![vec![0.0; k]; n];
    let mut prev_ll = f64::NEG_INFINITY;
    for _ in 0..max_iters {
        // E-step in log space.
        let mut ll = 0.0;
        for (i, s) in states.iter().enumerate() {
            let logs: Vec<f64> = (0..k)
                .map(|c| disc.weights[c].ln() + disc.component_log_density(c, s))
                .collect();
            let lse = logsumexp(&logs);
            ll += lse;
            for c in 0..k {
                resp[i][c] = (logs[c] - lse).exp();
            }
        }
        disc.log_likelihood_trace.push(ll);
        if (ll - prev_ll).abs() < tol {
            break;
        }
        prev_ll = ll;

        // M-step.
        for c in 0..k {
            let nk: f64 = resp.iter().map(|r| r[c]).sum();
            let nk_safe = nk.max(1e-300);
            disc.weights[c] = nk / n as f64;
            let mut mean = vec![0.0; dim];
            for (i, s) in states.iter().enumerate() {
                for (m, x) in mean.iter_mut().zip(s) {
                    *m += resp[i][c] * x;
                }
            }
            for m in &mut mean {
                *m /= nk_safe;
            }
            let mut var = vec![0.0; dim];
            for (i, s) in states.iter().enumerate() {
                for ((v, x), m) in var.iter_mut().zip(s).zip(&mean) {
                    let d = x - m;
                    *v += resp[i][c] * d * d;
                }
            }
            let mut floored = false;
            for v in &mut var {
                *v /= nk_safe;
                if *v < VARIANCE_FLOOR {
                    *v = VARIANCE_FLOOR;
                    floored = true;
                }
            }
            if floored {
                log::warn!("fit_gmm: component {c} variance collapsed; floored at {VARIANCE_FLOOR}");
            }
            disc.means[c] = mean;
            disc.variances[c] = var;
        }
    }

    // Self-calibrated threshold: 5th percentile of the training densities.
    let mut densities: Vec<f64> = states
        .iter()
        .map(|s| disc.density(s).expect("dims match"))
        .collect();
    densities.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let idx = ((n as f64) * 0.05).floor() as usize;
    disc.threshold = densities[idx.min(n - 1)];
    Ok(disc)
}
