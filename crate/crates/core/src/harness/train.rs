//! The seeded end-to-end training loop.
//!
//! One master seed splits into fixed streams — initialization, environment,
//! policy noise, guider noise, minibatch/update noise, evaluation — so that
//! disabling the guidance gate reproduces a plain SAC run bitwise, and every
//! recorded evaluation can be replayed from its seed.

use std::time::Instant;

use ndarray::Array2;

use crate::envs::{evaluate_policy, make_env};
use crate::error::{Error, Result};
use crate::guidance::{build_gate, GuidanceGate};
use crate::numerics::{Optimizer, Rng};
use crate::replay::{DemoSet, ReplayBuffer};
use crate::sac::{
    compute_targets, policy_update, polyak_update, q_update, v_update, CheckpointBundle,
    GaussianPolicy, LearnerState, SoftCritics,
};

use super::config::TrainConfig;
use super::pretrain::bc_pretrain;
use super::record::{EvalRow, RunRecord};

/// Stream ids carved out of the master seed.
pub mod streams {
    pub const INIT: u64 = 0;
    pub const ENV: u64 = 1;
    pub const POLICY: u64 = 2;
    pub const GUIDER: u64 = 3;
    pub const BATCH: u64 = 4;
    pub const EVAL: u64 = 5;
}

/// Per-evaluation seed, derived from the master seed and the row index so a
/// recorded row can be replayed in isolation.
pub fn eval_seed(master_seed: u64, row_index: u64) -> u64 {
    master_seed
        .wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(row_index + 1))
}

pub struct TrainOutput {
    pub record: RunRecord,
    pub learner: LearnerState,
    pub action_low: Vec<f64>,
    pub action_high: Vec<f64>,
}

impl TrainOutput {
    pub fn checkpoint(&self) -> CheckpointBundle {
        CheckpointBundle::capture(
            &self.record.config_hash,
            &self.action_low,
            &self.action_high,
            &self.learner,
        )
    }
}

/// Runs one evaluation: a fresh environment instance and a generator on the
/// evaluation stream of `seed`, with deterministic (mean) actions.
pub fn evaluate_checkpointed_policy(
    env_name: &str,
    policy: &GaussianPolicy,
    episodes: u32,
    seed: u64,
) -> Result<f64> {
    let mut env = make_env(env_name)?;
    let mut rng = Rng::with_stream(seed, streams::EVAL);
    evaluate_policy(env.as_mut(), policy, episodes as usize, &mut rng)
}

fn draw_noise(rng: &mut Rng, n: usize, act_dim: usize) -> Array2<f64> {
    let mut z = Array2::zeros((n, act_dim));
    for i in 0..n {
        for j in 0..act_dim {
            z[[i, j]] = rng.standard_normal();
        }
    }
    z
}

/// Executes the full training loop for `config` and returns the run record
/// together with the final learner state.
pub fn train(config: &TrainConfig) -> Result<TrainOutput> {
    config.validate()?;
    let started = Instant::now();
    let config_hash = config.hash();
    let mut env = make_env(&config.env)?;
    let spec = env.spec().clone();

    // Demonstrations are touched only when something consumes them.
    let demos: Option<DemoSet> = if config.guidance.enabled || config.bc_pretrain_epochs > 0 {
        let path = config.demo_path.as_ref().expect("validated above");
        let demos = DemoSet::load(path)?;
        if demos.env_name != spec.name {
            return Err(Error::Config(format!(
                "demo file is for '{}' but the run uses '{}'",
                demos.env_name, spec.name
            )));
        }
        Some(demos)
    } else {
        None
    };

    let mut init_rng = Rng::with_stream(config.seed, streams::INIT);
    let mut policy = GaussianPolicy::new(
        spec.obs_dim,
        spec.act_dim,
        &config.hidden,
        &spec.action_low,
        &spec.action_high,
        &mut init_rng,
    )?;
    policy.set_obs_scale(spec.obs_scale.clone())?;
    let mut critics = SoftCritics::new(
        spec.obs_dim,
        spec.act_dim,
        &config.hidden,
        config.alpha,
        config.gamma,
        config.rho,
        &mut init_rng,
    )?;
    critics.set_obs_scale(spec.obs_scale.clone())?;

    if config.bc_pretrain_epochs > 0 {
        let demos = demos.as_ref().expect("loaded above");
        bc_pretrain(
            &mut policy,
            demos,
            config.bc_pretrain_epochs,
            1e-3,
            64,
            &mut init_rng,
        )?;
    }

    let mut env_rng = Rng::with_stream(config.seed, streams::ENV);
    let mut policy_rng = Rng::with_stream(config.seed, streams::POLICY);
    let mut guider_rng = Rng::with_stream(config.seed, streams::GUIDER);
    let mut batch_rng = Rng::with_stream(config.seed, streams::BATCH);

    let mut gate = if config.guidance.enabled {
        build_gate(
            demos.as_ref().expect("loaded above"),
            &config.guidance,
            &spec,
            &mut guider_rng,
        )?
    } else {
        GuidanceGate::disabled()
    };

    let make_opt = |net: &crate::numerics::Mlp| -> Optimizer {
        if config.sgd {
            Optimizer::Sgd { lr: config.lr }
        } else {
            Optimizer::adam(net, config.lr)
        }
    };
    let mut opt_policy = make_opt(policy.trunk());
    let mut opt_q1 = make_opt(&critics.q1);
    let mut opt_q2 = make_opt(&critics.q2);
    let mut opt_v = make_opt(&critics.v);

    let mut buffer = ReplayBuffer::new(config.buffer_capacity, spec.obs_dim, spec.act_dim)?;
    let mut rows: Vec<EvalRow> = Vec::new();

    // First evaluation at step 0 establishes R_π before any interaction.
    let seed0 = eval_seed(config.seed, 0);
    let r_pi0 = evaluate_checkpointed_policy(&spec.name, &policy, config.eval_episodes, seed0)?;
    gate.r_pi = r_pi0;
    rows.push(EvalRow {
        step: 0,
        r_pi: r_pi0,
        guided_fraction: 0.0,
        loss_q: None,
        loss_v: None,
        loss_pi: None,
        eval_seed: seed0,
    });

    let mut obs = env.reset(&mut env_rng);
    let mut gate_ever_fired = false;
    let mut guided_since_eval = 0u64;
    let mut steps_since_eval = 0u64;
    let mut loss_acc = LossAccumulator::default();

    for step in 0..config.total_steps {
        // Action selection: gate first, then the uniform warm-up, then the
        // policy. The warm-up rule is identical whether or not guidance is
        // configured; a firing gate simply takes precedence over it.
        let (action, guided) = if gate.fires(&obs)? {
            gate_ever_fired = true;
            (
                gate.select_action(&policy, &obs, &mut policy_rng, &mut guider_rng)?
                    .0,
                true,
            )
        } else if step < config.warmup_steps && !gate_ever_fired {
            let a: Vec<f64> = spec
                .action_low
                .iter()
                .zip(&spec.action_high)
                .map(|(lo, hi)| policy_rng.uniform_in(*lo, *hi))
                .collect();
            (a, false)
        } else {
            (policy.sample_action(&obs, &mut policy_rng)?.0, false)
        };
        if guided {
            guided_since_eval += 1;
        }
        steps_since_eval += 1;

        let env_step = env.step(&action)?;
        let done = env_step.transition.done;
        obs = if done {
            env.reset(&mut env_rng)
        } else {
            env_step.transition.s_next.clone()
        };

        // Step-limit truncation is stored as non-terminal so targets keep
        // bootstrapping through it; goal termination stays terminal.
        let mut stored = env_step.transition;
        stored.done = env_step.terminated;
        buffer.push(stored)?;

        let step1 = step + 1;
        if step1 >= config.learning_starts
            && step1 % config.update_every == 0
            && !buffer.is_empty()
        {
            for _ in 0..config.updates_per_round {
                let batch = buffer.sample_batch(config.batch_size, &mut batch_rng)?;
                let target_noise = draw_noise(&mut batch_rng, batch.len(), spec.act_dim);
                let targets = compute_targets(&critics, &policy, &batch, &target_noise)?;
                let loss_q = q_update(&mut critics, &batch, &targets.y_q, &mut opt_q1, &mut opt_q2)?;
                let loss_v = v_update(&mut critics, &batch.s, &targets.y_v, &mut opt_v)?;
                let policy_noise = draw_noise(&mut batch_rng, batch.len(), spec.act_dim);
                let j_pi = policy_update(
                    &mut policy,
                    &critics,
                    critics.alpha,
                    &batch.s,
                    &policy_noise,
                    &mut opt_policy,
                )?;
                polyak_update(&mut critics);
                loss_acc.add(loss_q, loss_v, j_pi);
            }
        }

        if step1 % config.eval_every == 0 {
            let row_index = rows.len() as u64;
            let seed_i = eval_seed(config.seed, row_index);
            let r_pi =
                evaluate_checkpointed_policy(&spec.name, &policy, config.eval_episodes, seed_i)?;
            gate.r_pi = r_pi;
            let (loss_q, loss_v, loss_pi) = loss_acc.take();
            rows.push(EvalRow {
                step: step1,
                r_pi,
                guided_fraction: guided_since_eval as f64 / steps_since_eval as f64,
                loss_q,
                loss_v,
                loss_pi,
                eval_seed: seed_i,
            });
            guided_since_eval = 0;
            steps_since_eval = 0;
        }
    }

    let record = RunRecord {
        config: config.clone(),
        config_hash,
        wall_clock_secs: started.elapsed().as_secs_f64(),
        rows,
    };
    Ok(TrainOutput {
        record,
        learner: LearnerState {
            policy,
            critics,
            opt_policy,
            opt_q1,
            opt_q2,
            opt_v,
        },
        action_low: spec.action_low.clone(),
        action_high: spec.action_high.clone(),
    })
}

#[derive(Default)]
struct LossAccumulator {
    q: f64,
    v: f64,
    pi: f64,
    count: u64,
}

impl LossAccumulator {
    fn add(&mut self, q: f64, v: f64, pi: f64) {
        self.q += q;
        self.v += v;
        self.pi += pi;
        self.count += 1;
    }

    fn take(&mut self) -> (Option<f64>, Option<f64>, Option<f64>) {
        let out = if self.count == 0 {
            (None, None, None)
        } else {
            let n = self.count as f64;
            (Some(self.q / n), Some(self.v / n), Some(self.pi / n))
        };
        *self = Self::default();
        out
    }
}
