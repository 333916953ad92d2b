//! Python bindings: environments, demonstration tooling, guidance
//! primitives, and the training entry points, exposed as the `drleg_py`
//! extension module.

use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use drleg::envs::{self, DeterministicPolicy};
use drleg::error::Error;
use drleg::guidance::{FunctionalDiscriminator, FunctionalGuider, StateScaler};
use drleg::harness::{self, TrainConfig};
use drleg::numerics::Rng;
use drleg::replay::DemoSet;
use drleg::sac::CheckpointBundle;

fn to_py_err(err: Error) -> PyErr {
    match err {
        Error::Config(_) | Error::InvalidArgument(_) => PyValueError::new_err(err.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

/// A desk-scale continuous-control environment with its own seeded stream.
#[pyclass(unsendable)]
struct Env {
    inner: Box<dyn envs::Env>,
    rng: Rng,
}

#[pymethods]
impl Env {
    #[new]
    #[pyo3(signature = (name, seed = 0))]
    fn new(name: &str, seed: u64) -> PyResult<Self> {
        Ok(Self {
            inner: envs::make_env(name).map_err(to_py_err)?,
            rng: Rng::new(seed),
        })
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.spec().name.to_string()
    }

    #[getter]
    fn obs_dim(&self) -> usize {
        self.inner.spec().obs_dim
    }

    #[getter]
    fn act_dim(&self) -> usize {
        self.inner.spec().act_dim
    }

    #[getter]
    fn action_low(&self) -> Vec<f64> {
        self.inner.spec().action_low.clone()
    }

    #[getter]
    fn action_high(&self) -> Vec<f64> {
        self.inner.spec().action_high.clone()
    }

    #[getter]
    fn max_episode_steps(&self) -> usize {
        self.inner.spec().max_episode_steps
    }

    /// Starts a new episode and returns the initial observation.
    fn reset(&mut self) -> Vec<f64> {
        self.inner.reset(&mut self.rng)
    }

    /// Steps the dynamics; returns `(obs, reward, done)`.
    fn step(&mut self, action: Vec<f64>) -> PyResult<(Vec<f64>, f64, bool)> {
        let step = self.inner.step(&action).map_err(to_py_err)?;
        Ok((
            step.transition.s_next,
            step.transition.r,
            step.transition.done,
        ))
    }

    /// Scripted expert action for this environment.
    fn expert_action(&self, obs: Vec<f64>) -> PyResult<Vec<f64>> {
        expert_action_for(self.inner.spec().name, &obs)
    }
}

fn expert_action_for(env: &str, obs: &[f64]) -> PyResult<Vec<f64>> {
    match env {
        "mountain_car" => Ok(envs::scripted_expert_mountaincar(obs)),
        "pendulum" => Ok(envs::PendulumExpert.act(obs)),
        "sparse_reacher" => Ok(envs::SparseReacherExpert.act(obs)),
        other => Err(PyValueError::new_err(format!(
            "no scripted expert for '{other}'"
        ))),
    }
}

/// The expert demonstration set: state-action pairs plus the average
/// episodic return the guidance gate compares against.
#[pyclass(name = "DemoSet")]
struct PyDemoSet {
    inner: DemoSet,
}

#[pymethods]
impl PyDemoSet {
    /// Rolls the scripted expert until `pairs` state-action pairs are stored.
    #[staticmethod]
    #[pyo3(signature = (env_name, pairs = 1000, seed = 7))]
    fn collect(env_name: &str, pairs: usize, seed: u64) -> PyResult<Self> {
        let mut env = envs::make_env(env_name).map_err(to_py_err)?;
        let mut rng = Rng::new(seed);
        let expert: Box<dyn DeterministicPolicy> = match env_name {
            "mountain_car" => Box::new(envs::MountainCarExpert),
            "pendulum" => Box::new(envs::PendulumExpert),
            "sparse_reacher" => Box::new(envs::SparseReacherExpert),
            other => {
                return Err(PyValueError::new_err(format!(
                    "no scripted expert for '{other}'"
                )))
            }
        };
        let inner = drleg::replay::collect_demos(env.as_mut(), expert.as_ref(), pairs, &mut rng)
            .map_err(to_py_err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: DemoSet::load(&path).map_err(to_py_err)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(to_py_err)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn env_name(&self) -> String {
        self.inner.env_name.clone()
    }

    #[getter]
    fn r_demo(&self) -> Option<f64> {
        self.inner.r_demo
    }

    #[getter]
    fn episodes(&self) -> usize {
        self.inner.episode_ends.len()
    }

    fn pair(&self, index: usize) -> PyResult<(Vec<f64>, Vec<f64>)> {
        self.inner
            .pairs
            .get(index)
            .cloned()
            .ok_or_else(|| PyValueError::new_err(format!("pair index {index} out of range")))
    }
}

/// Functional discriminator/guider pair over a demo set.
#[pyclass]
struct Guidance {
    discriminator: FunctionalDiscriminator,
    guider: FunctionalGuider,
    rng: Rng,
}

#[pymethods]
impl Guidance {
    #[new]
    #[pyo3(signature = (demos, t2 = 0.2, sigma = 0.0, seed = 0))]
    fn new(demos: &PyDemoSet, t2: f64, sigma: f64, seed: u64) -> PyResult<Self> {
        let env = envs::make_env(&demos.inner.env_name).map_err(to_py_err)?;
        let spec = env.spec();
        let scaler = StateScaler::from_demos(&demos.inner);
        let discriminator = FunctionalDiscriminator::new(
            demos.inner.states().map(|s| s.to_vec()).collect(),
            scaler,
            t2,
        )
        .map_err(to_py_err)?;
        let guider = FunctionalGuider::from_demos(
            &demos.inner,
            vec![sigma; spec.act_dim],
            &spec.action_low,
            &spec.action_high,
        )
        .map_err(to_py_err)?;
        Ok(Self {
            discriminator,
            guider,
            rng: Rng::new(seed),
        })
    }

    /// Whether the state is close enough to the demonstrations to be guided.
    fn discriminate(&self, state: Vec<f64>) -> PyResult<bool> {
        self.discriminator.discriminate(&state).map_err(to_py_err)
    }

    /// Expert-like action for the state.
    fn guide(&mut self, state: Vec<f64>) -> PyResult<Vec<f64>> {
        self.guider.guide(&state, &mut self.rng).map_err(to_py_err)
    }
}

/// JSON of the default training configuration.
#[pyfunction]
fn default_config() -> PyResult<String> {
    serde_json::to_string_pretty(&TrainConfig::default())
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

/// Runs a training configuration (JSON string, fields as in
/// `default_config()`), releasing the GIL for the duration. Returns the run
/// record as JSON.
#[pyfunction]
fn train(py: Python<'_>, config_json: &str) -> PyResult<String> {
    let cfg: TrainConfig = serde_json::from_str(config_json)
        .map_err(|e| PyValueError::new_err(format!("bad config: {e}")))?;
    let output = py
        .detach(|| harness::train(&cfg))
        .map_err(to_py_err)?;
    serde_json::to_string_pretty(&output.record)
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

/// Trains and also writes the checkpoint bundle; returns the record JSON.
#[pyfunction]
fn train_to(py: Python<'_>, config_json: &str, checkpoint_path: PathBuf) -> PyResult<String> {
    let cfg: TrainConfig = serde_json::from_str(config_json)
        .map_err(|e| PyValueError::new_err(format!("bad config: {e}")))?;
    let output = py
        .detach(|| harness::train(&cfg))
        .map_err(to_py_err)?;
    output
        .checkpoint()
        .save(&checkpoint_path)
        .map_err(to_py_err)?;
    serde_json::to_string_pretty(&output.record)
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

/// Mean deterministic return of a saved checkpoint's policy.
#[pyfunction]
#[pyo3(signature = (checkpoint_path, env_name, episodes = 10, seed = 0))]
fn evaluate_checkpoint(
    py: Python<'_>,
    checkpoint_path: PathBuf,
    env_name: &str,
    episodes: u32,
    seed: u64,
) -> PyResult<f64> {
    py.detach(|| {
        let bundle = CheckpointBundle::load(&checkpoint_path)?;
        let learner = bundle.restore_unchecked()?;
        harness::evaluate_checkpointed_policy(env_name, &learner.policy, episodes, seed)
    })
    .map_err(to_py_err)
}

#[pymodule]
fn drleg_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Env>()?;
    m.add_class::<PyDemoSet>()?;
    m.add_class::<Guidance>()?;
    m.add_function(wrap_pyfunction!(default_config, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(train_to, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_checkpoint, m)?)?;
    m.add("ENV_NAMES", envs::ENV_NAMES.to_vec())?;
    Ok(())
}
