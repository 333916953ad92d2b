//! The expert demonstration set: state-action pairs grouped by source
//! episode, plus the average episodic return the guidance gate compares
//! against.

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::envs::{DeterministicPolicy, Env};
use crate::error::{Error, Result};
use crate::numerics::Rng;

/// Expert dataset: `pairs` within a configured budget, episode grouping, and
/// the average return of the episodes it was cut from. `r_demo` is `None`
/// only for an empty set.
#[derive(Debug, Clone, PartialEq)]
pub struct DemoSet {
    pub env_name: String,
    pub obs_dim: usize,
    pub act_dim: usize,
    pub pairs: Vec<(Vec<f64>, Vec<f64>)>,
    /// End-exclusive offsets into `pairs`, one per contributing episode.
    pub episode_ends: Vec<usize>,
    pub r_demo: Option<f64>,
}

impl DemoSet {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn states(&self) -> impl Iterator<Item = &[f64]> {
        self.pairs.iter().map(|(s, _)| s.as_slice())
    }

    /// Per-dimension standard deviation of the demo states, floored so it can
    /// be used as a normalization scale.
    pub fn state_scales(&self, floor: f64) -> Vec<f64> {
        let n = self.pairs.len();
        if n == 0 {
            return vec![1.0; self.obs_dim];
        }
        let mut mean = vec![0.0; self.obs_dim];
        for (s, _) in &self.pairs {
            for (m, v) in mean.iter_mut().zip(s) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n as f64;
        }
        let mut var = vec![0.0; self.obs_dim];
        for (s, _) in &self.pairs {
            for ((v, x), m) in var.iter_mut().zip(s).zip(&mean) {
                let d = x - m;
                *v += d * d;
            }
        }
        var.iter().map(|v| (v / n as f64).sqrt().max(floor)).collect()
    }

    /// Writes the set to a versioned binary file: header (env name, dims,
    /// pair count, episode boundaries, r_demo) followed by flat little-endian
    /// f64 records.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(std::fs::File::create(path)?);
        w.write_all(b"DRLEGDEM")?;
        w.write_u32::<LittleEndian>(1)?;
        let name = self.env_name.as_bytes();
        w.write_u32::<LittleEndian>(name.len() as u32)?;
        w.write_all(name)?;
        w.write_u32::<LittleEndian>(self.obs_dim as u32)?;
        w.write_u32::<LittleEndian>(self.act_dim as u32)?;
        w.write_u64::<LittleEndian>(self.pairs.len() as u64)?;
        w.write_u64::<LittleEndian>(self.episode_ends.len() as u64)?;
        for &end in &self.episode_ends {
            w.write_u64::<LittleEndian>(end as u64)?;
        }
        w.write_u8(u8::from(self.r_demo.is_some()))?;
        w.write_f64::<LittleEndian>(self.r_demo.unwrap_or(0.0))?;
        for (s, a) in &self.pairs {
            for v in s {
                w.write_f64::<LittleEndian>(*v)?;
            }
            for v in a {
                w.write_f64::<LittleEndian>(*v)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Loads a set written by [`DemoSet::save`], failing with the byte offset
    /// on any truncation or header inconsistency.
    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let mut r = CountingReader::new(BufReader::new(file));
        let fail = |r: &CountingReader<_>, msg: &str| Error::Parse {
            path: path.to_path_buf(),
            offset: r.offset(),
            message: msg.to_string(),
        };

        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(|_| fail(&r, "missing magic"))?;
        if &magic != b"DRLEGDEM" {
            return Err(fail(&r, "bad magic, not a demonstration file"));
        }
        let version = r.read_u32::<LittleEndian>().map_err(|_| fail(&r, "missing version"))?;
        if version != 1 {
            return Err(fail(&r, &format!("unsupported version {version}")));
        }
        let name_len = r.read_u32::<LittleEndian>().map_err(|_| fail(&r, "missing name length"))? as usize;
        let mut name = vec![0u8; name_len];
        r.read_exact(&mut name).map_err(|_| fail(&r, "truncated env name"))?;
        let env_name = String::from_utf8(name).map_err(|_| fail(&r, "env name is not utf-8"))?;
        let obs_dim = r.read_u32::<LittleEndian>().map_err(|_| fail(&r, "missing obs_dim"))? as usize;
        let act_dim = r.read_u32::<LittleEndian>().map_err(|_| fail(&r, "missing act_dim"))? as usize;
        if obs_dim == 0 || act_dim == 0 {
            return Err(fail(&r, "dimensions must be positive"));
        }
        let pair_count = r.read_u64::<LittleEndian>().map_err(|_| fail(&r, "missing pair count"))? as usize;
        let ep_count = r.read_u64::<LittleEndian>().map_err(|_| fail(&r, "missing episode count"))? as usize;
        let mut episode_ends = Vec::with_capacity(ep_count);
        for _ in 0..ep_count {
            episode_ends.push(
                r.read_u64::<LittleEndian>()
                    .map_err(|_| fail(&r, "truncated episode boundaries"))? as usize,
            );
        }
        if episode_ends.windows(2).any(|w| w[0] >= w[1])
            || episode_ends.last().is_some_and(|&e| e != pair_count)
        {
            return Err(fail(&r, "episode boundaries do not partition the pairs"));
        }
        let has_r = r.read_u8().map_err(|_| fail(&r, "missing r_demo flag"))? != 0;
        let r_demo_raw = r
            .read_f64::<LittleEndian>()
            .map_err(|_| fail(&r, "missing r_demo"))?;
        let mut pairs = Vec::with_capacity(pair_count);
        for i in 0..pair_count {
            let mut s = Vec::with_capacity(obs_dim);
            for _ in 0..obs_dim {
                s.push(
                    r.read_f64::<LittleEndian>()
                        .map_err(|_| fail(&r, &format!("truncated record {i}")))?,
                );
            }
            let mut a = Vec::with_capacity(act_dim);
            for _ in 0..act_dim {
                a.push(
                    r.read_f64::<LittleEndian>()
                        .map_err(|_| fail(&r, &format!("truncated record {i}")))?,
                );
            }
            pairs.push((s, a));
        }
        Ok(Self {
            env_name,
            obs_dim,
            act_dim,
            pairs,
            episode_ends,
            r_demo: has_r.then_some(r_demo_raw),
        })
    }

    /// Human-readable CSV export: one row per pair with its episode index.
    pub fn export_csv(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(std::fs::File::create(path)?);
        let mut header = vec!["episode".to_string()];
        header.extend((0..self.obs_dim).map(|i| format!("s{i}")));
        header.extend((0..self.act_dim).map(|i| format!("a{i}")));
        writeln!(w, "{}", header.join(","))?;
        let mut episode = 0usize;
        for (i, (s, a)) in self.pairs.iter().enumerate() {
            while episode < self.episode_ends.len() && i >= self.episode_ends[episode] {
                episode += 1;
            }
            let mut row = vec![episode.to_string()];
            row.extend(s.iter().map(|v| v.to_string()));
            row.extend(a.iter().map(|v| v.to_string()));
            writeln!(w, "{}", row.join(","))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Rolls expert episodes until `pair_budget` state-action pairs are stored.
///
/// `r_demo` averages the returns of episodes whose pairs were stored in
/// full. The final episode is cut off once the budget fills: it contributes
/// pairs but not return — unless it is the only episode, in which case it is
/// rolled to completion so its return can define `r_demo`. Collection fails
/// if no episode completes within `10 * pair_budget` steps (floored at one
/// full episode length, so tiny budgets can still finish an episode).
pub fn collect_demos(
    env: &mut dyn Env,
    expert: &dyn DeterministicPolicy,
    pair_budget: usize,
    rng: &mut Rng,
) -> Result<DemoSet> {
    if pair_budget == 0 {
        return Err(Error::InvalidArgument(
            "collect_demos: pair_budget must be >= 1".to_string(),
        ));
    }
    let spec = env.spec().clone();
    let step_limit = (10 * pair_budget).max(spec.max_episode_steps);
    let mut pairs: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(pair_budget);
    let mut episode_ends = Vec::new();
    let mut full_episode_returns: Vec<f64> = Vec::new();
    let mut cut_episode_return: Option<f64> = None;
    let mut steps_rolled = 0usize;

    while pairs.len() < pair_budget
        || (full_episode_returns.is_empty() && cut_episode_return.is_none())
    {
        let mut obs = env.reset(rng);
        let mut ep_return = 0.0;
        let mut ep_pairs = 0usize;
        let mut ep_cut = false;
        loop {
            if full_episode_returns.is_empty()
                && cut_episode_return.is_none()
                && steps_rolled >= step_limit
            {
                return Err(Error::Collection(format!(
                    "expert completed no episode within {step_limit} steps"
                )));
            }
            let action = expert.act(&obs);
            let step = env.step(&action)?;
            steps_rolled += 1;
            ep_return += step.transition.r;
            if pairs.len() < pair_budget {
                pairs.push((step.transition.s.clone(), step.transition.a.clone()));
                ep_pairs += 1;
            } else {
                ep_cut = true;
            }
            obs = step.transition.s_next.clone();
            if step.transition.done {
                if ep_cut {
                    cut_episode_return.get_or_insert(ep_return);
                } else {
                    full_episode_returns.push(ep_return);
                }
                break;
            }
            // Budget full and a return already known: cut this episode short.
            if pairs.len() >= pair_budget
                && (!full_episode_returns.is_empty() || cut_episode_return.is_some())
            {
                break;
            }
        }
        if ep_pairs > 0 {
            episode_ends.push(pairs.len());
        }
    }

    let r_demo = if full_episode_returns.is_empty() {
        cut_episode_return
    } else {
        Some(full_episode_returns.iter().sum::<f64>() / full_episode_returns.len() as f64)
    };

    Ok(DemoSet {
        env_name: spec.name.to_string(),
        obs_dim: spec.obs_dim,
        act_dim: spec.act_dim,
        pairs,
        episode_ends,
        r_demo,
    })
}

struct CountingReader<R> {
    inner: R,
    offset: u64,
}

impl<R: Read> CountingReader<R> {
    fn new(inner: R) -> Self {
        Self { inner, offset: 0 }
    }

    fn offset(&self) -> u64 {
        self.offset
    }
}

impl<R: Read> Read for CountingReader<R> {
    fn read(&mut self, buf: &mut [u8]) -> std::io::Result<usize> {
        let n = self.inner.read(buf)?;
        self.offset += n as u64;
        Ok(n)
    }
}
