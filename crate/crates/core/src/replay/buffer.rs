//! FIFO transition store with uniform minibatch sampling.

use std::collections::VecDeque;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::{Array1, Array2};

use crate::envs::Transition;
use crate::error::{Error, Result};
use crate::numerics::Rng;

/// Ring buffer of transitions; insertion beyond capacity evicts the oldest.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    obs_dim: usize,
    act_dim: usize,
    data: VecDeque<Transition>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, obs_dim: usize, act_dim: usize) -> Result<Self> {
        if capacity == 0 || obs_dim == 0 || act_dim == 0 {
            return Err(Error::InvalidArgument(
                "replay buffer capacity and dimensions must be positive".to_string(),
            ));
        }
        Ok(Self {
            capacity,
            obs_dim,
            act_dim,
            data: VecDeque::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn obs_dim(&self) -> usize {
        self.obs_dim
    }

    pub fn act_dim(&self) -> usize {
        self.act_dim
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.data.iter()
    }

    /// Stores a transition, evicting the oldest if the buffer is full.
    pub fn push(&mut self, t: Transition) -> Result<()> {
        if t.s.len() != self.obs_dim || t.s_next.len() != self.obs_dim {
            return Err(Error::DimensionMismatch {
                context: "ReplayBuffer::push observation",
                expected: self.obs_dim,
                got: t.s.len(),
            });
        }
        if t.a.len() != self.act_dim {
            return Err(Error::DimensionMismatch {
                context: "ReplayBuffer::push action",
                expected: self.act_dim,
                got: t.a.len(),
            });
        }
        if self.data.len() == self.capacity {
            self.data.pop_front();
        }
        self.data.push_back(t);
        Ok(())
    }

    /// `n` independent uniform draws with replacement.
    pub fn sample(&self, n: usize, rng: &mut Rng) -> Result<Vec<Transition>> {
        if self.data.is_empty() {
            return Err(Error::Usage("sample from an empty replay buffer".to_string()));
        }
        Ok((0..n)
            .map(|_| self.data[rng.index(self.data.len())].clone())
            .collect())
    }

    /// Samples a minibatch directly into the matrix form the learner consumes.
    pub fn sample_batch(&self, n: usize, rng: &mut Rng) -> Result<Batch> {
        if self.data.is_empty() {
            return Err(Error::Usage("sample from an empty replay buffer".to_string()));
        }
        let mut batch = Batch::zeros(n, self.obs_dim, self.act_dim);
        for i in 0..n {
            let t = &self.data[rng.index(self.data.len())];
            for j in 0..self.obs_dim {
                batch.s[[i, j]] = t.s[j];
                batch.s_next[[i, j]] = t.s_next[j];
            }
            for j in 0..self.act_dim {
                batch.a[[i, j]] = t.a[j];
            }
            batch.r[i] = t.r;
            batch.done[i] = if t.done { 1.0 } else { 0.0 };
        }
        Ok(batch)
    }

    /// Writes the buffer to a versioned little-endian binary file.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(std::fs::File::create(path)?);
        w.write_all(b"DRLEGBUF")?;
        w.write_u32::<LittleEndian>(1)?;
        w.write_u64::<LittleEndian>(self.capacity as u64)?;
        w.write_u32::<LittleEndian>(self.obs_dim as u32)?;
        w.write_u32::<LittleEndian>(self.act_dim as u32)?;
        w.write_u64::<LittleEndian>(self.data.len() as u64)?;
        for t in &self.data {
            for v in &t.s {
                w.write_f64::<LittleEndian>(*v)?;
            }
            for v in &t.a {
                w.write_f64::<LittleEndian>(*v)?;
            }
            w.write_f64::<LittleEndian>(t.r)?;
            for v in &t.s_next {
                w.write_f64::<LittleEndian>(*v)?;
            }
            w.write_u8(u8::from(t.done))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Loads a buffer previously written by [`ReplayBuffer::save`].
    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let mut r = CountingReader::new(BufReader::new(file));
        let fail = |r: &CountingReader<_>, msg: &str| Error::Parse {
            path: path.to_path_buf(),
            offset: r.offset(),
            message: msg.to_string(),
        };

        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)
            .map_err(|_| fail(&r, "missing magic"))?;
        if &magic != b"DRLEGBUF" {
            return Err(fail(&r, "bad magic, not a replay buffer file"));
        }
        let version = r.read_u32::<LittleEndian>().map_err(|_| fail(&r, "missing version"))?;
        if version != 1 {
            return Err(fail(&r, &format!("unsupported version {version}")));
        }
        let capacity = r.read_u64::<LittleEndian>().map_err(|_| fail(&r, "missing capacity"))? as usize;
        let obs_dim = r.read_u32::<LittleEndian>().map_err(|_| fail(&r, "missing obs_dim"))? as usize;
        let act_dim = r.read_u32::<LittleEndian>().map_err(|_| fail(&r, "missing act_dim"))? as usize;
        let count = r.read_u64::<LittleEndian>().map_err(|_| fail(&r, "missing count"))? as usize;
        if count > capacity {
            return Err(fail(&r, "record count exceeds capacity"));
        }
        let mut buffer = ReplayBuffer::new(capacity, obs_dim, act_dim)
            .map_err(|e| fail(&r, &e.to_string()))?;
        for i in 0..count {
            let read_vec = |n: usize, r: &mut CountingReader<_>| -> Result<Vec<f64>> {
                let mut v = Vec::with_capacity(n);
                for _ in 0..n {
                    v.push(
                        r.read_f64::<LittleEndian>()
                            .map_err(|_| fail(r, &format!("truncated record {i}")))?,
                    );
                }
                Ok(v)
            };
            let s = read_vec(obs_dim, &mut r)?;
            let a = read_vec(act_dim, &mut r)?;
            let reward = r
                .read_f64::<LittleEndian>()
                .map_err(|_| fail(&r, &format!("truncated record {i}")))?;
            let s_next = read_vec(obs_dim, &mut r)?;
            let done = r
                .read_u8()
                .map_err(|_| fail(&r, &format!("truncated record {i}")))?
                != 0;
            buffer.push(Transition {
                s,
                a,
                r: reward,
                s_next,
                done,
            })?;
        }
        Ok(buffer)
    }
}

/// A minibatch in matrix form: rows are samples. `done` holds 1.0/0.0 so it
/// can mask bootstrap targets directly.
#[derive(Debug, Clone)]
pub struct Batch {
    pub s: Array2<f64>,
    pub a: Array2<f64>,
    pub r: Array1<f64>,
    pub s_next: Array2<f64>,
    pub done: Array1<f64>,
}

impl Batch {
    pub fn zeros(n: usize, obs_dim: usize, act_dim: usize) -> Self {
        Self {
            s: Array2::zeros((n, obs_dim)),
            a: Array2::zeros((n, act_dim)),
            r: Array1::zeros(n),
            s_next: Array2::zeros((n, obs_dim)),
            done: Array1::zeros(n),
        }
    }

    pub fn from_transitions(ts: &[Transition]) -> Result<Self> {
        if ts.is_empty() {
            return Err(Error::InvalidArgument("empty batch".to_string()));
        }
        let (obs_dim, act_dim) = (ts[0].s.len(), ts[0].a.len());
        let mut batch = Batch::zeros(ts.len(), obs_dim, act_dim);
        for (i, t) in ts.iter().enumerate() {
            if t.s.len() != obs_dim || t.s_next.len() != obs_dim || t.a.len() != act_dim {
                return Err(Error::DimensionMismatch {
                    context: "Batch::from_transitions",
                    expected: obs_dim,
                    got: t.s.len(),
                });
            }
            for j in 0..obs_dim {
                batch.s[[i, j]] = t.s[j];
                batch.s_next[[i, j]] = t.s_next[j];
            }
            for j in 0..act_dim {
                batch.a[[i, j]] = t.a[j];
            }
            batch.r[i] = t.r;
            batch.done[i] = if t.done { 1.0 } else { 0.0 };
        }
        Ok(batch)
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }
}

/// Reader wrapper that tracks the byte offset for parse errors.
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
