//! Ring-buffer transition storage with attentive sampling: draw k·bs
//! entries uniformly without replacement, keep the bs whose stored state is
//! most cosine-similar to the current state.

use std::io::{Read, Write};

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::{ACTION_DIM, OBS_DIM};
use crate::error::{Error, Result};

pub const DEFAULT_CAPACITY: usize = 1_000_000;
pub const DEFAULT_BATCH_SIZE: usize = 512;
pub const DEFAULT_K: usize = 4;

pub const SNAPSHOT_MAGIC: [u8; 4] = *b"AERB";
pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AerConfig {
    pub capacity: usize,
    pub batch_size: usize,
    pub k: usize,
    /// Observation entries used for similarity; all of them when `None`.
    pub mask: Option<Vec<bool>>,
}

impl Default for AerConfig {
    fn default() -> Self {
        AerConfig { capacity: DEFAULT_CAPACITY, batch_size: DEFAULT_BATCH_SIZE, k: DEFAULT_K, mask: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub obs: Vec<f32>,
    pub action: Vec<f32>,
    pub reward: f32,
    pub next_obs: Vec<f32>,
    pub done: bool,
}

impl Transition {
    /// Converts environment values; precision drops to `f32`.
    pub fn from_f64(obs: &[f64], action: &[f64], reward: f64, next_obs: &[f64], done: bool) -> Self {
        let cast = |v: &[f64]| v.iter().map(|x| *x as f32).collect();
        Transition { obs: cast(obs), action: cast(action), reward: reward as f32, next_obs: cast(next_obs), done }
    }
}

/// a·b / (‖a‖‖b‖), or 0 when either vector has zero norm.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    Ok(cosine(a.iter().copied(), b.iter().copied()))
}

fn cosine(a: impl Iterator<Item = f64>, b: impl Iterator<Item = f64>) -> f64 {
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na.sqrt() * nb.sqrt())
    }
}

/// Fixed-capacity FIFO of transitions stored as flat `f32` arrays. Backing
/// storage grows with `count`, so a large capacity costs nothing up front.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayBuffer {
    capacity: usize,
    obs_dim: usize,
    action_dim: usize,
    count: usize,
    write_index: usize,
    obs: Vec<f32>,
    actions: Vec<f32>,
    rewards: Vec<f32>,
    next_obs: Vec<f32>,
    dones: Vec<bool>,
}

/// Result of one attentive draw, as slot indices.
#[derive(Debug, Clone, PartialEq)]
pub struct AerBatch {
    /// Selected slots, most similar first (ties by ascending slot).
    pub indices: Vec<usize>,
    /// The uniform pre-sample the selection was taken from, in draw order.
    pub presample: Vec<usize>,
    /// Similarity of each selected slot.
    pub similarities: Vec<f64>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        Self::with_dims(capacity, OBS_DIM, ACTION_DIM)
    }

    pub fn with_dims(capacity: usize, obs_dim: usize, action_dim: usize) -> Self {
        assert!(capacity > 0, "capacity must be positive");
        ReplayBuffer {
            capacity,
            obs_dim,
            action_dim,
            count: 0,
            write_index: 0,
            obs: Vec::new(),
            actions: Vec::new(),
            rewards: Vec::new(),
            next_obs: Vec::new(),
            dones: Vec::new(),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn write_index(&self) -> usize {
        self.write_index
    }

    pub fn obs_dim(&self) -> usize {
        self.obs_dim
    }

    pub fn push(&mut self, t: &Transition) -> Result<()> {
        if t.obs.len() != self.obs_dim || t.next_obs.len() != self.obs_dim {
            return Err(Error::LengthMismatch(t.obs.len().max(t.next_obs.len()), self.obs_dim));
        }
        if t.action.len() != self.action_dim {
            return Err(Error::LengthMismatch(t.action.len(), self.action_dim));
        }
        let finite = t.obs.iter().chain(&t.action).chain(&t.next_obs).all(|v| v.is_finite()) && t.reward.is_finite();
        if !finite {
            return Err(Error::InvalidConfig("transition holds non-finite values".into()));
        }
        let slot = self.write_index;
        if slot == self.dones.len() {
            self.obs.extend_from_slice(&t.obs);
            self.actions.extend_from_slice(&t.action);
            self.rewards.push(t.reward);
            self.next_obs.extend_from_slice(&t.next_obs);
            self.dones.push(t.done);
        } else {
            let (o, a) = (slot * self.obs_dim, slot * self.action_dim);
            self.obs[o..o + self.obs_dim].copy_from_slice(&t.obs);
            self.actions[a..a + self.action_dim].copy_from_slice(&t.action);
            self.rewards[slot] = t.reward;
            self.next_obs[o..o + self.obs_dim].copy_from_slice(&t.next_obs);
            self.dones[slot] = t.done;
        }
        self.write_index = (slot + 1) % self.capacity;
        self.count = (self.count + 1).min(self.capacity);
        Ok(())
    }

    pub fn obs_at(&self, slot: usize) -> &[f32] {
        &self.obs[slot * self.obs_dim..(slot + 1) * self.obs_dim]
    }

    pub fn get(&self, slot: usize) -> Option<Transition> {
        if slot >= self.count {
            return None;
        }
        let (o, a) = (slot * self.obs_dim, slot * self.action_dim);
        Some(Transition {
            obs: self.obs[o..o + self.obs_dim].to_vec(),
            action: self.actions[a..a + self.action_dim].to_vec(),
            reward: self.rewards[slot],
            next_obs: self.next_obs[o..o + self.obs_dim].to_vec(),
            done: self.dones[slot],
        })
    }

    /// Uniform draw of `n` distinct slots.
    pub fn sample_uniform(&self, n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<usize>> {
        if n > self.count || self.count == 0 {
            return Err(Error::InsufficientEntries { have: self.count, need: n });
        }
        Ok(index::sample(rng, self.count, n).into_vec())
    }

    /// Similarity of the stored state at `slot` to `state`, restricted to
    /// `mask` when given.
    pub fn similarity(&self, slot: usize, state: &[f64], mask: Option<&[bool]>) -> f64 {
        let stored = self.obs_at(slot).iter().map(|v| *v as f64);
        match mask {
            None => cosine(stored, state.iter().copied()),
            Some(m) => {
                let keep = |(i, v): (usize, f64)| m[i].then_some(v);
                cosine(stored.enumerate().filter_map(keep), state.iter().copied().enumerate().filter_map(keep))
            }
        }
    }

    /// Attentive draw of `bs` slots out of a uniform pre-sample of
    /// `min(k·bs, count)`.
    pub fn sample_aer(&self, state: &[f64], bs: usize, k: usize, seed: u64) -> Result<AerBatch> {
        self.sample_aer_masked(state, bs, k, None, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn sample_aer_masked(
        &self,
        state: &[f64],
        bs: usize,
        k: usize,
        mask: Option<&[bool]>,
        rng: &mut ChaCha8Rng,
    ) -> Result<AerBatch> {
        if state.len() != self.obs_dim {
            return Err(Error::LengthMismatch(state.len(), self.obs_dim));
        }
        if let Some(m) = mask {
            if m.len() != self.obs_dim {
                return Err(Error::LengthMismatch(m.len(), self.obs_dim));
            }
        }
        if k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        if bs == 0 || self.count < bs {
            return Err(Error::InsufficientEntries { have: self.count, need: bs });
        }
        let m = (k.saturating_mul(bs)).min(self.count);
        let presample = self.sample_uniform(m, rng)?;
        let mut scored: Vec<(f64, usize)> = presample.iter().map(|&s| (self.similarity(s, state, mask), s)).collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        scored.truncate(bs);
        Ok(AerBatch {
            indices: scored.iter().map(|x| x.1).collect(),
            similarities: scored.iter().map(|x| x.0).collect(),
            presample,
        })
    }

    /// Writes the little-endian snapshot: magic, version, capacity, count,
    /// write index, observation and action dims, then `count` records in slot
    /// order (obs, action, reward, next_obs as `f32`, done as one byte).
    pub fn write_snapshot(&self, mut w: impl Write) -> Result<()> {
        w.write_all(&SNAPSHOT_MAGIC)?;
        w.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
        for v in [self.capacity, self.count, self.write_index] {
            w.write_all(&(v as u64).to_le_bytes())?;
        }
        w.write_all(&(self.obs_dim as u32).to_le_bytes())?;
        w.write_all(&(self.action_dim as u32).to_le_bytes())?;
        let mut rec = Vec::with_capacity(4 * (2 * self.obs_dim + self.action_dim + 1) + 1);
        for slot in 0..self.count {
            rec.clear();
            let (o, a) = (slot * self.obs_dim, slot * self.action_dim);
            let floats = self.obs[o..o + self.obs_dim]
                .iter()
                .chain(&self.actions[a..a + self.action_dim])
                .chain(std::iter::once(&self.rewards[slot]))
                .chain(&self.next_obs[o..o + self.obs_dim]);
            for f in floats {
                rec.extend_from_slice(&f.to_le_bytes());
            }
            rec.push(self.dones[slot] as u8);
            w.write_all(&rec)?;
        }
        Ok(())
    }

    pub fn read_snapshot(mut r: impl Read) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if magic != SNAPSHOT_MAGIC {
            return Err(Error::Format("not a replay snapshot".into()));
        }
        let version = read_u32(&mut r)?;
        if version != SNAPSHOT_VERSION {
            return Err(Error::Format(format!("unsupported snapshot version {version}")));
        }
        let capacity = read_u64(&mut r)? as usize;
        let count = read_u64(&mut r)? as usize;
        let write_index = read_u64(&mut r)? as usize;
        let obs_dim = read_u32(&mut r)? as usize;
        let action_dim = read_u32(&mut r)? as usize;
        let consistent = capacity > 0
            && count <= capacity
            && write_index < capacity
            && (count == capacity || write_index == count);
        if !consistent {
            return Err(Error::Format(format!("inconsistent header: N={capacity} count={count} write={write_index}")));
        }
        let mut buf = ReplayBuffer::with_dims(capacity, obs_dim, action_dim);
        for _ in 0..count {
            read_f32s(&mut r, obs_dim, &mut buf.obs)?;
            read_f32s(&mut r, action_dim, &mut buf.actions)?;
            read_f32s(&mut r, 1, &mut buf.rewards)?;
            read_f32s(&mut r, obs_dim, &mut buf.next_obs)?;
            let mut d = [0u8; 1];
            r.read_exact(&mut d)?;
            buf.dones.push(match d[0] {
                0 => false,
                1 => true,
                other => return Err(Error::Format(format!("bad done byte {other}"))),
            });
        }
        buf.count = count;
        buf.write_index = write_index;
        Ok(buf)
    }
}

fn read_f32s(r: &mut impl Read, n: usize, out: &mut Vec<f32>) -> Result<()> {
    for _ in 0..n {
        let mut b = [0u8; 4];
        r.read_exact(&mut b)?;
        out.push(f32::from_le_bytes(b));
    }
    Ok(())
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(tag: f32, dim: usize) -> Transition {
        let mut obs = vec![0.0; dim];
        obs[0] = tag;
        Transition { obs: obs.clone(), action: vec![tag; 3], reward: tag, next_obs: obs, done: false }
    }

    #[test]
    fn fifo_overwrite() {
        let mut b = ReplayBuffer::with_dims(2, 4, 3);
        for tag in [1.0, 2.0, 3.0] {
            b.push(&t(tag, 4)).unwrap();
        }
        assert_eq!(b.len(), 2);
        let tags: Vec<f32> = (0..2).map(|s| b.get(s).unwrap().reward).collect();
        assert_eq!(tags, vec![3.0, 2.0]);
    }

    #[test]
    fn cosine_cases() {
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[1.0, 0.0]).unwrap(), 1.0);
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert_eq!(cosine_similarity(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 0.0);
        assert!(matches!(cosine_similarity(&[1.0], &[1.0, 2.0]), Err(Error::LengthMismatch(1, 2))));
    }

    #[test]
    fn picks_the_similar_entry() {
        let mut b = ReplayBuffer::with_dims(10, 3, 3);
        let mk = |o: Vec<f32>| Transition { obs: o.clone(), action: vec![0.0; 3], reward: 0.0, next_obs: o, done: false };
        b.push(&mk(vec![1.0, 0.0, 0.0])).unwrap();
        b.push(&mk(vec![0.0, 1.0, 0.0])).unwrap();
        let batch = b.sample_aer(&[1.0, 0.0, 0.0], 1, 2, 0).unwrap();
        assert_eq!(batch.indices, vec![0]);
    }

    #[test]
    fn insufficient_entries() {
        let b = ReplayBuffer::with_dims(10, 3, 3);
        assert!(matches!(b.sample_aer(&[1.0, 0.0, 0.0], 1, 4, 0), Err(Error::InsufficientEntries { have: 0, need: 1 })));
    }

    #[test]
    fn defaults() {
        let c = AerConfig::default();
        assert_eq!((c.capacity, c.batch_size, c.k), (1_000_000, 512, 4));
        let back: AerConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn snapshot_roundtrip() {
        let mut b = ReplayBuffer::with_dims(3, 4, 3);
        for tag in 0..5 {
            let mut tr = t(tag as f32 + 0.25, 4);
            tr.done = tag % 2 == 0;
            b.push(&tr).unwrap();
        }
        let mut bytes = Vec::new();
        b.write_snapshot(&mut bytes).unwrap();
        assert_eq!(bytes.len(), 4 + 4 + 24 + 8 + 3 * (4 * (4 + 3 + 1 + 4) + 1));
        assert_eq!(ReplayBuffer::read_snapshot(&bytes[..]).unwrap(), b);
        bytes[0] = b'X';
        assert!(matches!(ReplayBuffer::read_snapshot(&bytes[..]), Err(Error::Format(_))));
    }
}
