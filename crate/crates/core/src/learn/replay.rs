use rand::Rng;
use serde::{Deserialize, Serialize};

use super::LearnError;

/// One decision as stored in the buffer. `reward` is the reward observed on
/// arriving at `state`, i.e. the reward of the previous record's action;
/// `None` marks a break in the sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub state: Vec<f64>,
    pub action: usize,
    pub reward: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub next_state: Vec<f64>,
}

/// Row-major minibatch of stitched transitions.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TransitionBatch {
    pub dim: usize,
    pub states: Vec<f64>,
    pub actions: Vec<usize>,
    pub rewards: Vec<f64>,
    pub next_states: Vec<f64>,
}

impl TransitionBatch {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn clear(&mut self, dim: usize) {
        self.dim = dim;
        self.states.clear();
        self.actions.clear();
        self.rewards.clear();
        self.next_states.clear();
    }

    pub fn push(&mut self, t: &Transition) {
        assert_eq!(t.state.len(), self.dim);
        assert_eq!(t.next_state.len(), self.dim);
        self.states.extend_from_slice(&t.state);
        self.actions.push(t.action);
        self.rewards.push(t.reward);
        self.next_states.extend_from_slice(&t.next_state);
    }

    pub fn from_transitions(dim: usize, ts: &[Transition]) -> Self {
        let mut b = Self::default();
        b.clear(dim);
        for t in ts {
            b.push(t);
        }
        b
    }
}

/// Fixed-capacity ring of per-step records with uniform sampling.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    dim: usize,
    states: Vec<f64>,
    actions: Vec<usize>,
    rewards: Vec<Option<f64>>,
    inserted: u64,
    valid_pairs: usize,
}

impl ReplayBuffer {
    pub const DEFAULT_CAPACITY: usize = 1_000_000;

    pub fn new(capacity: usize, dim: usize) -> Self {
        assert!(capacity >= 2, "capacity must hold a pair");
        Self {
            capacity,
            dim,
            states: Vec::new(),
            actions: Vec::new(),
            rewards: Vec::new(),
            inserted: 0,
            valid_pairs: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn inserted(&self) -> u64 {
        self.inserted
    }

    /// Number of stitchable (record, successor) pairs currently stored.
    pub fn valid_pairs(&self) -> usize {
        self.valid_pairs
    }

    fn slot(&self, logical: usize) -> usize {
        let oldest = if self.len() < self.capacity {
            0
        } else {
            (self.inserted as usize) % self.capacity
        };
        (oldest + logical) % self.capacity
    }

    pub fn push(&mut self, rec: StepRecord) {
        assert_eq!(rec.state.len(), self.dim, "state width mismatch");
        let has_reward = rec.reward.is_some();
        if self.len() < self.capacity {
            if has_reward && !self.is_empty() {
                self.valid_pairs += 1;
            }
            self.states.extend_from_slice(&rec.state);
            self.actions.push(rec.action);
            self.rewards.push(rec.reward);
        } else {
            // the oldest record and its pair with the second oldest leave
            if self.rewards[self.slot(1)].is_some() {
                self.valid_pairs -= 1;
            }
            if has_reward {
                self.valid_pairs += 1;
            }
            let s = self.slot(0);
            self.states[s * self.dim..(s + 1) * self.dim].copy_from_slice(&rec.state);
            self.actions[s] = rec.action;
            self.rewards[s] = rec.reward;
        }
        self.inserted += 1;
    }

    /// Record at logical position `i`, oldest first.
    pub fn get(&self, i: usize) -> StepRecord {
        assert!(i < self.len());
        let s = self.slot(i);
        StepRecord {
            state: self.states[s * self.dim..(s + 1) * self.dim].to_vec(),
            action: self.actions[s],
            reward: self.rewards[s],
        }
    }

    /// Uniform logical index over stored records.
    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<usize> {
        (!self.is_empty()).then(|| rng.random_range(0..self.len()))
    }

    /// Draws `n` transitions uniformly over valid adjacent pairs, rejecting
    /// pairs whose successor starts a new sequence.
    pub fn sample_into<R: Rng + ?Sized>(
        &self,
        n: usize,
        rng: &mut R,
        out: &mut TransitionBatch,
    ) -> Result<(), LearnError> {
        if self.valid_pairs == 0 {
            return Err(LearnError::EmptyBuffer);
        }
        out.clear(self.dim);
        let d = self.dim;
        while out.len() < n {
            let i = rng.random_range(0..self.len() - 1);
            let (a, b) = (self.slot(i), self.slot(i + 1));
            let Some(r) = self.rewards[b] else { continue };
            out.states.extend_from_slice(&self.states[a * d..(a + 1) * d]);
            out.actions.push(self.actions[a]);
            out.rewards.push(r);
            out.next_states
                .extend_from_slice(&self.states[b * d..(b + 1) * d]);
        }
        Ok(())
    }

    pub fn sample_transitions<R: Rng + ?Sized>(
        &self,
        n: usize,
        rng: &mut R,
    ) -> Result<TransitionBatch, LearnError> {
        let mut out = TransitionBatch::default();
        self.sample_into(n, rng, &mut out)?;
        Ok(out)
    }

    /// The `x` most recent records, oldest first.
    pub fn recent(&self, x: usize) -> Vec<StepRecord> {
        let k = x.min(self.len());
        (self.len() - k..self.len()).map(|i| self.get(i)).collect()
    }

    pub fn clear(&mut self) {
        self.states.clear();
        self.actions.clear();
        self.rewards.clear();
        self.inserted = 0;
        self.valid_pairs = 0;
    }
}
