//! Reward monitoring, transfer between load phases and frozen inference
//! models.

use std::collections::VecDeque;

use thiserror::Error;

use crate::learn::{DqnConfig, DqnLearner, LearnError, Mlp, StepRecord};
use crate::rng::StreamRng;

#[derive(Debug, Error, PartialEq)]
pub enum LifelongError {
    #[error("reward window holds {have} of {need} entries")]
    WindowNotFull { have: usize, need: usize },
    #[error(transparent)]
    Learn(#[from] LearnError),
}

/// Sliding window over recent per-decision rewards.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardMonitor {
    window: VecDeque<f64>,
    pub window_size: usize,
    pub saturation_tol: f64,
    pub degradation_tol: f64,
}

impl Default for RewardMonitor {
    fn default() -> Self {
        Self::new(1000)
    }
}

impl RewardMonitor {
    pub fn new(window_size: usize) -> Self {
        assert!(window_size >= 2, "window needs two halves");
        Self {
            window: VecDeque::with_capacity(window_size),
            window_size,
            saturation_tol: 0.01,
            degradation_tol: 0.2,
        }
    }

    pub fn push(&mut self, reward: f64) {
        if self.window.len() == self.window_size {
            self.window.pop_front();
        }
        self.window.push_back(reward);
    }

    pub fn len(&self) -> usize {
        self.window.len()
    }

    pub fn is_empty(&self) -> bool {
        self.window.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.window.len() == self.window_size
    }

    pub fn mean(&self) -> Option<f64> {
        (!self.window.is_empty()).then(|| self.window.iter().sum::<f64>() / self.window.len() as f64)
    }

    pub fn clear(&mut self) {
        self.window.clear();
    }

    /// True when the newer half of the window improves on the older half
    /// by less than `saturation_tol`, relative to the older half's mean.
    pub fn detect_convergence(&self) -> Result<bool, LifelongError> {
        if !self.is_full() {
            return Err(LifelongError::WindowNotFull {
                have: self.window.len(),
                need: self.window_size,
            });
        }
        let half = self.window_size / 2;
        let old: f64 = self.window.iter().take(half).sum::<f64>() / half as f64;
        let new_n = self.window_size - half;
        let new: f64 = self.window.iter().skip(half).sum::<f64>() / new_n as f64;
        let gain = new - old;
        let rel = if old == 0.0 { gain } else { gain / old.abs() };
        Ok(rel < self.saturation_tol)
    }

    /// True when the current mean cost exceeds `baseline_mean` by more than
    /// `degradation_tol` (rewards are non-positive).
    pub fn detect_degradation(&self, baseline_mean: f64) -> bool {
        match self.mean() {
            Some(m) => m < baseline_mean * (1.0 + self.degradation_tol),
            None => false,
        }
    }
}

/// Policy parameters plus the source's most recent experiences.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferPackage {
    pub params: Mlp,
    pub experiences: Vec<StepRecord>,
    pub source_phase: u32,
}

const PACKAGE_MAGIC: &[u8; 4] = b"FTRP";

impl TransferPackage {
    /// Reads the source without modifying it.
    pub fn from_learner(source: &DqnLearner, x: usize, source_phase: u32) -> Self {
        Self {
            params: source.online.clone(),
            experiences: source.buffer.recent(x),
            source_phase,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let net = self.params.to_bytes();
        let mut out = Vec::new();
        out.extend_from_slice(PACKAGE_MAGIC);
        out.extend_from_slice(&self.source_phase.to_le_bytes());
        out.extend_from_slice(&(net.len() as u64).to_le_bytes());
        out.extend_from_slice(&net);
        out.extend_from_slice(&(self.experiences.len() as u64).to_le_bytes());
        for e in &self.experiences {
            out.extend_from_slice(&(e.state.len() as u64).to_le_bytes());
            for v in &e.state {
                out.extend_from_slice(&v.to_le_bytes());
            }
            out.extend_from_slice(&(e.action as u64).to_le_bytes());
            match e.reward {
                Some(r) => {
                    out.push(1);
                    out.extend_from_slice(&r.to_le_bytes());
                }
                None => out.push(0),
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, LearnError> {
        let bad = |m: &str| LearnError::Snapshot(format!("transfer package: {m}"));
        let mut at = 0usize;
        let mut take = |n: usize| -> Result<&[u8], LearnError> {
            let s = bytes.get(at..at + n).ok_or_else(|| bad("truncated"))?;
            at += n;
            Ok(s)
        };
        if take(4)? != PACKAGE_MAGIC {
            return Err(bad("bad magic"));
        }
        let source_phase = u32::from_le_bytes(take(4)?.try_into().unwrap());
        let net_len = u64::from_le_bytes(take(8)?.try_into().unwrap()) as usize;
        let params = Mlp::from_bytes(take(net_len)?)?;
        let n = u64::from_le_bytes(take(8)?.try_into().unwrap()) as usize;
        let mut experiences = Vec::with_capacity(n.min(1 << 20));
        for _ in 0..n {
            let dim = u64::from_le_bytes(take(8)?.try_into().unwrap()) as usize;
            if dim != params.input_dim() {
                return Err(bad("state width"));
            }
            let mut state = Vec::with_capacity(dim);
            for _ in 0..dim {
                state.push(f64::from_le_bytes(take(8)?.try_into().unwrap()));
            }
            let action = u64::from_le_bytes(take(8)?.try_into().unwrap()) as usize;
            let reward = match take(1)?[0] {
                0 => None,
                1 => Some(f64::from_le_bytes(take(8)?.try_into().unwrap())),
                _ => return Err(bad("reward flag")),
            };
            experiences.push(StepRecord {
                state,
                action,
                reward,
            });
        }
        if at != bytes.len() {
            return Err(bad("trailing bytes"));
        }
        Ok(Self {
            params,
            experiences,
            source_phase,
        })
    }

    /// Builds the target learner: both networks copy the parameters, the
    /// buffer is seeded with the experiences, the optimizer starts fresh.
    pub fn into_learner(self, cfg: DqnConfig, rng: StreamRng) -> DqnLearner {
        let mut target = DqnLearner::from_network(self.params, cfg, rng);
        for e in self.experiences {
            target.record(e);
        }
        target
    }
}

/// Moves a learner across a phase boundary, keeping its random stream.
pub fn transfer(source: &DqnLearner, x: usize, source_phase: u32) -> DqnLearner {
    TransferPackage::from_learner(source, x, source_phase)
        .into_learner(source.cfg.clone(), source.rng.clone())
}

/// Forward-only greedy policy.
#[derive(Debug, Clone, PartialEq)]
pub struct InferenceModel {
    net: Mlp,
}

impl InferenceModel {
    pub fn extract(learner: &DqnLearner) -> Self {
        Self {
            net: learner.online.clone(),
        }
    }

    pub fn from_network(net: Mlp) -> Self {
        Self { net }
    }

    pub fn network(&self) -> &Mlp {
        &self.net
    }

    pub fn q_values(&self, state: &[f64]) -> Result<Vec<f64>, LearnError> {
        self.net.forward(state)
    }

    pub fn act(&self, state: &[f64]) -> Result<usize, LearnError> {
        Ok(Mlp::argmax(&self.net.forward(state)?))
    }

    pub fn train(&mut self) -> Result<f64, LearnError> {
        Err(LearnError::Frozen)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        self.net.to_bytes()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, LearnError> {
        Ok(Self {
            net: Mlp::from_bytes(bytes)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn filled(values: impl IntoIterator<Item = f64>, size: usize) -> RewardMonitor {
        let mut m = RewardMonitor::new(size);
        for v in values {
            m.push(v);
        }
        m
    }

    #[test]
    fn convergence_rules() {
        assert_eq!(filled(std::iter::repeat_n(-5.0, 100), 100).detect_convergence(), Ok(true));
        let ramp = (0..100).map(|i| -10.0 + 8.0 * i as f64 / 99.0);
        assert_eq!(filled(ramp, 100).detect_convergence(), Ok(false));
        assert_eq!(
            filled(std::iter::repeat_n(-1.0, 50), 100).detect_convergence(),
            Err(LifelongError::WindowNotFull { have: 50, need: 100 })
        );
    }

    #[test]
    fn window_keeps_latest() {
        let m = filled((0..10).map(|i| -(i as f64)), 4);
        assert_eq!(m.len(), 4);
        assert_eq!(m.mean(), Some(-7.5));
    }

    #[test]
    fn degradation_rules() {
        assert!(!filled([-4.1], 2).detect_degradation(-4.0));
        assert!(filled([-6.0], 2).detect_degradation(-4.0));
        assert!(!filled([-4.8], 2).detect_degradation(-4.0));
    }

    fn trained_learner() -> DqnLearner {
        let cfg = DqnConfig {
            hidden: vec![8],
            buffer_capacity: 50,
            train_every: 1,
            ..DqnConfig::default()
        };
        let mut l = DqnLearner::new(3, 2, cfg, StreamRng::seed_from_u64(3));
        for i in 0..30 {
            l.record(StepRecord {
                state: vec![i as f64, 0.5, -0.5],
                action: i % 2,
                reward: (i % 7 != 0).then_some(-(i as f64)),
            });
            l.on_decision().unwrap();
        }
        l
    }

    #[test]
    fn transfer_copies_policy_and_recent_experience() {
        let source = trained_learner();
        let before = source.buffer.recent(usize::MAX);
        let target = transfer(&source, 10, 0);
        let mut rng = StreamRng::seed_from_u64(1);
        for _ in 0..20 {
            let s: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
            assert_eq!(source.q_values(&s).unwrap(), target.q_values(&s).unwrap());
            assert_eq!(target.target.forward(&s).unwrap(), target.q_values(&s).unwrap());
        }
        assert_eq!(target.buffer.len(), 10);
        assert_eq!(target.buffer.recent(10), source.buffer.recent(10));
        assert_eq!(target.adam.steps(), 0);
        assert_eq!(source.buffer.recent(usize::MAX), before);
        assert_eq!(transfer(&source, 500, 0).buffer.len(), 30);
    }

    #[test]
    fn package_round_trip() {
        let pkg = TransferPackage::from_learner(&trained_learner(), 12, 2);
        let back = TransferPackage::from_bytes(&pkg.to_bytes()).unwrap();
        assert_eq!(back, pkg);
        let bytes = pkg.to_bytes();
        assert!(TransferPackage::from_bytes(&bytes[..bytes.len() - 3]).is_err());
    }

    #[test]
    fn frozen_model_matches_greedy_learner() {
        let learner = trained_learner();
        let mut model = InferenceModel::extract(&learner);
        let mut rng = StreamRng::seed_from_u64(8);
        for _ in 0..10_000 {
            let s: Vec<f64> = (0..3).map(|_| rng.random_range(-5.0..5.0)).collect();
            assert_eq!(model.act(&s).unwrap(), learner.greedy(&s).unwrap());
        }
        let back = InferenceModel::from_bytes(&model.to_bytes()).unwrap();
        assert_eq!(back, model);
        assert_eq!(model.train(), Err(LearnError::Frozen));
    }
}
