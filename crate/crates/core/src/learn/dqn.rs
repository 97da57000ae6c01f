use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{huber, huber_grad, Adam, LearnError, Mlp, ReplayBuffer, StepRecord, TransitionBatch, Workspace};
use crate::rng::StreamRng;

/// Share of a phase over which exploration decays.
pub const DECAY_FRACTION: f64 = 0.75;

/// Linear decay from `eps_start` to `eps_end` over the first 75% of
/// `phase_steps`, constant afterwards.
pub fn epsilon(step: u64, phase_steps: u64, eps_start: f64, eps_end: f64) -> f64 {
    assert!(phase_steps > 0, "phase_steps must be positive");
    let horizon = DECAY_FRACTION * phase_steps as f64;
    let frac = step as f64 / horizon;
    if frac >= 1.0 {
        eps_end
    } else {
        eps_start + (eps_end - eps_start) * frac
    }
}

/// `r + gamma * Q_target(s', argmax_a Q_online(s', a))`.
pub fn ddql_target(
    r: f64,
    s_next: &[f64],
    online: &Mlp,
    target: &Mlp,
    gamma: f64,
) -> Result<f64, LearnError> {
    let a = Mlp::argmax(&online.forward(s_next)?);
    Ok(r + gamma * target.forward(s_next)?[a])
}

pub fn sync_target(online: &Mlp, target: &mut Mlp) {
    target.copy_from(online);
}

/// Reusable buffers for [`train_step`].
#[derive(Debug, Default, Clone)]
pub struct TrainScratch {
    ws: Workspace,
    ws_next: Workspace,
    targets: Vec<f64>,
    d_out: Vec<f64>,
    grad: Vec<f64>,
    pub batch: TransitionBatch,
}

impl TrainScratch {
    pub fn grad(&self) -> &[f64] {
        &self.grad
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }
}

/// Double-DQL targets for every transition in `batch`.
pub fn ddql_targets(
    batch: &TransitionBatch,
    online: &Mlp,
    target: &Mlp,
    gamma: f64,
    ws: &mut Workspace,
    out: &mut Vec<f64>,
) {
    let n = batch.len();
    let k = online.output_dim();
    let picks: Vec<usize> = online
        .forward_batch(&batch.next_states, n, ws)
        .chunks_exact(k)
        .map(Mlp::argmax)
        .collect();
    let q_next = target.forward_batch(&batch.next_states, n, ws);
    out.clear();
    out.extend((0..n).map(|i| batch.rewards[i] + gamma * q_next[i * k + picks[i]]));
}

/// Mean Huber loss of `Q(s, a)` against fixed `targets`, with its gradient
/// written to `grad`.
pub fn td_loss_and_grad(
    online: &Mlp,
    batch: &TransitionBatch,
    targets: &[f64],
    ws: &mut Workspace,
    d_out: &mut Vec<f64>,
    grad: &mut Vec<f64>,
) -> f64 {
    let n = batch.len();
    let k = online.output_dim();
    let q = online.forward_batch(&batch.states, n, ws);
    d_out.clear();
    d_out.resize(n * k, 0.0);
    let mut loss = 0.0;
    for i in 0..n {
        let e = q[i * k + batch.actions[i]] - targets[i];
        loss += huber(e);
        d_out[i * k + batch.actions[i]] = huber_grad(e) / n as f64;
    }
    grad.clear();
    grad.resize(online.num_params(), 0.0);
    online.backward(ws, d_out, grad);
    loss / n as f64
}

/// One Adam update of `online` on `batch`; `target` is only read.
pub fn train_step(
    online: &mut Mlp,
    target: &Mlp,
    batch: &TransitionBatch,
    adam: &mut Adam,
    gamma: f64,
    scratch: &mut TrainScratch,
) -> Result<f64, LearnError> {
    if batch.is_empty() {
        return Err(LearnError::EmptyBuffer);
    }
    ddql_targets(batch, online, target, gamma, &mut scratch.ws_next, &mut scratch.targets);
    let loss = td_loss_and_grad(
        online,
        batch,
        &scratch.targets,
        &mut scratch.ws,
        &mut scratch.d_out,
        &mut scratch.grad,
    );
    adam.step(online.params_mut(), &scratch.grad);
    Ok(loss)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DqnConfig {
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub gamma: f64,
    pub batch_size: usize,
    pub train_every: u64,
    pub target_sync: u64,
    pub buffer_capacity: usize,
    pub prefill_fraction: f64,
    pub eps_start: f64,
    pub eps_end: f64,
}

impl Default for DqnConfig {
    fn default() -> Self {
        Self {
            hidden: vec![256, 128, 64],
            learning_rate: Adam::DEFAULT_LR,
            gamma: 0.99,
            batch_size: 50,
            train_every: 4,
            target_sync: 2000,
            buffer_capacity: ReplayBuffer::DEFAULT_CAPACITY,
            prefill_fraction: 0.1,
            eps_start: 1.0,
            eps_end: 0.01,
        }
    }
}

impl DqnConfig {
    pub fn widths(&self, input: usize, actions: usize) -> Vec<usize> {
        let mut w = vec![input];
        w.extend(&self.hidden);
        w.push(actions);
        w
    }

    pub fn prefill_records(&self) -> usize {
        (self.prefill_fraction * self.buffer_capacity as f64).round() as usize
    }
}

/// One agent's learner: online and target networks, optimizer, replay and
/// the agent's own random stream.
#[derive(Debug, Clone)]
pub struct DqnLearner {
    pub cfg: DqnConfig,
    pub online: Mlp,
    pub target: Mlp,
    pub adam: Adam,
    pub buffer: ReplayBuffer,
    pub rng: StreamRng,
    scratch: TrainScratch,
    decisions: u64,
    updates: u64,
    last_loss: Option<f64>,
}

impl DqnLearner {
    pub fn new(input: usize, actions: usize, cfg: DqnConfig, mut rng: StreamRng) -> Self {
        let online = Mlp::new(&cfg.widths(input, actions), &mut rng);
        Self::from_network(online, cfg, rng)
    }

    /// Wraps existing parameters; the target starts as a copy.
    pub fn from_network(online: Mlp, cfg: DqnConfig, rng: StreamRng) -> Self {
        let target = online.clone();
        let adam = Adam::new(online.num_params(), cfg.learning_rate);
        let buffer = ReplayBuffer::new(cfg.buffer_capacity.max(2), online.input_dim());
        Self {
            cfg,
            online,
            target,
            adam,
            buffer,
            rng,
            scratch: TrainScratch::default(),
            decisions: 0,
            updates: 0,
            last_loss: None,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.online.input_dim()
    }

    pub fn actions(&self) -> usize {
        self.online.output_dim()
    }

    pub fn decisions(&self) -> u64 {
        self.decisions
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn last_loss(&self) -> Option<f64> {
        self.last_loss
    }

    pub fn q_values(&self, state: &[f64]) -> Result<Vec<f64>, LearnError> {
        self.online.forward(state)
    }

    pub fn greedy(&self, state: &[f64]) -> Result<usize, LearnError> {
        Ok(Mlp::argmax(&self.online.forward(state)?))
    }

    /// Epsilon-greedy choice using the learner's stream.
    pub fn act(&mut self, state: &[f64], eps: f64) -> Result<usize, LearnError> {
        if eps > 0.0 && self.rng.random::<f64>() < eps {
            Ok(self.rng.random_range(0..self.actions()))
        } else {
            self.greedy(state)
        }
    }

    pub fn record(&mut self, rec: StepRecord) {
        self.buffer.push(rec);
    }

    /// Counts a decision and runs any training or sync due at this count.
    pub fn on_decision(&mut self) -> Result<Option<f64>, LearnError> {
        self.decisions += 1;
        let mut loss = None;
        if self.decisions % self.cfg.train_every == 0 && self.buffer.valid_pairs() > 0 {
            loss = Some(self.train_once()?);
        }
        if self.decisions % self.cfg.target_sync == 0 {
            sync_target(&self.online, &mut self.target);
        }
        Ok(loss)
    }

    pub fn train_once(&mut self) -> Result<f64, LearnError> {
        let mut batch = std::mem::take(&mut self.scratch.batch);
        self.buffer
            .sample_into(self.cfg.batch_size, &mut self.rng, &mut batch)?;
        let loss = train_step(
            &mut self.online,
            &self.target,
            &batch,
            &mut self.adam,
            self.cfg.gamma,
            &mut self.scratch,
        );
        self.scratch.batch = batch;
        let loss = loss?;
        self.updates += 1;
        self.last_loss = Some(loss);
        Ok(loss)
    }

    pub fn reset_counters(&mut self) {
        self.decisions = 0;
    }
}
