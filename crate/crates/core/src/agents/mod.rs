//! Load-balancing decision makers: learning agents (one per AP, or a single
//! centralized one) and the non-learning baselines.

mod baselines;
mod observe;

pub use baselines::{eta, BaselinePolicy};
pub use observe::{Delivery, FogObs, ObsMode, ObservationModel, SnapshotLog};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::learn::{epsilon, DqnLearner, LearnError, StepRecord};
use crate::lifelong::InferenceModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    Drl,
    Crl,
    Random,
    Drr,
    Nearest,
    Fastest,
}

impl PolicyKind {
    pub fn is_learning(self) -> bool {
        matches!(self, Self::Drl | Self::Crl)
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Drl => "DRL",
            Self::Crl => "CRL",
            Self::Random => "Random",
            Self::Drr => "DRR",
            Self::Nearest => "Nearest",
            Self::Fastest => "Fastest",
        }
    }
}

/// Scales raw observations into network inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StateEncoder {
    pub queue_cap: f64,
    pub instr_scale: f64,
}

impl Default for StateEncoder {
    fn default() -> Self {
        Self {
            queue_cap: 100.0,
            instr_scale: 1e4,
        }
    }
}

impl StateEncoder {
    pub fn queue(&self, q: usize) -> f64 {
        (q as f64 / self.queue_cap).min(1.0)
    }

    pub fn distributed_dim(candidates: usize) -> usize {
        1 + candidates
    }

    pub fn centralized_dim(aps: usize, fogs: usize) -> usize {
        1 + aps + fogs
    }

    /// `(w, queues over candidates)`.
    pub fn distributed(&self, instructions: f64, candidates: &[usize], view: &[FogObs]) -> Vec<f64> {
        let mut s = Vec::with_capacity(1 + candidates.len());
        s.push(instructions / self.instr_scale);
        s.extend(candidates.iter().map(|&f| self.queue(view[f].queue_len)));
        s
    }

    /// `(w, AP one-hot, queues over all fog nodes)`.
    pub fn centralized(
        &self,
        instructions: f64,
        ap_pos: usize,
        n_aps: usize,
        fogs: &[usize],
        view: &[FogObs],
    ) -> Vec<f64> {
        let mut s = vec![0.0; 1 + n_aps];
        s[0] = instructions / self.instr_scale;
        s[1 + ap_pos] = 1.0;
        s.extend(fogs.iter().map(|&f| self.queue(view[f].queue_len)));
        s
    }
}

/// Reward for having picked `node`: its queue length as observed, negated.
pub fn reward_for(view: &[FogObs], node: usize) -> f64 {
    -(view[node].queue_len as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgentMode {
    /// Uniform random actions, recorded without training.
    Prefill,
    Train,
    /// Greedy, nothing recorded.
    Eval,
}

#[derive(Debug, Clone)]
pub enum Brain {
    Learner(Box<DqnLearner>),
    Frozen(InferenceModel),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub action: usize,
    pub node: usize,
    /// Raw reward for the previous action, if any.
    pub reward: Option<f64>,
    pub loss: Option<f64>,
}

/// A decision maker bound to a fixed candidate list. The queue entries of
/// its state start at `queue_offset`.
#[derive(Debug, Clone)]
pub struct LearningAgent {
    pub candidates: Vec<usize>,
    pub queue_offset: usize,
    pub brain: Brain,
    mode: AgentMode,
    prev_action: Option<usize>,
    break_next: bool,
    phase_decisions: u64,
    phase_steps: u64,
    eps_start: f64,
}

impl LearningAgent {
    pub fn new(candidates: Vec<usize>, queue_offset: usize, learner: DqnLearner) -> Self {
        assert_eq!(learner.actions(), candidates.len());
        let eps_start = learner.cfg.eps_start;
        Self {
            candidates,
            queue_offset,
            brain: Brain::Learner(Box::new(learner)),
            mode: AgentMode::Train,
            prev_action: None,
            break_next: true,
            phase_decisions: 0,
            phase_steps: 1,
            eps_start,
        }
    }

    pub fn frozen(candidates: Vec<usize>, queue_offset: usize, model: InferenceModel) -> Self {
        assert_eq!(model.network().output_dim(), candidates.len());
        Self {
            candidates,
            queue_offset,
            brain: Brain::Frozen(model),
            mode: AgentMode::Eval,
            prev_action: None,
            break_next: true,
            phase_decisions: 0,
            phase_steps: 1,
            eps_start: 0.0,
        }
    }

    pub fn mode(&self) -> AgentMode {
        self.mode
    }

    pub fn learner(&self) -> Option<&DqnLearner> {
        match &self.brain {
            Brain::Learner(l) => Some(l),
            Brain::Frozen(_) => None,
        }
    }

    pub fn learner_mut(&mut self) -> Option<&mut DqnLearner> {
        match &mut self.brain {
            Brain::Learner(l) => Some(l),
            Brain::Frozen(_) => None,
        }
    }

    pub fn phase_decisions(&self) -> u64 {
        self.phase_decisions
    }

    /// Starts a new stretch of decisions; the first one after this emits no
    /// transition.
    pub fn begin(&mut self, mode: AgentMode, phase_steps: u64, eps_start: f64) {
        assert!(
            mode == AgentMode::Eval || matches!(self.brain, Brain::Learner(_)),
            "frozen agents only evaluate"
        );
        self.mode = mode;
        self.phase_steps = phase_steps.max(1);
        self.eps_start = eps_start;
        self.phase_decisions = 0;
        self.prev_action = None;
        self.break_next = true;
    }

    pub fn epsilon(&self) -> f64 {
        match self.mode {
            AgentMode::Prefill => 1.0,
            AgentMode::Eval => 0.0,
            AgentMode::Train => {
                let end = self.learner().map_or(0.01, |l| l.cfg.eps_end);
                epsilon(self.phase_decisions, self.phase_steps, self.eps_start, end)
            }
        }
    }

    pub fn replace_learner(&mut self, learner: DqnLearner) {
        assert_eq!(learner.actions(), self.candidates.len());
        self.brain = Brain::Learner(Box::new(learner));
    }

    pub fn freeze(&self) -> InferenceModel {
        match &self.brain {
            Brain::Learner(l) => InferenceModel::extract(l),
            Brain::Frozen(m) => m.clone(),
        }
    }

    /// Chooses a candidate for `state`, recording the transition that ends
    /// here. `view` is the observation the state was built from.
    pub fn decide(&mut self, state: Vec<f64>, view: &[FogObs]) -> Result<Decision, LearnError> {
        let prev = self.prev_action.filter(|_| !self.break_next);
        let reward = prev.map(|a| reward_for(view, self.candidates[a]));
        let learn_reward = prev.map(|a| -state[self.queue_offset + a]);
        let eps = self.epsilon();
        let mode = self.mode;
        let mut loss = None;
        let action = match &mut self.brain {
            Brain::Frozen(m) => m.act(&state)?,
            Brain::Learner(l) => match mode {
                AgentMode::Eval => l.greedy(&state)?,
                AgentMode::Prefill => {
                    let a = l.rng.random_range(0..l.actions());
                    l.record(StepRecord {
                        state,
                        action: a,
                        reward: learn_reward,
                    });
                    a
                }
                AgentMode::Train => {
                    let a = l.act(&state, eps)?;
                    l.record(StepRecord {
                        state,
                        action: a,
                        reward: learn_reward,
                    });
                    loss = l.on_decision()?;
                    a
                }
            },
        };
        self.prev_action = Some(action);
        self.break_next = false;
        self.phase_decisions += 1;
        Ok(Decision {
            action,
            node: self.candidates[action],
            reward,
            loss,
        })
    }
}
