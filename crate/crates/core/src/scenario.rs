//! Experiment configuration: what to simulate, which arms to compare and
//! how long to train and evaluate.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::agents::{Delivery, ObsMode, ObservationModel, PolicyKind, StateEncoder};
use crate::learn::DqnConfig;
use crate::rng::RngStreams;
use crate::sim::ServiceMode;
use crate::topology::{Role, Topology, TopologySpec};
use crate::workload::{GenerationSchedule, Phase};
use crate::world::WorldConfig;

/// One compared configuration: a policy and, where it matters, the
/// observation mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Arm {
    pub policy: PolicyKindOrd,
    pub observation: Option<ObsModeOrd>,
}

/// Orderable wrappers so arms sort deterministically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PolicyKindOrd(pub u8);
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ObsModeOrd(pub u8);

const KINDS: [PolicyKind; 6] = [
    PolicyKind::Drl,
    PolicyKind::Crl,
    PolicyKind::Random,
    PolicyKind::Drr,
    PolicyKind::Nearest,
    PolicyKind::Fastest,
];

impl Arm {
    pub fn new(policy: PolicyKind, observation: Option<ObsMode>) -> Self {
        let observation = match (policy, observation) {
            (PolicyKind::Drl | PolicyKind::Crl, None) => Some(ObsMode::Realtime),
            (PolicyKind::Random | PolicyKind::Drr | PolicyKind::Nearest, _) => None,
            (_, o) => o,
        };
        Self {
            policy: PolicyKindOrd(KINDS.iter().position(|&k| k == policy).unwrap() as u8),
            observation: observation.map(|o| ObsModeOrd(o as u8)),
        }
    }

    pub fn policy(&self) -> PolicyKind {
        KINDS[self.policy.0 as usize]
    }

    /// Observation mode this arm runs with; `None` defers to the scenario.
    pub fn observation(&self) -> Option<ObsMode> {
        self.observation.map(|o| match o.0 {
            0 => ObsMode::Realtime,
            _ => ObsMode::Interval,
        })
    }

    /// The eight arms of the full comparison.
    pub fn standard() -> Vec<Arm> {
        use ObsMode::*;
        use PolicyKind::*;
        vec![
            Arm::new(Drl, Some(Realtime)),
            Arm::new(Drl, Some(Interval)),
            Arm::new(Crl, Some(Realtime)),
            Arm::new(Crl, Some(Interval)),
            Arm::new(Random, None),
            Arm::new(Drr, None),
            Arm::new(Nearest, None),
            Arm::new(Fastest, None),
        ]
    }
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.policy().name())?;
        match self.observation() {
            Some(ObsMode::Realtime) => write!(f, "-realtime"),
            Some(ObsMode::Interval) => write!(f, "-interval"),
            None => Ok(()),
        }
    }
}

impl FromStr for Arm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let (p, o) = match s.split_once('-') {
            Some((p, o)) => (p, Some(o)),
            None => (s, None),
        };
        let policy = KINDS
            .iter()
            .copied()
            .find(|k| k.name().eq_ignore_ascii_case(p))
            .ok_or_else(|| format!("unknown policy {p:?}"))?;
        let observation = match o.map(str::to_ascii_lowercase).as_deref() {
            None => None,
            Some("realtime") => Some(ObsMode::Realtime),
            Some("interval") => Some(ObsMode::Interval),
            Some(other) => return Err(format!("unknown observation mode {other:?}")),
        };
        if observation.is_some() && matches!(policy, PolicyKind::Random | PolicyKind::Drr | PolicyKind::Nearest) {
            return Err(format!("{} takes no observation mode", policy.name()));
        }
        Ok(Arm::new(policy, observation))
    }
}

impl Serialize for Arm {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Arm {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransferConfig {
    /// Experiences carried over, as a share of buffer capacity.
    pub experience_fraction: f64,
    /// Exploration restart after a transfer.
    pub eps_start: f64,
}

impl Default for TransferConfig {
    fn default() -> Self {
        Self {
            experience_fraction: 0.1,
            eps_start: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonitorConfig {
    pub window: usize,
    pub saturation_tol: f64,
    pub degradation_tol: f64,
    /// End a phase early once every agent has converged.
    pub pause_on_convergence: bool,
}

impl Default for MonitorConfig {
    fn default() -> Self {
        Self {
            window: 1000,
            saturation_tol: 0.01,
            degradation_tol: 0.2,
            pause_on_convergence: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub seeds: Vec<u64>,
    pub arms: Vec<Arm>,
    pub topology: TopologySpec,
    /// Imported topology; replaces generation when set.
    pub topology_file: Option<PathBuf>,
    /// Training phases; `start_step` counts decision steps per AP.
    pub phases: Vec<Phase>,
    /// Length of the last phase, in decision steps per AP.
    pub train_steps_per_phase: u64,
    /// Reporting unit for learning curves, in simulation steps.
    pub episode_steps: u64,
    /// Evaluation horizon in simulation steps.
    pub eval_steps: u64,
    pub desk_scale: f64,
    pub step_seconds: f64,
    pub service_mode: ServiceMode,
    pub interval_s: f64,
    pub delivery: Delivery,
    pub encoder: StateEncoder,
    pub control_bytes: f64,
    pub control_contention: bool,
    /// Node hosting the centralized agent; defaults to the most central
    /// fog node.
    pub crl_host: Option<usize>,
    pub dqn: DqnConfig,
    pub transfer: TransferConfig,
    pub monitor: MonitorConfig,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            seeds: (0..10).collect(),
            arms: Arm::standard(),
            topology: TopologySpec::default(),
            topology_file: None,
            phases: GenerationSchedule::standard(30_000.0).phases().to_vec(),
            train_steps_per_phase: 30_000,
            episode_steps: 10_000,
            eval_steps: 100_000,
            desk_scale: 1.0,
            step_seconds: 1.0,
            service_mode: ServiceMode::Deterministic,
            interval_s: 3.0,
            delivery: Delivery::Instant,
            encoder: StateEncoder::default(),
            control_bytes: 100.0,
            control_contention: false,
            crl_host: None,
            dqn: DqnConfig::default(),
            transfer: TransferConfig::default(),
            monitor: MonitorConfig::default(),
        }
    }
}

/// Validation outcome: errors block a run, warnings do not.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
}

impl Diagnostics {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }
}

/// Phase as the harness runs it: intensity and length in decision steps
/// per AP.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainPhase {
    pub beta: f64,
    pub steps: u64,
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    fn scaled(&self, x: f64) -> u64 {
        (x * self.desk_scale).round().max(1.0) as u64
    }

    /// Training phases after desk scaling.
    pub fn train_phases(&self) -> Vec<TrainPhase> {
        let mut out = Vec::with_capacity(self.phases.len());
        for (i, p) in self.phases.iter().enumerate() {
            let len = match self.phases.get(i + 1) {
                Some(next) => next.start_step - p.start_step,
                None => self.train_steps_per_phase as f64,
            };
            out.push(TrainPhase {
                beta: p.beta,
                steps: self.scaled(len),
            });
        }
        out
    }

    /// Intensity of the evaluation episode: the last phase's.
    pub fn eval_beta(&self) -> f64 {
        self.phases.last().map_or(100.0, |p| p.beta)
    }

    pub fn eval_horizon_seconds(&self) -> f64 {
        self.scaled(self.eval_steps as f64) as f64 * self.step_seconds
    }

    pub fn episode_seconds(&self) -> f64 {
        self.scaled(self.episode_steps as f64) as f64 * self.step_seconds
    }

    /// Learner settings after desk scaling.
    pub fn dqn_config(&self) -> DqnConfig {
        let mut c = self.dqn.clone();
        c.buffer_capacity = self.scaled(c.buffer_capacity as f64).max(2) as usize;
        c.target_sync = self.scaled(c.target_sync as f64);
        c
    }

    pub fn transfer_experiences(&self) -> usize {
        (self.transfer.experience_fraction * self.dqn_config().buffer_capacity as f64).round() as usize
    }

    pub fn world_config(&self, mode: ObsMode) -> WorldConfig {
        WorldConfig {
            service_mode: self.service_mode,
            step_seconds: self.step_seconds,
            observation: ObservationModel {
                mode,
                interval_s: self.interval_s,
                delivery: self.delivery,
            },
            encoder: self.encoder,
            control_bytes: self.control_bytes,
            control_contention: self.control_contention,
        }
    }

    /// The topology every arm of `seed` runs on.
    pub fn topology_for(&self, seed: u64) -> Result<Topology, String> {
        match &self.topology_file {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| format!("topology_file {}: {e}", path.display()))?;
                Topology::from_json(&text).map_err(|e| format!("topology_file: {e}"))
            }
            None => Topology::generate(&self.topology, &RngStreams::new(seed))
                .map_err(|e| format!("topology (seed {seed}): {e}")),
        }
    }

    pub fn validate(&self) -> Diagnostics {
        let mut d = Diagnostics::default();
        let mut err = |m: String| d.errors.push(m);
        if self.seeds.is_empty() {
            err("seeds: at least one seed is required".into());
        }
        if self.arms.is_empty() {
            err("arms: at least one arm is required".into());
        }
        if let Err(e) = GenerationSchedule::new(self.phases.clone()) {
            err(format!("phases: {e}"));
        }
        if self.phases.iter().any(|p| !(p.beta > 0.0)) {
            err("phases: beta must be positive".into());
        }
        if !(self.interval_s > 0.0 && self.interval_s.is_finite()) {
            err("interval_s: interval must be positive".into());
        }
        if !(self.step_seconds > 0.0 && self.step_seconds.is_finite()) {
            err("step_seconds: must be positive".into());
        }
        if !(self.desk_scale > 0.0 && self.desk_scale.is_finite()) {
            err("desk_scale: must be positive".into());
        }
        if self.train_steps_per_phase == 0 {
            err("train_steps_per_phase: must be positive".into());
        }
        if self.eval_steps == 0 {
            err("eval_steps: must be positive".into());
        }
        if self.episode_steps == 0 {
            err("episode_steps: must be positive".into());
        }
        if !(self.encoder.queue_cap > 0.0) || !(self.encoder.instr_scale > 0.0) {
            err("encoder: scales must be positive".into());
        }
        if self.control_bytes < 0.0 {
            err("control_bytes: must be non-negative".into());
        }
        let q = &self.dqn;
        if q.hidden.is_empty() || q.hidden.contains(&0) {
            err("dqn.hidden: layer widths must be positive".into());
        }
        if !(q.learning_rate > 0.0) {
            err("dqn.learning_rate: must be positive".into());
        }
        if !(0.0..=1.0).contains(&q.gamma) {
            err("dqn.gamma: must lie in [0, 1]".into());
        }
        if q.batch_size == 0 || q.train_every == 0 || q.target_sync == 0 {
            err("dqn: batch_size, train_every and target_sync must be positive".into());
        }
        if !(0.0..=1.0).contains(&q.prefill_fraction) {
            err("dqn.prefill_fraction: must lie in [0, 1]".into());
        }
        if !(0.0..=1.0).contains(&q.eps_start) || !(0.0..=1.0).contains(&q.eps_end) {
            err("dqn: exploration rates must lie in [0, 1]".into());
        }
        if !(0.0..=1.0).contains(&self.transfer.experience_fraction) {
            err("transfer.experience_fraction: must lie in [0, 1]".into());
        }
        if self.monitor.window < 2 {
            err("monitor.window: must be at least 2".into());
        }
        if d.errors.is_empty() {
            let seeds: Vec<u64> = if self.topology_file.is_some() {
                self.seeds.iter().copied().take(1).collect()
            } else {
                self.seeds.clone()
            };
            for seed in seeds {
                match self.topology_for(seed) {
                    Ok(t) => {
                        if let Some(h) = self.crl_host {
                            if t.nodes.get(h).is_none_or(|n| n.role == Role::Ap) {
                                d.errors.push(format!("crl_host: node {h} is not a fog or cloud node"));
                            }
                        }
                    }
                    Err(e) => d.errors.push(e),
                }
            }
        }
        if self.desk_scale != 1.0 {
            d.warnings.push(format!(
                "desk_scale {} shrinks training, buffers and evaluation relative to the full-scale settings",
                self.desk_scale
            ));
        }
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{RegionDef, RegionLayout};

    #[test]
    fn defaults_are_full_scale() {
        let s = Scenario::default();
        assert_eq!(s.arms.len(), 8);
        let betas: Vec<f64> = s.train_phases().iter().map(|p| p.beta).collect();
        assert_eq!(betas, vec![200.0, 150.0, 100.0]);
        assert!(s.train_phases().iter().all(|p| p.steps == 30_000));
        assert_eq!(s.eval_beta(), 100.0);
        assert_eq!(s.eval_horizon_seconds(), 100_000.0);
        assert_eq!(s.seeds.len(), 10);
        let d = s.validate();
        assert!(d.is_ok(), "{:?}", d.errors);
        assert!(d.warnings.is_empty());
    }

    #[test]
    fn toml_round_trip() {
        let s = Scenario::default();
        let back = Scenario::from_toml(&s.to_toml()).unwrap();
        assert_eq!(back, s);
        let partial = Scenario::from_toml("seeds = [1, 2]\ndesk_scale = 0.1\narms = [\"DRL-interval\", \"Nearest\"]").unwrap();
        assert_eq!(partial.seeds, vec![1, 2]);
        assert_eq!(partial.arms[0].to_string(), "DRL-interval");
        assert!(Scenario::from_toml("bogus = 1").is_err());
    }

    #[test]
    fn arm_names() {
        for a in Arm::standard() {
            assert_eq!(a.to_string().parse::<Arm>().unwrap(), a);
        }
        assert!("Random-interval".parse::<Arm>().is_err());
        assert_eq!("drl".parse::<Arm>().unwrap().to_string(), "DRL-realtime");
        assert_eq!("Fastest-interval".parse::<Arm>().unwrap().to_string(), "Fastest-interval");
    }

    #[test]
    fn desk_scale_shrinks_lengths() {
        let s = Scenario {
            desk_scale: 0.1,
            ..Scenario::default()
        };
        assert!(s.train_phases().iter().all(|p| p.steps == 3000));
        assert_eq!(s.dqn_config().buffer_capacity, 100_000);
        assert_eq!(s.dqn_config().target_sync, 200);
        assert_eq!(s.dqn_config().prefill_records(), 10_000);
        assert_eq!(s.transfer_experiences(), 10_000);
        assert_eq!(s.validate().warnings.len(), 1);
    }

    #[test]
    fn diagnostics() {
        let s = Scenario {
            interval_s: 0.0,
            seeds: vec![0],
            ..Scenario::default()
        };
        let d = s.validate();
        assert!(d.errors.iter().any(|e| e.contains("interval must be positive")));
        let mut s = Scenario {
            seeds: vec![0],
            ..Scenario::default()
        };
        s.topology.regions = RegionLayout::Explicit {
            regions: vec![RegionDef {
                aps: vec![],
                fogs: vec![],
            }],
        };
        let d = s.validate();
        assert!(!d.is_ok());
    }
}
