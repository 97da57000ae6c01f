//! Experiment orchestration: per (arm, seed) build the world, pre-fill,
//! train through the phases with transfer at each surge, evaluate frozen
//! policies, and export the results.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{AgentMode, BaselinePolicy, LearningAgent, ObsMode, PolicyKind, StateEncoder};
use crate::learn::DqnLearner;
use crate::lifelong::{transfer, RewardMonitor};
use crate::metrics::{aggregate, summarize, Interval, MetricsError, RunSummary};
use crate::rng::{Domain, Epoch, RngStreams};
use crate::scenario::{Arm, Scenario, TrainPhase};
use crate::topology::Topology;
use crate::world::{Controller, EventLog, RewardPoint, World, WorldError};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid scenario:\n  {}", .0.join("\n  "))]
    ConfigInvalid(Vec<String>),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("{0}")]
    Io(String),
}

/// Shared inputs of every arm for one seed.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub scenario: Scenario,
    pub seed: u64,
    pub streams: RngStreams,
    pub topo: Topology,
}

impl RunContext {
    pub fn new(scenario: &Scenario, seed: u64) -> Result<Self, HarnessError> {
        let topo = scenario
            .topology_for(seed)
            .map_err(|e| HarnessError::ConfigInvalid(vec![e]))?;
        Ok(Self {
            scenario: scenario.clone(),
            seed,
            streams: RngStreams::new(seed),
            topo,
        })
    }

    fn mode(&self, arm: Arm) -> ObsMode {
        arm.observation().unwrap_or(ObsMode::Realtime)
    }

    fn world(&self, arm: Arm, controller: Controller, epoch: Epoch) -> Result<World, HarnessError> {
        let cfg = self.scenario.world_config(self.mode(arm));
        Ok(World::new(self.topo.clone(), cfg, controller, &self.streams, epoch)?)
    }

    pub fn crl_host(&self) -> usize {
        self.scenario
            .crl_host
            .or_else(|| self.topo.most_central_fog())
            .expect("topology has a fog node")
    }
}

/// Fresh controller for `arm`: untrained learners or a baseline.
pub fn build_controller(ctx: &RunContext, arm: Arm) -> Controller {
    let cfg = ctx.scenario.dqn_config();
    let aps = ctx.topo.aps();
    match arm.policy() {
        PolicyKind::Drl => {
            let agents = aps
                .iter()
                .enumerate()
                .map(|(i, &ap)| {
                    let candidates = ctx
                        .topo
                        .region_of(ap)
                        .map_or_else(|| ctx.topo.fogs(), |r| r.candidate_fog_ids.clone());
                    let k = candidates.len();
                    let rng = ctx.streams.stream(Domain::Agent, i as u64);
                    let learner = DqnLearner::new(StateEncoder::distributed_dim(k), k, cfg.clone(), rng);
                    LearningAgent::new(candidates, 1, learner)
                })
                .collect();
            Controller::Distributed {
                agents,
                agent_of_ap: (0..aps.len()).collect(),
            }
        }
        PolicyKind::Crl => {
            let fogs = ctx.topo.fogs();
            let dim = StateEncoder::centralized_dim(aps.len(), fogs.len());
            let rng = ctx.streams.stream(Domain::Agent, 1 << 32);
            let learner = DqnLearner::new(dim, fogs.len(), cfg, rng);
            Controller::Centralized {
                agent: LearningAgent::new(fogs, 1 + aps.len(), learner),
                host: ctx.crl_host(),
            }
        }
        kind => Controller::Baseline {
            policy: BaselinePolicy::new(kind, aps.len()),
            rng: ctx.streams.stream(Domain::Baseline, 0),
        },
    }
}

/// Fills every learner's buffer with random-policy interactions in a world
/// of its own.
pub fn prefill(ctx: &RunContext, arm: Arm, mut controller: Controller, beta: f64) -> Result<Controller, HarnessError> {
    let per_agent = ctx.scenario.dqn_config().prefill_records() as u64;
    let n_agents = controller.agents().len() as u64;
    if per_agent == 0 || n_agents == 0 {
        return Ok(controller);
    }
    for a in controller.agents_mut() {
        a.begin(AgentMode::Prefill, 1, 1.0);
    }
    let mut w = ctx.world(arm, controller, Epoch::Prefill)?;
    w.start(beta, f64::INFINITY)?;
    w.run_while(|w| w.decisions < per_agent * n_agents)?;
    Ok(w.controller)
}

/// One training phase as observed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseTrace {
    pub beta: f64,
    pub start_time: f64,
    pub end_time: f64,
    pub decisions: u64,
    pub rewards: Vec<RewardPoint>,
    /// Per agent, whether its reward window had saturated at phase end.
    pub converged: Vec<bool>,
    /// Per agent, whether the first window after a surge fell below the
    /// previous phase's converged mean.
    pub degraded: Vec<bool>,
}

impl PhaseTrace {
    /// Mean reward per episode of `episode_seconds`.
    pub fn episode_means(&self, episode_seconds: f64) -> Vec<(usize, u64, f64)> {
        let mut out: Vec<(usize, u64, f64)> = Vec::new();
        for r in &self.rewards {
            let e = ((r.time - self.start_time) / episode_seconds).floor().max(0.0) as usize;
            match out.last_mut() {
                Some(last) if last.0 == e => {
                    last.1 += 1;
                    last.2 += r.reward;
                }
                _ => out.push((e, 1, r.reward)),
            }
        }
        for o in &mut out {
            o.2 /= o.1 as f64;
        }
        out
    }
}

/// How each phase starts.
#[derive(Debug, Clone)]
pub enum PhaseStart {
    /// Continue with the current learners at this exploration rate.
    Fresh { eps_start: f64 },
    /// Transfer every learner first, then explore from this rate.
    Transfer { eps_start: f64 },
    /// Swap in the given learners, one per agent.
    Replace { learners: Vec<DqnLearner>, eps_start: f64 },
}

/// Trains `controller` through `phases` in one continuous world.
pub fn train(
    ctx: &RunContext,
    arm: Arm,
    controller: Controller,
    phases: &[(TrainPhase, PhaseStart)],
) -> Result<(Controller, Vec<PhaseTrace>), HarnessError> {
    let n_agents = controller.agents().len();
    if n_agents == 0 || phases.is_empty() {
        return Ok((controller, Vec::new()));
    }
    let mon = &ctx.scenario.monitor;
    let x = ctx.scenario.transfer_experiences();
    let mut w = ctx.world(arm, controller, Epoch::Train)?;
    w.trace_rewards = true;
    w.start(phases[0].0.beta, f64::INFINITY)?;
    let mut traces = Vec::with_capacity(phases.len());
    let mut baselines: Vec<Option<f64>> = vec![None; n_agents];
    for (pi, (phase, start)) in phases.iter().enumerate() {
        let eps = match start {
            PhaseStart::Fresh { eps_start } => *eps_start,
            PhaseStart::Transfer { eps_start } => {
                for a in w.controller.agents_mut() {
                    let next = transfer(a.learner().expect("learning agent"), x, pi as u32);
                    a.replace_learner(next);
                }
                *eps_start
            }
            PhaseStart::Replace { learners, eps_start } => {
                assert_eq!(learners.len(), n_agents, "one learner per agent");
                for (a, l) in w.controller.agents_mut().iter_mut().zip(learners) {
                    a.replace_learner(l.clone());
                }
                *eps_start
            }
        };
        // Phase length counts decisions per AP, so the centralized agent,
        // acting for every AP, trains over the same simulated time.
        let target = phase.steps * ctx.topo.aps().len() as u64;
        let per_agent = target / n_agents as u64;
        for a in w.controller.agents_mut() {
            a.begin(AgentMode::Train, per_agent, eps);
        }
        w.set_beta(phase.beta);
        w.reset_counters();
        let mut monitors: Vec<RewardMonitor> = (0..n_agents)
            .map(|_| {
                let mut m = RewardMonitor::new(mon.window);
                m.saturation_tol = mon.saturation_tol;
                m.degradation_tol = mon.degradation_tol;
                m
            })
            .collect();
        let mut degraded = vec![false; n_agents];
        let mut checked = vec![false; n_agents];
        let start_time = w.now().seconds();
        let mut fed = 0;
        loop {
            let chunk = (w.decisions + mon.window as u64).min(target);
            w.run_while(|w| w.decisions < chunk)?;
            for r in &w.rewards[fed..] {
                let i = r.agent as usize;
                monitors[i].push(r.reward);
                if !checked[i] && monitors[i].is_full() {
                    checked[i] = true;
                    if let Some(b) = baselines[i] {
                        degraded[i] = monitors[i].detect_degradation(b);
                    }
                }
            }
            fed = w.rewards.len();
            let converged = monitors
                .iter()
                .all(|m| m.detect_convergence().unwrap_or(false));
            if w.decisions >= target || (mon.pause_on_convergence && converged) {
                break;
            }
        }
        let converged: Vec<bool> = monitors
            .iter()
            .map(|m| m.detect_convergence().unwrap_or(false))
            .collect();
        for (i, m) in monitors.iter().enumerate() {
            baselines[i] = m.mean();
        }
        traces.push(PhaseTrace {
            beta: phase.beta,
            start_time,
            end_time: w.now().seconds(),
            decisions: w.decisions,
            rewards: std::mem::take(&mut w.rewards),
            converged,
            degraded,
        });
    }
    Ok((w.controller, traces))
}

/// Freezes learning agents into greedy inference models.
pub fn freeze(controller: &Controller) -> Controller {
    let frozen = |a: &LearningAgent| LearningAgent::frozen(a.candidates.clone(), a.queue_offset, a.freeze());
    match controller {
        Controller::Distributed {
            agents,
            agent_of_ap,
        } => Controller::Distributed {
            agents: agents.iter().map(frozen).collect(),
            agent_of_ap: agent_of_ap.clone(),
        },
        Controller::Centralized { agent, host } => Controller::Centralized {
            agent: frozen(agent),
            host: *host,
        },
        other => other.clone(),
    }
}

/// Runs the evaluation episode and returns its event log.
pub fn evaluate(ctx: &RunContext, arm: Arm, controller: Controller, beta: f64) -> Result<EventLog, HarnessError> {
    let horizon = ctx.scenario.eval_horizon_seconds();
    let mut w = ctx.world(arm, controller, Epoch::Eval)?;
    w.start(beta, horizon)?;
    w.run_until(horizon)?;
    w.check_conservation()?;
    Ok(w.event_log(horizon))
}

/// Phases of the scenario with transfer at every surge.
pub fn scenario_phases(s: &Scenario) -> Vec<(TrainPhase, PhaseStart)> {
    s.train_phases()
        .into_iter()
        .enumerate()
        .map(|(i, p)| {
            let start = if i == 0 {
                PhaseStart::Fresh {
                    eps_start: s.dqn.eps_start,
                }
            } else {
                PhaseStart::Transfer {
                    eps_start: s.transfer.eps_start,
                }
            };
            (p, start)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub seed: u64,
    pub arm: Arm,
    pub summary: RunSummary,
    #[serde(skip)]
    pub log: Option<EventLog>,
    #[serde(skip)]
    pub phases: Vec<PhaseTrace>,
}

/// The full pipeline for one (arm, seed).
pub fn run_arm(ctx: &RunContext, arm: Arm) -> Result<RunResult, HarnessError> {
    let s = &ctx.scenario;
    let mut controller = build_controller(ctx, arm);
    let mut traces = Vec::new();
    if arm.policy().is_learning() {
        let phases = scenario_phases(s);
        controller = prefill(ctx, arm, controller, phases[0].0.beta)?;
        let (trained, t) = train(ctx, arm, controller, &phases)?;
        traces = t;
        controller = freeze(&trained);
    }
    let log = evaluate(ctx, arm, controller, s.eval_beta())?;
    let summary = summarize(&log)?;
    Ok(RunResult {
        seed: ctx.seed,
        arm,
        summary,
        log: Some(log),
        phases: traces,
    })
}

/// Every (arm, seed) run, ordered by arm then seed.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub scenario: Scenario,
    pub runs: Vec<RunResult>,
}

pub fn run_experiment(scenario: &Scenario) -> Result<Experiment, HarnessError> {
    let d = scenario.validate();
    if !d.is_ok() {
        return Err(HarnessError::ConfigInvalid(d.errors));
    }
    let contexts: Vec<RunContext> = scenario
        .seeds
        .iter()
        .map(|&s| RunContext::new(scenario, s))
        .collect::<Result<_, _>>()?;
    let jobs: Vec<(Arm, &RunContext)> = scenario
        .arms
        .iter()
        .flat_map(|&a| contexts.iter().map(move |c| (a, c)))
        .collect();
    let runs = jobs
        .par_iter()
        .map(|&(arm, ctx)| run_arm(ctx, arm))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Experiment {
        scenario: scenario.clone(),
        runs,
    })
}

impl Experiment {
    pub fn runs_of(&self, arm: Arm) -> impl Iterator<Item = &RunResult> {
        self.runs.iter().filter(move |r| r.arm == arm)
    }

    /// Per arm, per metric intervals; arms with fewer than two seeds are
    /// skipped.
    pub fn aggregates(&self) -> Vec<(Arm, Vec<(&'static str, Interval)>)> {
        self.scenario
            .arms
            .iter()
            .filter_map(|&a| {
                let s: Vec<RunSummary> = self.runs_of(a).map(|r| r.summary.clone()).collect();
                aggregate(&s).ok().map(|agg| (a, agg))
            })
            .collect()
    }

    pub fn results_csv(&self) -> String {
        let mut out = String::from("seed,arm,metric,value\n");
        for r in &self.runs {
            for (name, v) in r.summary.metrics() {
                writeln!(out, "{},{},{},{}", r.seed, r.arm, name, v).unwrap();
            }
        }
        out
    }

    pub fn aggregate_csv(&self) -> String {
        let mut out = String::from("arm,metric,mean,ci95_half_width,n\n");
        for (arm, rows) in self.aggregates() {
            for (name, iv) in rows {
                writeln!(out, "{arm},{name},{},{},{}", iv.mean, iv.half_width, iv.n).unwrap();
            }
        }
        out
    }

    pub fn curves_csv(&self) -> String {
        let ep = self.scenario.episode_seconds();
        let mut out = String::from("seed,arm,phase,beta,episode,rewards,mean_reward\n");
        for r in &self.runs {
            for (pi, p) in r.phases.iter().enumerate() {
                for (e, n, m) in p.episode_means(ep) {
                    writeln!(out, "{},{},{},{},{},{},{}", r.seed, r.arm, pi, p.beta, e, n, m).unwrap();
                }
            }
        }
        out
    }

    pub fn summary_json(&self) -> String {
        #[derive(Serialize)]
        struct Doc<'a> {
            runs: &'a [RunResult],
        }
        serde_json::to_string_pretty(&Doc { runs: &self.runs }).expect("summary serializes")
    }

    /// Writes results, aggregates, curves, the summary tree and one event
    /// log per run under `dir`.
    pub fn write(&self, dir: &Path) -> Result<(), HarnessError> {
        let io = |e: std::io::Error| HarnessError::Io(format!("{}: {e}", dir.display()));
        fs::create_dir_all(dir.join("logs")).map_err(io)?;
        fs::write(dir.join("results.csv"), self.results_csv()).map_err(io)?;
        fs::write(dir.join("aggregate.csv"), self.aggregate_csv()).map_err(io)?;
        fs::write(dir.join("curves.csv"), self.curves_csv()).map_err(io)?;
        fs::write(dir.join("summary.json"), self.summary_json()).map_err(io)?;
        for r in &self.runs {
            if let Some(log) = &r.log {
                let name = format!("eval_{}_seed{}.json", r.arm, r.seed);
                let text = serde_json::to_string(log).expect("log serializes");
                fs::write(dir.join("logs").join(name), text).map_err(io)?;
            }
        }
        Ok(())
    }
}

/// Loads a persisted event log and recomputes its summary.
pub fn replay(path: &Path) -> Result<RunSummary, HarnessError> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
    let log: EventLog = serde_json::from_str(&text).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
    Ok(summarize(&log)?)
}
