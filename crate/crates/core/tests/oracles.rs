mod common;

use common::{brute_betweenness, graph_corpus, single_station_wait};
use fogmarl::agents::{BaselinePolicy, ObsMode, PolicyKind};
use fogmarl::harness::{evaluate, replay, run_arm, RunContext};
use fogmarl::metrics::summarize;
use fogmarl::rng::{Domain, Epoch, RngStreams};
use fogmarl::scenario::{Arm, Scenario};
use fogmarl::sim::ServiceMode;
use fogmarl::topology::{betweenness_centrality, Role, TopologySpec};
use fogmarl::workload::{ArrivalStream, Category};
use fogmarl::world::{Controller, World};

#[test]
fn mm1_wait_matches_closed_form() {
    // rho = 0.5: rho / (mu (1 - rho)) = 1
    let w = single_station_wait(0.5, ServiceMode::Exponential, 100_000, 5);
    assert!((w - 1.0).abs() <= 0.05, "M/M/1 wait {w}");
}

#[test]
fn md1_wait_matches_closed_form() {
    // rho / (2 mu (1 - rho)) = 0.5
    let w = single_station_wait(0.5, ServiceMode::Deterministic, 100_000, 6);
    assert!((w - 0.5).abs() <= 0.025, "M/D/1 wait {w}");
}

#[test]
fn betweenness_matches_path_enumeration() {
    for (i, g) in graph_corpus(50, 8, 2024).iter().enumerate() {
        let fast = betweenness_centrality(g).unwrap();
        let slow = brute_betweenness(g);
        for v in 0..g.node_count() {
            assert!((fast[v] - slow[v]).abs() < 1e-9, "graph {i} node {v}: {} vs {}", fast[v], slow[v]);
        }
    }
}

#[test]
fn arrival_counts_are_poisson() {
    let streams = RngStreams::new(3);
    let (beta, horizon) = (2.0, 20_000.0);
    let mut counts = Vec::new();
    for c in 0..3 {
        let mut s = ArrivalStream::new(0, Category::ALL[c], streams.arrivals(Epoch::Eval, 0, c));
        let (mut t, mut n) = (s.next_gap(beta), 0u64);
        while t < horizon {
            n += 1;
            t += s.next_gap(beta);
        }
        counts.push(n);
    }
    let mean = horizon / beta;
    for n in counts {
        // 4 standard deviations of a Poisson count
        assert!((n as f64 - mean).abs() < 4.0 * mean.sqrt(), "{n} arrivals vs {mean}");
    }
}

fn desk_scenario() -> Scenario {
    Scenario {
        seeds: vec![1],
        desk_scale: 0.02,
        step_seconds: 0.01,
        topology: TopologySpec {
            nodes: 13,
            aps: 8,
            ..TopologySpec::default()
        },
        ..Scenario::default()
    }
}

#[test]
fn faster_servers_never_wait_longer() {
    let s = desk_scenario();
    let ctx = RunContext::new(&s, 1).unwrap();
    let policy = Controller::Baseline {
        policy: BaselinePolicy::new(PolicyKind::Random, ctx.topo.aps().len()),
        rng: ctx.streams.stream(Domain::Baseline, 0),
    };
    let arm = Arm::new(PolicyKind::Random, None);
    let base = evaluate(&ctx, arm, policy, 100.0).unwrap();
    let fog_of_job: Vec<usize> = base.jobs.iter().map(|j| j.fog.unwrap()).collect();

    let mut fast = ctx.topo.clone();
    for n in &mut fast.nodes {
        if n.role == Role::Fog {
            n.ipt *= 2.0;
        }
    }
    let horizon = s.eval_horizon_seconds();
    let mut w = World::new(
        fast,
        s.world_config(ObsMode::Realtime),
        Controller::Scripted { fog_of_job },
        &ctx.streams,
        Epoch::Eval,
    )
    .unwrap();
    w.start(100.0, horizon).unwrap();
    w.run_until(horizon).unwrap();
    let faster = w.event_log(horizon);
    assert_eq!(faster.jobs.len(), base.jobs.len());
    for (a, b) in base.jobs.iter().zip(&faster.jobs) {
        if let (Some(wa), Some(wb)) = (a.waiting(), b.waiting()) {
            assert!(wb <= wa + 1e-9, "job {} waits {wb} > {wa}", a.id);
        }
    }
    let (sa, sb) = (summarize(&base).unwrap(), summarize(&faster).unwrap());
    assert!(sb.avg_wait <= sa.avg_wait);
    assert!(sb.avg_execution_delay <= sa.avg_execution_delay);
}

#[test]
fn persisted_log_reproduces_summary() {
    let s = desk_scenario();
    let ctx = RunContext::new(&s, 1).unwrap();
    let r = run_arm(&ctx, Arm::new(PolicyKind::Fastest, Some(ObsMode::Interval))).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("log.json");
    std::fs::write(&path, serde_json::to_string(r.log.as_ref().unwrap()).unwrap()).unwrap();
    assert_eq!(replay(&path).unwrap(), r.summary);
}
