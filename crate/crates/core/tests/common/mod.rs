#![allow(dead_code)]

use fogmarl::learn::{td_loss_and_grad, DqnConfig, DqnLearner, Mlp, StepRecord, Transition, TransitionBatch, Workspace};
use fogmarl::sim::{service_time, EventQueue, QueueStation, QueuedJob, ServiceMode, SimTime};
use fogmarl::topology::Graph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

/// Mean queue wait of a single station fed by Poisson(`lambda`) arrivals of
/// unit-instruction jobs on a unit-ipt server.
pub fn single_station_wait(lambda: f64, mode: ServiceMode, arrivals: usize, seed: u64) -> f64 {
    enum Ev {
        Arrival,
        Done,
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut service = ChaCha8Rng::seed_from_u64(seed ^ 0xA5A5);
    let gap = Exp::new(lambda).unwrap();
    let mut q = EventQueue::new();
    let mut st = QueueStation::new(0, 1.0);
    let mut draw = |i: f64, ipt: f64| service_time(i, ipt, mode, &mut service);
    q.schedule(SimTime::new(gap.sample(&mut rng)), Ev::Arrival).unwrap();
    let (mut generated, mut waits) = (0, Vec::with_capacity(arrivals));
    let mut enq = vec![0.0; arrivals];
    while let Some(e) = q.pop() {
        let now = e.time;
        let start = match e.kind {
            Ev::Arrival => {
                let id = generated;
                generated += 1;
                enq[id] = now.seconds();
                if generated < arrivals {
                    q.schedule(now + gap.sample(&mut rng), Ev::Arrival).unwrap();
                }
                let job = QueuedJob {
                    job: id,
                    instructions: 1.0,
                    enqueued_at: now,
                };
                st.enqueue(job, now, &mut draw)
            }
            Ev::Done => st.complete(now, &mut draw).1,
        };
        if let Some(s) = start {
            waits.push(s.started.seconds() - enq[s.job]);
            q.schedule(s.ends, Ev::Done).unwrap();
        }
    }
    waits.iter().sum::<f64>() / waits.len() as f64
}

pub fn random_batch(rng: &mut ChaCha8Rng, n: usize, dim: usize, actions: usize) -> TransitionBatch {
    let ts: Vec<Transition> = (0..n)
        .map(|_| Transition {
            state: (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect(),
            action: rng.random_range(0..actions),
            reward: -rng.random_range(0.0..3.0),
            next_state: (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect(),
        })
        .collect();
    TransitionBatch::from_transitions(dim, &ts)
}

fn loss_and_grad(net: &Mlp, batch: &TransitionBatch, targets: &[f64]) -> (f64, Vec<f64>) {
    let (mut ws, mut d, mut g) = (Workspace::default(), Vec::new(), Vec::new());
    let l = td_loss_and_grad(net, batch, targets, &mut ws, &mut d, &mut g);
    (l, g)
}

/// Worst relative error between backprop and central differences over
/// `nets` random networks and batches.
pub fn gradient_check(nets: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for case in 0..nets {
        let dim = 2 + case % 4;
        let actions = 2 + case % 3;
        let mut net = Mlp::new(&[dim, 16, 8, actions], &mut rng);
        for p in net.params_mut() {
            *p += rng.random_range(-0.1..0.1);
        }
        let batch = random_batch(&mut rng, 10, dim, actions);
        let targets: Vec<f64> = (0..10).map(|_| rng.random_range(-3.0..1.0)).collect();
        let (_, g) = loss_and_grad(&net, &batch, &targets);
        let h = 1e-6;
        for p in 0..net.num_params() {
            let mut plus = net.clone();
            plus.params_mut()[p] += h;
            let mut minus = net.clone();
            minus.params_mut()[p] -= h;
            let fd = (loss_and_grad(&plus, &batch, &targets).0 - loss_and_grad(&minus, &batch, &targets).0) / (2.0 * h);
            worst = worst.max((fd - g[p]).abs() / fd.abs().max(g[p].abs()).max(1e-4));
        }
    }
    worst
}

pub const TOY_GAMMA: f64 = 0.9;
// reward[s][a]; action a moves to state a
pub const TOY_REWARD: [[f64; 2]; 2] = [[-1.0, -1.5], [-2.0, -0.2]];

pub fn toy_value_iteration() -> [[f64; 2]; 2] {
    let mut q = [[0.0f64; 2]; 2];
    for _ in 0..10_000 {
        let v = [q[0][0].max(q[0][1]), q[1][0].max(q[1][1])];
        let mut next = [[0.0; 2]; 2];
        for s in 0..2 {
            for a in 0..2 {
                next[s][a] = TOY_REWARD[s][a] + TOY_GAMMA * v[a];
            }
        }
        q = next;
    }
    q
}

fn one_hot(s: usize) -> Vec<f64> {
    let mut v = vec![0.0; 2];
    v[s] = 1.0;
    v
}

/// Trains on random transitions of the toy MDP and returns the learned
/// Q-table.
pub fn toy_ddql() -> [[f64; 2]; 2] {
    let cfg = DqnConfig {
        hidden: vec![32, 32],
        learning_rate: 1e-3,
        gamma: TOY_GAMMA,
        batch_size: 50,
        train_every: 1,
        target_sync: 200,
        buffer_capacity: 10_000,
        ..DqnConfig::default()
    };
    let mut learner = DqnLearner::new(2, 2, cfg, ChaCha8Rng::seed_from_u64(11));
    let mut env = ChaCha8Rng::seed_from_u64(12);
    let mut s = 0;
    let mut reward = None;
    for _ in 0..5_000 {
        let a = env.random_range(0..2);
        learner.record(StepRecord {
            state: one_hot(s),
            action: a,
            reward,
        });
        reward = Some(TOY_REWARD[s][a]);
        s = a;
    }
    for step in 1..=20_000u64 {
        learner.train_once().unwrap();
        if step % 200 == 0 {
            learner.target.copy_from(&learner.online);
        }
    }
    let mut q = [[0.0; 2]; 2];
    for (s, row) in q.iter_mut().enumerate() {
        let v = learner.q_values(&one_hot(s)).unwrap();
        row.copy_from_slice(&v);
    }
    q
}

/// Connected random graphs: a random spanning tree plus extra edges.
pub fn graph_corpus(count: usize, max_nodes: usize, seed: u64) -> Vec<Graph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n = rng.random_range(2..=max_nodes);
            let mut g = Graph::new(n);
            for v in 1..n {
                g.add_edge(v, rng.random_range(0..v));
            }
            let p: f64 = rng.random_range(0.0..0.6);
            for a in 0..n {
                for b in a + 1..n {
                    if !g.has_edge(a, b) && rng.random_bool(p) {
                        g.add_edge(a, b);
                    }
                }
            }
            g
        })
        .collect()
}

/// Betweenness by listing every shortest path of every unordered pair.
pub fn brute_betweenness(g: &Graph) -> Vec<f64> {
    let n = g.node_count();
    let mut score = vec![0.0; n];
    for s in 0..n {
        let dist = g.bfs(s);
        for t in s + 1..n {
            let d = dist[t].expect("connected");
            let mut paths = Vec::new();
            let mut path = vec![s];
            walk(g, t, d, &mut path, &mut paths);
            for p in &paths {
                for &v in &p[1..p.len() - 1] {
                    score[v] += 1.0 / paths.len() as f64;
                }
            }
        }
    }
    score
}

fn walk(g: &Graph, t: usize, len: usize, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    let v = *path.last().unwrap();
    if path.len() - 1 == len {
        if v == t {
            out.push(path.clone());
        }
        return;
    }
    for &w in g.neighbors(v) {
        if !path.contains(&w) {
            path.push(w);
            walk(g, t, len, path, out);
            path.pop();
        }
    }
}
