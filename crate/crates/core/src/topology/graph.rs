use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::TopologyError;

/// Simple undirected graph over nodes `0..n` with sorted adjacency lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<Vec<usize>>,
}

impl Graph {
    pub fn new(n: usize) -> Self {
        Self {
            adj: vec![Vec::new(); n],
        }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut g = Self::new(n);
        for &(a, b) in edges {
            g.add_edge(a, b);
        }
        g
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn add_node(&mut self) -> usize {
        self.adj.push(Vec::new());
        self.adj.len() - 1
    }

    /// Adds `a–b`; self-loops and duplicates are ignored.
    pub fn add_edge(&mut self, a: usize, b: usize) {
        if a == b || self.has_edge(a, b) {
            return;
        }
        for (x, y) in [(a, b), (b, a)] {
            let list = &mut self.adj[x];
            let pos = list.binary_search(&y).unwrap_err();
            list.insert(pos, y);
        }
    }

    pub fn remove_edge(&mut self, a: usize, b: usize) {
        for (x, y) in [(a, b), (b, a)] {
            if let Ok(pos) = self.adj[x].binary_search(&y) {
                self.adj[x].remove(pos);
            }
        }
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adj[a].binary_search(&b).is_ok()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    /// Edges as `(low, high)` pairs in ascending order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(a, ns)| ns.iter().filter(move |&&b| b > a).map(move |&b| (a, b)))
            .collect()
    }

    /// Hop distances from `src`; unreachable nodes are `None`.
    pub fn bfs(&self, src: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.adj.len()];
        dist[src] = Some(0);
        let mut queue = VecDeque::from([src]);
        while let Some(v) = queue.pop_front() {
            let d = dist[v].unwrap();
            for &w in &self.adj[v] {
                if dist[w].is_none() {
                    dist[w] = Some(d + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    pub fn is_connected(&self) -> bool {
        self.adj.is_empty() || self.bfs(0).iter().all(Option::is_some)
    }
}

/// Preferential-attachment graph: starts from a star on `attachment_degree + 1`
/// nodes, then every new node links to `attachment_degree` distinct existing
/// nodes picked with probability proportional to degree.
pub fn generate_graph(
    n_nodes: usize,
    attachment_degree: usize,
    seed: u64,
) -> Result<Graph, TopologyError> {
    if n_nodes < 5 {
        return Err(TopologyError::TooSmall(n_nodes));
    }
    let m = attachment_degree;
    if m == 0 || m >= n_nodes {
        return Err(TopologyError::BadAttachment {
            degree: m,
            nodes: n_nodes,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = Graph::new(n_nodes);
    // Degree-weighted urn: each node appears once per incident edge.
    let mut urn: Vec<usize> = Vec::with_capacity(2 * m * n_nodes);
    for leaf in 1..=m {
        g.add_edge(0, leaf);
        urn.extend([0, leaf]);
    }
    let mut targets: Vec<usize> = Vec::with_capacity(m);
    for v in (m + 1)..n_nodes {
        targets.clear();
        while targets.len() < m {
            let t = urn[rng.random_range(0..urn.len())];
            if !targets.contains(&t) {
                targets.push(t);
            }
        }
        targets.sort_unstable();
        for &t in &targets {
            g.add_edge(v, t);
            urn.extend([v, t]);
        }
    }
    Ok(g)
}
