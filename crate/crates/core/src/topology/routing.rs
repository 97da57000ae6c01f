use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::{Role, Topology};

/// All-pairs minimum propagation-delay routes. APs terminate routes but
/// never relay traffic.
#[derive(Debug, Clone)]
pub struct Routing {
    n: usize,
    dist: Vec<f64>,
    pred: Vec<Option<usize>>,
    link_index: Vec<Option<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
struct Key(f64, usize);

impl Eq for Key {}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

impl Routing {
    pub fn new(topo: &Topology) -> Self {
        let n = topo.nodes.len();
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        let mut link_index = vec![None; n * n];
        for (i, l) in topo.links.iter().enumerate() {
            adj[l.a].push((l.b, l.prop_delay));
            adj[l.b].push((l.a, l.prop_delay));
            link_index[l.a * n + l.b] = Some(i);
            link_index[l.b * n + l.a] = Some(i);
        }
        for list in &mut adj {
            list.sort_by_key(|&(w, _)| w);
        }
        let mut dist = vec![f64::INFINITY; n * n];
        let mut pred = vec![None; n * n];
        for src in 0..n {
            let row = src * n;
            dist[row + src] = 0.0;
            let mut heap = BinaryHeap::from([Reverse(Key(0.0, src))]);
            let mut done = vec![false; n];
            while let Some(Reverse(Key(d, v))) = heap.pop() {
                if done[v] {
                    continue;
                }
                done[v] = true;
                if v != src && topo.nodes[v].role == Role::Ap {
                    continue;
                }
                for &(w, pr) in &adj[v] {
                    let nd = d + pr;
                    if nd < dist[row + w] {
                        dist[row + w] = nd;
                        pred[row + w] = Some(v);
                        heap.push(Reverse(Key(nd, w)));
                    }
                }
            }
        }
        Self {
            n,
            dist,
            pred,
            link_index,
        }
    }

    /// Sum of propagation delays along the route.
    pub fn prop_delay(&self, src: usize, dst: usize) -> f64 {
        self.dist[src * self.n + dst]
    }

    pub fn reachable(&self, src: usize, dst: usize) -> bool {
        self.prop_delay(src, dst).is_finite()
    }

    /// Nodes on the route from `src` to `dst`, both ends included.
    pub fn path(&self, src: usize, dst: usize) -> Vec<usize> {
        assert!(self.reachable(src, dst), "no route {src} -> {dst}");
        let mut nodes = vec![dst];
        let mut v = dst;
        while v != src {
            v = self.pred[src * self.n + v].expect("route predecessor");
            nodes.push(v);
        }
        nodes.reverse();
        nodes
    }

    /// Index into `Topology::links` of the link joining `a` and `b`.
    pub fn link_between(&self, a: usize, b: usize) -> Option<usize> {
        self.link_index[a * self.n + b]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{LinkCategory, LinkSpec, NodeSpec};

    fn node(id: usize, role: Role) -> NodeSpec {
        NodeSpec {
            id,
            role,
            ipt: if role == Role::Ap { 0.0 } else { 1e3 },
            ram: 0.0,
            betweenness: 0.0,
        }
    }

    fn link(a: usize, b: usize, category: LinkCategory, pr: f64) -> LinkSpec {
        LinkSpec {
            a,
            b,
            category,
            bandwidth_mbps: 1e3,
            prop_delay: pr,
        }
    }

    #[test]
    fn multi_hop_route_sums_delays_and_skips_ap_relays() {
        // AP0 - F1 - F2, plus a tempting shortcut F1 - AP3 - F2.
        let topo = Topology {
            nodes: vec![
                node(0, Role::Ap),
                node(1, Role::Fog),
                node(2, Role::Fog),
                node(3, Role::Ap),
                node(4, Role::Cloud),
            ],
            links: vec![
                link(0, 1, LinkCategory::IotFog, 1.5),
                link(1, 2, LinkCategory::FogFog, 3.0),
                link(1, 3, LinkCategory::IotFog, 1.0),
                link(2, 3, LinkCategory::IotFog, 1.0),
                link(2, 4, LinkCategory::FogCloud, 10.0),
            ],
            regions: vec![],
        };
        let r = Routing::new(&topo);
        assert_eq!(r.path(0, 2), vec![0, 1, 2]);
        assert_eq!(r.prop_delay(0, 2), 4.5);
        assert_eq!(r.path(2, 0), vec![2, 1, 0]);
        assert_eq!(r.link_between(1, 2), Some(1));
        assert_eq!(r.link_between(0, 2), None);
    }
}
