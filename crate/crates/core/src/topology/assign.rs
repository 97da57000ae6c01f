use std::cmp::Ordering;

use rand::Rng;

use super::{
    Graph, LinkCategory, LinkSpec, NodeSpec, Role, TopologyError, CLOUD_IPT, CLOUD_RAM,
    FOG_IPT_RANGE, FOG_RAM,
};

/// Roles for every graph node plus the cloud, which is appended as node `n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoleAssignment {
    pub roles: Vec<Role>,
    /// Fog nodes the cloud attaches to, most central first.
    pub cloud_attach: Vec<usize>,
}

impl RoleAssignment {
    pub fn cloud(&self) -> usize {
        self.roles.len() - 1
    }
}

fn by_score_then_id(scores: &[f64]) -> impl Fn(&usize, &usize) -> Ordering + '_ {
    move |&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b))
}

/// The `n_aps` least central nodes become APs, the rest fog. A cloud node
/// is attached to the two most central fog nodes (one if only one exists).
pub fn assign_roles(
    graph: &Graph,
    centrality: &[f64],
    n_aps: usize,
) -> Result<RoleAssignment, TopologyError> {
    let n = graph.node_count();
    if n_aps == 0 || n_aps >= n {
        return Err(TopologyError::InfeasibleSplit {
            aps: n_aps,
            nodes: n,
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(by_score_then_id(centrality));
    let mut roles = vec![Role::Fog; n];
    for &v in &order[..n_aps] {
        roles[v] = Role::Ap;
    }
    // Most central first; among equal scores the lower id wins.
    let mut fogs: Vec<usize> = order[n_aps..].to_vec();
    fogs.sort_by(|&a, &b| centrality[b].total_cmp(&centrality[a]).then(a.cmp(&b)));
    let cloud_attach: Vec<usize> = fogs.into_iter().take(2).collect();
    roles.push(Role::Cloud);
    Ok(RoleAssignment {
        roles,
        cloud_attach,
    })
}

/// Copy of `graph` with the cloud node and its links added.
pub fn materialize_cloud(graph: &Graph, assignment: &RoleAssignment) -> Graph {
    let mut g = graph.clone();
    let cloud = g.add_node();
    debug_assert_eq!(cloud, assignment.cloud());
    for &f in &assignment.cloud_attach {
        g.add_edge(cloud, f);
    }
    g
}

/// Removes AP–AP edges, then attaches every AP left without a fog neighbour
/// to its nearest fog node (hop count in the original graph, ties by id).
/// If relaying through APs was what kept the fog layer connected, the
/// closest fog pairs across components are joined directly.
pub fn rewire_ap_edges(graph: &mut Graph, roles: &[Role]) {
    let original = graph.clone();
    let n = graph.node_count();
    for (a, b) in original.edges() {
        if roles[a] == Role::Ap && roles[b] == Role::Ap {
            graph.remove_edge(a, b);
        }
    }
    let fog_ids: Vec<usize> = (0..n).filter(|&v| roles[v] == Role::Fog).collect();
    for ap in (0..n).filter(|&v| roles[v] == Role::Ap) {
        if graph.neighbors(ap).iter().any(|&w| roles[w] == Role::Fog) {
            continue;
        }
        let dist = original.bfs(ap);
        let nearest = fog_ids
            .iter()
            .copied()
            .min_by_key(|&f| (dist[f].unwrap_or(usize::MAX), f));
        if let Some(f) = nearest {
            graph.add_edge(ap, f);
        }
    }
    connect_core(graph, &original, roles);
}

/// Makes the fog+cloud subgraph connected.
fn connect_core(graph: &mut Graph, original: &Graph, roles: &[Role]) {
    let n = graph.node_count();
    let core: Vec<usize> = (0..n).filter(|&v| roles[v] != Role::Ap).collect();
    loop {
        let mut comp = vec![usize::MAX; n];
        let mut n_comp = 0;
        for &s in &core {
            if comp[s] != usize::MAX {
                continue;
            }
            let mut stack = vec![s];
            comp[s] = n_comp;
            while let Some(v) = stack.pop() {
                for &w in graph.neighbors(v) {
                    if roles[w] != Role::Ap && comp[w] == usize::MAX {
                        comp[w] = n_comp;
                        stack.push(w);
                    }
                }
            }
            n_comp += 1;
        }
        if n_comp <= 1 {
            return;
        }
        // Join component 0 to its closest neighbour component.
        let mut best: Option<(usize, usize, usize)> = None;
        for &a in core.iter().filter(|&&v| comp[v] == 0) {
            let dist = original.bfs(a);
            for &b in core.iter().filter(|&&v| comp[v] != 0) {
                if roles[a] == Role::Cloud || roles[b] == Role::Cloud {
                    continue;
                }
                let d = dist[b].unwrap_or(usize::MAX);
                if best.is_none_or(|(bd, ba, bb)| (d, a, b) < (bd, ba, bb)) {
                    best = Some((d, a, b));
                }
            }
        }
        let (_, a, b) = best.expect("fog layer has at least two components");
        graph.add_edge(a, b);
    }
}

/// Compute and memory per node. Fog capacities are drawn uniformly and the
/// largest go to the fog nodes serving the fewest APs.
pub fn assign_resources<R: Rng + ?Sized>(
    graph: &Graph,
    roles: &[Role],
    rng: &mut R,
) -> Vec<NodeSpec> {
    let n = graph.node_count();
    let mut fogs: Vec<usize> = (0..n).filter(|&v| roles[v] == Role::Fog).collect();
    let mut draws: Vec<f64> = fogs
        .iter()
        .map(|_| rng.random_range(FOG_IPT_RANGE.0..=FOG_IPT_RANGE.1))
        .collect();
    assign_fog_capacities(graph, roles, &mut fogs, &mut draws);

    let mut nodes: Vec<NodeSpec> = (0..n)
        .map(|id| {
            let (ipt, ram) = match roles[id] {
                Role::Ap => (0.0, 0.0),
                Role::Fog => (0.0, FOG_RAM),
                Role::Cloud => (CLOUD_IPT, CLOUD_RAM),
            };
            NodeSpec {
                id,
                role: roles[id],
                ipt,
                ram,
                betweenness: 0.0,
            }
        })
        .collect();
    for (f, ipt) in fogs.into_iter().zip(draws) {
        nodes[f].ipt = ipt;
    }
    nodes
}

/// Sorts `fogs` by ascending AP-degree (ties by id) and `draws` descending so
/// that zipping them pairs capacity inversely with attached APs.
pub(crate) fn assign_fog_capacities(
    graph: &Graph,
    roles: &[Role],
    fogs: &mut [usize],
    draws: &mut [f64],
) {
    let ap_degree =
        |v: usize| graph.neighbors(v).iter().filter(|&&w| roles[w] == Role::Ap).count();
    fogs.sort_by_key(|&f| (ap_degree(f), f));
    draws.sort_by(|a, b| b.total_cmp(a));
}

/// Categorizes every edge by its endpoint roles and draws its propagation
/// delay and bandwidth from the category's range.
pub fn assign_links<R: Rng + ?Sized>(
    graph: &Graph,
    roles: &[Role],
    rng: &mut R,
) -> Result<Vec<LinkSpec>, TopologyError> {
    graph
        .edges()
        .into_iter()
        .map(|(a, b)| {
            let category = LinkCategory::for_roles(roles[a], roles[b]).ok_or(
                TopologyError::UncategorizableEdge {
                    a,
                    b,
                    ra: roles[a],
                    rb: roles[b],
                },
            )?;
            let (plo, phi) = category.prop_delay_range();
            let (blo, bhi) = category.bandwidth_range();
            let prop_delay = rng.random_range(plo..phi);
            let bandwidth_mbps = rng.random_range(blo..bhi);
            Ok(LinkSpec {
                a,
                b,
                category,
                bandwidth_mbps,
                prop_delay,
            })
        })
        .collect()
}
