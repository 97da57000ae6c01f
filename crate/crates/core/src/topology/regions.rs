use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::{Region, Role, Routing, Topology, TopologyError};

/// How APs and fog nodes are grouped into collaboration regions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RegionLayout {
    /// One region with every AP and every fog node.
    #[default]
    Single,
    /// `count` regions over a locality ordering of the fog layer; each pair
    /// of consecutive regions shares `shared` fog nodes.
    Split { count: usize, shared: usize },
    /// Regions given node by node.
    Explicit { regions: Vec<RegionDef> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionDef {
    pub aps: Vec<usize>,
    pub fogs: Vec<usize>,
}

/// Builds regions for `topo` (whose own `regions` field is ignored).
/// Candidate lists come out in ascending fog id order.
pub fn define_regions(
    layout: &RegionLayout,
    topo: &Topology,
) -> Result<Vec<Region>, TopologyError> {
    let aps = topo.aps();
    let fogs = topo.fogs();
    let regions = match layout {
        RegionLayout::Single => vec![Region {
            id: 0,
            ap_ids: aps,
            candidate_fog_ids: fogs,
        }],
        RegionLayout::Explicit { regions } => regions
            .iter()
            .enumerate()
            .map(|(id, def)| Region {
                id,
                ap_ids: sorted_unique(&def.aps),
                candidate_fog_ids: sorted_unique(&def.fogs),
            })
            .collect(),
        RegionLayout::Split { count, shared } => split(topo, *count, *shared)?,
    };
    check_regions(&regions, topo)?;
    Ok(regions)
}

fn sorted_unique(ids: &[usize]) -> Vec<usize> {
    ids.iter().copied().collect::<BTreeSet<_>>().into_iter().collect()
}

fn split(topo: &Topology, count: usize, shared: usize) -> Result<Vec<Region>, TopologyError> {
    let fogs = topo.fogs();
    if count == 0 || count > fogs.len() {
        return Err(TopologyError::Layout(format!(
            "cannot split {} fog nodes into {count} regions",
            fogs.len()
        )));
    }
    let order = fog_locality_order(topo);
    let base = fogs.len() / count;
    let extra = fogs.len() % count;
    let mut chunks: Vec<Vec<usize>> = Vec::with_capacity(count);
    let mut at = 0;
    for i in 0..count {
        let size = base + usize::from(i < extra);
        chunks.push(order[at..at + size].to_vec());
        at += size;
    }
    if count > 1 && shared >= chunks.iter().map(Vec::len).min().unwrap_or(0) {
        return Err(TopologyError::Layout(format!(
            "{shared} shared fog nodes leave a region without fog nodes of its own"
        )));
    }
    let routing = Routing::new(topo);
    let mut region_aps: Vec<Vec<usize>> = vec![Vec::new(); count];
    for ap in topo.aps() {
        let nearest = fogs
            .iter()
            .copied()
            .min_by(|&a, &b| {
                routing
                    .prop_delay(ap, a)
                    .total_cmp(&routing.prop_delay(ap, b))
                    .then(a.cmp(&b))
            })
            .expect("at least one fog node");
        let chunk = chunks.iter().position(|c| c.contains(&nearest)).unwrap();
        region_aps[chunk].push(ap);
    }
    Ok((0..count)
        .map(|i| {
            let mut cands = chunks[i].clone();
            if i > 0 {
                let prev = &chunks[i - 1];
                cands.extend_from_slice(&prev[prev.len() - shared..]);
            }
            Region {
                id: i,
                ap_ids: sorted_unique(&region_aps[i]),
                candidate_fog_ids: sorted_unique(&cands),
            }
        })
        .collect())
}

/// Breadth-first order over the fog layer, starting from the least central
/// fog node; neighbours are visited in ascending id.
fn fog_locality_order(topo: &Topology) -> Vec<usize> {
    let graph = topo.graph();
    let is_fog = |v: usize| topo.nodes[v].role == Role::Fog;
    let mut starts = topo.fogs();
    starts.sort_by(|&a, &b| {
        topo.nodes[a]
            .betweenness
            .total_cmp(&topo.nodes[b].betweenness)
            .then(a.cmp(&b))
    });
    let mut seen = vec![false; topo.nodes.len()];
    let mut order = Vec::new();
    for s in starts {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &w in graph.neighbors(v) {
                if is_fog(w) && !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
    }
    order
}

pub(super) fn check_regions(regions: &[Region], topo: &Topology) -> Result<(), TopologyError> {
    let mut covered = vec![false; topo.nodes.len()];
    for r in regions {
        if r.candidate_fog_ids.is_empty() {
            return Err(TopologyError::EmptyCandidateSet(r.id));
        }
        for &f in &r.candidate_fog_ids {
            if topo.nodes.get(f).map(|n| n.role) != Some(Role::Fog) {
                return Err(TopologyError::WrongRole {
                    node: f,
                    expected: Role::Fog,
                });
            }
        }
        for &ap in &r.ap_ids {
            if topo.nodes.get(ap).map(|n| n.role) != Some(Role::Ap) {
                return Err(TopologyError::WrongRole {
                    node: ap,
                    expected: Role::Ap,
                });
            }
            if covered[ap] {
                return Err(TopologyError::DuplicateAP(ap));
            }
            covered[ap] = true;
        }
    }
    match topo.aps().into_iter().find(|&ap| !covered[ap]) {
        Some(ap) => Err(TopologyError::UncoveredAP(ap)),
        None => Ok(()),
    }
}
