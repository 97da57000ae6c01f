//! Fog network topologies: AS-like graph generation, centrality-based role
//! assignment, heterogeneous resources, link parameters, collaboration
//! regions and shortest-delay routing.

mod assign;
mod centrality;
mod graph;
mod regions;
mod routing;

pub use assign::{
    assign_links, assign_resources, assign_roles, materialize_cloud, rewire_ap_edges,
    RoleAssignment,
};
pub use centrality::betweenness_centrality;
pub use graph::{generate_graph, Graph};
pub use regions::{define_regions, RegionDef, RegionLayout};
pub use routing::Routing;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{Domain, RngStreams};

#[derive(Debug, Error, PartialEq)]
pub enum TopologyError {
    #[error("graph needs at least 5 nodes, got {0}")]
    TooSmall(usize),
    #[error("attachment degree {degree} invalid for {nodes} nodes")]
    BadAttachment { degree: usize, nodes: usize },
    #[error("graph is disconnected")]
    Disconnected,
    #[error("cannot place {aps} APs among {nodes} nodes and keep a fog node")]
    InfeasibleSplit { aps: usize, nodes: usize },
    #[error("edge {a}-{b} joins {ra:?} and {rb:?}, which has no link category")]
    UncategorizableEdge { a: usize, b: usize, ra: Role, rb: Role },
    #[error("AP {0} is not covered by any region")]
    UncoveredAP(usize),
    #[error("AP {0} appears in more than one region")]
    DuplicateAP(usize),
    #[error("region {0} has no candidate fog nodes")]
    EmptyCandidateSet(usize),
    #[error("node {node} is not a {expected:?}")]
    WrongRole { node: usize, expected: Role },
    #[error("region layout: {0}")]
    Layout(String),
    #[error("topology document: {0}")]
    Format(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Ap,
    Fog,
    Cloud,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub id: usize,
    pub role: Role,
    /// Instructions per second; zero for APs.
    pub ipt: f64,
    /// Bytes. Carried for completeness, never consulted by the simulator.
    pub ram: f64,
    /// Betweenness in the generated graph, before the cloud was attached.
    pub betweenness: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkCategory {
    IotFog,
    FogFog,
    FogCloud,
}

impl LinkCategory {
    pub fn for_roles(a: Role, b: Role) -> Option<Self> {
        use Role::*;
        match (a.min(b), a.max(b)) {
            (Ap, Fog) => Some(Self::IotFog),
            (Fog, Fog) => Some(Self::FogFog),
            (Fog, Cloud) => Some(Self::FogCloud),
            _ => None,
        }
    }

    /// Half-open propagation-delay range in seconds.
    pub fn prop_delay_range(self) -> (f64, f64) {
        match self {
            Self::IotFog => (1.0, 2.0),
            Self::FogFog => (2.0, 4.0),
            Self::FogCloud => (10.0, 20.0),
        }
    }

    /// Half-open bandwidth range in Mbps.
    pub fn bandwidth_range(self) -> (f64, f64) {
        match self {
            Self::IotFog => (1e2, 1e3),
            Self::FogFog | Self::FogCloud => (1e3, 1e4),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkSpec {
    pub a: usize,
    pub b: usize,
    pub category: LinkCategory,
    pub bandwidth_mbps: f64,
    pub prop_delay: f64,
}

impl LinkSpec {
    pub fn bandwidth_bps(&self) -> f64 {
        self.bandwidth_mbps * 1e6
    }
}

/// APs whose agents share one ordered candidate fog set. The order of
/// `candidate_fog_ids` fixes state-vector and action indexing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub id: usize,
    pub ap_ids: Vec<usize>,
    pub candidate_fog_ids: Vec<usize>,
}

/// Parameters of a generated topology.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopologySpec {
    /// Nodes in the generated graph; the cloud is added on top.
    pub nodes: usize,
    pub aps: usize,
    pub attachment_degree: usize,
    pub regions: RegionLayout,
}

impl Default for TopologySpec {
    fn default() -> Self {
        Self {
            nodes: 32,
            aps: 21,
            attachment_degree: 2,
            regions: RegionLayout::Single,
        }
    }
}

/// A fully specified fog network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub nodes: Vec<NodeSpec>,
    pub links: Vec<LinkSpec>,
    pub regions: Vec<Region>,
}

pub const CLOUD_IPT: f64 = 1e6;
pub const FOG_IPT_RANGE: (f64, f64) = (1e3, 1e5);
pub const FOG_RAM: f64 = 8.0 * (1u64 << 30) as f64;
pub const CLOUD_RAM: f64 = 256.0 * (1u64 << 30) as f64;

impl Topology {
    /// Runs the whole generation pipeline from the topology stream of `streams`.
    pub fn generate(spec: &TopologySpec, streams: &RngStreams) -> Result<Self, TopologyError> {
        let mut rng = streams.stream(Domain::Topology, 0);
        let graph_seed = rand::Rng::random::<u64>(&mut rng);
        let raw = generate_graph(spec.nodes, spec.attachment_degree, graph_seed)?;
        let centrality = betweenness_centrality(&raw)?;
        let assignment = assign_roles(&raw, &centrality, spec.aps)?;
        let mut graph = materialize_cloud(&raw, &assignment);
        rewire_ap_edges(&mut graph, &assignment.roles);
        let mut nodes = assign_resources(&graph, &assignment.roles, &mut rng);
        for (node, c) in nodes.iter_mut().zip(centrality.iter()) {
            node.betweenness = *c;
        }
        let links = assign_links(&graph, &assignment.roles, &mut rng)?;
        let mut topo = Topology {
            nodes,
            links,
            regions: Vec::new(),
        };
        topo.regions = define_regions(&spec.regions, &topo)?;
        Ok(topo)
    }

    pub fn graph(&self) -> Graph {
        let edges: Vec<_> = self.links.iter().map(|l| (l.a, l.b)).collect();
        Graph::from_edges(self.nodes.len(), &edges)
    }

    pub fn ids_with_role(&self, role: Role) -> Vec<usize> {
        self.nodes
            .iter()
            .filter(|n| n.role == role)
            .map(|n| n.id)
            .collect()
    }

    pub fn aps(&self) -> Vec<usize> {
        self.ids_with_role(Role::Ap)
    }

    pub fn fogs(&self) -> Vec<usize> {
        self.ids_with_role(Role::Fog)
    }

    /// Fog node with the highest betweenness, ties to the lowest id.
    pub fn most_central_fog(&self) -> Option<usize> {
        self.nodes
            .iter()
            .filter(|n| n.role == Role::Fog)
            .fold(None::<&NodeSpec>, |best, n| match best {
                Some(b) if b.betweenness >= n.betweenness => Some(b),
                _ => Some(n),
            })
            .map(|n| n.id)
    }

    /// Region containing `ap`.
    pub fn region_of(&self, ap: usize) -> Option<&Region> {
        self.regions.iter().find(|r| r.ap_ids.contains(&ap))
    }

    /// Checks structural invariants of an imported or generated document.
    pub fn check(&self) -> Result<(), TopologyError> {
        for (i, n) in self.nodes.iter().enumerate() {
            if n.id != i {
                return Err(TopologyError::Format(format!(
                    "node at position {i} has id {}",
                    n.id
                )));
            }
            if n.role != Role::Ap && !(n.ipt > 0.0) {
                return Err(TopologyError::Format(format!(
                    "node {i} needs positive ipt"
                )));
            }
        }
        let clouds = self.ids_with_role(Role::Cloud).len();
        if clouds != 1 {
            return Err(TopologyError::Format(format!(
                "expected exactly one cloud, found {clouds}"
            )));
        }
        for l in &self.links {
            if l.a >= self.nodes.len() || l.b >= self.nodes.len() {
                return Err(TopologyError::Format(format!(
                    "link {}-{} references a missing node",
                    l.a, l.b
                )));
            }
            let (ra, rb) = (self.nodes[l.a].role, self.nodes[l.b].role);
            if LinkCategory::for_roles(ra, rb) != Some(l.category) {
                return Err(TopologyError::UncategorizableEdge {
                    a: l.a,
                    b: l.b,
                    ra,
                    rb,
                });
            }
            if !(l.bandwidth_mbps > 0.0) || !(l.prop_delay >= 0.0) {
                return Err(TopologyError::Format(format!(
                    "link {}-{} has invalid parameters",
                    l.a, l.b
                )));
            }
        }
        if !self.graph().is_connected() {
            return Err(TopologyError::Disconnected);
        }
        regions::check_regions(&self.regions, self)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("topology serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, TopologyError> {
        let topo: Topology =
            serde_json::from_str(text).map_err(|e| TopologyError::Format(e.to_string()))?;
        topo.check()?;
        Ok(topo)
    }
}
