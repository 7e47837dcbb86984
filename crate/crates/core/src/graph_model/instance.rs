//! Per-seed training instances: local candidate graph plus destination and
//! no-link sets.

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::fmt;

use super::graph::{Graph, NodeId};
use crate::error::{Result, SrwError};

/// Arc class by the hop distances of its endpoints from the seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeType(u8);

impl EdgeType {
    pub const COUNT: usize = 6;
    const HOPS: [(u32, u32); 6] = [(0, 1), (1, 0), (1, 1), (1, 2), (2, 1), (2, 2)];

    pub fn from_hops(src_hop: u32, dst_hop: u32) -> Option<EdgeType> {
        Self::HOPS
            .iter()
            .position(|&h| h == (src_hop, dst_hop))
            .map(|i| EdgeType(i as u8))
    }

    pub fn from_code(code: usize) -> Option<EdgeType> {
        (code < Self::COUNT).then_some(EdgeType(code as u8))
    }

    pub fn code(self) -> usize {
        self.0 as usize
    }

    pub fn hops(self) -> (u32, u32) {
        Self::HOPS[self.code()]
    }
}

impl fmt::Display for EdgeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (a, b) = self.hops();
        write!(f, "({a},{b})")
    }
}

/// A seed node with its local graph and labelled candidates.
///
/// Node ids inside `local` are local ids; `global_id` maps them back to the
/// graph the instance was cut from. The seed is always local id 0.
#[derive(Debug, Clone)]
pub struct TrainingInstance {
    local: Graph,
    global_ids: Vec<NodeId>,
    hops: Vec<u32>,
    candidates: Vec<NodeId>,
    destinations: Vec<NodeId>,
    nolinks: Vec<NodeId>,
}

const UNREACHED: u32 = u32::MAX;

fn bfs_hops(graph: &Graph, seed: NodeId) -> Vec<u32> {
    let mut hops = vec![UNREACHED; graph.node_count()];
    let mut queue = VecDeque::new();
    hops[seed] = 0;
    queue.push_back(seed);
    while let Some(u) = queue.pop_front() {
        for &v in graph.out_neighbors(u) {
            if hops[v] == UNREACHED {
                hops[v] = hops[u] + 1;
                queue.push_back(v);
            }
        }
    }
    hops
}

impl TrainingInstance {
    /// Validates and assembles an instance. `local` must use the seed as node 0;
    /// destinations and no-links are local ids.
    pub fn new(
        local: Graph,
        global_ids: Vec<NodeId>,
        destinations: Vec<NodeId>,
        nolinks: Vec<NodeId>,
    ) -> Result<TrainingInstance> {
        if global_ids.len() != local.node_count() || local.node_count() == 0 {
            return Err(SrwError::InvalidInput(
                "global id map must cover every local node".into(),
            ));
        }
        let seed_global = global_ids[0];
        let dset: BTreeSet<NodeId> = destinations.into_iter().collect();
        let lset: BTreeSet<NodeId> = nolinks.into_iter().collect();
        if dset.is_empty() {
            return Err(SrwError::Untrainable {
                seed: seed_global,
                reason: "no destination nodes".into(),
            });
        }
        if lset.is_empty() {
            return Err(SrwError::Untrainable {
                seed: seed_global,
                reason: "no no-link nodes".into(),
            });
        }
        if let Some(x) = dset.intersection(&lset).next() {
            return Err(SrwError::InvalidInput(format!(
                "node {} is both a destination and a no-link",
                global_ids[*x]
            )));
        }
        let hops = bfs_hops(&local, 0);
        for &c in dset.iter().chain(lset.iter()) {
            if c == 0 {
                return Err(SrwError::InvalidInput("seed cannot be a candidate".into()));
            }
            if c >= local.node_count() {
                return Err(SrwError::InvalidInput(format!(
                    "candidate {c} out of range"
                )));
            }
            if hops[c] == UNREACHED {
                return Err(SrwError::InvalidInput(format!(
                    "candidate {} unreachable from seed {seed_global}",
                    global_ids[c]
                )));
            }
        }
        let candidates: Vec<NodeId> = dset.union(&lset).copied().collect();
        Ok(TrainingInstance {
            local,
            global_ids,
            hops,
            candidates,
            destinations: dset.into_iter().collect(),
            nolinks: lset.into_iter().collect(),
        })
    }

    /// Local seed id (always 0).
    pub fn seed(&self) -> NodeId {
        0
    }

    pub fn seed_global(&self) -> NodeId {
        self.global_ids[0]
    }

    pub fn local(&self) -> &Graph {
        &self.local
    }

    pub fn global_id(&self, local: NodeId) -> NodeId {
        self.global_ids[local]
    }

    pub fn global_ids(&self) -> &[NodeId] {
        &self.global_ids
    }

    /// Sorted local ids of D ∪ L.
    pub fn candidates(&self) -> &[NodeId] {
        &self.candidates
    }

    pub fn destinations(&self) -> &[NodeId] {
        &self.destinations
    }

    pub fn nolinks(&self) -> &[NodeId] {
        &self.nolinks
    }

    /// Hop distance of a local node from the seed.
    pub fn hop(&self, local: NodeId) -> Option<u32> {
        let h = self.hops[local];
        (h != UNREACHED).then_some(h)
    }

    /// Positions of D and L inside [`Self::candidates`].
    pub fn candidate_positions(&self) -> (Vec<usize>, Vec<usize>) {
        let pos = |set: &[NodeId]| {
            set.iter()
                .map(|x| self.candidates.binary_search(x).expect("candidate"))
                .collect()
        };
        (pos(&self.destinations), pos(&self.nolinks))
    }

    /// Same instance with a different local graph of identical topology.
    pub fn with_local(&self, local: Graph) -> Result<TrainingInstance> {
        if local.node_count() != self.local.node_count()
            || local.arc_count() != self.local.arc_count()
        {
            return Err(SrwError::InvalidInput(
                "replacement graph topology differs".into(),
            ));
        }
        Ok(TrainingInstance {
            local,
            ..self.clone()
        })
    }

    pub fn edge_type(&self, src: NodeId, dst: NodeId) -> Result<EdgeType> {
        if !self.local.has_arc(src, dst) {
            return Err(SrwError::InvalidInput(format!(
                "no arc {src}->{dst} in the local graph"
            )));
        }
        self.classify(src, dst)
    }

    fn classify(&self, src: NodeId, dst: NodeId) -> Result<EdgeType> {
        let (a, b) = (self.hops[src], self.hops[dst]);
        EdgeType::from_hops(a, b).ok_or_else(|| {
            SrwError::Internal(format!(
                "arc {}->{} has hop pair ({a},{b}) outside the six edge types",
                self.global_ids[src], self.global_ids[dst]
            ))
        })
    }

    /// Edge type of every local arc, in arc order.
    pub fn arc_types(&self) -> Result<Vec<EdgeType>> {
        self.local
            .arcs()
            .map(|(u, v, _)| self.classify(u, v))
            .collect()
    }
}

/// Seed neighborhood used for candidate generation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwoHopNeighborhood {
    pub first_hop: Vec<NodeId>,
    /// Second-hop nodes with at least `min_common` common neighbors with the seed.
    pub second_hop: Vec<NodeId>,
}

pub fn two_hop_neighborhood(graph: &Graph, seed: NodeId, min_common: usize) -> TwoHopNeighborhood {
    let first_hop = graph.out_neighbors(seed).to_vec();
    let mut common = vec![0usize; graph.node_count()];
    let mut touched = Vec::new();
    for &u in &first_hop {
        for &v in graph.out_neighbors(u) {
            if v == seed || graph.has_arc(seed, v) {
                continue;
            }
            if common[v] == 0 {
                touched.push(v);
            }
            common[v] += 1;
        }
    }
    touched.sort_unstable();
    let second_hop = touched
        .into_iter()
        .filter(|&v| common[v] >= min_common)
        .collect();
    TwoHopNeighborhood {
        first_hop,
        second_hop,
    }
}

/// Builds the pruned two-hop instance for `seed`.
///
/// Candidates are retained second-hop nodes not in `known_links`;
/// destinations are the candidates found in `future_links`.
pub fn two_hop_instance(
    graph: &Graph,
    seed: NodeId,
    known_links: &HashSet<NodeId>,
    future_links: &HashSet<NodeId>,
    min_common: usize,
) -> Result<TrainingInstance> {
    if seed >= graph.node_count() {
        return Err(SrwError::InvalidInput(format!("seed {seed} out of range")));
    }
    if let Some(x) = known_links.intersection(future_links).next() {
        return Err(SrwError::InvalidInput(format!(
            "node {x} is both a known and a future link of seed {seed}"
        )));
    }
    let hood = two_hop_neighborhood(graph, seed, min_common);
    let mut nodes = vec![seed];
    let mut rest: Vec<NodeId> = hood
        .first_hop
        .iter()
        .chain(hood.second_hop.iter())
        .copied()
        .collect();
    rest.sort_unstable();
    nodes.extend(rest);
    let local = graph.induced_subgraph(&nodes)?;

    let mut destinations = Vec::new();
    let mut nolinks = Vec::new();
    for (i, &g) in nodes.iter().enumerate().skip(1) {
        if hood.second_hop.binary_search(&g).is_err() || known_links.contains(&g) {
            continue;
        }
        if future_links.contains(&g) {
            destinations.push(i);
        } else {
            nolinks.push(i);
        }
    }
    TrainingInstance::new(local, nodes, destinations, nolinks)
}

/// Builds an instance with explicit destination and no-link sets (global ids).
/// The local graph is everything reachable from the seed.
pub fn reachable_instance(
    graph: &Graph,
    seed: NodeId,
    destinations: &[NodeId],
    nolinks: &[NodeId],
) -> Result<TrainingInstance> {
    if seed >= graph.node_count() {
        return Err(SrwError::InvalidInput(format!("seed {seed} out of range")));
    }
    let hops = bfs_hops(graph, seed);
    let mut nodes = vec![seed];
    nodes.extend((0..graph.node_count()).filter(|&u| u != seed && hops[u] != UNREACHED));
    let mut to_local = std::collections::HashMap::with_capacity(nodes.len());
    for (i, &g) in nodes.iter().enumerate() {
        to_local.insert(g, i);
    }
    let map = |set: &[NodeId]| -> Result<Vec<NodeId>> {
        set.iter()
            .map(|g| {
                to_local.get(g).copied().ok_or_else(|| {
                    SrwError::InvalidInput(format!("candidate {g} unreachable from seed {seed}"))
                })
            })
            .collect()
    };
    let d = map(destinations)?;
    let l = map(nolinks)?;
    let local = graph.induced_subgraph(&nodes)?;
    TrainingInstance::new(local, nodes, d, l)
}

/// Appends the common-friends count |N(w) ∩ N(seed)| to every arc `(u, w)`.
///
/// Values are raw counts; run the standardization pipeline afterwards.
pub fn add_common_friends_feature(instance: &TrainingInstance) -> Result<TrainingInstance> {
    let g = instance.local();
    let seed = instance.seed();
    let local = g.with_extra_column(|arc| g.common_neighbor_count(g.target(arc), seed) as f64);
    instance.with_local(local)
}
