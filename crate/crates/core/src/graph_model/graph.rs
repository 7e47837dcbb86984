//! Directed sparse graph with one real feature vector per arc.
//!
//! Arcs are kept in compressed-sparse-row order: grouped by source, and
//! sorted by destination inside each group. Undirected edges become two
//! opposed arcs carrying identical feature vectors.

use std::ops::Range;

use crate::error::{Result, SrwError};

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    node_count: usize,
    dim: usize,
    offsets: Vec<usize>,
    sources: Vec<NodeId>,
    targets: Vec<NodeId>,
    features: Vec<f64>,
}

impl Graph {
    pub fn node_count(&self) -> usize {
        self.node_count
    }

    /// Feature dimension shared by every arc.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn arc_count(&self) -> usize {
        self.targets.len()
    }

    /// Arc indices leaving `u`, in ascending destination order.
    pub fn out_arcs(&self, u: NodeId) -> Range<usize> {
        self.offsets[u]..self.offsets[u + 1]
    }

    pub fn out_degree(&self, u: NodeId) -> usize {
        self.offsets[u + 1] - self.offsets[u]
    }

    pub fn out_neighbors(&self, u: NodeId) -> &[NodeId] {
        &self.targets[self.out_arcs(u)]
    }

    pub fn source(&self, arc: usize) -> NodeId {
        self.sources[arc]
    }

    pub fn target(&self, arc: usize) -> NodeId {
        self.targets[arc]
    }

    pub fn features(&self, arc: usize) -> &[f64] {
        &self.features[arc * self.dim..(arc + 1) * self.dim]
    }

    pub fn features_mut(&mut self, arc: usize) -> &mut [f64] {
        &mut self.features[arc * self.dim..(arc + 1) * self.dim]
    }

    /// Index of the arc `u -> v`, if present.
    pub fn find_arc(&self, u: NodeId, v: NodeId) -> Option<usize> {
        let range = self.out_arcs(u);
        self.targets[range.clone()]
            .binary_search(&v)
            .ok()
            .map(|i| range.start + i)
    }

    pub fn has_arc(&self, u: NodeId, v: NodeId) -> bool {
        self.find_arc(u, v).is_some()
    }

    /// `(src, dst, features)` for every arc in storage order.
    pub fn arcs(&self) -> impl Iterator<Item = (NodeId, NodeId, &[f64])> + '_ {
        (0..self.arc_count()).map(move |a| (self.sources[a], self.targets[a], self.features(a)))
    }

    /// Number of common out-neighbors of `u` and `v`.
    pub fn common_neighbor_count(&self, u: NodeId, v: NodeId) -> usize {
        let (mut a, mut b) = (self.out_neighbors(u).iter(), self.out_neighbors(v).iter());
        let (mut x, mut y) = (a.next(), b.next());
        let mut count = 0;
        while let (Some(&p), Some(&q)) = (x, y) {
            match p.cmp(&q) {
                std::cmp::Ordering::Less => x = a.next(),
                std::cmp::Ordering::Greater => y = b.next(),
                std::cmp::Ordering::Equal => {
                    count += 1;
                    x = a.next();
                    y = b.next();
                }
            }
        }
        count
    }

    /// Returns a copy with one more feature column, valued `f(arc)` on each arc.
    pub fn with_extra_column<F>(&self, mut f: F) -> Graph
    where
        F: FnMut(usize) -> f64,
    {
        let dim = self.dim + 1;
        let mut features = Vec::with_capacity(self.arc_count() * dim);
        for arc in 0..self.arc_count() {
            features.extend_from_slice(self.features(arc));
            features.push(f(arc));
        }
        Graph {
            dim,
            features,
            ..self.clone()
        }
    }

    /// Returns a copy whose feature rows are replaced by `f(arc, old_row)`.
    pub fn map_features<F>(&self, dim: usize, mut f: F) -> Result<Graph>
    where
        F: FnMut(usize, &[f64]) -> Vec<f64>,
    {
        let mut features = Vec::with_capacity(self.arc_count() * dim);
        for arc in 0..self.arc_count() {
            let row = f(arc, self.features(arc));
            if row.len() != dim {
                return Err(SrwError::InvalidInput(format!(
                    "feature map produced {} values, expected {dim}",
                    row.len()
                )));
            }
            features.extend(row);
        }
        Ok(Graph {
            dim,
            features,
            ..self.clone()
        })
    }

    /// Subgraph induced by `nodes` (given as original ids). Node `nodes[i]`
    /// becomes local id `i`.
    pub fn induced_subgraph(&self, nodes: &[NodeId]) -> Result<Graph> {
        let mut local = vec![usize::MAX; self.node_count];
        for (i, &u) in nodes.iter().enumerate() {
            if u >= self.node_count {
                return Err(SrwError::InvalidInput(format!("node {u} out of range")));
            }
            if local[u] != usize::MAX {
                return Err(SrwError::InvalidInput(format!("node {u} listed twice")));
            }
            local[u] = i;
        }
        let mut builder = GraphBuilder::new(nodes.len(), self.dim);
        for &u in nodes {
            for arc in self.out_arcs(u) {
                let v = self.targets[arc];
                if local[v] != usize::MAX {
                    builder.add_arc(local[u], local[v], self.features(arc))?;
                }
            }
        }
        builder.build()
    }
}

/// Accumulates arcs, then sorts and validates them into a [`Graph`].
#[derive(Debug, Clone)]
pub struct GraphBuilder {
    node_count: usize,
    dim: usize,
    arcs: Vec<(NodeId, NodeId)>,
    features: Vec<f64>,
}

impl GraphBuilder {
    pub fn new(node_count: usize, dim: usize) -> Self {
        GraphBuilder {
            node_count,
            dim,
            arcs: Vec::new(),
            features: Vec::new(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    /// Grows the node range to cover `n` nodes.
    pub fn ensure_nodes(&mut self, n: usize) {
        self.node_count = self.node_count.max(n);
    }

    pub fn add_arc(&mut self, src: NodeId, dst: NodeId, features: &[f64]) -> Result<()> {
        if src == dst {
            return Err(SrwError::InvalidGraph(format!("self-loop on node {src}")));
        }
        if src >= self.node_count || dst >= self.node_count {
            return Err(SrwError::InvalidGraph(format!(
                "arc {src}->{dst} outside node range [0, {})",
                self.node_count
            )));
        }
        if features.len() != self.dim {
            return Err(SrwError::InvalidGraph(format!(
                "arc {src}->{dst} has {} features, expected {}",
                features.len(),
                self.dim
            )));
        }
        self.arcs.push((src, dst));
        self.features.extend_from_slice(features);
        Ok(())
    }

    /// Adds `u -> v` and `v -> u` with the same feature vector.
    pub fn add_edge(&mut self, u: NodeId, v: NodeId, features: &[f64]) -> Result<()> {
        self.add_arc(u, v, features)?;
        self.add_arc(v, u, features)
    }

    pub fn build(self) -> Result<Graph> {
        let GraphBuilder {
            node_count,
            dim,
            arcs,
            features: raw,
        } = self;
        let mut order: Vec<usize> = (0..arcs.len()).collect();
        order.sort_unstable_by_key(|&i| arcs[i]);
        for w in order.windows(2) {
            if arcs[w[0]] == arcs[w[1]] {
                let (u, v) = arcs[w[0]];
                return Err(SrwError::InvalidGraph(format!("duplicate arc {u}->{v}")));
            }
        }
        let mut offsets = vec![0usize; node_count + 1];
        for &(u, _) in &arcs {
            offsets[u + 1] += 1;
        }
        for u in 0..node_count {
            offsets[u + 1] += offsets[u];
        }
        let mut sources = Vec::with_capacity(arcs.len());
        let mut targets = Vec::with_capacity(arcs.len());
        let mut features = Vec::with_capacity(raw.len());
        for &i in &order {
            sources.push(arcs[i].0);
            targets.push(arcs[i].1);
            features.extend_from_slice(&raw[i * dim..(i + 1) * dim]);
        }
        Ok(Graph {
            node_count,
            dim,
            offsets,
            sources,
            targets,
            features,
        })
    }
}
