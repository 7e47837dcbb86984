//! Synthetic link-prediction data with planted edge strengths.
//!
//! Graphs grow by the copying rule: a triangle, then each arriving node
//! links to three distinct existing nodes, each picked uniformly with
//! probability `uniform_prob` and by degree otherwise. Every edge carries
//! standard-normal features; the planted strength is `exp(w* . psi)`.
//! Destinations are chosen from the planted walk's scores.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::error::{Result, SrwError};
use crate::graph_model::{
    reachable_instance, two_hop_neighborhood, Graph, GraphBuilder, NodeId, TrainingInstance,
};
use crate::strength::{EdgeTypeMode, Model, StrengthFamily};
use crate::walker::{pagerank, PowerConfig, TransitionView};

const MAX_RESAMPLE: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TargetMode {
    #[default]
    Deterministic,
    Probabilistic,
}

impl std::fmt::Display for TargetMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TargetMode::Deterministic => "deterministic",
            TargetMode::Probabilistic => "probabilistic",
        })
    }
}

impl std::str::FromStr for TargetMode {
    type Err = SrwError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "deterministic" => Ok(TargetMode::Deterministic),
            "probabilistic" => Ok(TargetMode::Probabilistic),
            other => Err(SrwError::InvalidParameter(format!(
                "unknown target mode `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub nodes: usize,
    pub edges_per_node: usize,
    pub uniform_prob: f64,
    pub true_weights: Vec<f64>,
    pub alpha: f64,
    pub targets: usize,
    pub target_mode: TargetMode,
    pub noise_variance: f64,
    /// Restrict candidates to the seed's second hop instead of every non-neighbor.
    pub two_hop_candidates: bool,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            nodes: 1_000,
            edges_per_node: 3,
            uniform_prob: 0.8,
            true_weights: vec![1.0, -1.0],
            alpha: 0.2,
            targets: 10,
            target_mode: TargetMode::Deterministic,
            noise_variance: 0.0,
            two_hop_candidates: false,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.nodes < 3 {
            return Err(SrwError::InvalidParameter(
                "synthetic graphs need at least 3 nodes".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.uniform_prob) {
            return Err(SrwError::InvalidParameter(
                "uniform_prob outside [0, 1]".into(),
            ));
        }
        if self.targets == 0 {
            return Err(SrwError::InvalidParameter(
                "need at least one target".into(),
            ));
        }
        if !(self.noise_variance >= 0.0) {
            return Err(SrwError::InvalidParameter(
                "noise variance must be >= 0".into(),
            ));
        }
        if self.true_weights.is_empty() {
            return Err(SrwError::InvalidParameter("true weights are empty".into()));
        }
        Ok(())
    }

    pub fn feature_dim(&self) -> usize {
        self.true_weights.len()
    }

    pub fn true_model(&self) -> Result<Model> {
        Model::from_params(
            StrengthFamily::Exponential,
            EdgeTypeMode::Single,
            self.feature_dim(),
            self.true_weights.clone(),
        )
    }
}

/// Undirected copying-model graph without features (dimension 0).
pub fn copying_graph<R: Rng>(config: &SynthConfig, rng: &mut R) -> Result<Graph> {
    config.validate()?;
    let n = config.nodes;
    // each edge endpoint appears once: uniform draws here are degree-proportional
    let mut endpoints: Vec<NodeId> = Vec::with_capacity(2 * config.edges_per_node * n);
    let mut edges: Vec<(NodeId, NodeId)> = Vec::new();
    for (u, v) in [(0, 1), (1, 2), (0, 2)] {
        endpoints.extend([u, v]);
        edges.push((u, v));
    }
    for u in 3..n {
        let want = config.edges_per_node.min(u);
        let mut chosen: Vec<NodeId> = Vec::with_capacity(want);
        for _ in 0..want {
            let mut pick = None;
            for _ in 0..MAX_RESAMPLE {
                let v = if rng.random_bool(config.uniform_prob) {
                    rng.random_range(0..u)
                } else {
                    *endpoints.choose(rng).expect("non-empty")
                };
                if !chosen.contains(&v) {
                    pick = Some(v);
                    break;
                }
            }
            let v = match pick {
                Some(v) => v,
                None => {
                    let free: Vec<NodeId> = (0..u).filter(|v| !chosen.contains(v)).collect();
                    *free.choose(rng).expect("fewer picks than existing nodes")
                }
            };
            chosen.push(v);
        }
        for v in chosen {
            endpoints.extend([u, v]);
            edges.push((v, u));
        }
    }
    let mut b = GraphBuilder::new(n, 0);
    for (u, v) in edges {
        b.add_edge(u, v, &[])?;
    }
    b.build()
}

/// Calls `f(arc, reverse_arc)` once per undirected pair (and once for each
/// arc without a reverse), in arc order.
fn for_each_pair<F: FnMut(usize, Option<usize>)>(graph: &Graph, mut f: F) {
    for arc in 0..graph.arc_count() {
        let (u, v) = (graph.source(arc), graph.target(arc));
        let rev = graph.find_arc(v, u);
        if u < v || rev.is_none() {
            f(arc, rev);
        }
    }
}

/// Replaces features with `dim` iid standard-normal values per undirected
/// edge, shared by both arcs.
pub fn plant_features<R: Rng>(graph: &Graph, dim: usize, rng: &mut R) -> Result<Graph> {
    let mut out = graph.map_features(dim, |_, _| vec![0.0; dim])?;
    for_each_pair(graph, |arc, rev| {
        let row: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        out.features_mut(arc).copy_from_slice(&row);
        if let Some(r) = rev {
            out.features_mut(r).copy_from_slice(&row);
        }
    });
    Ok(out)
}

/// Adds iid `N(0, variance)` noise to every feature, identically on both
/// arcs of an undirected edge.
pub fn add_noise<R: Rng>(graph: &Graph, variance: f64, rng: &mut R) -> Result<Graph> {
    if !(variance >= 0.0) {
        return Err(SrwError::InvalidParameter(
            "noise variance must be >= 0".into(),
        ));
    }
    let mut out = graph.clone();
    if variance == 0.0 {
        return Ok(out);
    }
    let normal =
        Normal::new(0.0, variance.sqrt()).map_err(|e| SrwError::InvalidParameter(e.to_string()))?;
    let dim = graph.dim();
    for_each_pair(graph, |arc, rev| {
        let noise: Vec<f64> = (0..dim).map(|_| normal.sample(rng)).collect();
        for (x, e) in out.features_mut(arc).iter_mut().zip(&noise) {
            *x += e;
        }
        if let Some(r) = rev {
            for (x, e) in out.features_mut(r).iter_mut().zip(&noise) {
                *x += e;
            }
        }
    });
    Ok(out)
}

/// Stationary scores of the planted-strength walk from `seed`.
pub fn planted_scores(graph: &Graph, seed: NodeId, config: &SynthConfig) -> Result<Vec<f64>> {
    let model = config.true_model()?;
    let view = TransitionView::new(graph, seed, &model, config.alpha, None)?;
    pagerank(&view, PowerConfig::default())
}

/// Nodes eligible as targets of `seed`.
pub fn eligible_candidates(graph: &Graph, seed: NodeId, two_hop: bool) -> Vec<NodeId> {
    if two_hop {
        two_hop_neighborhood(graph, seed, 0).second_hop
    } else {
        (0..graph.node_count())
            .filter(|&v| v != seed && !graph.has_arc(seed, v))
            .collect()
    }
}

/// Picks `K` destinations among `pool` from planted scores; the rest of the
/// pool becomes the no-link set. Returns `(D, L)`, both sorted.
pub fn make_targets<R: Rng>(
    scores: &[f64],
    pool: &[NodeId],
    config: &SynthConfig,
    rng: &mut R,
) -> Result<(Vec<NodeId>, Vec<NodeId>)> {
    let k = config.targets;
    if pool.len() < k {
        return Err(SrwError::Generation(format!(
            "{} eligible candidates, {k} targets requested",
            pool.len()
        )));
    }
    let mut dest: Vec<NodeId> = match config.target_mode {
        TargetMode::Deterministic => {
            let mut order = pool.to_vec();
            order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
            order.truncate(k);
            order
        }
        TargetMode::Probabilistic => {
            let weighted: Vec<(NodeId, f64)> = pool.iter().map(|&v| (v, scores[v])).collect();
            let picked = weighted
                .choose_multiple_weighted(rng, k, |item| item.1)
                .map_err(|e| SrwError::Generation(e.to_string()))?;
            picked.map(|item| item.0).collect()
        }
    };
    dest.sort_unstable();
    let nolink: Vec<NodeId> = pool
        .iter()
        .copied()
        .filter(|v| dest.binary_search(v).is_err())
        .collect();
    Ok((dest, nolink))
}

/// A seed with its destination and no-link nodes.
pub type SeedLabels = (NodeId, Vec<NodeId>, Vec<NodeId>);

/// One synthetic training instance: its graph, planted scores and labels.
#[derive(Debug, Clone)]
pub struct SynthSample {
    /// Graph with (possibly noisy) features.
    pub graph: Graph,
    pub seed: NodeId,
    pub destinations: Vec<NodeId>,
    pub nolinks: Vec<NodeId>,
}

impl SynthSample {
    pub fn instance(&self) -> Result<TrainingInstance> {
        reachable_instance(&self.graph, self.seed, &self.destinations, &self.nolinks)
    }
}

/// Full pipeline for one graph: grow, plant, pick a seed among the three
/// oldest nodes, label targets from clean features, then add noise.
pub fn generate_sample<R: Rng>(config: &SynthConfig, rng: &mut R) -> Result<SynthSample> {
    let bare = copying_graph(config, rng)?;
    let clean = plant_features(&bare, config.feature_dim(), rng)?;
    let seed = rng.random_range(0..3);
    let scores = planted_scores(&clean, seed, config)?;
    let pool = eligible_candidates(&clean, seed, config.two_hop_candidates);
    let (destinations, nolinks) = make_targets(&scores, &pool, config, rng)?;
    let graph = add_noise(&clean, config.noise_variance, rng)?;
    Ok(SynthSample {
        graph,
        seed,
        destinations,
        nolinks,
    })
}

/// `count` independent samples; sample `i` draws from its own stream seeded
/// by `(config.seed, i)`.
pub fn generate_samples(config: &SynthConfig, count: usize) -> Result<Vec<SynthSample>> {
    use rayon::prelude::*;
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(i as u64 + 1);
            generate_sample(config, &mut rng)
        })
        .collect()
}

/// Disjoint union of the samples' graphs, with node ids offset per sample.
/// Returns the union and each sample's `(seed, D, L)` in union ids.
pub fn union_samples(samples: &[SynthSample]) -> Result<(Graph, Vec<SeedLabels>)> {
    let dim = samples.first().map(|s| s.graph.dim()).unwrap_or(0);
    let total: usize = samples.iter().map(|s| s.graph.node_count()).sum();
    let mut b = GraphBuilder::new(total, dim);
    let mut labels = Vec::with_capacity(samples.len());
    let mut offset = 0;
    for s in samples {
        for (u, v, f) in s.graph.arcs() {
            b.add_arc(u + offset, v + offset, f)?;
        }
        let shift = |xs: &[NodeId]| xs.iter().map(|x| x + offset).collect::<Vec<_>>();
        labels.push((s.seed + offset, shift(&s.destinations), shift(&s.nolinks)));
        offset += s.graph.node_count();
    }
    Ok((b.build()?, labels))
}
