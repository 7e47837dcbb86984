//! Random fixtures and dense oracles for unit tests.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;

use std::collections::HashSet;

use crate::graph_model::{
    reachable_instance, two_hop_instance, two_hop_neighborhood, Graph, GraphBuilder,
    TrainingInstance,
};
use crate::strength::{EdgeTypeMode, Model, StrengthFamily};

/// Undirected random graph on `n` nodes; a random spanning tree keeps it
/// connected, extra edges appear with probability `density`.
pub fn random_graph<R: Rng>(rng: &mut R, n: usize, dim: usize, density: f64) -> Graph {
    let mut b = GraphBuilder::new(n, dim);
    let mut seen = HashSet::new();
    let feat =
        |rng: &mut R| -> Vec<f64> { (0..dim).map(|_| rng.random_range(-1.5..1.5)).collect() };
    for v in 1..n {
        let u = rng.random_range(0..v);
        seen.insert((u, v));
        let f = feat(rng);
        b.add_edge(u, v, &f).unwrap();
    }
    for u in 0..n {
        for v in u + 1..n {
            if !seen.contains(&(u, v)) && rng.random_bool(density) {
                let f = feat(rng);
                b.add_edge(u, v, &f).unwrap();
            }
        }
    }
    b.build().unwrap()
}

pub fn random_model<R: Rng>(
    rng: &mut R,
    family: StrengthFamily,
    mode: EdgeTypeMode,
    dim: usize,
) -> Model {
    let params = (0..mode.slots() * dim)
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    Model::from_params(family, mode, dim, params).unwrap()
}

/// Instance over the whole graph with seed 0 and a random D/L split of the
/// non-neighbors of the seed.
pub fn random_instance<R: Rng>(rng: &mut R, n: usize, dim: usize) -> TrainingInstance {
    loop {
        let g = random_graph(rng, n, dim, 0.12);
        let mut pool: Vec<usize> = (1..n).filter(|&v| !g.has_arc(0, v)).collect();
        if pool.len() < 3 {
            continue;
        }
        pool.shuffle(rng);
        let k = rng.random_range(1..pool.len().min(4));
        let (d, l) = pool.split_at(k);
        return reachable_instance(&g, 0, d, l).unwrap();
    }
}

/// Like [`random_instance`], restricted to the seed's two-hop neighborhood so
/// every arc has an edge type. Candidates are all second-hop nodes.
pub fn random_two_hop_instance<R: Rng>(rng: &mut R, n: usize, dim: usize) -> TrainingInstance {
    loop {
        let g = random_graph(rng, n, dim, 0.12);
        let mut pool = two_hop_neighborhood(&g, 0, 0).second_hop;
        if pool.len() < 2 {
            continue;
        }
        pool.shuffle(rng);
        let k = rng.random_range(1..pool.len());
        let future: HashSet<usize> = pool[..k].iter().copied().collect();
        return two_hop_instance(&g, 0, &HashSet::new(), &future, 0).unwrap();
    }
}

/// Stationary vector from a dense linear solve of `(Q^T - I) p = 0`, `sum p = 1`.
pub fn dense_stationary(graph: &Graph, seed: usize, model: &Model, alpha: f64) -> Vec<f64> {
    let n = graph.node_count();
    let mut q = DMatrix::<f64>::zeros(n, n);
    for u in 0..n {
        let arcs: Vec<usize> = graph.out_arcs(u).collect();
        if arcs.is_empty() {
            q[(u, seed)] = 1.0;
            continue;
        }
        let a: Vec<f64> = arcs
            .iter()
            .map(|&e| model.strength_in_slot(0, graph.features(e)).unwrap())
            .collect();
        let total: f64 = a.iter().sum();
        for (&e, w) in arcs.iter().zip(a) {
            q[(u, graph.target(e))] += (1.0 - alpha) * w / total;
        }
        q[(u, seed)] += alpha;
    }
    let mut m = q.transpose() - DMatrix::<f64>::identity(n, n);
    for j in 0..n {
        m[(n - 1, j)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(n);
    rhs[n - 1] = 1.0;
    let sol = m.lu().solve(&rhs).expect("singular stationary system");
    sol.iter().copied().collect()
}
