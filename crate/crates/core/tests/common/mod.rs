//! Fixtures and dense oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use srw_core::graph_model::two_hop_instance;
use srw_core::{EdgeTypeMode, Graph, GraphBuilder, Model, StrengthFamily, TrainingInstance};

pub fn features<R: Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.random_range(-1.5..1.5)).collect()
}

/// Connected undirected graph: a random spanning tree plus extra edges with
/// probability `density`.
pub fn undirected_graph<R: Rng>(rng: &mut R, n: usize, dim: usize, density: f64) -> Graph {
    let mut b = GraphBuilder::new(n, dim);
    let mut seen = HashSet::new();
    for v in 1..n {
        let u = rng.random_range(0..v);
        seen.insert((u, v));
        b.add_edge(u, v, &features(rng, dim)).unwrap();
    }
    for u in 0..n {
        for v in u + 1..n {
            if !seen.contains(&(u, v)) && rng.random_bool(density) {
                b.add_edge(u, v, &features(rng, dim)).unwrap();
            }
        }
    }
    b.build().unwrap()
}

/// Directed graph with independent arcs; some nodes end up dangling.
pub fn directed_graph<R: Rng>(rng: &mut R, n: usize, dim: usize, density: f64) -> Graph {
    let mut b = GraphBuilder::new(n, dim);
    for u in 0..n {
        for v in 0..n {
            if u != v && rng.random_bool(density) {
                b.add_arc(u, v, &features(rng, dim)).unwrap();
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

/// Two-hop instance on a random connected graph of at most `max_nodes`
/// nodes, seed 0, candidates split at random into D and L.
pub fn random_two_hop_instance<R: Rng>(
    rng: &mut R,
    max_nodes: usize,
    dim: usize,
) -> TrainingInstance {
    loop {
        let n = rng.random_range(8..=max_nodes);
        let g = undirected_graph(rng, n, dim, 0.15);
        let hood = srw_core::graph_model::two_hop_neighborhood(&g, 0, 0);
        let mut pool = hood.second_hop.clone();
        if pool.len() < 2 {
            continue;
        }
        pool.shuffle(rng);
        let k = rng.random_range(1..pool.len());
        let future: HashSet<usize> = pool[..k].iter().copied().collect();
        return two_hop_instance(&g, 0, &HashSet::new(), &future, 0).unwrap();
    }
}

/// Stationary vector of the restart walk from a dense linear solve,
/// built straight from the strengths (single-slot models only).
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
    // replace one balance equation with sum(p) = 1
    let mut m = q.transpose() - DMatrix::<f64>::identity(n, n);
    for j in 0..n {
        m[(n - 1, j)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(n);
    rhs[n - 1] = 1.0;
    m.lu()
        .solve(&rhs)
        .expect("singular stationary system")
        .iter()
        .copied()
        .collect()
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

pub fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}
