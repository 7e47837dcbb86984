//! Restart-augmented random walk: transition matrix, stationary scores and
//! their derivatives with respect to the strength parameters.
//!
//! The walk moves along an out-arc with probability proportional to its
//! strength, scaled by `1 - alpha`, and jumps back to the seed with
//! probability `alpha`. Nodes without out-arcs send all their mass to the
//! seed. The stationary vector `p` is found by power iteration; each
//! derivative `dp/dw_k` is the fixed point of
//! `x = Q^T x + b_k` with `b_k[u] = sum_j p_j dQ_ju/dw_k`.

use crate::error::{Result, SrwError};
use crate::graph_model::{EdgeType, Graph, NodeId, TrainingInstance};
use crate::strength::{EdgeTypeMode, Model};

pub const DEFAULT_EPSILON: f64 = 1e-12;
pub const DEFAULT_MAX_ITER: usize = 10_000;

/// Strength-weighted transition structure of one seed's local graph.
#[derive(Debug, Clone)]
pub struct TransitionView<'g> {
    graph: &'g Graph,
    seed: NodeId,
    alpha: f64,
    dim: usize,
    param_count: usize,
    arc_slot: Vec<usize>,
    strength: Vec<f64>,
    /// `da/dw` for each arc's own slot, `arc_count * dim`.
    strength_grad: Vec<f64>,
    /// Transition probability carried by each arc, `(1 - alpha) a / S`.
    arc_prob: Vec<f64>,
    out_sum: Vec<f64>,
    /// Per node, `sum over out-arcs of da/dw_k` for every parameter `k`.
    out_grad_sum: Vec<f64>,
}

impl<'g> TransitionView<'g> {
    /// `arc_types` is required in hop6 mode and ignored otherwise.
    pub fn new(
        graph: &'g Graph,
        seed: NodeId,
        model: &Model,
        alpha: f64,
        arc_types: Option<&[EdgeType]>,
    ) -> Result<TransitionView<'g>> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(SrwError::InvalidParameter(format!(
                "restart probability {alpha} outside [0, 1]"
            )));
        }
        if seed >= graph.node_count() {
            return Err(SrwError::InvalidInput(format!("seed {seed} out of range")));
        }
        if graph.dim() != model.dim() {
            return Err(SrwError::InvalidInput(format!(
                "graph has {} features per arc, model expects {}",
                graph.dim(),
                model.dim()
            )));
        }
        let arcs = graph.arc_count();
        let arc_slot: Vec<usize> = match (model.mode(), arc_types) {
            (EdgeTypeMode::Single, _) => vec![0; arcs],
            (EdgeTypeMode::Hop6, Some(types)) if types.len() == arcs => {
                types.iter().map(|&t| model.mode().slot(t)).collect()
            }
            (EdgeTypeMode::Hop6, _) => {
                return Err(SrwError::InvalidInput(
                    "hop6 model needs one edge type per arc".into(),
                ))
            }
        };
        let dim = model.dim();
        let param_count = model.param_count();
        let n = graph.node_count();
        let mut strength = vec![0.0; arcs];
        let mut strength_grad = vec![0.0; arcs * dim];
        for arc in 0..arcs {
            strength[arc] = model.strength_and_grad(
                arc_slot[arc],
                graph.features(arc),
                &mut strength_grad[arc * dim..(arc + 1) * dim],
            )?;
        }
        let mut out_sum = vec![0.0; n];
        let mut out_grad_sum = vec![0.0; n * param_count];
        let mut arc_prob = vec![0.0; arcs];
        for u in 0..n {
            let range = graph.out_arcs(u);
            if range.is_empty() {
                continue;
            }
            let sum: f64 = strength[range.clone()].iter().sum();
            if !(sum > 0.0 && sum.is_finite()) {
                return Err(SrwError::Internal(format!(
                    "out-strength of node {u} is {sum}"
                )));
            }
            out_sum[u] = sum;
            let gsum = &mut out_grad_sum[u * param_count..(u + 1) * param_count];
            for arc in range {
                arc_prob[arc] = (1.0 - alpha) * strength[arc] / sum;
                let base = arc_slot[arc] * dim;
                for i in 0..dim {
                    gsum[base + i] += strength_grad[arc * dim + i];
                }
            }
        }
        Ok(TransitionView {
            graph,
            seed,
            alpha,
            dim,
            param_count,
            arc_slot,
            strength,
            strength_grad,
            arc_prob,
            out_sum,
            out_grad_sum,
        })
    }

    pub fn graph(&self) -> &Graph {
        self.graph
    }

    pub fn seed(&self) -> NodeId {
        self.seed
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    pub fn param_count(&self) -> usize {
        self.param_count
    }

    pub fn arc_strength(&self, arc: usize) -> f64 {
        self.strength[arc]
    }

    pub fn out_strength(&self, u: NodeId) -> f64 {
        self.out_sum[u]
    }

    /// Non-zero entries of row `u` of the transition matrix, by column.
    pub fn row(&self, u: NodeId) -> Vec<(NodeId, f64)> {
        let mut row: Vec<(NodeId, f64)> = Vec::new();
        let range = self.graph.out_arcs(u);
        if range.is_empty() {
            return vec![(self.seed, 1.0)];
        }
        for arc in range {
            row.push((self.graph.target(arc), self.arc_prob[arc]));
        }
        if self.alpha > 0.0 {
            match row.iter_mut().find(|(v, _)| *v == self.seed) {
                Some(entry) => entry.1 += self.alpha,
                None => {
                    row.push((self.seed, self.alpha));
                    row.sort_by_key(|e| e.0);
                }
            }
        }
        row
    }

    /// `out = Q^T x`.
    fn propagate(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        let g = self.graph;
        let mut to_seed = 0.0;
        for (u, &xu) in x.iter().enumerate() {
            let range = g.out_arcs(u);
            if range.is_empty() {
                to_seed += xu;
                continue;
            }
            to_seed += self.alpha * xu;
            for arc in range {
                out[g.target(arc)] += self.arc_prob[arc] * xu;
            }
        }
        out[self.seed] += to_seed;
    }

    /// `dQ_ju / dw_k`, computed directly from the quotient rule.
    pub fn transition_grad_entry(&self, j: NodeId, u: NodeId, k: usize) -> f64 {
        let Some(arc) = self.graph.find_arc(j, u) else {
            return 0.0;
        };
        let slot = k / self.dim.max(1);
        let own = if self.arc_slot[arc] == slot {
            self.strength_grad[arc * self.dim + k % self.dim]
        } else {
            0.0
        };
        let s = self.out_sum[j];
        let gs = self.out_grad_sum[j * self.param_count + k];
        (1.0 - self.alpha) * (own * s - self.strength[arc] * gs) / (s * s)
    }

    /// `b_k[u] = sum_j p_j dQ_ju/dw_k` for every parameter, `[k][u]`.
    pub fn derivative_sources(&self, p: &[f64]) -> Vec<Vec<f64>> {
        let n = self.node_count();
        let pc = self.param_count;
        let dim = self.dim;
        let mut b = vec![vec![0.0; n]; pc];
        let g = self.graph;
        for (j, &pj) in p.iter().enumerate().take(n) {
            let range = g.out_arcs(j);
            if range.is_empty() || pj == 0.0 {
                continue;
            }
            let s = self.out_sum[j];
            let c = pj * (1.0 - self.alpha) / (s * s);
            let gsum = &self.out_grad_sum[j * pc..(j + 1) * pc];
            for arc in range {
                let u = g.target(arc);
                let a = self.strength[arc];
                for (k, bk) in b.iter_mut().enumerate() {
                    bk[u] -= c * a * gsum[k];
                }
                let base = self.arc_slot[arc] * dim;
                for i in 0..dim {
                    b[base + i][u] += c * self.strength_grad[arc * dim + i] * s;
                }
            }
        }
        b
    }
}

/// Builds the transition view of a training instance.
pub fn build_transition<'a>(
    instance: &'a TrainingInstance,
    model: &Model,
    alpha: f64,
) -> Result<TransitionView<'a>> {
    let types = match model.mode() {
        EdgeTypeMode::Single => None,
        EdgeTypeMode::Hop6 => Some(instance.arc_types()?),
    };
    TransitionView::new(
        instance.local(),
        instance.seed(),
        model,
        alpha,
        types.as_deref(),
    )
}

/// Stopping rule and iteration cap for the power iterations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerConfig {
    pub epsilon: f64,
    pub max_iter: usize,
}

impl Default for PowerConfig {
    fn default() -> Self {
        PowerConfig {
            epsilon: DEFAULT_EPSILON,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

impl PowerConfig {
    fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(SrwError::InvalidParameter(
                "epsilon must be positive".into(),
            ));
        }
        Ok(())
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn max_abs(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

/// Stationary vector from a uniform start.
pub fn pagerank(view: &TransitionView<'_>, config: PowerConfig) -> Result<Vec<f64>> {
    pagerank_from(view, None, config).map(|(p, _)| p)
}

/// Stationary vector, optionally warm-started. Returns `(p, sweeps)`.
pub fn pagerank_from(
    view: &TransitionView<'_>,
    init: Option<&[f64]>,
    config: PowerConfig,
) -> Result<(Vec<f64>, usize)> {
    config.validate()?;
    let n = view.node_count();
    let mut p = match init {
        Some(x) if x.len() == n => x.to_vec(),
        _ => vec![1.0 / n as f64; n],
    };
    let mut next = vec![0.0; n];
    let mut change = f64::INFINITY;
    for it in 1..=config.max_iter {
        view.propagate(&p, &mut next);
        change = max_abs_diff(&p, &next);
        std::mem::swap(&mut p, &mut next);
        if change < config.epsilon {
            let total: f64 = p.iter().sum();
            p.iter_mut().for_each(|x| *x /= total);
            return Ok((p, it));
        }
    }
    Err(SrwError::NonConvergence {
        iterations: config.max_iter,
        last_change: change,
        last_iterate: p,
    })
}

/// Iterates `x = Q^T x + b` to its fixed point. Convergence is measured on
/// the max-norm change relative to `max(1, |x|_inf)`.
fn derivative_fixed_point(
    view: &TransitionView<'_>,
    source: &[f64],
    init: Option<&[f64]>,
    config: PowerConfig,
) -> Result<(Vec<f64>, usize)> {
    let n = view.node_count();
    if max_abs(source) == 0.0 {
        return Ok((vec![0.0; n], 0));
    }
    let mut x = match init {
        Some(v) if v.len() == n => v.to_vec(),
        _ => vec![0.0; n],
    };
    let mut next = vec![0.0; n];
    let mut change = f64::INFINITY;
    for it in 1..=config.max_iter {
        view.propagate(&x, &mut next);
        for (y, b) in next.iter_mut().zip(source) {
            *y += b;
        }
        change = max_abs_diff(&x, &next);
        std::mem::swap(&mut x, &mut next);
        if change < config.epsilon * max_abs(&x).max(1.0) {
            return Ok((x, it));
        }
    }
    Err(SrwError::NonConvergence {
        iterations: config.max_iter,
        last_change: change,
        last_iterate: x,
    })
}

/// `dp/dw_k` for one parameter, given a converged `p`.
pub fn pagerank_derivative(
    view: &TransitionView<'_>,
    p: &[f64],
    k: usize,
    init: Option<&[f64]>,
    config: PowerConfig,
) -> Result<Vec<f64>> {
    config.validate()?;
    if k >= view.param_count() {
        return Err(SrwError::InvalidParameter(format!(
            "parameter index {k} out of range"
        )));
    }
    let sources = view.derivative_sources(p);
    derivative_fixed_point(view, &sources[k], init, config).map(|(x, _)| x)
}

/// Stationary scores and their parameter derivatives for one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkState {
    pub p: Vec<f64>,
    /// `dp[k][u] = dp_u / dw_k`.
    pub dp: Vec<Vec<f64>>,
    pub pagerank_iterations: usize,
    pub derivative_iterations: Vec<usize>,
}

/// Runs both phases: `p` first, then every derivative against that `p`.
/// A previous state, if given, seeds both phases.
pub fn walk(
    view: &TransitionView<'_>,
    warm: Option<&WalkState>,
    config: PowerConfig,
) -> Result<WalkState> {
    config.validate()?;
    let (p, pagerank_iterations) = pagerank_from(view, warm.map(|w| w.p.as_slice()), config)?;
    let sources = view.derivative_sources(&p);
    let mut dp = Vec::with_capacity(sources.len());
    let mut derivative_iterations = Vec::with_capacity(sources.len());
    for (k, b) in sources.iter().enumerate() {
        let init = warm
            .filter(|w| w.dp.len() == sources.len())
            .map(|w| w.dp[k].as_slice());
        let (x, it) = derivative_fixed_point(view, b, init, config)?;
        dp.push(x);
        derivative_iterations.push(it);
    }
    Ok(WalkState {
        p,
        dp,
        pagerank_iterations,
        derivative_iterations,
    })
}

/// Scores renormalized over a candidate subset, with chain-ruled derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedScores {
    /// Indexed like the candidate list passed in.
    pub scores: Vec<f64>,
    /// `grads[k][i] = d score_i / dw_k`.
    pub grads: Vec<Vec<f64>>,
}

pub fn normalize_candidates(state: &WalkState, candidates: &[NodeId]) -> Result<NormalizedScores> {
    let s: f64 = candidates.iter().map(|&c| state.p[c]).sum();
    if !(s > 0.0) {
        return Err(SrwError::Degenerate(
            "candidate set carries no stationary mass".into(),
        ));
    }
    let scores: Vec<f64> = candidates.iter().map(|&c| state.p[c] / s).collect();
    let grads = state
        .dp
        .iter()
        .map(|d| {
            let ds: f64 = candidates.iter().map(|&c| d[c]).sum();
            candidates
                .iter()
                .map(|&c| (s * d[c] - state.p[c] * ds) / (s * s))
                .collect()
        })
        .collect();
    Ok(NormalizedScores { scores, grads })
}

/// Raw (unnormalized) candidate scores in the same shape as [`normalize_candidates`].
pub fn raw_candidates(state: &WalkState, candidates: &[NodeId]) -> NormalizedScores {
    NormalizedScores {
        scores: candidates.iter().map(|&c| state.p[c]).collect(),
        grads: state
            .dp
            .iter()
            .map(|d| candidates.iter().map(|&c| d[c]).collect())
            .collect(),
    }
}
