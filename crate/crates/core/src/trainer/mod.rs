//! Regularized multi-seed objective, its gradient, and training.
//!
//! `F(w) = |w|^2 + lambda * sum_s sum_{d in D_s, l in L_s} h(p_l - p_d)`
//! where `p` are the (optionally candidate-normalized) stationary scores
//! of each seed's walk under strengths `f_w`.

pub mod lbfgs;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Result, SrwError};
use crate::evalkit::auc;
use crate::graph_model::{EdgeType, NodeId, TrainingInstance};
use crate::loss::{self, LossSpec};
use crate::strength::{EdgeTypeMode, Model, StrengthFamily};
use crate::walker::{
    normalize_candidates, raw_candidates, walk, NormalizedScores, PowerConfig, TransitionView,
    WalkState,
};
use lbfgs::{LbfgsConfig, Termination};

pub const DEFAULT_ALPHA: f64 = 0.3;
pub const DEFAULT_LAMBDA: f64 = 1.0;
pub const DEFAULT_RESTARTS: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub alpha: f64,
    pub lambda: f64,
    pub loss: LossSpec,
    pub family: StrengthFamily,
    pub edge_type_mode: EdgeTypeMode,
    /// Score candidates by `p` renormalized over `D ∪ L`.
    pub normalize: bool,
    pub power: PowerConfig,
    /// Max-norm parameter step below which training stops.
    pub outer_tol: f64,
    /// Relative objective decrease over three iterations below which training stops.
    pub rel_tol: f64,
    pub max_outer_iters: usize,
    pub history: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Reuse each instance's previous `p` and `dp` as starting iterates.
    pub warm_start: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            alpha: DEFAULT_ALPHA,
            lambda: DEFAULT_LAMBDA,
            loss: LossSpec::default(),
            family: StrengthFamily::default(),
            edge_type_mode: EdgeTypeMode::default(),
            normalize: true,
            power: PowerConfig::default(),
            outer_tol: 1e-6,
            rel_tol: 1e-9,
            max_outer_iters: 100,
            history: 10,
            restarts: DEFAULT_RESTARTS,
            seed: 0,
            warm_start: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha <= 1.0) {
            return Err(SrwError::InvalidParameter(format!(
                "alpha {} outside [0, 1]",
                self.alpha
            )));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(SrwError::InvalidParameter("lambda must be >= 0".into()));
        }
        if self.restarts == 0 {
            return Err(SrwError::InvalidParameter("restarts must be >= 1".into()));
        }
        if !(self.power.epsilon > 0.0) {
            return Err(SrwError::InvalidParameter(
                "epsilon must be positive".into(),
            ));
        }
        self.loss.validate()
    }

    fn lbfgs(&self) -> LbfgsConfig {
        LbfgsConfig {
            history: self.history.max(1),
            max_iter: self.max_outer_iters,
            step_tol: self.outer_tol,
            rel_tol: self.rel_tol,
            ..LbfgsConfig::default()
        }
    }

    pub fn zero_model(&self, dim: usize) -> Model {
        Model::zeros(self.family, self.edge_type_mode, dim)
    }
}

/// Candidate scores (and their parameter gradients) of one instance.
fn candidate_view(
    state: &WalkState,
    instance: &TrainingInstance,
    normalize: bool,
) -> Result<NormalizedScores> {
    if normalize {
        normalize_candidates(state, instance.candidates())
    } else {
        Ok(raw_candidates(state, instance.candidates()))
    }
}

struct InstanceTerm {
    loss: f64,
    grad: Vec<f64>,
    state: WalkState,
}

fn instance_term(
    model: &Model,
    instance: &TrainingInstance,
    arc_types: Option<&[EdgeType]>,
    positions: &(Vec<usize>, Vec<usize>),
    warm: Option<&WalkState>,
    config: &TrainConfig,
) -> Result<InstanceTerm> {
    let view = TransitionView::new(
        instance.local(),
        instance.seed(),
        model,
        config.alpha,
        arc_types,
    )?;
    let state = walk(&view, warm, config.power)?;
    let scores = candidate_view(&state, instance, config.normalize)?;
    let pl = loss::evaluate(&config.loss, &scores.scores, &positions.0, &positions.1)?;
    let grad = scores
        .grads
        .iter()
        .map(|dk| dk.iter().zip(&pl.grad).map(|(a, b)| a * b).sum())
        .collect();
    Ok(InstanceTerm {
        loss: pl.total,
        grad,
        state,
    })
}

/// Objective value, gradient and the unregularized data term.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveValue {
    pub value: f64,
    pub grad: Vec<f64>,
    pub data_loss: f64,
}

/// Objective over a fixed dataset with per-instance warm-start caches.
pub struct Objective<'a> {
    dataset: &'a [TrainingInstance],
    config: &'a TrainConfig,
    template: Model,
    arc_types: Vec<Option<Vec<EdgeType>>>,
    positions: Vec<(Vec<usize>, Vec<usize>)>,
    cache: Vec<Option<WalkState>>,
    evaluations: usize,
}

impl<'a> Objective<'a> {
    pub fn new(
        dataset: &'a [TrainingInstance],
        config: &'a TrainConfig,
        template: Model,
    ) -> Result<Self> {
        config.validate()?;
        let mut arc_types = Vec::with_capacity(dataset.len());
        for (i, inst) in dataset.iter().enumerate() {
            if inst.local().dim() != template.dim() {
                return Err(SrwError::InvalidInput(format!(
                    "instance has {} features, model expects {}",
                    inst.local().dim(),
                    template.dim()
                ))
                .in_instance(i));
            }
            arc_types.push(match template.mode() {
                EdgeTypeMode::Single => None,
                EdgeTypeMode::Hop6 => Some(inst.arc_types().map_err(|e| e.in_instance(i))?),
            });
        }
        Ok(Objective {
            dataset,
            config,
            positions: dataset.iter().map(|i| i.candidate_positions()).collect(),
            cache: vec![None; dataset.len()],
            arc_types,
            template,
            evaluations: 0,
        })
    }

    pub fn evaluations(&self) -> usize {
        self.evaluations
    }

    pub fn reset_cache(&mut self) {
        self.cache.iter_mut().for_each(|c| *c = None);
    }

    pub fn evaluate(&mut self, params: &[f64]) -> Result<ObjectiveValue> {
        let mut model = self.template.clone();
        model.set_params(params);
        self.evaluations += 1;
        let config = self.config;
        let warm = config.warm_start;
        let terms: Vec<Result<InstanceTerm>> = self
            .dataset
            .par_iter()
            .zip(self.arc_types.par_iter())
            .zip(self.positions.par_iter())
            .zip(self.cache.par_iter())
            .enumerate()
            .map(|(i, (((inst, types), pos), cached))| {
                let warm_state = if warm { cached.as_ref() } else { None };
                instance_term(&model, inst, types.as_deref(), pos, warm_state, config)
                    .map_err(|e| e.in_instance(i))
            })
            .collect();
        let mut data_loss = 0.0;
        let mut data_grad = vec![0.0; params.len()];
        // fixed instance order keeps the reduction reproducible
        for (i, term) in terms.into_iter().enumerate() {
            let term = term?;
            data_loss += term.loss;
            data_grad
                .iter_mut()
                .zip(&term.grad)
                .for_each(|(g, t)| *g += t);
            if warm {
                self.cache[i] = Some(term.state);
            }
        }
        let reg: f64 = params.iter().map(|w| w * w).sum();
        let value = reg + config.lambda * data_loss;
        let grad = params
            .iter()
            .zip(&data_grad)
            .map(|(w, g)| 2.0 * w + config.lambda * g)
            .collect();
        Ok(ObjectiveValue {
            value,
            grad,
            data_loss,
        })
    }
}

/// `F` and its gradient at the model's parameters, computed from cold starts.
pub fn objective(
    model: &Model,
    dataset: &[TrainingInstance],
    config: &TrainConfig,
) -> Result<(f64, Vec<f64>)> {
    let config = TrainConfig {
        family: model.family(),
        edge_type_mode: model.mode(),
        warm_start: false,
        ..config.clone()
    };
    let mut obj = Objective::new(dataset, &config, model.clone())?;
    let v = obj.evaluate(model.params())?;
    Ok((v.value, v.grad))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RestartSummary {
    pub start: Vec<f64>,
    pub final_objective: f64,
    pub iterations: usize,
    pub termination: Termination,
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub model: Model,
    pub final_objective: f64,
    /// Objective of the selected run: the starting value, then one entry per accepted step.
    pub loss_trajectory: Vec<f64>,
    /// Validation AUC aligned with `loss_trajectory`; empty without a validation set.
    pub val_auc: Vec<f64>,
    pub iterations: usize,
    pub evaluations: usize,
    pub restarts: Vec<RestartSummary>,
    pub selected_restart: usize,
}

/// Trains from `w = 0` plus `restarts - 1` random starts.
pub fn train(dataset: &[TrainingInstance], config: &TrainConfig) -> Result<TrainReport> {
    train_with(dataset, None, config, None)
}

/// Like [`train`], with an optional validation set tracked per iteration and
/// an optional first starting point replacing `w = 0`.
pub fn train_with(
    dataset: &[TrainingInstance],
    validation: Option<&[TrainingInstance]>,
    config: &TrainConfig,
    init: Option<&[f64]>,
) -> Result<TrainReport> {
    config.validate()?;
    let first = dataset
        .first()
        .ok_or_else(|| SrwError::InvalidInput("training set is empty".into()))?;
    let template = config.zero_model(first.local().dim());
    let n_params = template.param_count();
    if let Some(x) = init {
        if x.len() != n_params {
            return Err(SrwError::InvalidParameter(format!(
                "initial point has {} parameters, model needs {n_params}",
                x.len()
            )));
        }
    }
    let mut objective = Objective::new(dataset, config, template.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let starts: Vec<Vec<f64>> = (0..config.restarts)
        .map(|r| match (r, init) {
            (0, Some(x)) => x.to_vec(),
            (0, None) => vec![0.0; n_params],
            _ => (0..n_params)
                .map(|_| rng.random_range(-1.0..=1.0))
                .collect(),
        })
        .collect();

    let lb = config.lbfgs();
    let mut summaries = Vec::new();
    let mut best: Option<(usize, lbfgs::LbfgsOutcome, Vec<f64>)> = None;
    let mut best_failed: Option<(f64, Vec<f64>)> = None;
    let mut first_error: Option<SrwError> = None;

    for (r, start) in starts.iter().enumerate() {
        objective.reset_cache();
        let mut val_auc = Vec::new();
        if let Some(val) = validation {
            val_auc.push(mean_auc(&template, start, val, config)?);
        }
        let outcome = lbfgs::minimize(
            |x| objective.evaluate(x).map(|v| (v.value, v.grad)),
            start,
            &lb,
            |_, x, _| {
                if let Some(val) = validation {
                    val_auc.push(mean_auc(&template, x, val, config).unwrap_or(f64::NAN));
                }
            },
        );
        let outcome = match outcome {
            Ok(o) => o,
            Err(e) => {
                first_error.get_or_insert(e);
                continue;
            }
        };
        summaries.push(RestartSummary {
            start: start.clone(),
            final_objective: outcome.f,
            iterations: outcome.iterations,
            termination: outcome.termination,
        });
        if outcome.termination == Termination::LineSearchFailed {
            if best_failed.as_ref().is_none_or(|(f, _)| outcome.f < *f) {
                best_failed = Some((outcome.f, outcome.x.clone()));
            }
            continue;
        }
        if best.as_ref().is_none_or(|(_, b, _)| outcome.f < b.f) {
            best = Some((r, outcome, val_auc));
        }
    }

    let Some((selected, outcome, val_auc)) = best else {
        if let Some((_, x)) = best_failed {
            return Err(SrwError::Optimization {
                reason: "line search failed from every starting point".into(),
                best: x,
            });
        }
        return Err(first_error.unwrap_or_else(|| SrwError::Optimization {
            reason: "no restart completed".into(),
            best: vec![0.0; n_params],
        }));
    };
    let model = Model::from_params(
        config.family,
        config.edge_type_mode,
        template.dim(),
        outcome.x,
    )?;
    Ok(TrainReport {
        model,
        final_objective: outcome.f,
        loss_trajectory: outcome.trajectory,
        val_auc,
        iterations: outcome.iterations,
        evaluations: objective.evaluations(),
        restarts: summaries,
        selected_restart: selected,
    })
}

fn mean_auc(
    template: &Model,
    params: &[f64],
    dataset: &[TrainingInstance],
    config: &TrainConfig,
) -> Result<f64> {
    let mut model = template.clone();
    model.set_params(params);
    let aucs: Vec<Result<f64>> = dataset
        .par_iter()
        .map(|inst| {
            let scores = candidate_scores(&model, inst, config.alpha, config.power)?;
            let (d, l) = inst.candidate_positions();
            auc(&scores, &d, &l)
        })
        .collect();
    let mut total = 0.0;
    for a in aucs {
        total += a?;
    }
    Ok(total / dataset.len().max(1) as f64)
}

/// Stationary scores renormalized over the instance's candidates, in
/// candidate order.
pub fn candidate_scores(
    model: &Model,
    instance: &TrainingInstance,
    alpha: f64,
    power: PowerConfig,
) -> Result<Vec<f64>> {
    let state = walk_scores(model, instance, alpha, power)?;
    let s: f64 = instance.candidates().iter().map(|&c| state[c]).sum();
    if !(s > 0.0) {
        return Err(SrwError::Degenerate(
            "candidate set carries no stationary mass".into(),
        ));
    }
    Ok(instance
        .candidates()
        .iter()
        .map(|&c| state[c] / s)
        .collect())
}

/// Stationary vector over the instance's local nodes.
pub fn walk_scores(
    model: &Model,
    instance: &TrainingInstance,
    alpha: f64,
    power: PowerConfig,
) -> Result<Vec<f64>> {
    let view = crate::walker::build_transition(instance, model, alpha)?;
    crate::walker::pagerank(&view, power)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedCandidate {
    pub node: NodeId,
    pub score: f64,
}

/// Candidates ranked by normalized score, highest first; ties go to the
/// smaller node id.
pub fn predict(
    model: &Model,
    instance: &TrainingInstance,
    config: &TrainConfig,
) -> Result<Vec<RankedCandidate>> {
    if instance.local().dim() != model.dim() {
        return Err(SrwError::InvalidInput(format!(
            "instance has {} features, model expects {}",
            instance.local().dim(),
            model.dim()
        )));
    }
    let scores = candidate_scores(model, instance, config.alpha, config.power)?;
    Ok(rank(instance, &scores))
}

pub(crate) fn rank(instance: &TrainingInstance, scores: &[f64]) -> Vec<RankedCandidate> {
    let mut ranked: Vec<RankedCandidate> = instance
        .candidates()
        .iter()
        .zip(scores)
        .map(|(&c, &score)| RankedCandidate {
            node: instance.global_id(c),
            score,
        })
        .collect();
    ranked.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.node.cmp(&b.node)));
    ranked
}

/// Copies a single-type model's weights into all six edge-type slots.
pub fn embed_in_hop6(model: &Model) -> Result<Model> {
    match model.mode() {
        EdgeTypeMode::Hop6 => Ok(model.clone()),
        EdgeTypeMode::Single => {
            let params = model.params().repeat(EdgeType::COUNT);
            Ok(
                Model::from_params(model.family(), EdgeTypeMode::Hop6, model.dim(), params)?
                    .with_transform(model.transform().cloned()),
            )
        }
    }
}
