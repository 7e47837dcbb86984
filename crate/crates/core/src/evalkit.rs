//! Ranking metrics, unsupervised baselines and the train/test harness.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Result, SrwError};
use crate::graph_model::{
    add_common_friends_feature, fit_transform, FeatureTransform, TrainingInstance,
};
use crate::strength::{EdgeTypeMode, Model, StrengthFamily};
use crate::trainer::{candidate_scores, train_with, TrainConfig, TrainReport};
use crate::walker::PowerConfig;

pub const DEFAULT_TOP_K: usize = 20;
/// Stand-in for `1 / ln(1)` when a common neighbor has degree one.
pub const ADAMIC_ADAR_DEGREE_ONE_CAP: f64 = 10.0;

/// Fraction of `(d, l)` pairs ranked correctly; ties count one half.
///
/// `dest` and `nolink` index into `scores`.
pub fn auc(scores: &[f64], dest: &[usize], nolink: &[usize]) -> Result<f64> {
    if dest.is_empty() || nolink.is_empty() {
        return Err(SrwError::InvalidInput(
            "AUC is undefined without both destinations and no-links".into(),
        ));
    }
    let mut items: Vec<(f64, bool)> = dest
        .iter()
        .map(|&i| (scores[i], true))
        .chain(nolink.iter().map(|&i| (scores[i], false)))
        .collect();
    items.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut correct = 0.0;
    let mut below = 0.0;
    let mut i = 0;
    while i < items.len() {
        let mut j = i;
        let (mut d, mut l) = (0.0, 0.0);
        while j < items.len() && items[j].0 == items[i].0 {
            if items[j].1 {
                d += 1.0;
            } else {
                l += 1.0;
            }
            j += 1;
        }
        correct += d * below + 0.5 * d * l;
        below += l;
        i = j;
    }
    Ok(correct / (dest.len() as f64 * nolink.len() as f64))
}

/// Number of destinations among the `k` best-scored entries. Ties go to
/// the lower index, which follows node id order for instance candidates.
pub fn prec_at_k(scores: &[f64], dest: &[usize], k: usize) -> usize {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut is_dest = vec![false; scores.len()];
    for &d in dest {
        is_dest[d] = true;
    }
    order.iter().take(k).filter(|&&i| is_dest[i]).count()
}

/// ROC curve as `(fpr, tpr)` points, one per distinct score threshold.
pub fn roc_points(scores: &[f64], dest: &[usize], nolink: &[usize]) -> Vec<(f64, f64)> {
    let mut items: Vec<(f64, bool)> = dest
        .iter()
        .map(|&i| (scores[i], true))
        .chain(nolink.iter().map(|&i| (scores[i], false)))
        .collect();
    items.sort_by(|a, b| b.0.total_cmp(&a.0));
    let (np, nn) = (dest.len().max(1) as f64, nolink.len().max(1) as f64);
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0.0, 0.0);
    let mut i = 0;
    while i < items.len() {
        let mut j = i;
        while j < items.len() && items[j].0 == items[i].0 {
            if items[j].1 {
                tp += 1.0;
            } else {
                fp += 1.0;
            }
            j += 1;
        }
        points.push((fp / nn, tp / np));
        i = j;
    }
    points
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Baseline {
    RwrUnweighted,
    AdamicAdar,
    CommonFriends,
    Degree,
}

impl Baseline {
    pub const ALL: [Baseline; 4] = [
        Baseline::RwrUnweighted,
        Baseline::AdamicAdar,
        Baseline::CommonFriends,
        Baseline::Degree,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Baseline::RwrUnweighted => "rwr_unweighted",
            Baseline::AdamicAdar => "adamic_adar",
            Baseline::CommonFriends => "common_friends",
            Baseline::Degree => "degree",
        }
    }
}

impl fmt::Display for Baseline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Baseline {
    type Err = SrwError;

    fn from_str(s: &str) -> Result<Self> {
        Baseline::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| SrwError::InvalidParameter(format!("unknown baseline `{s}`")))
    }
}

/// Baseline scores in candidate order. Neighborhoods and degrees are taken
/// in the instance's local graph.
pub fn baseline_scores(
    instance: &TrainingInstance,
    method: Baseline,
    alpha: f64,
    power: PowerConfig,
) -> Result<Vec<f64>> {
    let g = instance.local();
    let seed = instance.seed();
    let cands = instance.candidates();
    Ok(match method {
        Baseline::RwrUnweighted => {
            let model = Model::zeros(StrengthFamily::Exponential, EdgeTypeMode::Single, g.dim());
            candidate_scores(&model, instance, alpha, power)?
        }
        Baseline::AdamicAdar => {
            let mut seed_friend = vec![false; g.node_count()];
            for &z in g.out_neighbors(seed) {
                seed_friend[z] = true;
            }
            cands
                .iter()
                .map(|&c| {
                    g.out_neighbors(c)
                        .iter()
                        .filter(|&&z| seed_friend[z])
                        .map(|&z| adamic_adar_term(g.out_degree(z)))
                        .sum()
                })
                .collect()
        }
        Baseline::CommonFriends => cands
            .iter()
            .map(|&c| g.common_neighbor_count(seed, c) as f64)
            .collect(),
        Baseline::Degree => cands.iter().map(|&c| g.out_degree(c) as f64).collect(),
    })
}

fn adamic_adar_term(degree: usize) -> f64 {
    if degree <= 1 {
        ADAMIC_ADAR_DEGREE_ONE_CAP
    } else {
        1.0 / (degree as f64).ln()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceMetrics {
    pub seed: usize,
    pub auc: f64,
    pub prec_at_k: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodResult {
    pub method: String,
    pub instances: Vec<InstanceMetrics>,
    /// Set when the method could not be evaluated (e.g. training failed).
    pub failure: Option<String>,
}

impl MethodResult {
    pub fn n_instances(&self) -> usize {
        self.instances.len()
    }

    pub fn auc_mean(&self) -> f64 {
        mean(self.instances.iter().map(|m| m.auc))
    }

    pub fn prec_mean(&self) -> f64 {
        mean(self.instances.iter().map(|m| m.prec_at_k as f64))
    }

    fn failed(method: &str, reason: String) -> Self {
        MethodResult {
            method: method.to_string(),
            instances: Vec::new(),
            failure: Some(reason),
        }
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

/// Evaluates per-instance scores produced by `score`.
pub fn evaluate_scores<F>(
    method: &str,
    dataset: &[TrainingInstance],
    k: usize,
    score: F,
) -> Result<MethodResult>
where
    F: Fn(&TrainingInstance) -> Result<Vec<f64>> + Sync,
{
    let rows: Vec<Result<InstanceMetrics>> = dataset
        .par_iter()
        .enumerate()
        .map(|(i, inst)| {
            let scores = score(inst).map_err(|e| e.in_instance(i))?;
            let (d, l) = inst.candidate_positions();
            Ok(InstanceMetrics {
                seed: inst.seed_global(),
                auc: auc(&scores, &d, &l)?,
                prec_at_k: prec_at_k(&scores, &d, k),
            })
        })
        .collect();
    Ok(MethodResult {
        method: method.to_string(),
        instances: rows.into_iter().collect::<Result<_>>()?,
        failure: None,
    })
}

pub fn evaluate_model(
    method: &str,
    model: &Model,
    dataset: &[TrainingInstance],
    alpha: f64,
    power: PowerConfig,
    k: usize,
) -> Result<MethodResult> {
    evaluate_scores(method, dataset, k, |inst| {
        candidate_scores(model, inst, alpha, power)
    })
}

pub fn evaluate_baseline(
    method: Baseline,
    dataset: &[TrainingInstance],
    alpha: f64,
    power: PowerConfig,
    k: usize,
) -> Result<MethodResult> {
    evaluate_scores(method.name(), dataset, k, |inst| {
        baseline_scores(inst, method, alpha, power)
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub train: TrainConfig,
    pub top_k: usize,
    /// Fit feature standardization on the training half and apply it to both.
    pub standardize: bool,
    /// Append the common-friends count as an extra arc feature.
    pub social_capital: bool,
    /// Restart probability for the unweighted walk baseline.
    pub baseline_alpha: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let train = TrainConfig::default();
        ExperimentConfig {
            baseline_alpha: train.alpha,
            train,
            top_k: DEFAULT_TOP_K,
            standardize: true,
            social_capital: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    /// SRW first, then the baselines in [`Baseline::ALL`] order.
    pub methods: Vec<MethodResult>,
    pub report: Option<TrainReport>,
    pub train_seeds: Vec<usize>,
    pub test_seeds: Vec<usize>,
    /// Test instances in the feature space the model was trained in.
    pub test_set: Vec<TrainingInstance>,
}

impl ExperimentResult {
    pub fn method(&self, name: &str) -> Option<&MethodResult> {
        self.methods.iter().find(|m| m.method == name)
    }
}

/// Seeded 50/50 split of instance indices: `(train, test)`.
pub fn split_indices(n: usize, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let test = idx.split_off(n / 2);
    (idx, test)
}

/// Splits, trains on one half and evaluates SRW and every baseline on the other.
pub fn run_experiment(
    dataset: &[TrainingInstance],
    config: &ExperimentConfig,
) -> Result<ExperimentResult> {
    if dataset.len() < 2 {
        return Err(SrwError::InvalidInput(
            "an experiment needs at least two instances".into(),
        ));
    }
    let (train_idx, test_idx) = split_indices(dataset.len(), config.train.seed);
    let train_raw: Vec<TrainingInstance> = train_idx.iter().map(|&i| dataset[i].clone()).collect();
    let test_raw: Vec<TrainingInstance> = test_idx.iter().map(|&i| dataset[i].clone()).collect();
    run_split(&train_raw, &test_raw, config)
}

/// Trains on `train` and evaluates SRW plus every baseline on `test`.
pub fn run_split(
    train: &[TrainingInstance],
    test: &[TrainingInstance],
    config: &ExperimentConfig,
) -> Result<ExperimentResult> {
    let (train_set, test_set, transform) = prepare_features(train, test, config)?;
    let k = config.top_k;
    let mut methods = Vec::new();
    let report = match train_with(&train_set, None, &config.train, None) {
        Ok(report) => {
            let model = report.model.clone();
            methods.push(evaluate_model(
                "srw",
                &model,
                &test_set,
                config.train.alpha,
                config.train.power,
                k,
            )?);
            Some(report)
        }
        Err(e) => {
            methods.push(MethodResult::failed("srw", e.to_string()));
            None
        }
    };
    for b in Baseline::ALL {
        methods.push(evaluate_baseline(
            b,
            test,
            config.baseline_alpha,
            config.train.power,
            k,
        )?);
    }
    let report = report.map(|mut r| {
        r.model = r.model.with_transform(transform);
        r
    });
    Ok(ExperimentResult {
        methods,
        report,
        train_seeds: train.iter().map(|i| i.seed_global()).collect(),
        test_seeds: test.iter().map(|i| i.seed_global()).collect(),
        test_set,
    })
}

fn with_social_capital(set: &[TrainingInstance], on: bool) -> Result<Vec<TrainingInstance>> {
    if on {
        set.iter().map(add_common_friends_feature).collect()
    } else {
        Ok(set.to_vec())
    }
}

/// Applies the configured feature pipeline: optional common-friends column,
/// then standardization fitted on the training half. Returns the transform
/// so the trained model can carry it.
pub fn prepare_features(
    train: &[TrainingInstance],
    test: &[TrainingInstance],
    config: &ExperimentConfig,
) -> Result<(
    Vec<TrainingInstance>,
    Vec<TrainingInstance>,
    Option<FeatureTransform>,
)> {
    let train = with_social_capital(train, config.social_capital)?;
    let test = with_social_capital(test, config.social_capital)?;
    if !config.standardize {
        return Ok((train, test, None));
    }
    let transform = fit_transform(&train)?;
    let apply = |set: &[TrainingInstance]| -> Result<Vec<TrainingInstance>> {
        set.iter().map(|i| transform.apply_instance(i)).collect()
    };
    Ok((apply(&train)?, apply(&test)?, Some(transform)))
}
