//! Feature standardization shared by training and prediction.

use super::graph::Graph;
use super::instance::TrainingInstance;
use crate::error::{Result, SrwError};

/// Per-column affine map `(x - mean) / scale`, followed by an appended
/// constant column of ones.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTransform {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    /// Columns with zero variance: centered only, scale forced to 1.
    pub degenerate: Vec<bool>,
}

impl FeatureTransform {
    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    pub fn output_dim(&self) -> usize {
        self.mean.len() + 1
    }

    pub fn apply_row(&self, row: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = row
            .iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(x, (m, s))| (x - m) / s)
            .collect();
        out.push(1.0);
        out
    }

    pub fn apply_graph(&self, graph: &Graph) -> Result<Graph> {
        if graph.dim() != self.input_dim() {
            return Err(SrwError::InvalidInput(format!(
                "graph has {} features, transform expects {}",
                graph.dim(),
                self.input_dim()
            )));
        }
        graph.map_features(self.output_dim(), |_, row| self.apply_row(row))
    }

    pub fn apply_instance(&self, instance: &TrainingInstance) -> Result<TrainingInstance> {
        instance.with_local(self.apply_graph(instance.local())?)
    }
}

/// Fits population mean/stdev per column over every arc of every instance,
/// then rewrites the dataset in place with the fitted transform.
pub fn standardize_features(dataset: &mut [TrainingInstance]) -> Result<FeatureTransform> {
    let transform = fit_transform(dataset)?;
    for inst in dataset.iter_mut() {
        *inst = transform.apply_instance(inst)?;
    }
    Ok(transform)
}

pub fn fit_transform(dataset: &[TrainingInstance]) -> Result<FeatureTransform> {
    let first = dataset
        .first()
        .ok_or_else(|| SrwError::InvalidInput("cannot standardize an empty dataset".into()))?;
    let dim = first.local().dim();
    if dataset.iter().any(|i| i.local().dim() != dim) {
        return Err(SrwError::InvalidInput(
            "instances disagree on feature dimension".into(),
        ));
    }
    let count: usize = dataset.iter().map(|i| i.local().arc_count()).sum();
    if count == 0 {
        return Err(SrwError::InvalidInput("dataset has no arcs".into()));
    }
    let n = count as f64;
    let mut mean = vec![0.0; dim];
    for inst in dataset {
        for (_, _, row) in inst.local().arcs() {
            for (m, x) in mean.iter_mut().zip(row) {
                *m += x;
            }
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    // second pass keeps the variance exact for already-centered data
    let mut var = vec![0.0; dim];
    for inst in dataset {
        for (_, _, row) in inst.local().arcs() {
            for ((v, x), m) in var.iter_mut().zip(row).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
    }
    let mut scale = Vec::with_capacity(dim);
    let mut degenerate = Vec::with_capacity(dim);
    for v in var {
        let sd = (v / n).sqrt();
        if sd > 0.0 && sd.is_finite() {
            scale.push(sd);
            degenerate.push(false);
        } else {
            scale.push(1.0);
            degenerate.push(true);
        }
    }
    Ok(FeatureTransform {
        mean,
        scale,
        degenerate,
    })
}
