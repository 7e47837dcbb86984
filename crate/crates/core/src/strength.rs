//! Parameterized edge strengths `a = f_w(psi)` and their parameter gradients.

use std::fmt;
use std::str::FromStr;

use crate::error::{Result, SrwError};
use crate::graph_model::{EdgeType, FeatureTransform};

/// Bound on `w . psi` before the nonlinearity, keeping `exp` finite.
pub const INNER_PRODUCT_CLAMP: f64 = 500.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StrengthFamily {
    Exponential,
    #[default]
    Logistic,
}

impl fmt::Display for StrengthFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StrengthFamily::Exponential => "exponential",
            StrengthFamily::Logistic => "logistic",
        })
    }
}

impl FromStr for StrengthFamily {
    type Err = SrwError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exponential" | "exp" => Ok(StrengthFamily::Exponential),
            "logistic" => Ok(StrengthFamily::Logistic),
            other => Err(SrwError::InvalidParameter(format!(
                "unknown strength family `{other}`"
            ))),
        }
    }
}

/// Whether all arcs share one weight vector or each hop-pair class has its own.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EdgeTypeMode {
    #[default]
    Single,
    Hop6,
}

impl EdgeTypeMode {
    pub fn slots(self) -> usize {
        match self {
            EdgeTypeMode::Single => 1,
            EdgeTypeMode::Hop6 => EdgeType::COUNT,
        }
    }

    pub fn slot(self, ty: EdgeType) -> usize {
        match self {
            EdgeTypeMode::Single => 0,
            EdgeTypeMode::Hop6 => ty.code(),
        }
    }
}

impl fmt::Display for EdgeTypeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EdgeTypeMode::Single => "single",
            EdgeTypeMode::Hop6 => "hop6",
        })
    }
}

impl FromStr for EdgeTypeMode {
    type Err = SrwError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" | "1" => Ok(EdgeTypeMode::Single),
            "hop6" | "6" => Ok(EdgeTypeMode::Hop6),
            other => Err(SrwError::InvalidParameter(format!(
                "unknown edge type mode `{other}`"
            ))),
        }
    }
}

/// Strength family plus one weight vector per edge-type slot.
///
/// Parameters are stored flat, slot-major: parameter `slot * dim + j` is
/// feature `j` of slot `slot`.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    family: StrengthFamily,
    mode: EdgeTypeMode,
    dim: usize,
    params: Vec<f64>,
    transform: Option<FeatureTransform>,
}

impl Model {
    /// All-zero weights: the unweighted walk.
    pub fn zeros(family: StrengthFamily, mode: EdgeTypeMode, dim: usize) -> Model {
        Model {
            family,
            mode,
            dim,
            params: vec![0.0; mode.slots() * dim],
            transform: None,
        }
    }

    pub fn from_params(
        family: StrengthFamily,
        mode: EdgeTypeMode,
        dim: usize,
        params: Vec<f64>,
    ) -> Result<Model> {
        if params.len() != mode.slots() * dim {
            return Err(SrwError::InvalidParameter(format!(
                "{} parameters given, {mode} mode with {dim} features needs {}",
                params.len(),
                mode.slots() * dim
            )));
        }
        if params.iter().any(|w| !w.is_finite()) {
            return Err(SrwError::InvalidParameter("non-finite weight".into()));
        }
        Ok(Model {
            family,
            mode,
            dim,
            params,
            transform: None,
        })
    }

    pub fn with_transform(mut self, transform: Option<FeatureTransform>) -> Model {
        self.transform = transform;
        self
    }

    pub fn family(&self) -> StrengthFamily {
        self.family
    }

    pub fn mode(&self) -> EdgeTypeMode {
        self.mode
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn slots(&self) -> usize {
        self.mode.slots()
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn set_params(&mut self, params: &[f64]) {
        assert_eq!(params.len(), self.params.len(), "parameter length mismatch");
        self.params.copy_from_slice(params);
    }

    pub fn transform(&self) -> Option<&FeatureTransform> {
        self.transform.as_ref()
    }

    pub fn weights(&self, slot: usize) -> &[f64] {
        &self.params[slot * self.dim..(slot + 1) * self.dim]
    }

    fn check(&self, psi: &[f64]) -> Result<()> {
        if psi.len() != self.dim {
            return Err(SrwError::InvalidInput(format!(
                "feature vector has length {}, model expects {}",
                psi.len(),
                self.dim
            )));
        }
        if psi.iter().any(|x| !x.is_finite()) {
            return Err(SrwError::InvalidInput("non-finite feature value".into()));
        }
        Ok(())
    }

    fn activation(&self, slot: usize, psi: &[f64]) -> f64 {
        let dot: f64 = self.weights(slot).iter().zip(psi).map(|(w, x)| w * x).sum();
        let dot = dot.clamp(-INNER_PRODUCT_CLAMP, INNER_PRODUCT_CLAMP);
        match self.family {
            StrengthFamily::Exponential => dot.exp(),
            StrengthFamily::Logistic => 1.0 / (1.0 + (-dot).exp()),
        }
    }

    /// Strength of an arc of type `ty` with features `psi`.
    pub fn strength(&self, ty: EdgeType, psi: &[f64]) -> Result<f64> {
        self.strength_in_slot(self.mode.slot(ty), psi)
    }

    pub fn strength_in_slot(&self, slot: usize, psi: &[f64]) -> Result<f64> {
        self.check(psi)?;
        Ok(self.activation(slot, psi))
    }

    /// Gradient of the strength with respect to the arc's own weight vector.
    /// Weights of other slots have zero gradient.
    pub fn strength_grad(&self, ty: EdgeType, psi: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim];
        self.strength_and_grad(self.mode.slot(ty), psi, &mut out)?;
        Ok(out)
    }

    /// Writes `da/dw_slot` into `grad` and returns `a`.
    pub fn strength_and_grad(&self, slot: usize, psi: &[f64], grad: &mut [f64]) -> Result<f64> {
        self.check(psi)?;
        let a = self.activation(slot, psi);
        let factor = match self.family {
            StrengthFamily::Exponential => a,
            StrengthFamily::Logistic => a * (1.0 - a),
        };
        for (g, x) in grad.iter_mut().zip(psi) {
            *g = factor * x;
        }
        Ok(a)
    }
}
