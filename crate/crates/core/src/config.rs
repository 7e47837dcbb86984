//! `key=value` run configuration shared by every subcommand.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Result, SrwError};
use crate::evalkit::ExperimentConfig;
use crate::loss::LossSpec;
use crate::synthgen::SynthConfig;
use crate::trainer::TrainConfig;

pub const DEFAULT_MIN_COMMON: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: ExperimentConfig,
    pub synth: SynthConfig,
    /// Number of synthetic graphs written by `synth`.
    pub graphs: usize,
    /// Common-neighbor threshold for two-hop candidates.
    pub min_common: usize,
    /// Worker threads; 0 means one per core.
    pub threads: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            experiment: ExperimentConfig::default(),
            synth: SynthConfig::default(),
            graphs: 40,
            min_common: DEFAULT_MIN_COMMON,
            threads: 0,
        }
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str, line: usize) -> Result<T> {
    value.parse().map_err(|_| SrwError::Parse {
        line,
        msg: format!("bad value `{value}` for `{key}`"),
    })
}

fn parse_named<T: std::str::FromStr<Err = SrwError>>(value: &str, line: usize) -> Result<T> {
    value.parse().map_err(|e: SrwError| SrwError::Parse {
        line,
        msg: e.to_string(),
    })
}

fn parse_bool(key: &str, value: &str, line: usize) -> Result<bool> {
    match value {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(SrwError::Parse {
            line,
            msg: format!("bad boolean `{value}` for `{key}`"),
        }),
    }
}

fn parse_list(key: &str, value: &str, line: usize) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(|v| parse_value(key, v.trim(), line))
        .collect()
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<RunConfig> {
        RunConfig::parse(&std::fs::read_to_string(path)?)
    }

    /// Parses `key=value` lines; `#` starts a comment. Unset keys keep
    /// their defaults, unknown keys are errors.
    pub fn parse(text: &str) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        let mut loss_kind: Option<(String, usize)> = None;
        let mut loss_b = None;
        let mut loss_z = None;
        let mut synth_seed_set = false;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| SrwError::Parse {
                line,
                msg: format!("expected key=value, got `{content}`"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            let train = &mut cfg.experiment.train;
            match key {
                "alpha" => train.alpha = parse_value(key, value, line)?,
                "lambda" => train.lambda = parse_value(key, value, line)?,
                "loss" => loss_kind = Some((value.to_string(), line)),
                "loss_b" => loss_b = Some(parse_value(key, value, line)?),
                "loss_z" => loss_z = Some(parse_value(key, value, line)?),
                "strength" => train.family = parse_named(value, line)?,
                "edge_types" => train.edge_type_mode = parse_named(value, line)?,
                "epsilon" => train.power.epsilon = parse_value(key, value, line)?,
                "max_power_iters" => train.power.max_iter = parse_value(key, value, line)?,
                "outer_tol" => train.outer_tol = parse_value(key, value, line)?,
                "max_outer_iters" => train.max_outer_iters = parse_value(key, value, line)?,
                "restarts" => train.restarts = parse_value(key, value, line)?,
                "seed" => train.seed = parse_value(key, value, line)?,
                "normalize" => train.normalize = parse_bool(key, value, line)?,
                "warm_start" => train.warm_start = parse_bool(key, value, line)?,
                "min_common" => cfg.min_common = parse_value(key, value, line)?,
                "threads" => cfg.threads = parse_value(key, value, line)?,
                "standardize" => cfg.experiment.standardize = parse_bool(key, value, line)?,
                "social_capital" => cfg.experiment.social_capital = parse_bool(key, value, line)?,
                "top_k" => cfg.experiment.top_k = parse_value(key, value, line)?,
                "baseline_alpha" => cfg.experiment.baseline_alpha = parse_value(key, value, line)?,
                "graphs" => cfg.graphs = parse_value(key, value, line)?,
                "nodes" => cfg.synth.nodes = parse_value(key, value, line)?,
                "edges_per_node" => cfg.synth.edges_per_node = parse_value(key, value, line)?,
                "uniform_prob" => cfg.synth.uniform_prob = parse_value(key, value, line)?,
                "true_weights" => cfg.synth.true_weights = parse_list(key, value, line)?,
                "synth_alpha" => cfg.synth.alpha = parse_value(key, value, line)?,
                "targets" => cfg.synth.targets = parse_value(key, value, line)?,
                "target_mode" => cfg.synth.target_mode = parse_named(value, line)?,
                "noise" => cfg.synth.noise_variance = parse_value(key, value, line)?,
                "two_hop_candidates" => {
                    cfg.synth.two_hop_candidates = parse_bool(key, value, line)?
                }
                "synth_seed" => {
                    cfg.synth.seed = parse_value(key, value, line)?;
                    synth_seed_set = true;
                }
                other => {
                    return Err(SrwError::Parse {
                        line,
                        msg: format!("unknown key `{other}`"),
                    })
                }
            }
        }
        let train = &mut cfg.experiment.train;
        let kind = loss_kind
            .as_ref()
            .map(|(k, _)| k.as_str())
            .unwrap_or(train.loss.kind());
        let line = loss_kind.as_ref().map(|(_, l)| *l).unwrap_or(0);
        train.loss = LossSpec::from_parts(kind, loss_b, loss_z).map_err(|e| SrwError::Parse {
            line,
            msg: e.to_string(),
        })?;
        if !synth_seed_set {
            cfg.synth.seed = train.seed;
        }
        train.validate()?;
        Ok(cfg)
    }

    pub fn train(&self) -> &TrainConfig {
        &self.experiment.train
    }

    /// Every setting as `key=value` lines, in a fixed order.
    pub fn to_map(&self) -> BTreeMap<&'static str, String> {
        let t = &self.experiment.train;
        let s = &self.synth;
        let mut m = BTreeMap::new();
        m.insert("alpha", t.alpha.to_string());
        m.insert("lambda", t.lambda.to_string());
        m.insert("loss", t.loss.kind().to_string());
        m.insert("loss_b", t.loss.b().to_string());
        if let Some(z) = t.loss.z() {
            m.insert("loss_z", z.to_string());
        }
        m.insert("strength", t.family.to_string());
        m.insert("edge_types", t.edge_type_mode.to_string());
        m.insert("epsilon", t.power.epsilon.to_string());
        m.insert("max_power_iters", t.power.max_iter.to_string());
        m.insert("outer_tol", t.outer_tol.to_string());
        m.insert("max_outer_iters", t.max_outer_iters.to_string());
        m.insert("restarts", t.restarts.to_string());
        m.insert("seed", t.seed.to_string());
        m.insert("normalize", t.normalize.to_string());
        m.insert("warm_start", t.warm_start.to_string());
        m.insert("min_common", self.min_common.to_string());
        m.insert("standardize", self.experiment.standardize.to_string());
        m.insert("social_capital", self.experiment.social_capital.to_string());
        m.insert("top_k", self.experiment.top_k.to_string());
        m.insert("baseline_alpha", self.experiment.baseline_alpha.to_string());
        m.insert("graphs", self.graphs.to_string());
        m.insert("nodes", s.nodes.to_string());
        m.insert("edges_per_node", s.edges_per_node.to_string());
        m.insert("uniform_prob", s.uniform_prob.to_string());
        m.insert(
            "true_weights",
            s.true_weights
                .iter()
                .map(f64::to_string)
                .collect::<Vec<_>>()
                .join(","),
        );
        m.insert("synth_alpha", s.alpha.to_string());
        m.insert("targets", s.targets.to_string());
        m.insert("target_mode", s.target_mode.to_string());
        m.insert("noise", s.noise_variance.to_string());
        m.insert("two_hop_candidates", s.two_hop_candidates.to_string());
        m.insert("synth_seed", s.seed.to_string());
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strength::{EdgeTypeMode, StrengthFamily};

    #[test]
    fn defaults() {
        let c = RunConfig::parse("").unwrap();
        let t = c.train();
        assert_eq!(t.alpha, 0.3);
        assert_eq!(t.lambda, 1.0);
        assert_eq!(t.loss, LossSpec::Wmw { b: 1e-3 });
        assert_eq!(t.family, StrengthFamily::Logistic);
        assert_eq!(t.restarts, 3);
        assert_eq!(t.power.epsilon, 1e-12);
        assert_eq!(t.power.max_iter, 10_000);
        assert_eq!(c.min_common, 4);
    }

    #[test]
    fn parses_keys_and_comments() {
        let text = "# training\nalpha = 0.5\nloss=huber\nloss_b=0.01\nloss_z=0.2 # window\nstrength=exponential\nedge_types=hop6\nseed=7\nmin_common=0\n";
        let c = RunConfig::parse(text).unwrap();
        let t = c.train();
        assert_eq!(t.alpha, 0.5);
        assert_eq!(t.loss, LossSpec::Huber { b: 0.01, z: 0.2 });
        assert_eq!(t.family, StrengthFamily::Exponential);
        assert_eq!(t.edge_type_mode, EdgeTypeMode::Hop6);
        assert_eq!(c.synth.seed, 7);
        assert_eq!(c.min_common, 0);
    }

    #[test]
    fn errors_carry_line_numbers() {
        match RunConfig::parse("alpha=0.3\nbogus=1\n") {
            Err(SrwError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        match RunConfig::parse("\n\nrestarts=abc") {
            Err(SrwError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(RunConfig::parse("loss=wmw\nloss_b=0").is_err());
    }

    #[test]
    fn map_round_trips() {
        let c =
            RunConfig::parse("loss=squared\nloss_b=0.05\nnoise=1.5\ntrue_weights=2,-3").unwrap();
        let text: String = c
            .to_map()
            .iter()
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect();
        assert_eq!(RunConfig::parse(&text).unwrap(), c);
    }
}
