//! File-to-file workflows behind the command-line subcommands.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use crate::config::RunConfig;
use crate::error::{Result, SrwError};
use crate::evalkit::{
    evaluate_baseline, evaluate_model, prepare_features, roc_points, run_experiment, Baseline,
    MethodResult,
};
use crate::graph_model::{
    add_common_friends_feature, reachable_instance, two_hop_instance, Graph, TrainingInstance,
};
use crate::io::{self, InstanceSpec, WeightsFile};
use crate::synthgen::{generate_samples, union_samples};
use crate::trainer::{candidate_scores, predict as rank_candidates, train_with, TrainReport};
use crate::walker::{build_transition, walk};

pub const GRAPH_FILE: &str = "graph.tsv";
pub const INSTANCE_FILE: &str = "instances.tsv";
pub const MANIFEST_FILE: &str = "manifest.txt";

/// Training instances built from an edge file and an instance file.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub graph: Graph,
    pub instances: Vec<TrainingInstance>,
    /// Instance-file lines dropped because they had no destinations or no
    /// no-link candidates, with the reason.
    pub skipped: Vec<(usize, String)>,
}

/// Builds one instance per spec. Lines with an explicit no-link column use
/// the seed's reachable component; otherwise candidates follow the two-hop
/// rule with `min_common`. Untrainable lines are skipped, other problems
/// are errors tagged with the line number.
pub fn build_instances(
    graph: &Graph,
    specs: &[InstanceSpec],
    min_common: usize,
) -> Result<Dataset> {
    let mut instances = Vec::new();
    let mut skipped = Vec::new();
    for spec in specs {
        let built = match &spec.nolinks {
            Some(l) => reachable_instance(graph, spec.seed, &spec.destinations, l),
            None => {
                let future: HashSet<_> = spec.destinations.iter().copied().collect();
                two_hop_instance(graph, spec.seed, &HashSet::new(), &future, min_common)
            }
        };
        match built {
            Ok(inst) => instances.push(inst),
            Err(e) if e.is_untrainable() => skipped.push((spec.line, e.to_string())),
            Err(e) => {
                return Err(SrwError::Parse {
                    line: spec.line,
                    msg: e.to_string(),
                })
            }
        }
    }
    Ok(Dataset {
        graph: graph.clone(),
        instances,
        skipped,
    })
}

pub fn load_dataset(edges: &Path, instances: &Path, config: &RunConfig) -> Result<Dataset> {
    let graph = io::read_edges(edges).map_err(|e| in_file(edges, e))?;
    let specs = io::read_instances(instances).map_err(|e| in_file(instances, e))?;
    build_instances(&graph, &specs, config.min_common).map_err(|e| in_file(instances, e))
}

fn in_file(path: &Path, e: SrwError) -> SrwError {
    match e {
        SrwError::Parse { line, msg } => SrwError::Parse {
            line,
            msg: format!("{}: {msg}", path.display()),
        },
        other => other,
    }
}

fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    fs::write(path, contents)?;
    Ok(())
}

/// What `synth` wrote.
#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub graph: PathBuf,
    pub instances: PathBuf,
    pub manifest: PathBuf,
    pub nodes: usize,
    pub instance_count: usize,
}

/// Generates `config.graphs` synthetic graphs and writes their disjoint union,
/// one instance line per graph and a manifest of every generator setting.
pub fn synth_to_dir(config: &RunConfig, dir: &Path) -> Result<SynthOutput> {
    config.synth.validate()?;
    let samples = generate_samples(&config.synth, config.graphs)?;
    let (graph, labels) = union_samples(&samples)?;
    let out = SynthOutput {
        graph: dir.join(GRAPH_FILE),
        instances: dir.join(INSTANCE_FILE),
        manifest: dir.join(MANIFEST_FILE),
        nodes: graph.node_count(),
        instance_count: labels.len(),
    };
    write(&out.graph, &io::format_edges(&graph, true)?)?;
    write(&out.instances, &io::format_instances(&labels))?;
    write(&out.manifest, &manifest(config))?;
    Ok(out)
}

fn manifest(config: &RunConfig) -> String {
    const KEYS: [&str; 11] = [
        "graphs",
        "nodes",
        "edges_per_node",
        "uniform_prob",
        "true_weights",
        "synth_alpha",
        "targets",
        "target_mode",
        "noise",
        "two_hop_candidates",
        "synth_seed",
    ];
    let map = config.to_map();
    KEYS.iter().map(|k| format!("{k}={}\n", map[k])).collect()
}

/// Common-friends column plus the model's standardization, as at training time.
pub fn apply_features(
    weights: &WeightsFile,
    instances: &[TrainingInstance],
) -> Result<Vec<TrainingInstance>> {
    instances
        .iter()
        .map(|inst| {
            let inst = if weights.social_capital {
                add_common_friends_feature(inst)?
            } else {
                inst.clone()
            };
            match weights.model.transform() {
                Some(t) => t.apply_instance(&inst),
                None => Ok(inst),
            }
        })
        .collect()
}

/// Trains on every instance of the dataset.
pub fn train_dataset(dataset: &Dataset, config: &RunConfig) -> Result<(WeightsFile, TrainReport)> {
    if dataset.instances.is_empty() {
        return Err(SrwError::InvalidInput("no trainable instances".into()));
    }
    let (train_set, _, transform) = prepare_features(&dataset.instances, &[], &config.experiment)?;
    let mut report = train_with(&train_set, None, config.train(), None)?;
    report.model = report.model.clone().with_transform(transform);
    let weights = WeightsFile {
        model: report.model.clone(),
        social_capital: config.experiment.social_capital,
    };
    Ok((weights, report))
}

pub fn train_files(
    config: &RunConfig,
    edges: &Path,
    instances: &Path,
    weights_out: &Path,
    report_out: &Path,
) -> Result<TrainReport> {
    let dataset = load_dataset(edges, instances, config)?;
    let (weights, report) = train_dataset(&dataset, config)?;
    write(weights_out, &io::format_weights(&weights))?;
    write(report_out, &io::report_csv(&report))?;
    Ok(report)
}

/// Ranks every instance's candidates; returns the number of rows written.
/// With `walk_dir`, also dumps each instance's `p` and `dp` there.
pub fn predict_files(
    config: &RunConfig,
    weights: &Path,
    edges: &Path,
    instances: &Path,
    out: &Path,
    walk_dir: Option<&Path>,
) -> Result<usize> {
    let weights = io::read_weights(weights).map_err(|e| in_file(weights, e))?;
    let dataset = load_dataset(edges, instances, config)?;
    let prepared = apply_features(&weights, &dataset.instances)?;
    let mut rankings = Vec::with_capacity(prepared.len());
    for (i, inst) in prepared.iter().enumerate() {
        let ranked =
            rank_candidates(&weights.model, inst, config.train()).map_err(|e| e.in_instance(i))?;
        rankings.push((inst.seed_global(), ranked));
    }
    let rows = rankings.iter().map(|(_, r)| r.len()).sum();
    write(out, &io::ranking_tsv(&rankings))?;
    if let Some(dir) = walk_dir {
        fs::create_dir_all(dir)?;
        for (i, inst) in prepared.iter().enumerate() {
            let view = build_transition(inst, &weights.model, config.train().alpha)?;
            let state = walk(&view, None, config.train().power).map_err(|e| e.in_instance(i))?;
            write(
                &dir.join(format!("walk_{i}_seed{}.csv", inst.seed_global())),
                &io::walk_csv(inst.global_ids(), &state),
            )?;
        }
    }
    Ok(rows)
}

/// Paths written by [`eval_files`].
#[derive(Debug, Clone)]
pub struct EvalOutput {
    pub methods: Vec<MethodResult>,
    pub results: PathBuf,
    pub detail: Option<PathBuf>,
    pub roc: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

/// Evaluates SRW and all baselines.
///
/// With a weights file the model is scored on every instance. Without one,
/// instances are split 50/50, SRW is trained on one half and every method is
/// scored on the other.
pub fn eval_files(
    config: &RunConfig,
    edges: &Path,
    instances: &Path,
    weights: Option<&Path>,
    out_dir: &Path,
    detail: bool,
) -> Result<EvalOutput> {
    let dataset = load_dataset(edges, instances, config)?;
    let exp = &config.experiment;
    let train = config.train();
    let (methods, test_set, model, report) = match weights {
        Some(path) => {
            let w = io::read_weights(path).map_err(|e| in_file(path, e))?;
            let test_set = apply_features(&w, &dataset.instances)?;
            let mut methods = vec![evaluate_model(
                "srw",
                &w.model,
                &test_set,
                train.alpha,
                train.power,
                exp.top_k,
            )?];
            for b in Baseline::ALL {
                methods.push(evaluate_baseline(
                    b,
                    &dataset.instances,
                    exp.baseline_alpha,
                    train.power,
                    exp.top_k,
                )?);
            }
            (methods, test_set, Some(w.model), None)
        }
        None => {
            let r = run_experiment(&dataset.instances, exp)?;
            let model = r.report.as_ref().map(|rep| rep.model.clone());
            (r.methods, r.test_set, model, r.report)
        }
    };

    let mut out = EvalOutput {
        results: out_dir.join("results.csv"),
        detail: None,
        roc: None,
        report: None,
        methods,
    };
    write(&out.results, &io::results_csv(&out.methods))?;
    if detail {
        let path = out_dir.join("detail.csv");
        write(&path, &io::detail_csv(&out.methods))?;
        out.detail = Some(path);
    }
    if let Some(model) = model {
        let mut scores = Vec::new();
        let mut dest = Vec::new();
        let mut nolink = Vec::new();
        for inst in &test_set {
            let s = candidate_scores(&model, inst, train.alpha, train.power)?;
            let (d, l) = inst.candidate_positions();
            let base = scores.len();
            dest.extend(d.iter().map(|x| x + base));
            nolink.extend(l.iter().map(|x| x + base));
            scores.extend(s);
        }
        let path = out_dir.join("roc.csv");
        write(&path, &io::roc_csv(&roc_points(&scores, &dest, &nolink)))?;
        out.roc = Some(path);
    }
    if let Some(report) = report {
        let path = out_dir.join("train_report.csv");
        write(&path, &io::report_csv(&report))?;
        out.report = Some(path);
    }
    Ok(out)
}

/// Scores every instance with each unsupervised baseline.
pub fn baselines_files(
    config: &RunConfig,
    edges: &Path,
    instances: &Path,
    out_dir: &Path,
    detail: bool,
) -> Result<Vec<MethodResult>> {
    let dataset = load_dataset(edges, instances, config)?;
    let exp = &config.experiment;
    let methods = Baseline::ALL
        .iter()
        .map(|&b| {
            evaluate_baseline(
                b,
                &dataset.instances,
                exp.baseline_alpha,
                config.train().power,
                exp.top_k,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    write(&out_dir.join("baselines.csv"), &io::results_csv(&methods))?;
    if detail {
        write(
            &out_dir.join("baselines_detail.csv"),
            &io::detail_csv(&methods),
        )?;
    }
    Ok(methods)
}
