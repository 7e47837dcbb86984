use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use srw_core::pipeline;
use srw_core::RunConfig;

/// Supervised random walks: synthetic data, training, ranking and evaluation.
#[derive(Debug, Parser)]
#[command(name = "srw", version)]
struct Cli {
    /// `key=value` configuration file; unset keys keep their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Inputs {
    /// Edge file (`#m=` header, then `src<TAB>dst<TAB>features`).
    #[arg(long)]
    edges: PathBuf,
    /// Instance file (`seed<TAB>destinations[<TAB>no-links]`).
    #[arg(long)]
    instances: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate copying-model graphs with planted edge strengths.
    Synth {
        /// Output directory for graph.tsv, instances.tsv and manifest.txt.
        #[arg(long)]
        out: PathBuf,
    },
    /// Learn edge-strength weights.
    Train {
        #[command(flatten)]
        inputs: Inputs,
        /// Weights file to write.
        #[arg(long)]
        weights: PathBuf,
        /// Per-iteration objective CSV.
        #[arg(long, default_value = "train_report.csv")]
        report: PathBuf,
    },
    /// Rank each instance's candidates with trained weights.
    Predict {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        weights: PathBuf,
        /// Ranking TSV to write.
        #[arg(long)]
        out: PathBuf,
        /// Also write each instance's stationary vector and its derivatives here.
        #[arg(long, value_name = "DIR")]
        dump_walk: Option<PathBuf>,
    },
    /// Compare the learned walk against the baselines. Without --weights,
    /// trains on a seeded half of the instances and tests on the other.
    Eval {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        weights: Option<PathBuf>,
        /// Output directory for results.csv and friends.
        #[arg(long)]
        out: PathBuf,
        /// Also write per-instance metrics.
        #[arg(long)]
        detail: bool,
    },
    /// Evaluate the unsupervised baselines on every instance.
    Baselines {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        detail: bool,
    },
}

enum Failure {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

fn require(path: &Path, what: &str) -> Result<(), Failure> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Failure::Usage(format!(
            "{what} `{}` not found",
            path.display()
        )))
    }
}

fn require_inputs(inputs: &Inputs) -> Result<(), Failure> {
    require(&inputs.edges, "edge file")?;
    require(&inputs.instances, "instance file")
}

fn run(cli: Cli) -> Result<(), Failure> {
    let config = match &cli.config {
        Some(path) => {
            require(path, "config file")?;
            RunConfig::from_path(path).with_context(|| format!("reading {}", path.display()))?
        }
        None => RunConfig::default(),
    };
    // Check every input before spending time on thread setup or work.
    match &cli.command {
        Command::Synth { .. } => {}
        Command::Train { inputs, .. } | Command::Baselines { inputs, .. } => {
            require_inputs(inputs)?
        }
        Command::Predict {
            inputs, weights, ..
        } => {
            require_inputs(inputs)?;
            require(weights, "weights file")?;
        }
        Command::Eval {
            inputs, weights, ..
        } => {
            require_inputs(inputs)?;
            if let Some(w) = weights {
                require(w, "weights file")?;
            }
        }
    }
    if config.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.threads)
            .build_global()
            .context("configuring worker threads")?;
    }

    match cli.command {
        Command::Synth { out } => {
            let o = pipeline::synth_to_dir(&config, &out).context("synth")?;
            eprintln!(
                "wrote {} instances over {} nodes to {}",
                o.instance_count,
                o.nodes,
                out.display()
            );
        }
        Command::Train {
            inputs,
            weights,
            report,
        } => {
            let r =
                pipeline::train_files(&config, &inputs.edges, &inputs.instances, &weights, &report)
                    .context("train")?;
            eprintln!(
                "objective {} after {} iterations (restart {}), weights in {}",
                r.final_objective,
                r.iterations,
                r.selected_restart,
                weights.display()
            );
        }
        Command::Predict {
            inputs,
            weights,
            out,
            dump_walk,
        } => {
            let rows = pipeline::predict_files(
                &config,
                &weights,
                &inputs.edges,
                &inputs.instances,
                &out,
                dump_walk.as_deref(),
            )
            .context("predict")?;
            eprintln!("wrote {rows} ranked candidates to {}", out.display());
        }
        Command::Eval {
            inputs,
            weights,
            out,
            detail,
        } => {
            let o = pipeline::eval_files(
                &config,
                &inputs.edges,
                &inputs.instances,
                weights.as_deref(),
                &out,
                detail,
            )
            .context("eval")?;
            for m in &o.methods {
                match &m.failure {
                    Some(reason) => eprintln!("{}: failed ({reason})", m.method),
                    None => eprintln!(
                        "{}: auc {:.5} prec@{} {:.3}",
                        m.method,
                        m.auc_mean(),
                        config.experiment.top_k,
                        m.prec_mean()
                    ),
                }
            }
        }
        Command::Baselines {
            inputs,
            out,
            detail,
        } => {
            let methods =
                pipeline::baselines_files(&config, &inputs.edges, &inputs.instances, &out, detail)
                    .context("baselines")?;
            for m in &methods {
                eprintln!(
                    "{}: auc {:.5} prec@{} {:.3}",
                    m.method,
                    m.auc_mean(),
                    config.experiment.top_k,
                    m.prec_mean()
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n\nRun `srw --help` for usage.");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
