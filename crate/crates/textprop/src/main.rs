//! Command-line front end for the label-propagation training pipeline.
//!
//! Exit codes: 0 success, 2 config error, 3 data error, 4 numerical failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use textprop::pipeline::{self, ExperimentConfig, GridSweep};
use textprop::Error;

#[derive(Parser)]
#[command(
    name = "textprop",
    version,
    about = "Semi-supervised text classification via graph label propagation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Experiment config file (flat `key = value` lines).
    #[arg(long)]
    config: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the number of graph neighbors.
    #[arg(long)]
    k: Option<usize>,
    /// Override the edge-weight exponent.
    #[arg(long)]
    gamma: Option<f64>,
    /// Override the diffusion strength.
    #[arg(long)]
    alpha: Option<f64>,
    /// Override the labeled fraction of the train split.
    #[arg(long)]
    label_fraction: Option<f64>,
    /// Override the hidden dimension.
    #[arg(long)]
    hidden_dim: Option<usize>,
    /// Override the per-stage epochs as `M,E,N`.
    #[arg(long)]
    epochs: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Index the corpus: vocabulary, splits, embedding alignment.
    Prepare(CommonArgs),
    /// Train the labeled-only lower-bound model.
    Baseline(CommonArgs),
    /// Train the fully supervised upper-bound model.
    Supervised(CommonArgs),
    /// Propagate labels from the baseline checkpoint and export pseudo-labels.
    Lp(CommonArgs),
    /// Run the full pipeline: baseline, supervised, and both LP stages.
    Run(CommonArgs),
    /// Sweep config axes, each cell a full three-way run.
    Grid {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated label fractions to sweep.
        #[arg(long, value_delimiter = ',')]
        label_fractions: Vec<f64>,
        /// Comma-separated hidden dimensions to sweep.
        #[arg(long, value_delimiter = ',')]
        hidden_dims: Vec<usize>,
        /// Comma-separated neighbor counts to sweep.
        #[arg(long, value_delimiter = ',')]
        ks: Vec<usize>,
        /// Comma-separated vocabulary caps to sweep.
        #[arg(long, value_delimiter = ',')]
        vocab_sizes: Vec<usize>,
    },
    /// Re-emit comparison charts from an existing summary.csv.
    Chart {
        /// Directory containing summary.csv; charts are written next to it.
        #[arg(long)]
        out: PathBuf,
        /// Summary column to group bars by.
        #[arg(long, default_value = "label_fraction")]
        axis: String,
    },
}

fn resolve_config(args: &CommonArgs) -> Result<ExperimentConfig, Error> {
    let mut cfg = ExperimentConfig::from_file(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.out_dir = out.clone();
    }
    if let Some(k) = args.k {
        cfg.k = k;
    }
    if let Some(gamma) = args.gamma {
        cfg.gamma = gamma;
    }
    if let Some(alpha) = args.alpha {
        cfg.alpha = alpha;
    }
    if let Some(lf) = args.label_fraction {
        cfg.label_fraction = lf;
    }
    if let Some(h) = args.hidden_dim {
        cfg.hidden_dim = h;
    }
    if let Some(spec) = &args.epochs {
        let parts: Vec<&str> = spec.split(',').collect();
        if parts.len() != 3 {
            return Err(Error::Config(format!(
                "--epochs expects `M,E,N`, got `{spec}`"
            )));
        }
        let parse = |s: &str| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("--epochs: `{s}` is not an integer")))
        };
        cfg.epochs_baseline = parse(parts[0])?;
        cfg.epochs_lp = parse(parts[1])?;
        cfg.epochs_full = parse(parts[2])?;
    }
    Ok(cfg)
}

fn print_record(record: &pipeline::RunRecord) {
    let auc = record
        .metrics
        .auc_roc
        .map(|a| format!("{a:.4}"))
        .unwrap_or_else(|| "n/a".into());
    println!(
        "{:>16}  accuracy {:.4}  f1 {:.4}  auc {}  ({:.2}s)",
        record.stage.to_string(),
        record.metrics.accuracy,
        record.metrics.f1,
        auc,
        record.wall_time_s
    );
}

fn execute(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Prepare(args) => {
            let cfg = resolve_config(&args)?;
            let prepared = pipeline::prepare(&cfg)?;
            let written = pipeline::emit_prepare_artifacts(&cfg, &prepared)?;
            println!(
                "prepared {} train + {} validation documents, vocabulary {} tokens, {} labeled",
                prepared.train.len(),
                prepared.validation.len(),
                prepared.vocab.len(),
                prepared.train.labeled_count()
            );
            if let Some(stats) = &prepared.embedding_stats {
                println!(
                    "embedding coverage {}/{} = {:.4}",
                    stats.matched_count, stats.vocab_size, stats.coverage
                );
            }
            for path in written {
                println!("wrote {}", path.display());
            }
        }
        Command::Baseline(args) => {
            let cfg = resolve_config(&args)?;
            let prepared = pipeline::prepare(&cfg)?;
            let record = pipeline::run_baseline(&cfg, &prepared)?;
            print_record(&record);
        }
        Command::Supervised(args) => {
            let cfg = resolve_config(&args)?;
            let prepared = pipeline::prepare(&cfg)?;
            let record = pipeline::run_fully_supervised(&cfg, &prepared)?;
            print_record(&record);
        }
        Command::Lp(args) => {
            let cfg = resolve_config(&args)?;
            let prepared = pipeline::prepare(&cfg)?;
            let written = pipeline::run_propagate_only(&cfg, &prepared)?;
            for path in written {
                println!("wrote {}", path.display());
            }
        }
        Command::Run(args) => {
            let cfg = resolve_config(&args)?;
            let records = pipeline::run(&cfg)?;
            for record in &records {
                print_record(record);
            }
        }
        Command::Grid {
            common,
            label_fractions,
            hidden_dims,
            ks,
            vocab_sizes,
        } => {
            let cfg = resolve_config(&common)?;
            let sweep = GridSweep {
                label_fractions,
                hidden_dims,
                ks,
                vocab_sizes,
            };
            let results = pipeline::run_grid(&cfg, &sweep)?;
            println!("grid finished: {} cells", results.len());
            for (cell, records) in &results {
                println!("cell {}", cell.out_dir.display());
                for record in records {
                    print_record(record);
                }
            }
        }
        Command::Chart { out, axis } => {
            let written =
                pipeline::emit_charts_from_summary(&out.join("summary.csv"), &axis, &out)?;
            for path in written {
                println!("wrote {}", path.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
