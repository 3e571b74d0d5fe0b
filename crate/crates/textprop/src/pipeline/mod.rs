//! End-to-end orchestration: baseline and fully supervised reference models,
//! feature extraction, graph propagation, the two label-propagation training
//! stages, grid sweeps, and chart/summary emission.
//!
//! Every stage writes its metrics JSON, checkpoint, and the resolved config
//! into the output directory, so a finished run is auditable without the
//! original command line.

pub mod chart;
pub mod config;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

pub use config::ExperimentConfig;

use crate::corpus::{
    build_vocabulary, clean_and_tokenize, infer_num_classes, load_csv, shuffled_split,
    IndexedDataset, SplitSpec, Vocabulary,
};
use crate::diffusion::{
    diffuse, export_pseudo_labels, extract_pseudo_labels, seed_matrix, PropagationReport,
    PseudoLabelSet,
};
use crate::embeddings::{embedding_stats, load_word_vectors, EmbeddingStats, EmbeddingTable};
use crate::error::{Error, Result};
use crate::graph::{build_affinity, knn_search, l2_normalize, normalize_affinity};
use crate::model::{
    evaluate, extract_features, train, ClassifierParams, MetricsReport, TrainConfig, Weighting,
};

/// Pipeline stage identifiers; `Full` is the completed label-propagation
/// pipeline (the model the three-way comparison calls "label propagation").
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Baseline,
    FullySupervised,
    LpSsl,
    Full,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Stage::Baseline => "baseline",
            Stage::FullySupervised => "fully_supervised",
            Stage::LpSsl => "lp_ssl",
            Stage::Full => "full",
        };
        write!(f, "{name}")
    }
}

impl std::str::FromStr for Stage {
    type Err = Error;
    fn from_str(s: &str) -> Result<Stage> {
        match s {
            "baseline" => Ok(Stage::Baseline),
            "fully_supervised" => Ok(Stage::FullySupervised),
            "lp_ssl" => Ok(Stage::LpSsl),
            "full" => Ok(Stage::Full),
            other => Err(Error::Data(format!("unknown stage `{other}`"))),
        }
    }
}

/// Outcome of one stage run.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub stage: Stage,
    pub metrics: MetricsReport,
    pub wall_time_s: f64,
    pub config_digest: String,
    pub artifacts: Vec<PathBuf>,
}

/// The metrics JSON schema written per stage.
#[derive(Serialize)]
struct MetricsJson<'a> {
    stage: &'a str,
    accuracy: f64,
    f1: f64,
    auc_roc: Option<f64>,
    wall_time_s: f64,
    config_digest: &'a str,
}

fn write_metrics_json(out_dir: &Path, record: &RunRecord) -> Result<PathBuf> {
    let path = out_dir.join(format!("metrics_{}.json", record.stage));
    let json = MetricsJson {
        stage: &record.stage.to_string(),
        accuracy: record.metrics.accuracy,
        f1: record.metrics.f1,
        auc_roc: record.metrics.auc_roc,
        wall_time_s: record.wall_time_s,
        config_digest: &record.config_digest,
    };
    std::fs::write(&path, serde_json::to_string_pretty(&json)?)?;
    Ok(path)
}

/// Everything derived from the raw dataset before any training.
pub struct Prepared {
    pub vocab: Vocabulary,
    pub table: EmbeddingTable,
    pub train: IndexedDataset,
    pub validation: IndexedDataset,
    pub num_classes: usize,
    pub embedding_stats: Option<EmbeddingStats>,
    pub rejected_empty: usize,
}

/// Load, clean, split, index, and align embeddings.
///
/// The vocabulary is built from the train split only; validation documents
/// never influence token frequencies.
pub fn prepare(cfg: &ExperimentConfig) -> Result<Prepared> {
    cfg.validate()?;
    let loaded = load_csv(&cfg.dataset_path)?;
    if loaded.rejected_empty > 0 {
        log::warn!("rejected {} empty-text rows", loaded.rejected_empty);
    }
    let docs = loaded.documents;
    if docs.len() < 2 {
        return Err(Error::Data(format!(
            "dataset {:?} has {} usable documents",
            cfg.dataset_path,
            docs.len()
        )));
    }
    let num_classes = infer_num_classes(&docs);
    if num_classes < 2 {
        return Err(Error::Data(
            "dataset must contain at least two classes".into(),
        ));
    }

    let spec = SplitSpec {
        train_fraction: cfg.train_fraction,
        label_fraction: cfg.label_fraction,
        seed: cfg.seed,
    };
    let (train_idx, _) = shuffled_split(docs.len(), &spec)?;
    let lists = clean_and_tokenize(&docs);
    let train_lists: Vec<&[String]> = train_idx.iter().map(|&i| lists[i].as_slice()).collect();
    let vocab = build_vocabulary(train_lists.iter().copied(), cfg.vocab_max_size)?;

    let (train, validation) =
        crate::corpus::index_dataset(&docs, &vocab, cfg.max_len, &spec, num_classes)?;

    let (table, stats) = match &cfg.embedding_path {
        Some(path) => {
            let table = load_word_vectors(path, &vocab)?;
            if table.dim != cfg.embedding_dim {
                return Err(Error::Config(format!(
                    "embedding file dimension {} does not match embedding_dim {}",
                    table.dim, cfg.embedding_dim
                )));
            }
            let stats = embedding_stats(&table);
            log::info!(
                "embedding coverage {}/{} = {:.4}",
                stats.matched_count,
                stats.vocab_size,
                stats.coverage
            );
            (table, Some(stats))
        }
        None => (
            EmbeddingTable::all_defaults(&vocab, cfg.embedding_dim),
            None,
        ),
    };

    Ok(Prepared {
        vocab,
        table,
        train,
        validation,
        num_classes,
        embedding_stats: stats,
        rejected_empty: loaded.rejected_empty,
    })
}

fn train_config(cfg: &ExperimentConfig, epochs: usize, weighting: Weighting) -> TrainConfig {
    TrainConfig {
        epochs,
        batch_size: cfg.batch_size,
        learning_rate: cfg.learning_rate,
        seed: cfg.seed,
        weighting,
    }
}

fn checkpoint_path(cfg: &ExperimentConfig, stage: Stage) -> PathBuf {
    cfg.out_dir.join(format!("{stage}.lpck"))
}

fn finish_stage(
    cfg: &ExperimentConfig,
    stage: Stage,
    metrics: MetricsReport,
    started: Instant,
    mut artifacts: Vec<PathBuf>,
) -> Result<RunRecord> {
    let mut record = RunRecord {
        stage,
        metrics,
        wall_time_s: started.elapsed().as_secs_f64(),
        config_digest: cfg.digest(),
        artifacts: Vec::new(),
    };
    let metrics_path = write_metrics_json(&cfg.out_dir, &record)?;
    artifacts.push(metrics_path);
    record.artifacts = artifacts;
    log::info!(
        "stage {} done: accuracy {:.4}, f1 {:.4}, auc {} ({:.2}s)",
        record.stage,
        record.metrics.accuracy,
        record.metrics.f1,
        record
            .metrics
            .auc_roc
            .map(|a| format!("{a:.4}"))
            .unwrap_or_else(|| "n/a".into()),
        record.wall_time_s
    );
    Ok(record)
}

fn ensure_out_dir(cfg: &ExperimentConfig) -> Result<()> {
    std::fs::create_dir_all(&cfg.out_dir)?;
    cfg.write_resolved(&cfg.out_dir.join("resolved.conf"))?;
    Ok(())
}

/// Train on the labeled subset only for M epochs: the lower-bound model.
pub fn run_baseline(cfg: &ExperimentConfig, prepared: &Prepared) -> Result<RunRecord> {
    let started = Instant::now();
    ensure_out_dir(cfg)?;
    let mut params = ClassifierParams::init(
        &prepared.table,
        cfg.hidden_dim,
        prepared.num_classes,
        cfg.finetune_embeddings,
        cfg.seed,
    );
    let tc = train_config(cfg, cfg.epochs_baseline, Weighting::None);
    train(&mut params, &prepared.train, None, &tc)?;
    let metrics = evaluate(&params, &prepared.validation);
    let ckpt = checkpoint_path(cfg, Stage::Baseline);
    params.save(&ckpt)?;
    finish_stage(cfg, Stage::Baseline, metrics, started, vec![ckpt])
}

/// Train on every training document with gold labels: the upper benchmark.
pub fn run_fully_supervised(cfg: &ExperimentConfig, prepared: &Prepared) -> Result<RunRecord> {
    let started = Instant::now();
    ensure_out_dir(cfg)?;
    let mut params = ClassifierParams::init(
        &prepared.table,
        cfg.hidden_dim,
        prepared.num_classes,
        cfg.finetune_embeddings,
        cfg.seed,
    );
    let all_labeled = prepared.train.with_all_labeled();
    let tc = train_config(cfg, cfg.epochs_baseline, Weighting::None);
    train(&mut params, &all_labeled, None, &tc)?;
    let metrics = evaluate(&params, &prepared.validation);
    let ckpt = checkpoint_path(cfg, Stage::FullySupervised);
    params.save(&ckpt)?;
    finish_stage(cfg, Stage::FullySupervised, metrics, started, vec![ckpt])
}

/// One propagation round: features from the current model, cosine kNN graph,
/// diffusion, pseudo-labels. Non-convergence is downgraded to a warning and
/// the partial solution is used.
pub fn propagate(
    cfg: &ExperimentConfig,
    prepared: &Prepared,
    params: &ClassifierParams,
) -> Result<(PseudoLabelSet, PropagationReport)> {
    let features = extract_features(params, &prepared.train);
    let normalized = l2_normalize(&features);
    if !normalized.zero_rows.is_empty() {
        log::warn!(
            "{} all-zero feature rows before normalization",
            normalized.zero_rows.len()
        );
    }
    let knn = knn_search(&normalized, cfg.k)?;
    let affinity = build_affinity(&knn, cfg.gamma);
    let graph = normalize_affinity(&affinity);
    let seeds = seed_matrix(&prepared.train)?;
    let z = match diffuse(&graph, &seeds, cfg.alpha, cfg.tol, cfg.max_iter) {
        Ok(z) => z,
        Err(Error::NotConverged {
            iterations,
            residual,
            partial,
        }) => {
            log::warn!(
                "diffusion stopped at {iterations} iterations with residual {residual:.3e}; \
                 continuing with the partial solution"
            );
            *partial
        }
        Err(e) => return Err(e),
    };
    let set = extract_pseudo_labels(&z, &prepared.train);
    let report = PropagationReport::new(&z, &set);
    Ok((set, report))
}

fn read_stage_digest(out_dir: &Path, stage: Stage) -> Result<String> {
    let path = out_dir.join(format!("metrics_{stage}.json"));
    let text = std::fs::read_to_string(&path).map_err(|_| {
        Error::StageOrder(format!(
            "stage `{stage}` has not run in {out_dir:?} (missing {path:?})"
        ))
    })?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    Ok(value["config_digest"].as_str().unwrap_or_default().to_owned())
}

/// Verify the baseline stage ran under this exact config and load its model.
fn load_baseline_checkpoint(
    cfg: &ExperimentConfig,
    prepared: &Prepared,
) -> Result<ClassifierParams> {
    let digest = read_stage_digest(&cfg.out_dir, Stage::Baseline)?;
    if digest != cfg.digest() {
        return Err(Error::StageOrder(format!(
            "baseline in {:?} was produced by config {digest}, current config is {}",
            cfg.out_dir,
            cfg.digest()
        )));
    }
    ClassifierParams::load_expecting(
        &checkpoint_path(cfg, Stage::Baseline),
        prepared.vocab.len(),
        cfg.embedding_dim,
        cfg.hidden_dim,
        prepared.num_classes,
    )
}

/// The two label-propagation stages, starting from the baseline checkpoint.
///
/// LP-SSL: propagate from baseline features, reset the output head, train on
/// all points with the weighted loss for E epochs. Full: refresh the
/// pseudo-labels from the LP-SSL model's features with one more propagation
/// round and train for N epochs.
pub fn run_lp_ssl(
    cfg: &ExperimentConfig,
    prepared: &Prepared,
    baseline: &RunRecord,
) -> Result<(RunRecord, RunRecord)> {
    if baseline.config_digest != cfg.digest() {
        return Err(Error::StageOrder(format!(
            "baseline record digest {} does not match config {}",
            baseline.config_digest,
            cfg.digest()
        )));
    }
    ensure_out_dir(cfg)?;
    let mut params = load_baseline_checkpoint(cfg, prepared)?;

    // stage: lp_ssl
    let started = Instant::now();
    let (pseudo, report) = propagate(cfg, prepared, &params)?;
    let pseudo_csv = cfg.out_dir.join("pseudo_labels.csv");
    export_pseudo_labels(&pseudo, &report, &pseudo_csv)?;
    params.reset_output_layer(cfg.seed);
    let tc = train_config(cfg, cfg.epochs_lp, cfg.weighting);
    train(&mut params, &prepared.train, Some(&pseudo), &tc)?;
    let metrics = evaluate(&params, &prepared.validation);
    let ckpt = checkpoint_path(cfg, Stage::LpSsl);
    params.save(&ckpt)?;
    let lp_record = finish_stage(
        cfg,
        Stage::LpSsl,
        metrics,
        started,
        vec![ckpt, pseudo_csv.clone()],
    )?;

    // stage: full, with refreshed pseudo-labels from the LP-SSL model
    let started = Instant::now();
    let (pseudo2, report2) = propagate(cfg, prepared, &params)?;
    let pseudo2_csv = cfg.out_dir.join("pseudo_labels_full.csv");
    export_pseudo_labels(&pseudo2, &report2, &pseudo2_csv)?;
    let tc = train_config(cfg, cfg.epochs_full, cfg.weighting);
    train(&mut params, &prepared.train, Some(&pseudo2), &tc)?;
    let metrics = evaluate(&params, &prepared.validation);
    let ckpt = checkpoint_path(cfg, Stage::Full);
    params.save(&ckpt)?;
    let full_record = finish_stage(cfg, Stage::Full, metrics, started, vec![ckpt, pseudo2_csv])?;

    Ok((lp_record, full_record))
}

/// The complete three-way comparison: baseline, fully supervised, and both
/// label-propagation stages. Also writes the run summary and charts.
pub fn run(cfg: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    let prepared = prepare(cfg)?;
    let baseline = run_baseline(cfg, &prepared)?;
    let supervised = run_fully_supervised(cfg, &prepared)?;
    let (lp, full) = run_lp_ssl(cfg, &prepared, &baseline)?;
    let records = vec![baseline, supervised, lp, full];
    write_summary(cfg, std::slice::from_ref(cfg), std::slice::from_ref(&records))?;
    emit_run_charts(&cfg.out_dir)?;
    Ok(records)
}

/// Grid sweep axes; empty axes stay at the base config's value.
#[derive(Debug, Clone, Default)]
pub struct GridSweep {
    pub label_fractions: Vec<f64>,
    pub hidden_dims: Vec<usize>,
    pub ks: Vec<usize>,
    pub vocab_sizes: Vec<usize>,
}

impl GridSweep {
    pub fn is_empty(&self) -> bool {
        self.label_fractions.is_empty()
            && self.hidden_dims.is_empty()
            && self.ks.is_empty()
            && self.vocab_sizes.is_empty()
    }

    /// Cartesian product of the swept axes over the base config.
    pub fn cells(&self, base: &ExperimentConfig) -> Vec<ExperimentConfig> {
        let lfs = if self.label_fractions.is_empty() {
            vec![base.label_fraction]
        } else {
            self.label_fractions.clone()
        };
        let hds = if self.hidden_dims.is_empty() {
            vec![base.hidden_dim]
        } else {
            self.hidden_dims.clone()
        };
        let ks = if self.ks.is_empty() {
            vec![base.k]
        } else {
            self.ks.clone()
        };
        let vs = if self.vocab_sizes.is_empty() {
            vec![base.vocab_max_size]
        } else {
            self.vocab_sizes.clone()
        };
        let mut cells = Vec::new();
        for &lf in &lfs {
            for &hd in &hds {
                for &k in &ks {
                    for &v in &vs {
                        let mut cell = base.clone();
                        cell.label_fraction = lf;
                        cell.hidden_dim = hd;
                        cell.k = k;
                        cell.vocab_max_size = v;
                        cell.out_dir = base
                            .out_dir
                            .join(format!("lf{lf}_h{hd}_k{k}_v{v}"));
                        cells.push(cell);
                    }
                }
            }
        }
        cells
    }
}

/// Run every sweep cell (failures are recorded, the sweep continues), then
/// write the cross-cell summary CSV and per-axis charts.
pub fn run_grid(
    base: &ExperimentConfig,
    sweep: &GridSweep,
) -> Result<Vec<(ExperimentConfig, Vec<RunRecord>)>> {
    if sweep.is_empty() {
        return Err(Error::Config("grid sweep has no axes".into()));
    }
    std::fs::create_dir_all(&base.out_dir)?;
    let cells = sweep.cells(base);
    let mut results: Vec<(ExperimentConfig, Vec<RunRecord>)> = Vec::new();
    let mut failures = String::new();
    for cell in cells {
        match run(&cell) {
            Ok(records) => results.push((cell, records)),
            Err(e) => {
                log::error!("grid cell {:?} failed: {e}", cell.out_dir);
                writeln!(failures, "{}: {e}", cell.out_dir.display()).expect("writing to string");
            }
        }
    }
    if !failures.is_empty() {
        std::fs::write(base.out_dir.join("failures.txt"), &failures)?;
    }

    let configs: Vec<ExperimentConfig> = results.iter().map(|(c, _)| c.clone()).collect();
    let records: Vec<Vec<RunRecord>> = results.iter().map(|(_, r)| r.clone()).collect();
    let mut summary_base = base.clone();
    summary_base.out_dir = base.out_dir.clone();
    write_summary(&summary_base, &configs, &records)?;

    // one chart set per swept axis (single-axis sweeps get meaningful groups)
    let axis = if sweep.label_fractions.len() > 1 {
        "label_fraction"
    } else if sweep.hidden_dims.len() > 1 {
        "hidden_dim"
    } else if sweep.ks.len() > 1 {
        "k"
    } else if sweep.vocab_sizes.len() > 1 {
        "vocab_max_size"
    } else {
        "label_fraction"
    };
    emit_charts_from_summary(&base.out_dir.join("summary.csv"), axis, &base.out_dir)?;
    Ok(results)
}

/// The three-way comparison stages that feed summaries and charts.
const SUMMARY_STAGES: [Stage; 3] = [Stage::Baseline, Stage::Full, Stage::FullySupervised];

/// Write `summary.csv`: one row per (config, stage, metric).
pub fn write_summary(
    base: &ExperimentConfig,
    configs: &[ExperimentConfig],
    records: &[Vec<RunRecord>],
) -> Result<PathBuf> {
    let mut out = String::from("label_fraction,hidden_dim,k,vocab_max_size,stage,metric,value\n");
    for (cfg, cell_records) in configs.iter().zip(records) {
        for record in cell_records {
            if !SUMMARY_STAGES.contains(&record.stage) {
                continue;
            }
            let prefix = format!(
                "{},{},{},{}",
                cfg.label_fraction, cfg.hidden_dim, cfg.k, cfg.vocab_max_size
            );
            writeln!(
                out,
                "{prefix},{},accuracy,{}",
                record.stage, record.metrics.accuracy
            )
            .expect("writing to string");
            writeln!(out, "{prefix},{},f1,{}", record.stage, record.metrics.f1)
                .expect("writing to string");
            writeln!(
                out,
                "{prefix},{},auc_roc,{}",
                record.stage,
                record
                    .metrics
                    .auc_roc
                    .map(|a| a.to_string())
                    .unwrap_or_default()
            )
            .expect("writing to string");
        }
    }
    let path = base.out_dir.join("summary.csv");
    std::fs::write(&path, out)?;
    Ok(path)
}

fn emit_run_charts(out_dir: &Path) -> Result<Vec<PathBuf>> {
    emit_charts_from_summary(&out_dir.join("summary.csv"), "label_fraction", out_dir)
}

/// Rebuild charts from a summary CSV, grouping on `axis` (one of the config
/// columns). Rows sharing (group, stage, metric) are averaged.
pub fn emit_charts_from_summary(
    summary_path: &Path,
    axis: &str,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    let text = std::fs::read_to_string(summary_path).map_err(|_| {
        Error::Data(format!("summary {summary_path:?} not found; run `run` or `grid` first"))
    })?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| Error::Data("summary is empty".into()))?
        .split(',')
        .collect();
    let axis_col = header
        .iter()
        .position(|&h| h == axis)
        .ok_or_else(|| Error::Config(format!("axis `{axis}` is not a summary column")))?;
    let stage_col = header.iter().position(|&h| h == "stage").unwrap_or(4);
    let metric_col = header.iter().position(|&h| h == "metric").unwrap_or(5);
    let value_col = header.iter().position(|&h| h == "value").unwrap_or(6);

    // (metric, group, stage) -> values
    let mut buckets: Vec<(String, String, Stage, Vec<f64>)> = Vec::new();
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() <= value_col || fields[value_col].is_empty() {
            continue;
        }
        let metric = fields[metric_col].to_owned();
        let group = fields[axis_col].to_owned();
        let stage: Stage = fields[stage_col].parse()?;
        let value: f64 = fields[value_col]
            .parse()
            .map_err(|_| Error::Data(format!("bad value in summary: `{line}`")))?;
        match buckets
            .iter_mut()
            .find(|(m, g, s, _)| *m == metric && *g == group && *s == stage)
        {
            Some((_, _, _, vs)) => vs.push(value),
            None => buckets.push((metric, group, stage, vec![value])),
        }
    }

    let mut written = Vec::new();
    for metric in ["accuracy", "f1", "auc_roc"] {
        let points: Vec<chart::ChartPoint> = buckets
            .iter()
            .filter(|(m, _, _, _)| m == metric)
            .map(|(_, group, stage, vs)| chart::ChartPoint {
                group: group.clone(),
                stage: *stage,
                value: Some(vs.iter().sum::<f64>() / vs.len() as f64),
            })
            .collect();
        if points.is_empty() {
            continue;
        }
        let (svg, csv) = chart::emit_chart(&points, metric, axis, out_dir)?;
        written.push(svg);
        written.push(csv);
    }
    Ok(written)
}

/// Artifacts for the `prepare` verb: vocabulary dump, indexed datasets, and a
/// JSON report.
pub fn emit_prepare_artifacts(cfg: &ExperimentConfig, prepared: &Prepared) -> Result<Vec<PathBuf>> {
    ensure_out_dir(cfg)?;
    let mut written = Vec::new();

    let vocab_path = cfg.out_dir.join("vocab.tsv");
    prepared.vocab.dump(&vocab_path)?;
    written.push(vocab_path);

    for (name, ds) in [
        ("indexed_train.tsv", &prepared.train),
        ("indexed_validation.tsv", &prepared.validation),
    ] {
        let mut out = String::new();
        for i in 0..ds.len() {
            write!(
                out,
                "{}\t{}\t",
                ds.gold_labels[i], ds.labeled_mask[i] as u8
            )
            .expect("writing to string");
            let ids: Vec<String> = ds.row(i).iter().map(|id| id.to_string()).collect();
            out.push_str(&ids.join(" "));
            out.push('\n');
        }
        let path = cfg.out_dir.join(name);
        std::fs::write(&path, out)?;
        written.push(path);
    }

    #[derive(Serialize)]
    struct PrepareReport<'a> {
        documents: usize,
        rejected_empty: usize,
        vocab_size: usize,
        train_size: usize,
        validation_size: usize,
        labeled_count: usize,
        num_classes: usize,
        embedding: &'a Option<EmbeddingStats>,
        config_digest: String,
    }
    let report = PrepareReport {
        documents: prepared.train.len() + prepared.validation.len(),
        rejected_empty: prepared.rejected_empty,
        vocab_size: prepared.vocab.len(),
        train_size: prepared.train.len(),
        validation_size: prepared.validation.len(),
        labeled_count: prepared.train.labeled_count(),
        num_classes: prepared.num_classes,
        embedding: &prepared.embedding_stats,
        config_digest: cfg.digest(),
    };
    let report_path = cfg.out_dir.join("prepare.json");
    std::fs::write(&report_path, serde_json::to_string_pretty(&report)?)?;
    written.push(report_path);
    Ok(written)
}

/// The `lp` verb body: propagate from the existing baseline checkpoint and
/// export pseudo-labels plus the feature/graph binaries.
pub fn run_propagate_only(cfg: &ExperimentConfig, prepared: &Prepared) -> Result<Vec<PathBuf>> {
    ensure_out_dir(cfg)?;
    let params = load_baseline_checkpoint(cfg, prepared)?;

    let features = extract_features(&params, &prepared.train);
    let normalized = l2_normalize(&features);
    let features_path = cfg.out_dir.join("features.lpfm");
    normalized.save(&features_path)?;

    let knn = knn_search(&normalized, cfg.k)?;
    let graph = normalize_affinity(&build_affinity(&knn, cfg.gamma));
    let graph_path = cfg.out_dir.join("graph.lpgr");
    graph.save(&graph_path)?;

    let seeds = seed_matrix(&prepared.train)?;
    let z = match diffuse(&graph, &seeds, cfg.alpha, cfg.tol, cfg.max_iter) {
        Ok(z) => z,
        Err(Error::NotConverged {
            iterations,
            residual,
            partial,
        }) => {
            log::warn!(
                "diffusion stopped at {iterations} iterations with residual {residual:.3e}"
            );
            *partial
        }
        Err(e) => return Err(e),
    };
    let set = extract_pseudo_labels(&z, &prepared.train);
    let report = PropagationReport::new(&z, &set);
    let pseudo_csv = cfg.out_dir.join("pseudo_labels.csv");
    export_pseudo_labels(&set, &report, &pseudo_csv)?;
    Ok(vec![
        features_path,
        graph_path,
        pseudo_csv.with_extension("json"),
        pseudo_csv,
    ])
}
