//! Experiment configuration: flat `key = value` files, CLI overrides, and a
//! stable 64-bit FNV-1a digest of the resolved parameters.
//!
//! The digest covers every parameter that can change results; the output
//! directory is excluded so reruns into different directories keep the same
//! identity.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::hash::fnv1a64;
use crate::model::Weighting;

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub dataset_path: PathBuf,
    /// Held-out test CSV; when set, `run` also evaluates every stage on it.
    pub test_path: Option<PathBuf>,
    /// Pretrained word-vector file; absent means per-token default rows.
    pub embedding_path: Option<PathBuf>,
    pub embedding_dim: usize,
    pub vocab_max_size: usize,
    pub max_len: usize,
    pub train_fraction: f64,
    pub label_fraction: f64,
    pub seed: u64,
    /// Graph neighbors per node.
    pub k: usize,
    /// Edge-weight exponent.
    pub gamma: f64,
    /// Diffusion strength in (0, 1).
    pub alpha: f64,
    /// Relative CG tolerance.
    pub tol: f64,
    pub max_iter: usize,
    pub hidden_dim: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Baseline / fully supervised epochs (M).
    pub epochs_baseline: usize,
    /// LP-SSL epochs (E).
    pub epochs_lp: usize,
    /// Full-pipeline epochs (N).
    pub epochs_full: usize,
    pub finetune_embeddings: bool,
    pub weighting: Weighting,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset_path: PathBuf::new(),
            test_path: None,
            embedding_path: None,
            embedding_dim: 100,
            vocab_max_size: 10_000,
            max_len: 256,
            train_fraction: 0.8,
            label_fraction: 0.10,
            seed: 0,
            k: 100,
            gamma: 3.0,
            alpha: 0.99,
            tol: 1e-6,
            max_iter: 1000,
            hidden_dim: 64,
            learning_rate: 1e-3,
            batch_size: 64,
            epochs_baseline: 10,
            epochs_lp: 10,
            epochs_full: 10,
            finetune_embeddings: true,
            weighting: Weighting::CertaintyClass,
            out_dir: PathBuf::from("runs"),
        }
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("key `{key}`: cannot parse `{value}`")))
}

impl ExperimentConfig {
    /// Parse a flat `key = value` file. `#` starts a comment; blank lines are
    /// ignored; unknown keys are errors.
    pub fn from_file(path: &Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {path:?}: {e}")))?;
        let mut cfg = ExperimentConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!(
                    "{path:?}:{}: expected `key = value`, got `{raw}`",
                    lineno + 1
                )));
            };
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    /// Apply one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "dataset_path" => self.dataset_path = PathBuf::from(value),
            "test_path" => {
                self.test_path = if value.is_empty() {
                    None
                } else {
                    Some(PathBuf::from(value))
                }
            }
            "embedding_path" => {
                self.embedding_path = if value.is_empty() {
                    None
                } else {
                    Some(PathBuf::from(value))
                }
            }
            "embedding_dim" => self.embedding_dim = parse_value(key, value)?,
            "vocab_max_size" => self.vocab_max_size = parse_value(key, value)?,
            "max_len" => self.max_len = parse_value(key, value)?,
            "train_fraction" => self.train_fraction = parse_value(key, value)?,
            "label_fraction" => self.label_fraction = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            "k" => self.k = parse_value(key, value)?,
            "gamma" => self.gamma = parse_value(key, value)?,
            "alpha" => self.alpha = parse_value(key, value)?,
            "tol" => self.tol = parse_value(key, value)?,
            "max_iter" => self.max_iter = parse_value(key, value)?,
            "hidden_dim" => self.hidden_dim = parse_value(key, value)?,
            "learning_rate" => self.learning_rate = parse_value(key, value)?,
            "batch_size" => self.batch_size = parse_value(key, value)?,
            "epochs_baseline" => self.epochs_baseline = parse_value(key, value)?,
            "epochs_lp" => self.epochs_lp = parse_value(key, value)?,
            "epochs_full" => self.epochs_full = parse_value(key, value)?,
            "finetune_embeddings" => self.finetune_embeddings = parse_value(key, value)?,
            "weighting" => {
                self.weighting = match value {
                    "none" => Weighting::None,
                    "certainty_class" => Weighting::CertaintyClass,
                    other => {
                        return Err(Error::Config(format!(
                            "key `weighting`: `{other}` is not `none` or `certainty_class`"
                        )))
                    }
                }
            }
            "out_dir" => self.out_dir = PathBuf::from(value),
            other => return Err(Error::Config(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    /// Check numeric ranges and referenced files.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.dataset_path.as_os_str().is_empty() {
            return fail("dataset_path is required".into());
        }
        if !self.dataset_path.exists() {
            return fail(format!("dataset_path {:?} does not exist", self.dataset_path));
        }
        if let Some(p) = &self.embedding_path {
            if !p.exists() {
                return fail(format!("embedding_path {p:?} does not exist"));
            }
        }
        if let Some(p) = &self.test_path {
            if !p.exists() {
                return fail(format!("test_path {p:?} does not exist"));
            }
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return fail(format!("train_fraction {} not in (0, 1)", self.train_fraction));
        }
        if !(self.label_fraction > 0.0 && self.label_fraction <= 1.0) {
            return fail(format!("label_fraction {} not in (0, 1]", self.label_fraction));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return fail(format!("alpha {} not in (0, 1)", self.alpha));
        }
        if self.gamma <= 0.0 {
            return fail(format!("gamma {} must be positive", self.gamma));
        }
        if self.tol <= 0.0 {
            return fail(format!("tol {} must be positive", self.tol));
        }
        if self.k == 0 {
            return fail("k must be at least 1".into());
        }
        if self.max_len == 0 || self.vocab_max_size == 0 {
            return fail("max_len and vocab_max_size must be at least 1".into());
        }
        if self.hidden_dim == 0 || self.embedding_dim == 0 {
            return fail("hidden_dim and embedding_dim must be at least 1".into());
        }
        if self.learning_rate <= 0.0 {
            return fail(format!("learning_rate {} must be positive", self.learning_rate));
        }
        if self.batch_size == 0 {
            return fail("batch_size must be at least 1".into());
        }
        if self.epochs_baseline == 0 || self.epochs_lp == 0 || self.epochs_full == 0 {
            return fail("epoch counts must be at least 1".into());
        }
        Ok(())
    }

    /// Canonical `key = value` rendering, keys sorted, digest-relevant
    /// parameters only.
    fn canonical_entries(&self) -> Vec<(&'static str, String)> {
        let mut entries = vec![
            ("alpha", self.alpha.to_string()),
            ("batch_size", self.batch_size.to_string()),
            ("dataset_path", self.dataset_path.display().to_string()),
            (
                "embedding_path",
                self.embedding_path
                    .as_ref()
                    .map(|p| p.display().to_string())
                    .unwrap_or_default(),
            ),
            ("embedding_dim", self.embedding_dim.to_string()),
            ("epochs_baseline", self.epochs_baseline.to_string()),
            ("epochs_full", self.epochs_full.to_string()),
            ("epochs_lp", self.epochs_lp.to_string()),
            ("finetune_embeddings", self.finetune_embeddings.to_string()),
            ("gamma", self.gamma.to_string()),
            ("hidden_dim", self.hidden_dim.to_string()),
            ("k", self.k.to_string()),
            ("label_fraction", self.label_fraction.to_string()),
            ("learning_rate", self.learning_rate.to_string()),
            ("max_iter", self.max_iter.to_string()),
            ("max_len", self.max_len.to_string()),
            ("seed", self.seed.to_string()),
            ("tol", self.tol.to_string()),
            ("train_fraction", self.train_fraction.to_string()),
            (
                "vocab_max_size",
                self.vocab_max_size.to_string(),
            ),
            (
                "weighting",
                match self.weighting {
                    Weighting::None => "none".to_string(),
                    Weighting::CertaintyClass => "certainty_class".to_string(),
                },
            ),
        ];
        entries.sort_by_key(|(k, _)| *k);
        entries
    }

    /// 64-bit FNV-1a digest of the canonicalized key-value list, as hex.
    pub fn digest(&self) -> String {
        let mut canon = String::new();
        for (key, value) in self.canonical_entries() {
            writeln!(canon, "{key}={value}").expect("writing to string");
        }
        format!("{:016x}", fnv1a64(canon.as_bytes()))
    }

    /// Write the resolved config (including out_dir) in the input format.
    pub fn write_resolved(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for (key, value) in self.canonical_entries() {
            writeln!(out, "{key} = {value}").expect("writing to string");
        }
        writeln!(out, "out_dir = {}", self.out_dir.display()).expect("writing to string");
        std::fs::write(path, out)?;
        Ok(())
    }
}
