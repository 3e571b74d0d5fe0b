//! Desk-scale neural text classifier.
//!
//! Architecture: embedding lookup -> mean pooling over non-pad positions ->
//! one ReLU hidden layer -> linear class scores. Gradients are reverse-mode,
//! written out by hand; the optimizer is adaptive-moment estimation. The
//! hidden layer doubles as the feature extractor feeding graph construction.
//!
//! Training is single-writer and deterministic given the seed; evaluation and
//! feature extraction parallelize read-only over examples.

use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::corpus::{IndexedDataset, PAD_ID};
use crate::diffusion::PseudoLabelSet;
use crate::embeddings::EmbeddingTable;
use crate::error::{Error, Result};
use crate::graph::FeatureMatrix;
use crate::parallel;

const CHECKPOINT_MAGIC: &[u8; 4] = b"LPCK";
const CHECKPOINT_VERSION: u16 = 1;

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// All trainable parameters, stored as f64 for clean gradient checks.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierParams {
    /// |V| x d embedding rows.
    pub embedding: Vec<f64>,
    /// d x h hidden weights (row-major by input dimension).
    pub hidden_w: Vec<f64>,
    pub hidden_b: Vec<f64>,
    /// h x C output weights (row-major by hidden unit).
    pub output_w: Vec<f64>,
    pub output_b: Vec<f64>,
    pub vocab_size: usize,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub num_classes: usize,
    pub finetune_embeddings: bool,
}

fn glorot(rng: &mut ChaCha8Rng, fan_in: usize, fan_out: usize, len: usize) -> Vec<f64> {
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    (0..len).map(|_| rng.gen_range(-bound..bound)).collect()
}

impl ClassifierParams {
    /// Fresh parameters: embeddings copied from the table, dense layers
    /// Glorot-initialized from the seed.
    pub fn init(
        table: &EmbeddingTable,
        hidden_dim: usize,
        num_classes: usize,
        finetune_embeddings: bool,
        seed: u64,
    ) -> ClassifierParams {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = table.dim;
        ClassifierParams {
            embedding: table.matrix().iter().map(|&v| v as f64).collect(),
            hidden_w: glorot(&mut rng, d, hidden_dim, d * hidden_dim),
            hidden_b: vec![0.0; hidden_dim],
            output_w: glorot(&mut rng, hidden_dim, num_classes, hidden_dim * num_classes),
            output_b: vec![0.0; num_classes],
            vocab_size: table.vocab_size,
            embed_dim: d,
            hidden_dim,
            num_classes,
            finetune_embeddings,
        }
    }

    /// Re-initialize the output layer only, keeping embeddings and the hidden
    /// layer (the "remove fully connected layer" step between stages).
    pub fn reset_output_layer(&mut self, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.output_w = glorot(
            &mut rng,
            self.hidden_dim,
            self.num_classes,
            self.hidden_dim * self.num_classes,
        );
        self.output_b = vec![0.0; self.num_classes];
    }

    pub fn all_finite(&self) -> bool {
        self.embedding.iter().all(|v| v.is_finite())
            && self.hidden_w.iter().all(|v| v.is_finite())
            && self.hidden_b.iter().all(|v| v.is_finite())
            && self.output_w.iter().all(|v| v.is_finite())
            && self.output_b.iter().all(|v| v.is_finite())
    }

    pub fn param_count(&self) -> usize {
        self.embedding.len()
            + self.hidden_w.len()
            + self.hidden_b.len()
            + self.output_w.len()
            + self.output_b.len()
    }

    /// Write the `LPCK` checkpoint: magic, u16 version, dimension header,
    /// then the parameter blocks as little-endian f32.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = Vec::new();
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        for dim in [
            self.vocab_size,
            self.embed_dim,
            self.hidden_dim,
            self.num_classes,
        ] {
            out.extend_from_slice(&(dim as u32).to_le_bytes());
        }
        out.push(self.finetune_embeddings as u8);
        for block in [
            &self.embedding,
            &self.hidden_w,
            &self.hidden_b,
            &self.output_w,
            &self.output_b,
        ] {
            for &v in block.iter() {
                out.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
        let mut file = std::fs::File::create(path)?;
        file.write_all(&out)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<ClassifierParams> {
        let bad = |reason: String| Error::BadCheckpoint {
            path: path.to_path_buf(),
            reason,
        };
        let mut file = std::fs::File::open(path)?;
        let mut header = [0u8; 23];
        file.read_exact(&mut header)
            .map_err(|_| bad("truncated header".into()))?;
        if &header[0..4] != CHECKPOINT_MAGIC {
            return Err(bad("bad magic".into()));
        }
        let version = u16::from_le_bytes(header[4..6].try_into().unwrap());
        if version != CHECKPOINT_VERSION {
            return Err(bad(format!("unsupported version {version}")));
        }
        let dims: Vec<usize> = header[6..22]
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()) as usize)
            .collect();
        let (vocab_size, embed_dim, hidden_dim, num_classes) =
            (dims[0], dims[1], dims[2], dims[3]);
        let finetune_embeddings = header[22] != 0;

        let sizes = [
            vocab_size * embed_dim,
            embed_dim * hidden_dim,
            hidden_dim,
            hidden_dim * num_classes,
            num_classes,
        ];
        let total: usize = sizes.iter().sum();
        let mut buf = vec![0u8; total * 4];
        file.read_exact(&mut buf)
            .map_err(|_| bad("truncated parameter blocks".into()))?;
        let mut values = buf
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64);
        let mut take = |n: usize| -> Vec<f64> { values.by_ref().take(n).collect() };
        Ok(ClassifierParams {
            embedding: take(sizes[0]),
            hidden_w: take(sizes[1]),
            hidden_b: take(sizes[2]),
            output_w: take(sizes[3]),
            output_b: take(sizes[4]),
            vocab_size,
            embed_dim,
            hidden_dim,
            num_classes,
            finetune_embeddings,
        })
    }

    /// Load and verify the checkpoint dimensions against the expected shape.
    pub fn load_expecting(
        path: &Path,
        vocab_size: usize,
        embed_dim: usize,
        hidden_dim: usize,
        num_classes: usize,
    ) -> Result<ClassifierParams> {
        let params = ClassifierParams::load(path)?;
        let got = (
            params.vocab_size,
            params.embed_dim,
            params.hidden_dim,
            params.num_classes,
        );
        let want = (vocab_size, embed_dim, hidden_dim, num_classes);
        if got != want {
            return Err(Error::BadCheckpoint {
                path: path.to_path_buf(),
                reason: format!("dimensions {got:?} do not match config {want:?}"),
            });
        }
        Ok(params)
    }
}

/// How per-sample and per-class weights enter the loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    None,
    CertaintyClass,
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub weighting: Weighting,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 10,
            batch_size: 64,
            learning_rate: 1e-3,
            seed: 0,
            weighting: Weighting::None,
        }
    }
}

/// Mean of the non-pad token embeddings (zero vector for all-pad rows).
pub(crate) fn pooled_embedding(params: &ClassifierParams, row: &[u32]) -> Vec<f64> {
    let d = params.embed_dim;
    let mut pooled = vec![0.0; d];
    let mut count = 0usize;
    for &tok in row {
        if tok == PAD_ID {
            continue;
        }
        let base = tok as usize * d;
        for (p, &e) in pooled.iter_mut().zip(&params.embedding[base..base + d]) {
            *p += e;
        }
        count += 1;
    }
    if count > 0 {
        let inv = 1.0 / count as f64;
        for p in pooled.iter_mut() {
            *p *= inv;
        }
    }
    pooled
}

/// Activations kept per example for the backward pass.
struct Activations {
    pooled: Vec<f64>,
    pre_hidden: Vec<f64>,
    hidden: Vec<f64>,
    scores: Vec<f64>,
}

fn forward_one(params: &ClassifierParams, row: &[u32]) -> Activations {
    let h = params.hidden_dim;
    let c = params.num_classes;
    let pooled = pooled_embedding(params, row);

    let mut pre_hidden = params.hidden_b.clone();
    for (&x, w_row) in pooled.iter().zip(params.hidden_w.chunks_exact(h)) {
        if x == 0.0 {
            continue;
        }
        for (acc, &w) in pre_hidden.iter_mut().zip(w_row) {
            *acc += x * w;
        }
    }
    let hidden: Vec<f64> = pre_hidden.iter().map(|&v| v.max(0.0)).collect();

    let mut scores = params.output_b.clone();
    for (&v, w_row) in hidden.iter().zip(params.output_w.chunks_exact(c)) {
        if v == 0.0 {
            continue;
        }
        for (acc, &w) in scores.iter_mut().zip(w_row) {
            *acc += v * w;
        }
    }
    Activations {
        pooled,
        pre_hidden,
        hidden,
        scores,
    }
}

/// Batch forward pass: hidden features (batch x h) and class scores
/// (batch x C), both row-major.
pub fn forward(params: &ClassifierParams, batch: &[&[u32]]) -> (Vec<f64>, Vec<f64>) {
    let h = params.hidden_dim;
    let c = params.num_classes;
    let acts = parallel::map_slice(batch, |row| forward_one(params, row));
    let mut hidden = vec![0.0; batch.len() * h];
    let mut scores = vec![0.0; batch.len() * c];
    for (i, a) in acts.into_iter().enumerate() {
        hidden[i * h..(i + 1) * h].copy_from_slice(&a.hidden);
        scores[i * c..(i + 1) * c].copy_from_slice(&a.scores);
    }
    (hidden, scores)
}

/// Numerically stable softmax of one score row.
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let exps: Vec<f64> = scores.iter().map(|&s| (s - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn log_softmax_at(scores: &[f64], target: usize) -> f64 {
    let max = scores.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let log_sum = scores.iter().map(|&s| (s - max).exp()).sum::<f64>().ln() + max;
    scores[target] - log_sum
}

/// Mean over the batch of omega_i * zeta_{y_i} * crossentropy(softmax, y_i).
pub fn weighted_loss(scores: &[f64], targets: &[u32], omega: &[f64], zeta: &[f64]) -> f64 {
    let b = targets.len();
    let c = scores.len() / b;
    let mut total = 0.0;
    for i in 0..b {
        let y = targets[i] as usize;
        let nll = -log_softmax_at(&scores[i * c..(i + 1) * c], y);
        total += omega[i] * zeta[y] * nll;
    }
    total / b as f64
}

/// Dense gradients, same shapes as the parameters.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub embedding: Vec<f64>,
    pub hidden_w: Vec<f64>,
    pub hidden_b: Vec<f64>,
    pub output_w: Vec<f64>,
    pub output_b: Vec<f64>,
    /// Embedding rows touched by the batch (for cheap re-zeroing).
    touched_rows: Vec<u32>,
}

impl Gradients {
    pub fn zeros(params: &ClassifierParams) -> Gradients {
        Gradients {
            embedding: vec![0.0; params.embedding.len()],
            hidden_w: vec![0.0; params.hidden_w.len()],
            hidden_b: vec![0.0; params.hidden_b.len()],
            output_w: vec![0.0; params.output_w.len()],
            output_b: vec![0.0; params.output_b.len()],
            touched_rows: Vec::new(),
        }
    }

    fn clear(&mut self, d: usize) {
        for &row in &self.touched_rows {
            self.embedding[row as usize * d..(row as usize + 1) * d].fill(0.0);
        }
        self.touched_rows.clear();
        self.hidden_w.fill(0.0);
        self.hidden_b.fill(0.0);
        self.output_w.fill(0.0);
        self.output_b.fill(0.0);
    }
}

/// Loss and gradients of [`weighted_loss`] over one batch.
///
/// The backward pass mirrors the forward: crossentropy -> linear output ->
/// ReLU -> linear hidden -> mean pool -> embedding rows.
pub fn batch_gradients(
    params: &ClassifierParams,
    batch: &[&[u32]],
    targets: &[u32],
    omega: &[f64],
    zeta: &[f64],
    grads: &mut Gradients,
) -> f64 {
    let d = params.embed_dim;
    let h = params.hidden_dim;
    let c = params.num_classes;
    let b = batch.len();
    grads.clear(d);

    let mut total_loss = 0.0;
    let inv_b = 1.0 / b as f64;
    let mut d_pre = vec![0.0; h];
    let mut d_pooled = vec![0.0; d];
    for (i, row) in batch.iter().enumerate() {
        let acts = forward_one(params, row);
        let y = targets[i] as usize;
        let weight = omega[i] * zeta[y];
        total_loss += weight * -log_softmax_at(&acts.scores, y);
        if weight == 0.0 {
            continue;
        }

        // d loss / d scores = w * (softmax - onehot) / B
        let mut d_scores = softmax(&acts.scores);
        d_scores[y] -= 1.0;
        for v in d_scores.iter_mut() {
            *v *= weight * inv_b;
        }

        for j in 0..h {
            let hj = acts.hidden[j];
            if hj != 0.0 {
                let g_row = &mut grads.output_w[j * c..(j + 1) * c];
                for (g, &ds) in g_row.iter_mut().zip(&d_scores) {
                    *g += hj * ds;
                }
            }
        }
        for (g, &ds) in grads.output_b.iter_mut().zip(&d_scores) {
            *g += ds;
        }

        for ((dp, &pre), w_row) in d_pre
            .iter_mut()
            .zip(&acts.pre_hidden)
            .zip(params.output_w.chunks_exact(c))
        {
            *dp = if pre > 0.0 {
                w_row.iter().zip(&d_scores).map(|(&w, &ds)| w * ds).sum()
            } else {
                0.0
            };
        }

        for i_dim in 0..d {
            let x = acts.pooled[i_dim];
            if x != 0.0 {
                let g_row = &mut grads.hidden_w[i_dim * h..(i_dim + 1) * h];
                for (g, &dp) in g_row.iter_mut().zip(&d_pre) {
                    *g += x * dp;
                }
            }
        }
        for (g, &dp) in grads.hidden_b.iter_mut().zip(&d_pre) {
            *g += dp;
        }

        if params.finetune_embeddings {
            for (dp, w_row) in d_pooled.iter_mut().zip(params.hidden_w.chunks_exact(h)) {
                *dp = w_row.iter().zip(&d_pre).map(|(&w, &d_hid)| w * d_hid).sum();
            }
            let count = row.iter().filter(|&&t| t != PAD_ID).count();
            if count > 0 {
                let inv_count = 1.0 / count as f64;
                for &tok in row.iter() {
                    if tok == PAD_ID {
                        continue;
                    }
                    grads.touched_rows.push(tok);
                    let g_row = &mut grads.embedding[tok as usize * d..(tok as usize + 1) * d];
                    for (g, &dp) in g_row.iter_mut().zip(&d_pooled) {
                        *g += dp * inv_count;
                    }
                }
            }
        }
    }
    total_loss * inv_b
}

/// Adam moment buffers for one parameter block.
struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
}

impl AdamState {
    fn new(len: usize) -> AdamState {
        AdamState {
            m: vec![0.0; len],
            v: vec![0.0; len],
        }
    }
}

/// One Adam step over a parameter block. Returns false if any updated value
/// became non-finite.
fn adam_update(
    params: &mut [f64],
    grads: &[f64],
    state: &mut AdamState,
    lr: f64,
    step: u64,
) -> bool {
    let bc1 = 1.0 - ADAM_BETA1.powi(step as i32);
    let bc2 = 1.0 - ADAM_BETA2.powi(step as i32);
    let mut finite = true;
    for i in 0..params.len() {
        let g = grads[i];
        state.m[i] = ADAM_BETA1 * state.m[i] + (1.0 - ADAM_BETA1) * g;
        state.v[i] = ADAM_BETA2 * state.v[i] + (1.0 - ADAM_BETA2) * g * g;
        let m_hat = state.m[i] / bc1;
        let v_hat = state.v[i] / bc2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
        finite &= params[i].is_finite();
    }
    finite
}

/// Minibatch training with the adaptive-moment rule.
///
/// With `pseudo` absent the trainer uses the labeled rows and gold labels;
/// with it, every row trains against its pseudo-label, weighted per sample
/// and per class when `cfg.weighting` says so. Returns the per-epoch mean
/// loss curve. Deterministic given `cfg.seed`.
pub fn train(
    params: &mut ClassifierParams,
    dataset: &IndexedDataset,
    pseudo: Option<&PseudoLabelSet>,
    cfg: &TrainConfig,
) -> Result<Vec<f64>> {
    if let Some(set) = pseudo {
        assert_eq!(
            set.labels.len(),
            dataset.len(),
            "pseudo-labels must cover the dataset"
        );
    }
    let rows: Vec<usize> = match pseudo {
        Some(_) => (0..dataset.len()).collect(),
        None => dataset.labeled_indices(),
    };
    if rows.is_empty() {
        return Err(Error::NoLabeledPoints);
    }

    let unit_zeta = vec![1.0; params.num_classes];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order = rows;
    let mut grads = Gradients::zeros(params);
    let mut adam_embedding = AdamState::new(params.embedding.len());
    let mut adam_hidden_w = AdamState::new(params.hidden_w.len());
    let mut adam_hidden_b = AdamState::new(params.hidden_b.len());
    let mut adam_output_w = AdamState::new(params.output_w.len());
    let mut adam_output_b = AdamState::new(params.output_b.len());
    let mut step = 0u64;
    let mut curve = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        use rand::seq::SliceRandom;
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut batches = 0usize;
        for (batch_idx, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let batch: Vec<&[u32]> = chunk.iter().map(|&i| dataset.row(i)).collect();
            let (targets, omega, zeta): (Vec<u32>, Vec<f64>, &[f64]) = match pseudo {
                None => (
                    chunk.iter().map(|&i| dataset.gold_labels[i]).collect(),
                    vec![1.0; chunk.len()],
                    &unit_zeta,
                ),
                Some(set) => {
                    let targets = chunk.iter().map(|&i| set.labels[i]).collect();
                    match cfg.weighting {
                        Weighting::CertaintyClass => (
                            targets,
                            chunk.iter().map(|&i| set.certainty[i]).collect(),
                            &set.class_weights,
                        ),
                        Weighting::None => (targets, vec![1.0; chunk.len()], &unit_zeta),
                    }
                }
            };

            let loss = batch_gradients(params, &batch, &targets, &omega, zeta, &mut grads);
            if !loss.is_finite() {
                return Err(Error::DivergedLoss {
                    epoch,
                    batch: batch_idx,
                });
            }
            epoch_loss += loss;
            batches += 1;

            step += 1;
            let mut finite = true;
            if params.finetune_embeddings {
                finite &= adam_update(
                    &mut params.embedding,
                    &grads.embedding,
                    &mut adam_embedding,
                    cfg.learning_rate,
                    step,
                );
            }
            finite &= adam_update(
                &mut params.hidden_w,
                &grads.hidden_w,
                &mut adam_hidden_w,
                cfg.learning_rate,
                step,
            );
            finite &= adam_update(
                &mut params.hidden_b,
                &grads.hidden_b,
                &mut adam_hidden_b,
                cfg.learning_rate,
                step,
            );
            finite &= adam_update(
                &mut params.output_w,
                &grads.output_w,
                &mut adam_output_w,
                cfg.learning_rate,
                step,
            );
            finite &= adam_update(
                &mut params.output_b,
                &grads.output_b,
                &mut adam_output_b,
                cfg.learning_rate,
                step,
            );
            if !finite {
                log::error!(
                    "non-finite parameter after update (epoch {epoch}, batch {batch_idx})"
                );
                return Err(Error::DivergedLoss {
                    epoch,
                    batch: batch_idx,
                });
            }
        }
        curve.push(epoch_loss / batches.max(1) as f64);
    }
    Ok(curve)
}

/// Hidden-layer representation of every document, in dataset order.
pub fn extract_features(params: &ClassifierParams, dataset: &IndexedDataset) -> FeatureMatrix {
    let h = params.hidden_dim;
    let n = dataset.len();
    let mut values = vec![0.0f32; n * h];
    parallel::for_each_chunk(&mut values, h, |i, out| {
        let acts = forward_one(params, dataset.row(i));
        for (slot, &v) in out.iter_mut().zip(&acts.hidden) {
            *slot = v as f32;
        }
    });
    FeatureMatrix::new(values, n, h)
}

/// Evaluation metrics over a labeled dataset.
#[derive(Debug, Clone, Serialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    /// Positive-class F1 for two classes, macro-averaged otherwise.
    pub f1: f64,
    /// Absent when only one class is present in the gold labels.
    pub auc_roc: Option<f64>,
    pub per_class_counts: Vec<usize>,
}

/// Accuracy / F1 / AUC from raw score rows and gold labels.
pub fn metrics_from_scores(scores: &[f64], labels: &[u32], num_classes: usize) -> MetricsReport {
    let n = labels.len();
    let c = num_classes;
    let predictions: Vec<u32> = (0..n)
        .map(|i| {
            let row = &scores[i * c..(i + 1) * c];
            let mut best = 0usize;
            for (j, &v) in row.iter().enumerate().skip(1) {
                if v > row[best] {
                    best = j;
                }
            }
            best as u32
        })
        .collect();

    let correct = predictions.iter().zip(labels).filter(|(p, l)| p == l).count();
    let accuracy = correct as f64 / n as f64;

    let mut per_class_counts = vec![0usize; c];
    for &l in labels {
        per_class_counts[l as usize] += 1;
    }

    let f1 = if c == 2 {
        f1_binary(&predictions, labels, 1)
    } else {
        (0..c as u32)
            .map(|cls| f1_binary(&predictions, labels, cls))
            .sum::<f64>()
            / c as f64
    };

    let auc_roc = if c == 2 {
        let pos_scores: Vec<f64> = (0..n)
            .map(|i| softmax(&scores[i * c..(i + 1) * c])[1])
            .collect();
        let flags: Vec<bool> = labels.iter().map(|&l| l == 1).collect();
        auc_rank(&pos_scores, &flags).ok()
    } else {
        // macro one-vs-rest over classes present in the gold labels
        let mut aucs = Vec::new();
        for cls in 0..c {
            let cls_scores: Vec<f64> = (0..n)
                .map(|i| softmax(&scores[i * c..(i + 1) * c])[cls])
                .collect();
            let flags: Vec<bool> = labels.iter().map(|&l| l as usize == cls).collect();
            if let Ok(a) = auc_rank(&cls_scores, &flags) {
                aucs.push(a);
            }
        }
        if aucs.is_empty() {
            None
        } else {
            Some(aucs.iter().sum::<f64>() / aucs.len() as f64)
        }
    };

    MetricsReport {
        accuracy,
        f1,
        auc_roc,
        per_class_counts,
    }
}

fn f1_binary(predictions: &[u32], labels: &[u32], positive: u32) -> f64 {
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut fn_ = 0usize;
    for (&p, &l) in predictions.iter().zip(labels) {
        match (p == positive, l == positive) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    if 2 * tp + fp + fn_ == 0 {
        return 0.0;
    }
    2.0 * tp as f64 / (2 * tp + fp + fn_) as f64
}

/// AUC-ROC by the Mann-Whitney rank statistic with mid-rank tie correction.
pub fn auc_rank(scores: &[f64], is_positive: &[bool]) -> Result<f64> {
    let n = scores.len();
    let n_pos = is_positive.iter().filter(|&&p| p).count();
    let n_neg = n - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClassEval);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));

    let mut rank_sum_pos = 0.0f64;
    let mut i = 0usize;
    while i < n {
        let mut j = i;
        while j + 1 < n && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // mid-rank of the tie group spanning 1-based positions i+1 ..= j+1
        let mid_rank = (i + 1 + j + 1) as f64 / 2.0;
        for &idx in &order[i..=j] {
            if is_positive[idx] {
                rank_sum_pos += mid_rank;
            }
        }
        i = j + 1;
    }
    let auc = (rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0) / (n_pos as f64 * n_neg as f64);
    Ok(auc)
}

/// Run the classifier over a dataset and compute metrics on its gold labels.
pub fn evaluate(params: &ClassifierParams, dataset: &IndexedDataset) -> MetricsReport {
    let batch: Vec<&[u32]> = (0..dataset.len()).map(|i| dataset.row(i)).collect();
    let (_, scores) = forward(params, &batch);
    metrics_from_scores(&scores, &dataset.gold_labels, dataset.num_classes)
}
