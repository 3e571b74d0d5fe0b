//! Synthetic two-class text corpus generator.
//!
//! Documents mix tokens from a class-specific pool with tokens from a shared
//! pool, so class signal exists but is diluted: a classifier trained on a
//! small labeled subset stays well below the fully supervised ceiling, which
//! is the regime where propagating labels over the document graph helps.
//! The acceptance suite and the bundled example binary both draw from here.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::RawDocument;
use crate::error::Result;

#[derive(Debug, Clone)]
pub struct SynthConfig {
    /// Total documents, split evenly between the two classes.
    pub docs: usize,
    /// Tokens in each class-specific pool.
    pub specific_tokens: usize,
    /// Tokens in the shared pool.
    pub shared_tokens: usize,
    /// Probability that a token position draws from the class pool.
    pub specific_prob: f64,
    pub min_len: usize,
    pub max_len: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            docs: 2_000,
            specific_tokens: 120,
            shared_tokens: 600,
            specific_prob: 0.22,
            min_len: 15,
            max_len: 45,
            seed: 0,
        }
    }
}

/// Generate the corpus. Classes alternate by document index, so any prefix
/// is balanced.
pub fn generate(cfg: &SynthConfig) -> Vec<RawDocument> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    (0..cfg.docs)
        .map(|i| {
            let class = (i % 2) as u32;
            let len = rng.gen_range(cfg.min_len..=cfg.max_len);
            let mut text = String::with_capacity(len * 8);
            for pos in 0..len {
                if pos > 0 {
                    text.push(' ');
                }
                if rng.gen_bool(cfg.specific_prob) {
                    let t = rng.gen_range(0..cfg.specific_tokens);
                    write!(text, "c{class}tok{t}").expect("writing to string");
                } else {
                    let t = rng.gen_range(0..cfg.shared_tokens);
                    write!(text, "word{t}").expect("writing to string");
                }
            }
            RawDocument {
                text,
                gold_label: Some(class),
            }
        })
        .collect()
}

/// Write the corpus in the `label,text` CSV layout the loader expects.
pub fn write_csv(docs: &[RawDocument], path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["label", "text"])?;
    for doc in docs {
        writer.write_record([
            doc.gold_label.expect("synthetic docs are labeled").to_string(),
            doc.text.clone(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}
