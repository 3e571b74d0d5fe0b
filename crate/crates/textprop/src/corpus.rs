//! Corpus ingestion, text cleaning, vocabulary construction, and dataset
//! indexing.
//!
//! Cleaning lowercases, isolates a fixed punctuation set with spaces, drops
//! every character that is neither alphanumeric, whitespace, nor in that set,
//! and collapses whitespace runs. The vocabulary keeps the most frequent
//! train-split tokens (ties broken lexicographically) under two reserved ids:
//! pad = 0 and unk = 1. Indexing shuffles deterministically, splits
//! train/validation, pads or truncates each document, and marks a per-class
//! stratified labeled subset.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::parallel;

/// Reserved id for the padding token.
pub const PAD_ID: u32 = 0;
/// Reserved id for out-of-vocabulary tokens.
pub const UNK_ID: u32 = 1;
/// Token strings used for the reserved ids in dumps.
pub const PAD_TOKEN: &str = "<pad>";
pub const UNK_TOKEN: &str = "<unk>";

/// Punctuation marks that get isolated with surrounding spaces.
pub const PUNCTUATION: &[char] = &['.', ',', '!', '?', ';', ':', '\'', '"', '(', ')', '-'];

/// One ingested document: raw text plus an optional gold class index.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawDocument {
    pub text: String,
    pub gold_label: Option<u32>,
}

/// How to split and partially label the corpus.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SplitSpec {
    /// Fraction of documents assigned to the train split (0, 1).
    pub train_fraction: f64,
    /// Fraction of the train split marked labeled (0, 1].
    pub label_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_fraction: 0.8,
            label_fraction: 1.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitTag {
    Train,
    Validation,
    Test,
}

impl std::fmt::Display for SplitTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SplitTag::Train => write!(f, "train"),
            SplitTag::Validation => write!(f, "validation"),
            SplitTag::Test => write!(f, "test"),
        }
    }
}

/// Frequency-capped vocabulary with dense ids.
///
/// Ids 0 and 1 are reserved for pad/unk; real tokens get ids starting at 2 in
/// descending-frequency order (ties broken lexicographically ascending).
#[derive(Debug, Clone)]
pub struct Vocabulary {
    token_to_id: HashMap<String, u32>,
    id_to_token: Vec<String>,
    frequencies: Vec<u64>,
    pub max_size: usize,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.id_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        false // pad and unk are always present
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.token_to_id.get(token).copied()
    }

    /// Id for `token`, falling back to [`UNK_ID`].
    pub fn id_or_unk(&self, token: &str) -> u32 {
        self.id(token).unwrap_or(UNK_ID)
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.id_to_token.get(id as usize).map(String::as_str)
    }

    /// Corpus frequency recorded for `id` (0 for pad/unk).
    pub fn frequency(&self, id: u32) -> u64 {
        self.frequencies.get(id as usize).copied().unwrap_or(0)
    }

    /// Iterate `(token, id, frequency)` in id order.
    pub fn entries(&self) -> impl Iterator<Item = (&str, u32, u64)> {
        self.id_to_token
            .iter()
            .enumerate()
            .map(|(id, tok)| (tok.as_str(), id as u32, self.frequencies[id]))
    }

    /// Write the `token<TAB>id<TAB>frequency` dump.
    pub fn dump(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for (tok, id, freq) in self.entries() {
            writeln!(out, "{tok}\t{id}\t{freq}").expect("writing to string");
        }
        let mut file = std::fs::File::create(path)?;
        file.write_all(out.as_bytes())?;
        Ok(())
    }
}

/// Indexed documents: padded token-id rows plus labels and the labeled mask.
#[derive(Debug, Clone)]
pub struct IndexedDataset {
    tokens: Vec<u32>,
    pub max_len: usize,
    pub gold_labels: Vec<u32>,
    pub labeled_mask: Vec<bool>,
    pub num_classes: usize,
    pub split_tag: SplitTag,
}

impl IndexedDataset {
    /// Assemble a dataset from already-indexed parts.
    ///
    /// Panics when the buffer lengths disagree.
    pub fn from_parts(
        tokens: Vec<u32>,
        max_len: usize,
        gold_labels: Vec<u32>,
        labeled_mask: Vec<bool>,
        num_classes: usize,
        split_tag: SplitTag,
    ) -> IndexedDataset {
        assert_eq!(tokens.len(), gold_labels.len() * max_len);
        assert_eq!(gold_labels.len(), labeled_mask.len());
        IndexedDataset {
            tokens,
            max_len,
            gold_labels,
            labeled_mask,
            num_classes,
            split_tag,
        }
    }

    pub fn len(&self) -> usize {
        self.gold_labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gold_labels.is_empty()
    }

    /// Token-id row for document `i` (length `max_len`).
    pub fn row(&self, i: usize) -> &[u32] {
        &self.tokens[i * self.max_len..(i + 1) * self.max_len]
    }

    /// Number of labeled documents.
    pub fn labeled_count(&self) -> usize {
        self.labeled_mask.iter().filter(|&&m| m).count()
    }

    /// Indices of labeled documents in order.
    pub fn labeled_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.labeled_mask[i]).collect()
    }

    /// Clone with every document marked labeled (the fully supervised view).
    pub fn with_all_labeled(&self) -> IndexedDataset {
        let mut copy = self.clone();
        copy.labeled_mask = vec![true; copy.len()];
        copy
    }

    /// Raw token buffer, row-major with stride `max_len`.
    pub fn tokens(&self) -> &[u32] {
        &self.tokens
    }
}

/// Lowercase, isolate punctuation, drop out-of-alphabet characters, collapse
/// whitespace. Total: never fails, may return an empty string.
pub fn clean_text(raw: &str) -> String {
    let lowered = raw.to_lowercase();
    let mut kept = String::with_capacity(lowered.len() + 16);
    for ch in lowered.chars() {
        if PUNCTUATION.contains(&ch) {
            kept.push(' ');
            kept.push(ch);
            kept.push(' ');
        } else if ch.is_alphanumeric() || ch.is_whitespace() {
            kept.push(ch);
        }
        // anything else is dropped
    }
    let mut out = String::with_capacity(kept.len());
    for (i, field) in kept.split_whitespace().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(field);
    }
    out
}

/// Whitespace tokenization of already-cleaned text.
pub fn tokenize(cleaned: &str) -> Vec<String> {
    cleaned.split_whitespace().map(str::to_owned).collect()
}

/// Clean and tokenize a batch of documents (document-parallel).
pub fn clean_and_tokenize(docs: &[RawDocument]) -> Vec<Vec<String>> {
    parallel::map_slice(docs, |d| tokenize(&clean_text(&d.text)))
}

/// Build the frequency-capped vocabulary from train-split token lists.
///
/// Keeps the `max_size` most frequent tokens; ties broken lexicographically
/// ascending; ids assigned in rank order starting at 2.
pub fn build_vocabulary<'a, I>(corpus: I, max_size: usize) -> Result<Vocabulary>
where
    I: IntoIterator<Item = &'a [String]>,
{
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for doc in corpus {
        for tok in doc {
            *counts.entry(tok.as_str()).or_insert(0) += 1;
        }
    }
    if counts.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut ranked: Vec<(&str, u64)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked.truncate(max_size);

    let mut id_to_token = Vec::with_capacity(ranked.len() + 2);
    let mut frequencies = Vec::with_capacity(ranked.len() + 2);
    id_to_token.push(PAD_TOKEN.to_owned());
    id_to_token.push(UNK_TOKEN.to_owned());
    frequencies.push(0);
    frequencies.push(0);
    for (tok, freq) in &ranked {
        id_to_token.push((*tok).to_owned());
        frequencies.push(*freq);
    }
    let token_to_id = id_to_token
        .iter()
        .enumerate()
        .map(|(id, tok)| (tok.clone(), id as u32))
        .collect();
    Ok(Vocabulary {
        token_to_id,
        id_to_token,
        frequencies,
        max_size,
    })
}

/// Shuffle, split train/validation, index against the vocabulary, and mark a
/// stratified labeled subset within the train split.
pub fn index_dataset(
    docs: &[RawDocument],
    vocab: &Vocabulary,
    max_len: usize,
    spec: &SplitSpec,
    num_classes: usize,
) -> Result<(IndexedDataset, IndexedDataset)> {
    for (index, doc) in docs.iter().enumerate() {
        match doc.gold_label {
            None => return Err(Error::MissingLabel { index }),
            Some(label) if label as usize >= num_classes => {
                return Err(Error::LabelOutOfRange { label, num_classes })
            }
            Some(_) => {}
        }
    }

    let (train_slots, val_slots) = shuffled_split(docs.len(), spec)?;
    let token_lists = clean_and_tokenize(docs);
    let index_rows = |slots: &[usize], tag: SplitTag, labeled: Vec<bool>| {
        let mut tokens = vec![PAD_ID; slots.len() * max_len];
        for (row, &doc_idx) in slots.iter().enumerate() {
            let ids = &token_lists[doc_idx];
            for (j, tok) in ids.iter().take(max_len).enumerate() {
                tokens[row * max_len + j] = vocab.id_or_unk(tok);
            }
        }
        IndexedDataset {
            tokens,
            max_len,
            gold_labels: slots
                .iter()
                .map(|&i| docs[i].gold_label.expect("validated above"))
                .collect(),
            labeled_mask: labeled,
            num_classes,
            split_tag: tag,
        }
    };

    let labeled = stratified_label_mask(&train_slots, docs, num_classes, spec.label_fraction);
    let train = index_rows(&train_slots, SplitTag::Train, labeled);
    let validation = index_rows(&val_slots, SplitTag::Validation, vec![true; val_slots.len()]);
    Ok((train, validation))
}

/// Index documents against an existing vocabulary without splitting or
/// shuffling: every row keeps its position and is marked labeled. Used for
/// held-out test sets evaluated with the train vocabulary.
pub fn index_with_vocab(
    docs: &[RawDocument],
    vocab: &Vocabulary,
    max_len: usize,
    num_classes: usize,
    split_tag: SplitTag,
) -> Result<IndexedDataset> {
    for (index, doc) in docs.iter().enumerate() {
        match doc.gold_label {
            None => return Err(Error::MissingLabel { index }),
            Some(label) if label as usize >= num_classes => {
                return Err(Error::LabelOutOfRange { label, num_classes })
            }
            Some(_) => {}
        }
    }
    let token_lists = clean_and_tokenize(docs);
    let mut tokens = vec![PAD_ID; docs.len() * max_len];
    for (row, ids) in token_lists.iter().enumerate() {
        for (j, tok) in ids.iter().take(max_len).enumerate() {
            tokens[row * max_len + j] = vocab.id_or_unk(tok);
        }
    }
    Ok(IndexedDataset {
        tokens,
        max_len,
        gold_labels: docs.iter().map(|d| d.gold_label.unwrap()).collect(),
        labeled_mask: vec![true; docs.len()],
        num_classes,
        split_tag,
    })
}

/// Deterministic shuffled train/validation index split.
///
/// The same `(n, seed, train_fraction)` always yields the same partition;
/// [`index_dataset`] uses this internally, and callers that need to see the
/// train documents before indexing (e.g. to build the vocabulary without
/// leakage) can call it directly.
pub fn shuffled_split(n: usize, spec: &SplitSpec) -> Result<(Vec<usize>, Vec<usize>)> {
    let train_n = (n as f64 * spec.train_fraction).round() as usize;
    if train_n == 0 {
        return Err(Error::EmptySplit { which: "train", n });
    }
    if train_n >= n {
        return Err(Error::EmptySplit {
            which: "validation",
            n,
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    order.shuffle(&mut rng);
    let val = order.split_off(train_n);
    Ok((order, val))
}

/// Mark a labeled subset of size `round(label_fraction * |train|)` whose class
/// composition mirrors the source data (largest-remainder rounding, so a
/// balanced source yields per-class counts within 1 of each other), capped by
/// per-class availability in the train split.
fn stratified_label_mask(
    slots: &[usize],
    docs: &[RawDocument],
    num_classes: usize,
    label_fraction: f64,
) -> Vec<bool> {
    let mut available = vec![0usize; num_classes];
    for &i in slots {
        available[docs[i].gold_label.unwrap() as usize] += 1;
    }
    let mut source_counts = vec![0usize; num_classes];
    for doc in docs {
        source_counts[doc.gold_label.unwrap() as usize] += 1;
    }
    let source_total: usize = source_counts.iter().sum();

    let l_total = ((slots.len() as f64 * label_fraction).round() as usize).min(slots.len());
    let raw: Vec<f64> = source_counts
        .iter()
        .map(|&c| l_total as f64 * c as f64 / source_total as f64)
        .collect();
    let mut targets: Vec<usize> = raw.iter().map(|&r| r.floor() as usize).collect();
    let mut remainder = l_total.saturating_sub(targets.iter().sum());
    let mut by_fraction: Vec<usize> = (0..num_classes).collect();
    by_fraction.sort_by(|&a, &b| {
        let fa = raw[a] - raw[a].floor();
        let fb = raw[b] - raw[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &c in &by_fraction {
        if remainder == 0 {
            break;
        }
        targets[c] += 1;
        remainder -= 1;
    }

    // cap by availability, then hand leftover quota to classes with room
    for c in 0..num_classes {
        targets[c] = targets[c].min(available[c]);
    }
    let mut deficit = l_total.saturating_sub(targets.iter().sum());
    while deficit > 0 {
        let mut progressed = false;
        for c in 0..num_classes {
            if deficit > 0 && targets[c] < available[c] {
                targets[c] += 1;
                deficit -= 1;
                progressed = true;
            }
        }
        if !progressed {
            break;
        }
    }

    let mut taken = vec![0usize; num_classes];
    slots
        .iter()
        .map(|&i| {
            let c = docs[i].gold_label.unwrap() as usize;
            if taken[c] < targets[c] {
                taken[c] += 1;
                true
            } else {
                false
            }
        })
        .collect()
}

/// Smallest class count that covers every gold label in `docs`.
pub fn infer_num_classes(docs: &[RawDocument]) -> usize {
    docs.iter()
        .filter_map(|d| d.gold_label)
        .map(|l| l as usize + 1)
        .max()
        .unwrap_or(0)
}

/// Outcome of loading a dataset CSV.
#[derive(Debug)]
pub struct LoadedCorpus {
    pub documents: Vec<RawDocument>,
    /// Rows rejected because the text column was empty.
    pub rejected_empty: usize,
}

/// Read a `label,text` CSV (standard quoting, embedded commas/newlines OK).
///
/// Rows with empty text are rejected and counted.
pub fn load_csv(path: &Path) -> Result<LoadedCorpus> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let mut documents = Vec::new();
    let mut rejected_empty = 0usize;
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let label_field = record.get(0).unwrap_or("");
        let text = record.get(1).unwrap_or("").to_owned();
        if text.is_empty() {
            rejected_empty += 1;
            continue;
        }
        let label: u32 = label_field.trim().parse().map_err(|_| Error::BadFormat {
            what: "dataset csv",
            path: path.to_path_buf(),
            reason: format!("row {}: label `{label_field}` is not a class index", i + 2),
        })?;
        documents.push(RawDocument {
            text,
            gold_label: Some(label),
        });
    }
    Ok(LoadedCorpus {
        documents,
        rejected_empty,
    })
}
