//! Pretrained word-vector loading and vocabulary-aligned embedding tables.
//!
//! The input is the common text layout: one `token v1 v2 ... vd` line per
//! word, optionally preceded by a `count dim` header line, optionally
//! gzip-compressed (filename ending in `.gz`). Tokens found in both the file
//! and the vocabulary receive their pretrained row; the pad row is forced to
//! zero; every other token gets a deterministic per-token default row.

use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::corpus::{Vocabulary, PAD_ID};
use crate::error::{Error, Result};
use crate::hash::fnv1a64;

/// Half-width of the uniform range used for default (unmatched) rows.
const DEFAULT_ROW_SCALE: f32 = 0.05;

/// Vocabulary-aligned dense embedding matrix.
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    matrix: Vec<f32>,
    pub dim: usize,
    pub vocab_size: usize,
    /// Vocabulary tokens whose row came from the pretrained file.
    pub matched_count: usize,
    /// Tokens that appeared more than once in the file (last occurrence wins).
    pub duplicate_count: usize,
}

impl EmbeddingTable {
    pub fn row(&self, id: u32) -> &[f32] {
        let d = self.dim;
        &self.matrix[id as usize * d..(id as usize + 1) * d]
    }

    pub fn matrix(&self) -> &[f32] {
        &self.matrix
    }

    /// Wrap an existing matrix (rows must already be vocabulary-aligned).
    pub fn from_raw(matrix: Vec<f32>, dim: usize, vocab_size: usize) -> EmbeddingTable {
        assert_eq!(matrix.len(), vocab_size * dim);
        EmbeddingTable {
            matrix,
            dim,
            vocab_size,
            matched_count: 0,
            duplicate_count: 0,
        }
    }

    /// Table with every row drawn from the per-token default distribution
    /// (used when no pretrained file is configured).
    pub fn all_defaults(vocab: &Vocabulary, dim: usize) -> EmbeddingTable {
        let vocab_size = vocab.len();
        let mut matrix = vec![0.0f32; vocab_size * dim];
        for (tok, id, _) in vocab.entries() {
            if id == PAD_ID {
                continue;
            }
            let row = default_row(tok, dim);
            matrix[id as usize * dim..(id as usize + 1) * dim].copy_from_slice(&row);
        }
        EmbeddingTable {
            matrix,
            dim,
            vocab_size,
            matched_count: 0,
            duplicate_count: 0,
        }
    }
}

/// Deterministic default row for an unmatched token: seeded uniform on
/// [-0.05, 0.05] with the seed derived from the token string.
pub fn default_row(token: &str, dim: usize) -> Vec<f32> {
    let mut rng = ChaCha8Rng::seed_from_u64(fnv1a64(token.as_bytes()));
    let dist = Uniform::new_inclusive(-DEFAULT_ROW_SCALE, DEFAULT_ROW_SCALE);
    (0..dim).map(|_| dist.sample(&mut rng)).collect()
}

fn open_reader(path: &Path) -> Result<Box<dyn BufRead>> {
    let file = std::fs::File::open(path).map_err(|source| Error::FileUnreadable {
        path: path.to_path_buf(),
        source,
    })?;
    let raw: Box<dyn Read> = if path.extension().is_some_and(|e| e == "gz") {
        Box::new(flate2::read::GzDecoder::new(file))
    } else {
        Box::new(file)
    };
    Ok(Box::new(BufReader::new(raw)))
}

/// Looks like the optional `count dim` header: exactly two integer fields.
fn is_header(line: &str) -> bool {
    let fields: Vec<&str> = line.split_whitespace().collect();
    fields.len() == 2 && fields.iter().all(|f| f.parse::<u64>().is_ok())
}

/// Load pretrained vectors and assemble the vocabulary-aligned table.
pub fn load_word_vectors(path: &Path, vocab: &Vocabulary) -> Result<EmbeddingTable> {
    let reader = open_reader(path)?;
    let vocab_size = vocab.len();

    let mut dim: Option<usize> = None;
    let mut matched: Vec<Option<Vec<f32>>> = vec![None; vocab_size];
    let mut matched_count = 0usize;
    let mut duplicate_count = 0usize;
    let mut data_lines = 0usize;

    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| Error::FileUnreadable {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        if lineno == 0 && is_header(&line) {
            continue;
        }
        data_lines += 1;

        let mut fields = line.split_whitespace();
        let token = fields.next().unwrap_or("");
        let count = fields.clone().count();
        match dim {
            None => dim = Some(count),
            Some(d) if d != count => {
                return Err(Error::DimensionMismatch {
                    line: lineno + 1,
                    expected: d,
                    found: count,
                })
            }
            Some(_) => {}
        }

        let Some(id) = vocab.id(token) else { continue };
        if id == PAD_ID {
            continue; // the pad row stays zero
        }
        let mut row = Vec::with_capacity(count);
        for f in fields {
            let v: f32 = f.parse().map_err(|_| Error::BadFormat {
                what: "word-vector",
                path: path.to_path_buf(),
                reason: format!("line {}: `{f}` is not a number", lineno + 1),
            })?;
            if !v.is_finite() {
                return Err(Error::BadFormat {
                    what: "word-vector",
                    path: path.to_path_buf(),
                    reason: format!("line {}: non-finite component", lineno + 1),
                });
            }
            row.push(v);
        }
        let slot = &mut matched[id as usize];
        if slot.is_some() {
            duplicate_count += 1;
        } else {
            matched_count += 1;
        }
        *slot = Some(row);
    }

    if data_lines == 0 {
        return Err(Error::EmptyFile {
            path: path.to_path_buf(),
        });
    }
    let dim = dim.expect("data_lines > 0 implies dim set");
    if duplicate_count > 0 {
        log::warn!("{duplicate_count} duplicate token(s) in {path:?}; last occurrence kept");
    }

    let mut matrix = vec![0.0f32; vocab_size * dim];
    for (tok, id, _) in vocab.entries() {
        if id == PAD_ID {
            continue;
        }
        let row = match matched[id as usize].take() {
            Some(row) => row,
            None => default_row(tok, dim),
        };
        matrix[id as usize * dim..(id as usize + 1) * dim].copy_from_slice(&row);
    }

    Ok(EmbeddingTable {
        matrix,
        dim,
        vocab_size,
        matched_count,
        duplicate_count,
    })
}

/// Coverage report for a loaded table.
#[derive(Debug, Clone, Serialize)]
pub struct EmbeddingStats {
    pub dim: usize,
    pub vocab_size: usize,
    pub matched_count: usize,
    /// matched / |V|, rounded to 4 decimals.
    pub coverage: f64,
}

pub fn embedding_stats(table: &EmbeddingTable) -> EmbeddingStats {
    let coverage = if table.vocab_size == 0 {
        0.0
    } else {
        let raw = table.matched_count as f64 / table.vocab_size as f64;
        (raw * 10_000.0).round() / 10_000.0
    };
    EmbeddingStats {
        dim: table.dim,
        vocab_size: table.vocab_size,
        matched_count: table.matched_count,
        coverage,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::build_vocabulary;
    use std::io::Write;

    fn vocab_of(tokens: &[&str]) -> Vocabulary {
        let docs: Vec<Vec<String>> = vec![tokens.iter().map(|s| s.to_string()).collect()];
        let refs: Vec<&[String]> = docs.iter().map(Vec::as_slice).collect();
        build_vocabulary(refs.iter().copied(), tokens.len()).unwrap()
    }

    fn write_file(dir: &tempfile::TempDir, name: &str, contents: &str) -> std::path::PathBuf {
        let path = dir.path().join(name);
        std::fs::write(&path, contents).unwrap();
        path
    }

    #[test]
    fn single_match_pad_zero() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(&dir, "vecs.txt", "a 1.0 2.0\n");
        let vocab = vocab_of(&["a"]);
        let table = load_word_vectors(&path, &vocab).unwrap();
        assert_eq!(table.matched_count, 1);
        assert_eq!(table.dim, 2);
        assert_eq!(table.row(vocab.id("a").unwrap()), &[1.0, 2.0]);
        assert_eq!(table.row(PAD_ID), &[0.0, 0.0]);
        // unk got a default row within the stated range
        let unk = table.row(crate::corpus::UNK_ID);
        assert!(unk.iter().all(|v| v.abs() <= DEFAULT_ROW_SCALE));
        assert!(unk.iter().any(|&v| v != 0.0));
    }

    #[test]
    fn header_line_tolerated() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(&dir, "vecs.txt", "2 3\na 1 2 3\nb 4 5 6\n");
        let vocab = vocab_of(&["a", "b"]);
        let table = load_word_vectors(&path, &vocab).unwrap();
        assert_eq!(table.dim, 3);
        assert_eq!(table.matched_count, 2);
    }

    #[test]
    fn dimension_mismatch_detected() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(&dir, "vecs.txt", "a 1 2 3\nb 4 5\n");
        let vocab = vocab_of(&["a", "b"]);
        assert!(matches!(
            load_word_vectors(&path, &vocab),
            Err(Error::DimensionMismatch {
                line: 2,
                expected: 3,
                found: 2
            })
        ));
    }

    #[test]
    fn empty_and_unreadable() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(&dir, "vecs.txt", "\n\n");
        let vocab = vocab_of(&["a"]);
        assert!(matches!(
            load_word_vectors(&path, &vocab),
            Err(Error::EmptyFile { .. })
        ));
        assert!(matches!(
            load_word_vectors(&dir.path().join("missing.txt"), &vocab),
            Err(Error::FileUnreadable { .. })
        ));
    }

    #[test]
    fn duplicates_last_wins() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(&dir, "vecs.txt", "a 1 1\na 2 2\n");
        let vocab = vocab_of(&["a"]);
        let table = load_word_vectors(&path, &vocab).unwrap();
        assert_eq!(table.matched_count, 1);
        assert_eq!(table.duplicate_count, 1);
        assert_eq!(table.row(vocab.id("a").unwrap()), &[2.0, 2.0]);
    }

    #[test]
    fn order_independent_and_reload_identical() {
        let dir = tempfile::tempdir().unwrap();
        let fwd = write_file(&dir, "fwd.txt", "a 1 2\nb 3 4\nc 5 6\n");
        let rev = write_file(&dir, "rev.txt", "c 5 6\nb 3 4\na 1 2\n");
        let vocab = vocab_of(&["a", "b", "c", "d"]);
        let t1 = load_word_vectors(&fwd, &vocab).unwrap();
        let t2 = load_word_vectors(&rev, &vocab).unwrap();
        let t3 = load_word_vectors(&fwd, &vocab).unwrap();
        assert_eq!(t1.matrix(), t2.matrix());
        assert_eq!(t1.matrix(), t3.matrix());
    }

    #[test]
    fn gzip_input() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vecs.txt.gz");
        let file = std::fs::File::create(&path).unwrap();
        let mut gz = flate2::write::GzEncoder::new(file, flate2::Compression::default());
        gz.write_all(b"a 7 8\n").unwrap();
        gz.finish().unwrap();
        let vocab = vocab_of(&["a"]);
        let table = load_word_vectors(&path, &vocab).unwrap();
        assert_eq!(table.row(vocab.id("a").unwrap()), &[7.0, 8.0]);
    }

    #[test]
    fn stats_coverage_rounding() {
        let table = EmbeddingTable {
            matrix: vec![],
            dim: 300,
            vocab_size: 10_002,
            matched_count: 8_725,
            duplicate_count: 0,
        };
        let stats = embedding_stats(&table);
        assert_eq!(stats.coverage, 0.8723);

        let none = EmbeddingTable {
            matrix: vec![],
            dim: 4,
            vocab_size: 2,
            matched_count: 0,
            duplicate_count: 0,
        };
        assert_eq!(embedding_stats(&none).coverage, 0.0);

        let full = EmbeddingTable {
            matrix: vec![],
            dim: 4,
            vocab_size: 5,
            matched_count: 5,
            duplicate_count: 0,
        };
        assert_eq!(embedding_stats(&full).coverage, 1.0);
    }
}
