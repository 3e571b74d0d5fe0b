//! Sparse affinity graph over document feature vectors.
//!
//! The construction chain is: L2-normalize features, exact cosine kNN
//! (blocked brute force, parallel over query blocks), gamma-powered edge
//! weights, max-symmetrization, and symmetric degree normalization
//! S = D^{-1/2} W D^{-1/2}. The finished graph is immutable and shared
//! read-only by the diffusion solver.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::parallel;

const FEATURE_MAGIC: &[u8; 4] = b"LPFM";
const GRAPH_MAGIC: &[u8; 4] = b"LPGR";

/// Queries per kNN block; each block streams the full feature matrix once.
const KNN_BLOCK: usize = 64;

/// Dense row-major feature matrix (n x dim, f32).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    values: Vec<f32>,
    pub rows: usize,
    pub dim: usize,
    pub normalized: bool,
    /// Rows that were all-zero at normalization time.
    pub zero_rows: Vec<usize>,
}

impl FeatureMatrix {
    pub fn new(values: Vec<f32>, rows: usize, dim: usize) -> FeatureMatrix {
        assert_eq!(values.len(), rows * dim);
        FeatureMatrix {
            values,
            rows,
            dim,
            normalized: false,
            zero_rows: Vec::new(),
        }
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    /// Write the `LPFM` binary layout: magic, u32 n, u32 dim, then n*dim
    /// little-endian f32 values row-major.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = Vec::with_capacity(12 + self.values.len() * 4);
        out.extend_from_slice(FEATURE_MAGIC);
        out.extend_from_slice(&(self.rows as u32).to_le_bytes());
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        let mut file = std::fs::File::create(path)?;
        file.write_all(&out)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<FeatureMatrix> {
        let bad = |reason: &str| Error::BadFormat {
            what: "feature matrix",
            path: path.to_path_buf(),
            reason: reason.to_owned(),
        };
        let mut file = std::fs::File::open(path)?;
        let mut header = [0u8; 12];
        file.read_exact(&mut header).map_err(|_| bad("truncated header"))?;
        if &header[0..4] != FEATURE_MAGIC {
            return Err(bad("bad magic"));
        }
        let rows = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
        let dim = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
        let mut buf = vec![0u8; rows * dim * 4];
        file.read_exact(&mut buf).map_err(|_| bad("truncated values"))?;
        let values = buf
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(FeatureMatrix::new(values, rows, dim))
    }
}

/// Scale each nonzero row to unit Euclidean norm; zero rows are left alone
/// and recorded in `zero_rows`.
pub fn l2_normalize(features: &FeatureMatrix) -> FeatureMatrix {
    let dim = features.dim;
    let mut values = features.values.clone();
    let mut zero_rows = Vec::new();
    for i in 0..features.rows {
        let row = &mut values[i * dim..(i + 1) * dim];
        let norm_sq: f64 = row.iter().map(|&v| v as f64 * v as f64).sum();
        if norm_sq == 0.0 {
            zero_rows.push(i);
            continue;
        }
        let inv = 1.0 / norm_sq.sqrt();
        for v in row.iter_mut() {
            *v = (*v as f64 * inv) as f32;
        }
    }
    FeatureMatrix {
        values,
        rows: features.rows,
        dim,
        normalized: true,
        zero_rows,
    }
}

/// One neighbor: target row index and clamped cosine similarity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: u32,
    pub similarity: f32,
}

/// Exact kNN result: `k` neighbors per row, flat with stride `k`.
#[derive(Debug, Clone)]
pub struct KnnResult {
    pub n: usize,
    pub k: usize,
    pub neighbors: Vec<Neighbor>,
}

impl KnnResult {
    pub fn row(&self, i: usize) -> &[Neighbor] {
        &self.neighbors[i * self.k..(i + 1) * self.k]
    }
}

/// Exact brute-force cosine kNN over normalized features.
///
/// Selection is by largest dot product with ties broken by smaller index;
/// stored similarities are clamped to [0, 1]. Queries are processed in
/// blocks that stream the candidate matrix once per block.
pub fn knn_search(features: &FeatureMatrix, k: usize) -> Result<KnnResult> {
    let n = features.rows;
    if k == 0 || k >= n {
        return Err(Error::KTooLarge { k, n });
    }
    let dim = features.dim;
    let values = &features.values;

    let mut neighbors = vec![
        Neighbor {
            index: 0,
            similarity: 0.0
        };
        n * k
    ];
    parallel::for_each_chunk(&mut neighbors, KNN_BLOCK * k, |block_idx, chunk| {
        let q0 = block_idx * KNN_BLOCK;
        let qn = chunk.len() / k;
        // blocked dot products: stream every candidate row once per block
        let mut sims = vec![0.0f32; qn * n];
        for j in 0..n {
            let cand = &values[j * dim..(j + 1) * dim];
            for qi in 0..qn {
                let query = &values[(q0 + qi) * dim..(q0 + qi + 1) * dim];
                let mut dot = 0.0f32;
                for (a, b) in query.iter().zip(cand) {
                    dot += a * b;
                }
                sims[qi * n + j] = dot;
            }
        }
        let mut order: Vec<u32> = Vec::with_capacity(n - 1);
        for qi in 0..qn {
            let q = q0 + qi;
            let row_sims = &sims[qi * n..(qi + 1) * n];
            order.clear();
            order.extend((0..n as u32).filter(|&j| j as usize != q));
            let by_rank = |a: &u32, b: &u32| {
                row_sims[*b as usize]
                    .total_cmp(&row_sims[*a as usize])
                    .then(a.cmp(b))
            };
            order.select_nth_unstable_by(k - 1, by_rank);
            order[..k].sort_unstable_by(by_rank);
            for (slot, &j) in chunk[qi * k..(qi + 1) * k].iter_mut().zip(&order[..k]) {
                *slot = Neighbor {
                    index: j,
                    similarity: row_sims[j as usize].clamp(0.0, 1.0),
                };
            }
        }
    });

    Ok(KnnResult { n, k, neighbors })
}

/// Symmetric, nonnegative sparse affinity graph in CSR form.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseAffinity {
    pub n: usize,
    pub row_offsets: Vec<usize>,
    pub col_indices: Vec<u32>,
    pub weights: Vec<f64>,
    pub k: usize,
    pub gamma: f64,
}

impl SparseAffinity {
    pub fn nnz(&self) -> usize {
        self.col_indices.len()
    }

    /// Column indices and weights of row `i`.
    pub fn row(&self, i: usize) -> (&[u32], &[f64]) {
        let span = self.row_offsets[i]..self.row_offsets[i + 1];
        (&self.col_indices[span.clone()], &self.weights[span])
    }

    /// Row sums (the diagonal of D).
    pub fn degrees(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).1.iter().sum()).collect()
    }

    /// Nodes with empty rows.
    pub fn isolated_nodes(&self) -> Vec<usize> {
        (0..self.n)
            .filter(|&i| self.row_offsets[i] == self.row_offsets[i + 1])
            .collect()
    }

    /// out = M x (row-parallel).
    pub fn matvec(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(out.len(), self.n);
        let offsets = &self.row_offsets;
        let cols = &self.col_indices;
        let weights = &self.weights;
        parallel::for_each_chunk(out, 1, |i, slot| {
            let mut acc = 0.0;
            for idx in offsets[i]..offsets[i + 1] {
                acc += weights[idx] * x[cols[idx] as usize];
            }
            slot[0] = acc;
        });
    }

    /// Sequential matvec into `out` (used inside per-column solves that are
    /// already parallel at the column level).
    pub fn matvec_seq(&self, x: &[f64], out: &mut [f64]) {
        for (i, slot) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for idx in self.row_offsets[i]..self.row_offsets[i + 1] {
                acc += self.weights[idx] * x[self.col_indices[idx] as usize];
            }
            *slot = acc;
        }
    }

    /// Dense n x n copy (small-instance oracles and reports).
    pub fn to_dense(&self) -> Vec<f64> {
        let mut dense = vec![0.0; self.n * self.n];
        for i in 0..self.n {
            let (cols, weights) = self.row(i);
            for (&j, &w) in cols.iter().zip(weights) {
                dense[i * self.n + j as usize] = w;
            }
        }
        dense
    }

    /// Build a CSR graph from undirected edges `(i, j, w)`; each edge is
    /// mirrored, so callers pass every pair once. Entries with w <= 0 are
    /// dropped.
    pub fn from_undirected_edges(
        n: usize,
        edges: impl IntoIterator<Item = (u32, u32, f64)>,
        k: usize,
        gamma: f64,
    ) -> SparseAffinity {
        let mut directed: Vec<(u32, u32, f64)> = Vec::new();
        for (a, b, w) in edges {
            if w <= 0.0 || a == b {
                continue;
            }
            directed.push((a, b, w));
            directed.push((b, a, w));
        }
        directed.sort_unstable_by_key(|&(i, j, _)| (i, j));

        let mut row_offsets = vec![0usize; n + 1];
        let mut col_indices = Vec::with_capacity(directed.len());
        let mut weights = Vec::with_capacity(directed.len());
        for &(i, j, w) in &directed {
            row_offsets[i as usize + 1] += 1;
            col_indices.push(j);
            weights.push(w);
        }
        for i in 0..n {
            row_offsets[i + 1] += row_offsets[i];
        }
        SparseAffinity {
            n,
            row_offsets,
            col_indices,
            weights,
            k,
            gamma,
        }
    }

    /// Write the `LPGR` binary layout: magic, u32 n, u64 nnz, row offsets as
    /// u64 (n+1 entries), column indices as u32, weights as f32. The k and
    /// gamma fields are construction metadata and are not persisted.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = Vec::new();
        out.extend_from_slice(GRAPH_MAGIC);
        out.extend_from_slice(&(self.n as u32).to_le_bytes());
        out.extend_from_slice(&(self.nnz() as u64).to_le_bytes());
        for &o in &self.row_offsets {
            out.extend_from_slice(&(o as u64).to_le_bytes());
        }
        for &c in &self.col_indices {
            out.extend_from_slice(&c.to_le_bytes());
        }
        for &w in &self.weights {
            out.extend_from_slice(&(w as f32).to_le_bytes());
        }
        let mut file = std::fs::File::create(path)?;
        file.write_all(&out)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<SparseAffinity> {
        let bad = |reason: &str| Error::BadFormat {
            what: "graph",
            path: path.to_path_buf(),
            reason: reason.to_owned(),
        };
        let mut file = std::fs::File::open(path)?;
        let mut header = [0u8; 16];
        file.read_exact(&mut header).map_err(|_| bad("truncated header"))?;
        if &header[0..4] != GRAPH_MAGIC {
            return Err(bad("bad magic"));
        }
        let n = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
        let nnz = u64::from_le_bytes(header[8..16].try_into().unwrap()) as usize;

        let mut buf = vec![0u8; (n + 1) * 8 + nnz * 4 + nnz * 4];
        file.read_exact(&mut buf).map_err(|_| bad("truncated body"))?;
        let (off_bytes, rest) = buf.split_at((n + 1) * 8);
        let (col_bytes, w_bytes) = rest.split_at(nnz * 4);
        let row_offsets: Vec<usize> = off_bytes
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().unwrap()) as usize)
            .collect();
        let col_indices: Vec<u32> = col_bytes
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let weights: Vec<f64> = w_bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect();
        if row_offsets.last() != Some(&nnz) {
            return Err(bad("offset/nnz mismatch"));
        }
        Ok(SparseAffinity {
            n,
            row_offsets,
            col_indices,
            weights,
            k: 0,
            gamma: 0.0,
        })
    }
}

/// Turn kNN lists into a symmetric affinity graph with weights sim^gamma.
///
/// Directed weights are symmetrized by the elementwise max; zero-weight
/// entries are dropped from storage.
pub fn build_affinity(knn: &KnnResult, gamma: f64) -> SparseAffinity {
    use std::collections::HashMap;
    let mut pairs: HashMap<(u32, u32), f64> = HashMap::new();
    for i in 0..knn.n {
        for nb in knn.row(i) {
            debug_assert_ne!(nb.index as usize, i, "self-loop from kNN");
            let w = (nb.similarity as f64).powf(gamma);
            if w <= 0.0 {
                continue;
            }
            let key = if (i as u32) < nb.index {
                (i as u32, nb.index)
            } else {
                (nb.index, i as u32)
            };
            let slot = pairs.entry(key).or_insert(0.0);
            if w > *slot {
                *slot = w;
            }
        }
    }
    SparseAffinity::from_undirected_edges(
        knn.n,
        pairs.into_iter().map(|((a, b), w)| (a, b, w)),
        knn.k,
        gamma,
    )
}

/// Symmetric degree normalization S = D^{-1/2} W D^{-1/2}.
///
/// Isolated nodes keep empty rows; the sparsity pattern is preserved exactly.
pub fn normalize_affinity(w: &SparseAffinity) -> SparseAffinity {
    let degrees = w.degrees();
    let inv_sqrt: Vec<f64> = degrees
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 })
        .collect();
    let mut out = w.clone();
    for i in 0..w.n {
        for idx in w.row_offsets[i]..w.row_offsets[i + 1] {
            let j = w.col_indices[idx] as usize;
            let (lo, hi) = if i < j { (i, j) } else { (j, i) };
            // canonical factor order keeps mirrored entries bit-identical
            out.weights[idx] = w.weights[idx] * (inv_sqrt[lo] * inv_sqrt[hi]);
        }
    }
    out
}
