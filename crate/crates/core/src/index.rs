//! Exact cosine top-k search with per-node max aggregation.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use crate::embedding::{l2_norm, EmbeddingRecord, FieldTag};
use crate::taxonomy::EntityKind;

/// Tolerance on the unit-norm check behind [`VectorIndex::is_normalized`].
pub const UNIT_NORM_TOLERANCE: f64 = 1e-5;

/// Ranking scores are rounded to this grid so that mathematically equal
/// cosines (parallel vectors, duplicated texts) tie exactly and fall back to
/// the node-id order instead of rounding noise.
pub const SCORE_RESOLUTION: f64 = 1e-12;

/// Rounds a cosine to [`SCORE_RESOLUTION`] and clamps it to `[-1, 1]`.
pub fn quantize_score(score: f64) -> f64 {
    // `+ 0.0` folds -0.0 into 0.0 so total ordering sees one zero
    (libm::round(score / SCORE_RESOLUTION) * SCORE_RESOLUTION).clamp(-1.0, 1.0) + 0.0
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IndexError {
    Empty,
    DimensionMismatch { expected: usize, found: usize },
    ZeroNorm,
    MixedKinds { expected: EntityKind, found: EntityKind },
    InvalidK,
}

impl fmt::Display for IndexError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IndexError::Empty => f.write_str("cannot build an index from zero records"),
            IndexError::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            IndexError::ZeroNorm => f.write_str("zero-norm vector"),
            IndexError::MixedKinds { expected, found } => {
                write!(f, "index for {expected} received a {found} record")
            }
            IndexError::InvalidK => f.write_str("k must be at least 1"),
        }
    }
}

impl core::error::Error for IndexError {}

fn dot(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| f64::from(x) * f64::from(y)).sum()
}

/// `dot(u, v) / (‖u‖ ‖v‖)`, computed in `f64`.
pub fn cosine(u: &[f32], v: &[f32]) -> Result<f64, IndexError> {
    if u.len() != v.len() {
        return Err(IndexError::DimensionMismatch {
            expected: u.len(),
            found: v.len(),
        });
    }
    let (nu, nv) = (l2_norm(u), l2_norm(v));
    if nu == 0.0 || nv == 0.0 {
        return Err(IndexError::ZeroNorm);
    }
    Ok(dot(u, v) / (nu * nv))
}

/// A node with its best score over all of its field vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedCandidate {
    pub node_id: String,
    pub score: f64,
    pub best_field: FieldTag,
}

/// Ranking order: score descending, node id ascending.
pub fn rank_order(a: &RankedCandidate, b: &RankedCandidate) -> Ordering {
    b.score.total_cmp(&a.score).then_with(|| a.node_id.cmp(&b.node_id))
}

#[derive(Debug, Clone)]
pub struct VectorIndex {
    kind: EntityKind,
    dim: usize,
    /// Row-major `rows × dim`.
    data: Vec<f32>,
    norms: Vec<f64>,
    row_node: Vec<usize>,
    row_field: Vec<FieldTag>,
    /// Sorted ascending, so node index order is tie-break order.
    node_ids: Vec<String>,
    normalized: bool,
}

impl VectorIndex {
    pub fn build(records: &[EmbeddingRecord]) -> Result<Self, IndexError> {
        let first = records.first().ok_or(IndexError::Empty)?;
        let kind = first.kind;
        let dim = first.vector.dim();

        let mut node_ids: Vec<String> = records.iter().map(|r| r.node_id.clone()).collect();
        node_ids.sort_unstable();
        node_ids.dedup();

        let mut data = Vec::with_capacity(records.len() * dim);
        let mut norms = Vec::with_capacity(records.len());
        let mut row_node = Vec::with_capacity(records.len());
        let mut row_field = Vec::with_capacity(records.len());
        let mut normalized = true;
        for r in records {
            if r.kind != kind {
                return Err(IndexError::MixedKinds {
                    expected: kind,
                    found: r.kind,
                });
            }
            let values = r.vector.as_slice();
            if values.len() != dim {
                return Err(IndexError::DimensionMismatch {
                    expected: dim,
                    found: values.len(),
                });
            }
            let norm = l2_norm(values);
            if norm == 0.0 {
                return Err(IndexError::ZeroNorm);
            }
            normalized &= (norm - 1.0).abs() <= UNIT_NORM_TOLERANCE;
            data.extend_from_slice(values);
            norms.push(norm);
            row_node.push(node_ids.binary_search(&r.node_id).expect("id collected above"));
            row_field.push(r.field);
        }
        Ok(VectorIndex {
            kind,
            dim,
            data,
            norms,
            row_node,
            row_field,
            node_ids,
            normalized,
        })
    }

    pub fn kind(&self) -> EntityKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> usize {
        self.row_node.len()
    }

    pub fn node_count(&self) -> usize {
        self.node_ids.len()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Bytes held by the vector matrix.
    pub fn matrix_bytes(&self) -> usize {
        self.data.len() * core::mem::size_of::<f32>()
    }

    /// The `k` best nodes for `query`. Each node scores the maximum cosine
    /// over its rows (see [`quantize_score`]); ties break on ascending node
    /// id.
    pub fn query_top_k(&self, query: &[f32], k: usize) -> Result<Vec<RankedCandidate>, IndexError> {
        if k == 0 {
            return Err(IndexError::InvalidK);
        }
        if query.len() != self.dim {
            return Err(IndexError::DimensionMismatch {
                expected: self.dim,
                found: query.len(),
            });
        }
        let query_norm = l2_norm(query);
        if query_norm == 0.0 {
            return Err(IndexError::ZeroNorm);
        }

        let mut best = vec![f64::NEG_INFINITY; self.node_ids.len()];
        let mut best_row = vec![usize::MAX; self.node_ids.len()];
        for (row, values) in self.data.chunks_exact(self.dim).enumerate() {
            let score = quantize_score(dot(query, values) / (self.norms[row] * query_norm));
            let node = self.row_node[row];
            if score > best[node] {
                best[node] = score;
                best_row[node] = row;
            }
        }

        let by_rank = |&a: &usize, &b: &usize| best[b].total_cmp(&best[a]).then(a.cmp(&b));
        let mut order: Vec<usize> = (0..self.node_ids.len()).collect();
        if k < order.len() {
            order.select_nth_unstable_by(k - 1, by_rank);
            order.truncate(k);
        }
        order.sort_unstable_by(by_rank);
        Ok(order
            .into_iter()
            .map(|node| RankedCandidate {
                node_id: self.node_ids[node].clone(),
                score: best[node],
                best_field: self.row_field[best_row[node]],
            })
            .collect())
    }
}
