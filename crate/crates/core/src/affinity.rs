//! Distance-to-similarity conversion, column-wise minimax normalization and
//! extraction of query-centred subgraphs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrixio::{FeatureMatrix, MatrixKind};
use crate::scalar::Scalar;

/// Affinity matrix of a query-centred subgraph. The query is node 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubgraphAffinity<T> {
    pub node_ids: Vec<usize>,
    /// Row-major `m x m`, symmetric, zero diagonal, nonnegative.
    pub weights: Vec<T>,
}

impl<T: Scalar> SubgraphAffinity<T> {
    /// Builds from a dense row-major buffer, zeroing the diagonal and
    /// symmetrizing by averaging.
    pub fn from_dense(node_ids: Vec<usize>, dense: &[T]) -> Self {
        let m = node_ids.len();
        assert_eq!(dense.len(), m * m, "dense buffer must be m x m");
        let half = T::lit(0.5);
        let mut weights = vec![T::zero(); m * m];
        for i in 0..m {
            for j in (i + 1)..m {
                let w = (dense[i * m + j] + dense[j * m + i]) * half;
                weights[i * m + j] = w;
                weights[j * m + i] = w;
            }
        }
        Self { node_ids, weights }
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.node_ids.len()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.weights[i * self.size() + j]
    }

    pub fn query(&self) -> usize {
        self.node_ids[0]
    }
}

/// `s_ij = exp(-d_ij / mean_offdiag(d))`, `s_ii = 1`.
pub fn similarity_from_distance<T: Scalar>(d: &FeatureMatrix<T>) -> Result<FeatureMatrix<T>> {
    if d.kind() != MatrixKind::Distance {
        return Err(Error::WrongKind {
            expected: "distance",
            found: d.kind().as_str(),
        });
    }
    let n = d.n();
    let mut sum = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let v = d.get(i, j);
            if v < T::zero() {
                return Err(Error::NegativeDistance { row: i, col: j });
            }
            if i != j {
                sum += v.as_f64();
            }
        }
    }
    let pairs = n * n.saturating_sub(1);
    if pairs == 0 || sum == 0.0 {
        return Err(Error::DegenerateDistances);
    }
    let scale = T::lit(sum / pairs as f64);
    FeatureMatrix::from_fn(n, MatrixKind::Similarity, d.name(), |i, j| {
        if i == j {
            T::one()
        } else {
            (-d.get(i, j) / scale).exp()
        }
    })
}

/// Rescales each column to `[0, 1]` by its own min and max, then
/// symmetrizes with `(A + A^T) / 2`. Constant columns become zeros.
pub fn minimax_normalize<T: Scalar>(a: &FeatureMatrix<T>) -> FeatureMatrix<T> {
    let n = a.n();
    let mut lo = vec![T::infinity(); n];
    let mut hi = vec![T::neg_infinity(); n];
    for i in 0..n {
        for (j, &v) in a.row(i).iter().enumerate() {
            lo[j] = lo[j].min(v);
            hi[j] = hi[j].max(v);
        }
    }
    let mut scaled = a.values().to_vec();
    for i in 0..n {
        for j in 0..n {
            let span = hi[j] - lo[j];
            let cell = &mut scaled[i * n + j];
            *cell = if span > T::zero() {
                (*cell - lo[j]) / span
            } else {
                T::zero()
            };
        }
    }
    let half = T::lit(0.5);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = (scaled[i * n + j] + scaled[j * n + i]) * half;
            scaled[i * n + j] = v;
            scaled[j * n + i] = v;
        }
    }
    FeatureMatrix::new(n, MatrixKind::Similarity, scaled, a.name()).expect("normalization keeps values finite")
}

/// Normalized similarity for any input: distances go through the kernel
/// first, then every matrix is minimax-normalized.
pub fn prepare<T: Scalar>(m: &FeatureMatrix<T>) -> Result<FeatureMatrix<T>> {
    match m.kind() {
        MatrixKind::Distance => Ok(minimax_normalize(&similarity_from_distance(m)?)),
        MatrixKind::Similarity => Ok(minimax_normalize(m)),
    }
}

/// Restricts `s` to `nodes` (query first).
pub fn build_subgraph<T: Scalar>(s: &FeatureMatrix<T>, nodes: &[usize]) -> Result<SubgraphAffinity<T>> {
    let n = s.n();
    for (k, &id) in nodes.iter().enumerate() {
        if id >= n {
            return Err(Error::OutOfRange { id, n });
        }
        if nodes[..k].contains(&id) {
            return Err(Error::DuplicateNode(id));
        }
    }
    let m = nodes.len();
    let mut dense = vec![T::zero(); m * m];
    for (a, &i) in nodes.iter().enumerate() {
        for (b, &j) in nodes.iter().enumerate() {
            dense[a * m + b] = s.get(i, j);
        }
    }
    Ok(SubgraphAffinity::from_dense(nodes.to_vec(), &dense))
}
