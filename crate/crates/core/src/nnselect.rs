//! Ranked lists and incremental nearest-neighbor selection.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrixio::FeatureMatrix;
use crate::scalar::Scalar;

/// Items other than the query, by descending score then ascending id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedList<T> {
    pub query: usize,
    pub entries: Vec<(usize, T)>,
}

impl<T: Scalar> RankedList<T> {
    /// Sorts `(id, score)` pairs into ranking order.
    pub fn from_scores(query: usize, mut entries: Vec<(usize, T)>) -> Self {
        entries.sort_by(|a, b| descending(a, b));
        Self { query, entries }
    }

    pub fn ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|&(id, _)| id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub(crate) fn descending<T: Scalar>(a: &(usize, T), b: &(usize, T)) -> Ordering {
    b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal).then(a.0.cmp(&b.0))
}

/// Prefix of a [`RankedList`] admitted as the query's neighbors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeighborSet {
    pub query: usize,
    pub members: Vec<usize>,
}

impl NeighborSet {
    pub fn k(&self) -> usize {
        self.members.len()
    }
}

/// Ranks every item except `q` by `s[q][.]`.
pub fn rank<T: Scalar>(s: &FeatureMatrix<T>, q: usize) -> Result<RankedList<T>> {
    let n = s.n();
    if q >= n {
        return Err(Error::OutOfRange { id: q, n });
    }
    let entries = s
        .row(q)
        .iter()
        .enumerate()
        .filter(|&(id, _)| id != q)
        .map(|(id, &v)| (id, v))
        .collect();
    Ok(RankedList::from_scores(q, entries))
}

/// Admits the top neighbor, then keeps admitting while the ratio of
/// consecutive scores exceeds `npc`, up to `k_max`. Zero scores are never
/// admitted, so a list whose top score is zero yields an empty set.
pub fn incremental_knn<T: Scalar>(r: &RankedList<T>, npc: f64, k_max: usize) -> Result<NeighborSet> {
    if r.is_empty() {
        return Err(Error::EmptyRanking);
    }
    let npc = T::lit(npc);
    let mut members = Vec::new();
    let mut prev: Option<T> = None;
    for &(id, score) in r.entries.iter().take(k_max) {
        if score <= T::zero() {
            break;
        }
        if let Some(p) = prev {
            if score / p <= npc {
                break;
            }
        }
        members.push(id);
        prev = Some(score);
    }
    Ok(NeighborSet {
        query: r.query,
        members,
    })
}

/// First `k` positive-score entries, with no ratio test.
pub fn fixed_knn<T: Scalar>(r: &RankedList<T>, k: usize) -> Result<NeighborSet> {
    if r.is_empty() {
        return Err(Error::EmptyRanking);
    }
    let members = r
        .entries
        .iter()
        .take(k)
        .take_while(|&&(_, s)| s > T::zero())
        .map(|&(id, _)| id)
        .collect();
    Ok(NeighborSet {
        query: r.query,
        members,
    })
}
