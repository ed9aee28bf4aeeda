//! Positive-impact weights from cluster membership entropy and cardinality.

use serde::{Deserialize, Serialize};

use crate::cds::ConstrainedCluster;
use crate::scalar::Scalar;

/// Per-feature terms behind one weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureWeight<T> {
    /// Normalized entropy of the softmaxed inlier scores, in `[0, 1]`.
    pub entropy: T,
    /// `1 - entropy`.
    pub epsilon: T,
    pub cardinality: usize,
    /// `cardinality / sum of cardinalities`.
    pub card_share: T,
    /// `epsilon + card_share`.
    pub vartheta: T,
    pub weight: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiwVector<T> {
    pub weights: Vec<T>,
    pub features: Vec<FeatureWeight<T>>,
}

impl<T: Scalar> PiwVector<T> {
    pub fn uniform(z: usize) -> Self {
        let w = T::one() / T::from_usize_lossy(z);
        Self {
            weights: vec![w; z],
            features: Vec::new(),
        }
    }
}

/// Shannon entropy of `softmax(scores)` divided by `ln K`; zero for a single
/// score.
pub fn normalized_entropy<T: Scalar>(scores: &[T]) -> T {
    let k = scores.len();
    if k <= 1 {
        return T::zero();
    }
    let top = scores.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = scores.iter().map(|&s| (s - top).exp()).collect();
    let total: T = exps.iter().copied().sum();
    let h: T = exps
        .iter()
        .map(|&e| {
            let p = e / total;
            if p > T::zero() {
                -p * p.ln()
            } else {
                T::zero()
            }
        })
        .sum();
    (h / T::from_usize_lossy(k).ln()).max(T::zero()).min(T::one())
}

/// Weights from `(1 - H) + K / sum K`, normalized to sum to one.
pub fn compute_piw<T: Scalar>(clusters: &[ConstrainedCluster<T>]) -> PiwVector<T> {
    let terms: Vec<(T, usize)> = clusters
        .iter()
        .map(|c| (normalized_entropy(&c.inlier_scores), c.cardinality()))
        .collect();
    piw_from_terms(&terms)
}

/// Same as [`compute_piw`] from `(normalized entropy, cardinality)` pairs.
pub fn piw_from_terms<T: Scalar>(terms: &[(T, usize)]) -> PiwVector<T> {
    let total_card: usize = terms.iter().map(|&(_, k)| k).sum();
    let total_card = T::from_usize_lossy(total_card.max(1));
    let mut features: Vec<FeatureWeight<T>> = terms
        .iter()
        .map(|&(entropy, cardinality)| {
            let epsilon = T::one() - entropy;
            let card_share = T::from_usize_lossy(cardinality) / total_card;
            FeatureWeight {
                entropy,
                epsilon,
                cardinality,
                card_share,
                vartheta: epsilon + card_share,
                weight: T::zero(),
            }
        })
        .collect();
    let varthetas: Vec<T> = features.iter().map(|f| f.vartheta).collect();
    for (f, w) in features.iter_mut().zip(weights_from_vartheta(&varthetas)) {
        f.weight = w;
    }
    PiwVector {
        weights: features.iter().map(|f| f.weight).collect(),
        features,
    }
}

/// `vartheta_i / sum vartheta`.
pub fn weights_from_vartheta<T: Scalar>(varthetas: &[T]) -> Vec<T> {
    let denom: T = varthetas.iter().copied().sum();
    varthetas.iter().map(|&v| v / denom).collect()
}
