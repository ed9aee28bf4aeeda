//! Final scoring and the per-query retrieval pipeline.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::affinity::build_subgraph;
use crate::cds::{constrained_cluster, ConstrainedCluster};
use crate::error::{Error, Result};
use crate::matrixio::{FeatureMatrix, FusionConfig};
use crate::nnselect::{fixed_knn, incremental_knn, rank, NeighborSet, RankedList};
use crate::piw::{compute_piw, PiwVector};
use crate::scalar::Scalar;
use crate::voting::{build_phi_sets, build_supersets, vote_scores, Supersets, VoteTally};

/// Per-feature cluster diagnostics kept in a result record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary<T> {
    pub feature: String,
    pub neighbors: Vec<usize>,
    pub inliers: Vec<usize>,
    pub inlier_scores: Vec<T>,
    pub outliers: Vec<usize>,
    pub zeta: T,
    pub mu: T,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionResult<T> {
    pub query: usize,
    pub ranking: RankedList<T>,
    /// Number of distinct items over all neighbor sets.
    pub pool_size: usize,
    pub piw: PiwVector<T>,
    pub clusters: Vec<ClusterSummary<T>>,
    /// One tally per pool candidate, ascending id.
    pub votes: Vec<VoteTally<T>>,
    pub config: FusionConfig,
}

/// `prod_i sims_i ^ piw_i` with `0^0 = 1`.
pub fn weighted_geometric<T: Scalar>(sims: &[T], piw: &[T]) -> T {
    debug_assert_eq!(sims.len(), piw.len());
    sims.iter()
        .zip(piw)
        .map(|(&s, &w)| if w == T::zero() { T::one() } else { s.powf(w) })
        .fold(T::one(), |acc, f| acc * f)
}

/// `lambda * n_s + (1 - lambda) * (v1 + v2 + v3)`.
pub fn final_similarity<T: Scalar>(n_s: T, votes: (T, T, T), lambda_mix: T) -> T {
    lambda_mix * n_s + (T::one() - lambda_mix) * (votes.0 + votes.1 + votes.2)
}

/// `(1 / z) prod_i sims_i`.
pub fn naive_fusion<T: Scalar>(sims: &[T]) -> T {
    let prod = sims.iter().fold(T::one(), |acc, &s| acc * s);
    prod / T::from_usize_lossy(sims.len())
}

fn check_features<T: Scalar>(q: usize, features: &[FeatureMatrix<T>]) -> Result<usize> {
    let first = features
        .first()
        .ok_or_else(|| Error::DimensionMismatch("no feature matrices".into()))?;
    let n = first.n();
    if let Some(bad) = features.iter().find(|f| f.n() != n) {
        return Err(Error::DimensionMismatch(format!(
            "{} has n = {}, {} has n = {}",
            first.name(),
            n,
            bad.name(),
            bad.n()
        )));
    }
    if q >= n {
        return Err(Error::OutOfRange { id: q, n });
    }
    Ok(n)
}

/// Neighbor set of `q` under one normalized similarity matrix.
pub fn neighbor_set<T: Scalar>(s: &FeatureMatrix<T>, q: usize, cfg: &FusionConfig) -> Result<NeighborSet> {
    let ranked = rank(s, q)?;
    if ranked.is_empty() {
        return Ok(NeighborSet {
            query: q,
            members: Vec::new(),
        });
    }
    match cfg.fixed_k {
        Some(k) => fixed_knn(&ranked, k),
        None => incremental_knn(&ranked, cfg.npc, cfg.k_max),
    }
}

/// Neighbor set and constrained cluster of `q` under one feature.
pub fn feature_cluster<T: Scalar>(
    s: &FeatureMatrix<T>,
    q: usize,
    cfg: &FusionConfig,
) -> Result<(NeighborSet, ConstrainedCluster<T>)> {
    let nn = neighbor_set(s, q, cfg)?;
    let mut nodes = Vec::with_capacity(nn.k() + 1);
    nodes.push(q);
    nodes.extend_from_slice(&nn.members);
    let sub = build_subgraph(s, &nodes)?;
    let cluster = constrained_cluster(&sub, cfg)?;
    Ok((nn, cluster))
}

/// Fuses `z` normalized similarity matrices for query `q`.
///
/// Candidates are the union of the per-feature neighbor sets. With
/// `full_ranking` every other item is ranked too, scored by the same rule
/// with zero votes.
pub fn retrieve<T: Scalar>(q: usize, features: &[FeatureMatrix<T>], cfg: &FusionConfig) -> Result<FusionResult<T>> {
    let n = check_features(q, features)?;
    let z = features.len();

    let mut nn_sets = Vec::with_capacity(z);
    let mut clusters = Vec::with_capacity(z);
    for s in features {
        let (nn, cluster) = feature_cluster(s, q, cfg)?;
        nn_sets.push(nn.members);
        clusters.push(cluster);
    }
    let piw = compute_piw(&clusters);

    let inlier_sets: Vec<&[usize]> = clusters.iter().map(|c| c.inliers.as_slice()).collect();
    let supersets = if z >= 2 {
        build_supersets(&build_phi_sets(&nn_sets)?, &inlier_sets)
    } else {
        Supersets {
            omega: crate::voting::multiset_union(inlier_sets.iter().copied()),
            ..Default::default()
        }
    };
    let (eta, theta, iota) = cfg.vote_divisors(z);
    let (eta, theta, iota) = (T::lit(eta), T::lit(theta), T::lit(iota));
    let lambda = T::lit(cfg.lambda_mix);

    let pool: BTreeSet<usize> = nn_sets.iter().flatten().copied().collect();
    let mut sims = vec![T::zero(); z];
    let mut n_s_of = |id: usize| {
        for (slot, s) in sims.iter_mut().zip(features) {
            *slot = s.get(q, id);
        }
        weighted_geometric(&sims, &piw.weights)
    };

    let mut votes = Vec::with_capacity(pool.len());
    let mut entries = Vec::with_capacity(if cfg.full_ranking { n - 1 } else { pool.len() });
    for &id in &pool {
        let tally = vote_scores(id, &supersets, eta, theta, iota);
        entries.push((id, final_similarity(n_s_of(id), tally.votes, lambda)));
        votes.push(tally);
    }
    if cfg.full_ranking {
        let zero = (T::zero(), T::zero(), T::zero());
        for id in (0..n).filter(|&id| id != q && !pool.contains(&id)) {
            entries.push((id, final_similarity(n_s_of(id), zero, lambda)));
        }
    }

    let clusters = clusters
        .into_iter()
        .zip(nn_sets)
        .zip(features)
        .map(|((c, neighbors), f)| ClusterSummary {
            feature: f.name().to_string(),
            neighbors,
            inliers: c.inliers,
            inlier_scores: c.inlier_scores,
            outliers: c.outliers,
            zeta: c.zeta,
            mu: c.mu,
            iterations: c.iterations,
            converged: c.converged,
        })
        .collect();

    Ok(FusionResult {
        query: q,
        ranking: RankedList::from_scores(q, entries),
        pool_size: pool.len(),
        piw,
        clusters,
        votes,
        config: cfg.clone(),
    })
}

/// Runs [`retrieve`] for every query; output order follows `queries`
/// regardless of scheduling.
pub fn retrieve_batch<T: Scalar>(
    queries: &[usize],
    features: &[FeatureMatrix<T>],
    cfg: &FusionConfig,
) -> Result<Vec<FusionResult<T>>> {
    queries.par_iter().map(|&q| retrieve(q, features, cfg)).collect()
}

/// Uniform-weight product baseline over every item.
pub fn naive_ranking<T: Scalar>(q: usize, features: &[FeatureMatrix<T>]) -> Result<RankedList<T>> {
    let n = check_features(q, features)?;
    let mut sims = vec![T::zero(); features.len()];
    let entries = (0..n)
        .filter(|&id| id != q)
        .map(|id| {
            for (slot, s) in sims.iter_mut().zip(features) {
                *slot = s.get(q, id);
            }
            (id, naive_fusion(&sims))
        })
        .collect();
    Ok(RankedList::from_scores(q, entries))
}
