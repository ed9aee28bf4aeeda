//! Constrained dominant sets.
//!
//! For a query-centred affinity matrix `A` the cluster is a local maximizer of
//! `x' (A - mu * G) x` over the standard simplex, where `G` is the identity
//! with a zero at the query. Choosing `mu` above the largest eigenvalue of
//! `A` with the query row and column removed forces the query into the
//! support of every local solution. The maximizer is found with discrete
//! replicator dynamics on a uniformly shifted (nonnegative) payoff matrix,
//! which has the same equilibria on the simplex.

use serde::{Deserialize, Serialize};

use crate::affinity::SubgraphAffinity;
use crate::error::Result;
use crate::matrixio::FusionConfig;
use crate::scalar::Scalar;

const POWER_MAX_ITER: usize = 1000;
const POWER_REL_TOL: f64 = 1e-10;

/// A point on the standard simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MembershipVector<T>(pub Vec<T>);

impl<T: Scalar> MembershipVector<T> {
    pub fn barycenter(m: usize) -> Self {
        let w = T::one() / T::from_usize_lossy(m);
        Self(vec![w; m])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn is_on_simplex(&self, tol: T) -> bool {
        let sum: T = self.0.iter().copied().sum();
        self.0.iter().all(|&v| v >= T::zero()) && (sum - T::one()).abs() <= tol
    }

    pub fn max(&self) -> T {
        self.0.iter().copied().fold(T::neg_infinity(), T::max)
    }

    pub fn min(&self) -> T {
        self.0.iter().copied().fold(T::infinity(), T::min)
    }
}

/// Shifted payoff matrix `A - mu * G + shift`, symmetric and nonnegative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PayoffMatrix<T> {
    pub size: usize,
    pub values: Vec<T>,
    pub shift: T,
    pub mu: T,
    pub query_pos: usize,
}

impl<T: Scalar> PayoffMatrix<T> {
    /// Wraps an arbitrary symmetric nonnegative matrix (no regularization).
    pub fn from_values(size: usize, values: Vec<T>) -> Self {
        assert_eq!(values.len(), size * size);
        Self {
            size,
            values,
            shift: T::zero(),
            mu: T::zero(),
            query_pos: 0,
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.values[i * self.size + j]
    }

    /// `P x`.
    pub fn apply(&self, x: &[T], out: &mut [T]) {
        let m = self.size;
        for (i, o) in out.iter_mut().enumerate().take(m) {
            let row = &self.values[i * m..(i + 1) * m];
            *o = row.iter().zip(x).map(|(&p, &v)| p * v).sum();
        }
    }

    /// `x' P x`.
    pub fn objective(&self, x: &[T]) -> T {
        let mut px = vec![T::zero(); self.size];
        self.apply(x, &mut px);
        x.iter().zip(&px).map(|(&a, &b)| a * b).sum()
    }
}

/// Largest eigenvalue of a symmetric matrix with nonnegative entries, by
/// power iteration on `M + sigma I` (sigma = max absolute row sum) from the
/// normalized all-ones vector. Returns the Rayleigh quotient of `M`.
pub fn largest_eigenvalue<T: Scalar>(m: usize, values: &[T]) -> T {
    if m == 0 {
        return T::zero();
    }
    let sigma = (0..m)
        .map(|i| values[i * m..(i + 1) * m].iter().map(|v| v.abs()).sum::<T>())
        .fold(T::zero(), T::max);
    if sigma == T::zero() {
        return T::zero();
    }
    let mut x = vec![T::one() / T::from_usize_lossy(m).sqrt(); m];
    let mut y = vec![T::zero(); m];
    let mut lambda = T::zero();
    let tol = T::lit(POWER_REL_TOL);
    for it in 0..POWER_MAX_ITER {
        for i in 0..m {
            y[i] = values[i * m..(i + 1) * m].iter().zip(&x).map(|(&a, &b)| a * b).sum();
        }
        // Rayleigh quotient with unit x
        let next: T = x.iter().zip(&y).map(|(&a, &b)| a * b).sum();
        for (yi, &xi) in y.iter_mut().zip(&x) {
            *yi += sigma * xi;
        }
        let norm = y.iter().map(|&v| v * v).sum::<T>().sqrt();
        if norm == T::zero() {
            return next;
        }
        for (xi, &yi) in x.iter_mut().zip(&y) {
            *xi = yi / norm;
        }
        let done = it > 0 && (next - lambda).abs() <= tol * next.abs().max(T::min_positive_value());
        lambda = next;
        if done {
            break;
        }
    }
    lambda
}

/// `lambda_max(A without the query) + mu_epsilon`.
pub fn mu_bound<T: Scalar>(a: &SubgraphAffinity<T>, mu_epsilon: T) -> T {
    let m = a.size();
    if m <= 1 {
        return mu_epsilon;
    }
    let k = m - 1;
    let mut sub = Vec::with_capacity(k * k);
    for i in 1..m {
        for j in 1..m {
            sub.push(a.get(i, j));
        }
    }
    largest_eigenvalue(k, &sub) + mu_epsilon
}

pub fn build_payoff<T: Scalar>(a: &SubgraphAffinity<T>, mu: T) -> PayoffMatrix<T> {
    let m = a.size();
    let mut values = a.weights.clone();
    for i in 1..m {
        values[i * m + i] -= mu;
    }
    let lowest = values.iter().copied().fold(T::infinity(), T::min);
    let shift = if lowest < T::zero() { -lowest } else { T::zero() };
    if shift > T::zero() {
        for v in &mut values {
            *v += shift;
        }
    }
    PayoffMatrix {
        size: m,
        values,
        shift,
        mu,
        query_pos: 0,
    }
}

/// One replicator update `x_i <- x_i (Px)_i / x'Px`, written into `next`.
/// Returns the objective `x'Px` at the *input* point, or `None` when it is
/// zero.
pub fn replicator_step<T: Scalar>(p: &PayoffMatrix<T>, x: &[T], px: &mut [T], next: &mut [T]) -> Option<T> {
    p.apply(x, px);
    let denom: T = x.iter().zip(px.iter()).map(|(&a, &b)| a * b).sum();
    if denom <= T::zero() {
        return None;
    }
    for i in 0..x.len() {
        next[i] = x[i] * px[i] / denom;
    }
    Some(denom)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicatorOutcome<T> {
    pub x: MembershipVector<T>,
    pub iterations: usize,
    pub converged: bool,
}

/// Iterates replicator dynamics until the L1 step falls below `tol` or
/// `max_iter` steps have been taken.
pub fn replicator_solve<T: Scalar>(
    p: &PayoffMatrix<T>,
    x0: &MembershipVector<T>,
    tol: T,
    max_iter: usize,
) -> ReplicatorOutcome<T> {
    if p.size <= 1 {
        return ReplicatorOutcome {
            x: x0.clone(),
            iterations: 0,
            converged: true,
        };
    }
    let mut trace = ReplicatorTrace::new(p, x0.clone());
    let mut converged = false;
    while trace.iterations < max_iter {
        match trace.step() {
            Some(delta) if delta < tol => {
                converged = true;
                break;
            }
            Some(_) => {}
            None => {
                return ReplicatorOutcome {
                    x: x0.clone(),
                    iterations: trace.iterations,
                    converged: false,
                }
            }
        }
    }
    ReplicatorOutcome {
        iterations: trace.iterations,
        x: trace.x,
        converged,
    }
}

/// Step-by-step replicator iteration, exposing every iterate.
#[derive(Debug, Clone)]
pub struct ReplicatorTrace<'a, T> {
    payoff: &'a PayoffMatrix<T>,
    pub x: MembershipVector<T>,
    pub iterations: usize,
    px: Vec<T>,
    next: Vec<T>,
}

impl<'a, T: Scalar> ReplicatorTrace<'a, T> {
    pub fn new(payoff: &'a PayoffMatrix<T>, x0: MembershipVector<T>) -> Self {
        let m = payoff.size;
        Self {
            payoff,
            x: x0,
            iterations: 0,
            px: vec![T::zero(); m],
            next: vec![T::zero(); m],
        }
    }

    /// Advances one step; returns the L1 change, or `None` at a zero
    /// objective (the state is left untouched).
    pub fn step(&mut self) -> Option<T> {
        replicator_step(self.payoff, &self.x.0, &mut self.px, &mut self.next)?;
        let delta = self.x.0.iter().zip(&self.next).map(|(&a, &b)| (a - b).abs()).sum();
        std::mem::swap(&mut self.x.0, &mut self.next);
        self.iterations += 1;
        Some(delta)
    }
}

/// `Lambda * (1 - max(x) + min(x)) / len(x)`, min and max over all entries.
pub fn zeta_threshold<T: Scalar>(x: &MembershipVector<T>, lambda_scale: T) -> T {
    let len = T::from_usize_lossy(x.len());
    lambda_scale * (T::one() - x.max() + x.min()) / len
}

/// Cluster extracted from one feature's subgraph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstrainedCluster<T> {
    pub query: usize,
    /// Subgraph nodes, query first.
    pub nodes: Vec<usize>,
    /// Converged membership of every node.
    pub membership: MembershipVector<T>,
    /// Nodes with membership above `support_eps`, in node order.
    pub support: Vec<usize>,
    pub scores: Vec<T>,
    pub zeta: T,
    /// Support nodes scoring at least `zeta`; always contains the query.
    pub inliers: Vec<usize>,
    pub inlier_scores: Vec<T>,
    /// Every other node.
    pub outliers: Vec<usize>,
    pub mu: T,
    pub iterations: usize,
    pub converged: bool,
}

impl<T: Scalar> ConstrainedCluster<T> {
    pub fn cardinality(&self) -> usize {
        self.inliers.len()
    }

    pub fn is_singleton(&self) -> bool {
        self.inliers.len() == 1
    }
}

/// Runs the whole extraction on a subgraph whose node 0 is the query.
pub fn constrained_cluster<T: Scalar>(a: &SubgraphAffinity<T>, cfg: &FusionConfig) -> Result<ConstrainedCluster<T>> {
    let m = a.size();
    let mu = mu_bound(a, T::lit(cfg.mu_epsilon));
    let payoff = build_payoff(a, mu);
    let outcome = replicator_solve(
        &payoff,
        &MembershipVector::barycenter(m),
        T::lit(cfg.rd_tol),
        cfg.rd_max_iter,
    );
    let x = outcome.x;
    let zeta = zeta_threshold(&x, T::lit(cfg.lambda_scale));
    let support_eps = T::lit(cfg.support_eps);
    // equal memberships can land on zeta up to rounding
    let cutoff = zeta - zeta * T::epsilon().sqrt();

    let mut support = Vec::new();
    let mut scores = Vec::new();
    let mut inliers = Vec::new();
    let mut inlier_scores = Vec::new();
    let mut outliers = Vec::new();
    for (pos, (&id, &score)) in a.node_ids.iter().zip(&x.0).enumerate() {
        let in_support = score > support_eps;
        if in_support {
            support.push(id);
            scores.push(score);
        }
        if pos == 0 || (in_support && score >= cutoff) {
            inliers.push(id);
            inlier_scores.push(score);
        } else {
            outliers.push(id);
        }
    }
    debug_assert!(m <= 1 || x.0[0] > support_eps, "query left the support");

    Ok(ConstrainedCluster {
        query: a.query(),
        nodes: a.node_ids.clone(),
        membership: x,
        support,
        scores,
        zeta,
        inliers,
        inlier_scores,
        outliers,
        mu,
        iterations: outcome.iterations,
        converged: outcome.converged,
    })
}
