//! Brute-force references for tests: exhaustive equilibrium enumeration of a
//! payoff matrix over the simplex, a first-order Nash predicate, and a
//! random-permutation baseline for retrieval metrics.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cds::{MembershipVector, PayoffMatrix};
use crate::error::Result;
use crate::evalmetrics::{score_query, Metric};
use crate::matrixio::GroundTruth;
use crate::scalar::Scalar;

pub const MAX_ENUMERATION_SIZE: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct Equilibrium<T> {
    pub x: MembershipVector<T>,
    pub objective: T,
    /// Positions with `x > 0` as solved for.
    pub support: Vec<usize>,
}

/// True iff `(Px)_i` equals `x'Px` within `tol` on the support
/// (`x_i > support_eps`) and does not exceed it by more than `tol` elsewhere.
pub fn check_nash<T: Scalar>(p: &PayoffMatrix<T>, x: &MembershipVector<T>, tol: T, support_eps: T) -> bool {
    let mut px = vec![T::zero(); p.size];
    p.apply(&x.0, &mut px);
    let obj: T = x.0.iter().zip(&px).map(|(&a, &b)| a * b).sum();
    x.0.iter().zip(&px).all(|(&xi, &pi)| {
        if xi > support_eps {
            (pi - obj).abs() <= tol
        } else {
            pi <= obj + tol
        }
    })
}

/// Every equilibrium whose support contains `query_pos`.
///
/// For each such support `S` the equal-payoff system `(P_SS x_S)_i = v`,
/// `sum x_S = 1` is solved by Gaussian elimination; solutions that are
/// nonnegative on `S` and not beaten off `S` are kept. Singular systems are
/// skipped.
pub fn enumerate_equilibria<T: Scalar>(p: &PayoffMatrix<T>, query_pos: usize) -> Vec<Equilibrium<T>> {
    let m = p.size;
    assert!(
        (1..=MAX_ENUMERATION_SIZE).contains(&m),
        "enumeration limited to m <= {MAX_ENUMERATION_SIZE}"
    );
    assert!(query_pos < m);
    let neg_tol = T::lit(1e-12);
    let slack = T::lit(1e-9);
    let mut found = Vec::new();
    for mask in 1u32..(1 << m) {
        if mask & (1 << query_pos) == 0 {
            continue;
        }
        let support: Vec<usize> = (0..m).filter(|&i| mask & (1 << i) != 0).collect();
        let Some((xs, _v)) = solve_equal_payoff(p, &support) else {
            continue;
        };
        if xs.iter().any(|&v| v < -neg_tol) {
            continue;
        }
        let mut x = vec![T::zero(); m];
        for (&i, &v) in support.iter().zip(&xs) {
            x[i] = v.max(T::zero());
        }
        let mut px = vec![T::zero(); m];
        p.apply(&x, &mut px);
        let obj: T = x.iter().zip(&px).map(|(&a, &b)| a * b).sum();
        let beaten = (0..m).any(|j| mask & (1 << j) == 0 && px[j] > obj + slack);
        if beaten {
            continue;
        }
        found.push(Equilibrium {
            x: MembershipVector(x),
            objective: obj,
            support,
        });
    }
    found
}

fn solve_equal_payoff<T: Scalar>(p: &PayoffMatrix<T>, support: &[usize]) -> Option<(Vec<T>, T)> {
    let k = support.len();
    let dim = k + 1;
    // unknowns: x_S then v
    let mut a = vec![T::zero(); dim * (dim + 1)];
    let w = dim + 1;
    for (r, &i) in support.iter().enumerate() {
        for (c, &j) in support.iter().enumerate() {
            a[r * w + c] = p.get(i, j);
        }
        a[r * w + k] = -T::one();
    }
    for c in 0..k {
        a[k * w + c] = T::one();
    }
    a[k * w + dim] = T::one();

    let scale = a.iter().fold(T::zero(), |acc, v| acc.max(v.abs()));
    let tiny = scale * T::lit(1e-12);
    for col in 0..dim {
        let pivot = (col..dim).max_by(|&r1, &r2| a[r1 * w + col].abs().partial_cmp(&a[r2 * w + col].abs()).unwrap())?;
        if a[pivot * w + col].abs() <= tiny {
            return None;
        }
        if pivot != col {
            for c in 0..w {
                a.swap(col * w + c, pivot * w + c);
            }
        }
        for r in 0..dim {
            if r == col {
                continue;
            }
            let f = a[r * w + col] / a[col * w + col];
            if f != T::zero() {
                for c in col..w {
                    let delta = f * a[col * w + c];
                    a[r * w + c] -= delta;
                }
            }
        }
    }
    let sol: Vec<T> = (0..dim).map(|r| a[r * w + dim] / a[r * w + r]).collect();
    Some((sol[..k].to_vec(), sol[k]))
}

/// Mean metric value over `trials` uniformly random rankings per query.
pub fn permutation_baseline(truth: &GroundTruth, n: usize, metric: Metric, trials: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = 0.0;
    let mut count = 0usize;
    for q in truth.queries() {
        let relevant = truth.get(q).expect("query listed");
        let mut order: Vec<usize> = (0..n).filter(|&i| i != q).collect();
        for _ in 0..trials {
            order.shuffle(&mut rng);
            total += score_query(metric, q, &order, relevant)?;
            count += 1;
        }
    }
    Ok(total / count.max(1) as f64)
}
