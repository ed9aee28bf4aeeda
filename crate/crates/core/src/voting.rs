//! Count-based voting over neighbor sets and cluster inlier sets.
//!
//! With `z` features, one intersection set is built for every choice of
//! `z - 1` neighbor sets. `varpi` is the multiset union of those
//! intersections, `omega` the multiset union of the cluster inlier sets and
//! `kappa` the plain intersection of all the intersection sets.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub type Multiset = BTreeMap<usize, usize>;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Supersets {
    pub varpi: Multiset,
    pub omega: Multiset,
    pub kappa: BTreeSet<usize>,
}

impl Supersets {
    pub fn counts(&self, id: usize) -> (usize, usize, usize) {
        (
            self.varpi.get(&id).copied().unwrap_or(0),
            self.omega.get(&id).copied().unwrap_or(0),
            usize::from(self.kappa.contains(&id)),
        )
    }
}

/// Raw counts and scaled votes for one candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoteTally<T> {
    pub candidate: usize,
    pub counts: (usize, usize, usize),
    pub votes: (T, T, T),
}

impl<T: Scalar> VoteTally<T> {
    pub fn total(&self) -> T {
        self.votes.0 + self.votes.1 + self.votes.2
    }
}

/// Intersections of every `(z - 1)`-subset of the neighbor sets, in
/// lexicographic order of the chosen subsets.
pub fn build_phi_sets<S: AsRef<[usize]>>(nn_sets: &[S]) -> Result<Vec<BTreeSet<usize>>> {
    let z = nn_sets.len();
    if z < 2 {
        return Err(Error::TooFewFeatures(z));
    }
    let sets: Vec<BTreeSet<usize>> = nn_sets.iter().map(|s| s.as_ref().iter().copied().collect()).collect();
    // leaving out the last set first yields lexicographic subset order
    Ok((0..z)
        .rev()
        .map(|skip| {
            let mut chosen = sets.iter().enumerate().filter(|&(i, _)| i != skip).map(|(_, s)| s);
            let first = chosen.next().cloned().unwrap_or_default();
            chosen.fold(first, |acc, s| acc.intersection(s).copied().collect())
        })
        .collect())
}

pub fn multiset_union<'a, I>(sets: I) -> Multiset
where
    I: IntoIterator<Item = &'a [usize]>,
{
    let mut out = Multiset::new();
    for set in sets {
        for &id in set {
            *out.entry(id).or_default() += 1;
        }
    }
    out
}

pub fn build_supersets<S: AsRef<[usize]>>(phi_sets: &[BTreeSet<usize>], cds_sets: &[S]) -> Supersets {
    let mut varpi = Multiset::new();
    for phi in phi_sets {
        for &id in phi {
            *varpi.entry(id).or_default() += 1;
        }
    }
    let omega = multiset_union(cds_sets.iter().map(|s| s.as_ref()));
    let kappa = match phi_sets.split_first() {
        Some((first, rest)) => rest
            .iter()
            .fold(first.clone(), |acc, s| acc.intersection(s).copied().collect()),
        None => BTreeSet::new(),
    };
    Supersets { varpi, omega, kappa }
}

/// `(count_varpi / eta, count_omega / theta, [in kappa] / iota)`.
pub fn vote_scores<T: Scalar>(candidate: usize, sets: &Supersets, eta: T, theta: T, iota: T) -> VoteTally<T> {
    let counts = sets.counts(candidate);
    let votes = (
        T::from_usize_lossy(counts.0) / eta,
        T::from_usize_lossy(counts.1) / theta,
        T::from_usize_lossy(counts.2) / iota,
    );
    VoteTally {
        candidate,
        counts,
        votes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const A: usize = 1;
    const B: usize = 2;
    const C: usize = 3;
    const D: usize = 4;
    const E: usize = 5;
    const F: usize = 6;
    const Q: usize = 0;

    fn set(ids: &[usize]) -> BTreeSet<usize> {
        ids.iter().copied().collect()
    }

    #[test]
    fn phi_for_three_features() {
        let nn = [vec![A, B, C], vec![A, B, D], vec![A, E, F]];
        let phi = build_phi_sets(&nn).unwrap();
        assert_eq!(phi, vec![set(&[A, B]), set(&[A]), set(&[A])]);

        let same = [vec![A, B], vec![A, B], vec![A, B]];
        assert!(build_phi_sets(&same).unwrap().iter().all(|p| *p == set(&[A, B])));

        let disjoint = [vec![A], vec![B], vec![C]];
        assert!(build_phi_sets(&disjoint).unwrap().iter().all(BTreeSet::is_empty));

        assert!(matches!(build_phi_sets(&[vec![A]]), Err(Error::TooFewFeatures(1))));
    }

    #[test]
    fn supersets_and_votes() {
        let nn = [vec![A, B, C], vec![A, B, D], vec![A, E, F]];
        let phi = build_phi_sets(&nn).unwrap();
        let cds = [vec![Q, A], vec![Q, A], vec![Q]];
        let sets = build_supersets(&phi, &cds);
        assert_eq!(sets.varpi, Multiset::from([(A, 3), (B, 1)]));
        assert_eq!(sets.omega, Multiset::from([(Q, 3), (A, 2)]));
        assert_eq!(sets.kappa, set(&[A]));

        let a = vote_scores(A, &sets, 3.0f64, 3.0, 3.0);
        assert_eq!(a.counts, (3, 2, 1));
        assert_eq!(a.votes.0, 1.0);
        assert!((a.votes.1 - 2.0 / 3.0).abs() < 1e-15 && (a.votes.2 - 1.0 / 3.0).abs() < 1e-15);

        let b = vote_scores(B, &sets, 3.0f64, 3.0, 3.0);
        assert_eq!(b.counts, (1, 0, 0));
        assert!((b.votes.0 - 1.0 / 3.0).abs() < 1e-15);

        let absent = vote_scores(99, &sets, 3.0f64, 3.0, 3.0);
        assert_eq!(absent.votes, (0.0, 0.0, 0.0));
    }

    #[test]
    fn empty_phi_sets() {
        let sets = build_supersets::<Vec<usize>>(&[BTreeSet::new(), BTreeSet::new()], &[]);
        assert!(sets.varpi.is_empty() && sets.kappa.is_empty());
    }

    fn nn_family() -> impl Strategy<Value = Vec<Vec<usize>>> {
        proptest::collection::vec(proptest::collection::btree_set(0usize..15, 0..8), 2..6)
            .prop_map(|v| v.into_iter().map(|s| s.into_iter().collect()).collect())
    }

    proptest! {
        #[test]
        fn mass_is_conserved(nn in nn_family(), cds in nn_family()) {
            let phi = build_phi_sets(&nn).unwrap();
            let sets = build_supersets(&phi, &cds);
            let varpi_mass: usize = sets.varpi.values().sum();
            prop_assert_eq!(varpi_mass, phi.iter().map(BTreeSet::len).sum::<usize>());
            let omega_mass: usize = sets.omega.values().sum();
            prop_assert_eq!(omega_mass, cds.iter().map(Vec::len).sum::<usize>());
        }

        #[test]
        fn kappa_nested_in_phi_nested_in_nn(nn in nn_family()) {
            let phi = build_phi_sets(&nn).unwrap();
            let sets = build_supersets::<Vec<usize>>(&phi, &[]);
            let z = nn.len();
            for (j, p) in phi.iter().enumerate() {
                prop_assert!(sets.kappa.is_subset(p));
                // phi_j leaves out set z-1-j
                for (i, s) in nn.iter().enumerate() {
                    if i != z - 1 - j {
                        prop_assert!(p.iter().all(|id| s.contains(id)));
                    }
                }
            }
        }

        #[test]
        fn more_clusters_more_omega_votes(extra in 1usize..4, id in 0usize..10) {
            let one = vec![vec![id]];
            let many: Vec<Vec<usize>> = (0..=extra).map(|_| vec![id]).collect();
            let s1 = build_supersets(&[], &one);
            let s2 = build_supersets(&[], &many);
            let v1 = vote_scores(id, &s1, 3.0f64, 3.0, 3.0).votes.1;
            let v2 = vote_scores(id, &s2, 3.0f64, 3.0, 3.0).votes.1;
            prop_assert!(v2 > v1);
        }
    }
}
