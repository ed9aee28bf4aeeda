//! Mean average precision and the N-S (top-4 recall) score.

use std::collections::BTreeSet;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::FusionResult;
use crate::matrixio::GroundTruth;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// Average precision with the query removed from its relevant set.
    Map,
    /// Group members in the top 4, with the query counted at rank 1.
    Ns,
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "map" => Ok(Metric::Map),
            "ns" => Ok(Metric::Ns),
            other => Err(format!("unknown metric {other:?} (expected map or ns)")),
        }
    }
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Map => "map",
            Metric::Ns => "ns",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub metric: String,
    pub queries: usize,
    pub mean: f64,
    pub per_query: Vec<(usize, f64)>,
}

/// `(1 / |relevant|) * sum over hits at rank r of hits_so_far / r`.
pub fn average_precision(ranking: &[usize], relevant: &BTreeSet<usize>) -> Result<f64> {
    if relevant.is_empty() {
        return Err(Error::EmptyRelevant);
    }
    let mut hits = 0usize;
    // double-double accumulation: the sum is hi + lo
    let (mut hi, mut lo) = (0.0f64, 0.0f64);
    for (idx, id) in ranking.iter().enumerate() {
        if relevant.contains(id) {
            hits += 1;
            let (h, r) = (hits as f64, (idx + 1) as f64);
            let q = h / r;
            let q_err = (-q).mul_add(r, h) / r;
            let s = hi + q;
            let bb = s - hi;
            let s_err = (hi - (s - bb)) + (q - bb);
            hi = s;
            lo += s_err + q_err;
        }
    }
    Ok((hi + lo) / relevant.len() as f64)
}

/// Members of a 4-item group among the first 4 entries of `ranking`.
pub fn ns_score(ranking: &[usize], group: &BTreeSet<usize>) -> Result<f64> {
    if group.len() != 4 {
        return Err(Error::GroupSize(group.len()));
    }
    Ok(ranking.iter().take(4).filter(|id| group.contains(id)).count() as f64)
}

pub fn aggregate(metric: &str, per_query: Vec<(usize, f64)>) -> Result<MetricReport> {
    if per_query.is_empty() {
        return Err(Error::EmptyAggregate);
    }
    let mean = per_query.iter().map(|&(_, v)| v).sum::<f64>() / per_query.len() as f64;
    Ok(MetricReport {
        metric: metric.to_string(),
        queries: per_query.len(),
        mean,
        per_query,
    })
}

/// Scores one query-excluded ranking under the protocol of `metric`.
pub fn score_query(metric: Metric, query: usize, ranking: &[usize], truth: &BTreeSet<usize>) -> Result<f64> {
    match metric {
        Metric::Map => {
            let mut relevant = truth.clone();
            relevant.remove(&query);
            average_precision(ranking, &relevant)
        }
        Metric::Ns => {
            let mut with_query = Vec::with_capacity(4);
            with_query.push(query);
            with_query.extend(ranking.iter().copied().filter(|&id| id != query).take(3));
            let mut group = truth.clone();
            group.insert(query);
            ns_score(&with_query, &group)
        }
    }
}

/// Scores every result whose query has ground truth.
pub fn evaluate<T: Scalar>(results: &[FusionResult<T>], truth: &GroundTruth, metric: Metric) -> Result<MetricReport> {
    let mut per_query = Vec::new();
    for r in results {
        let Some(relevant) = truth.get(r.query) else {
            continue;
        };
        let ids: Vec<usize> = r.ranking.ids().collect();
        per_query.push((r.query, score_query(metric, r.query, &ids, relevant)?));
    }
    aggregate(metric.name(), per_query)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(ids: &[usize]) -> BTreeSet<usize> {
        ids.iter().copied().collect()
    }

    #[test]
    fn ap_examples() {
        assert_eq!(average_precision(&[5, 6, 1, 2], &set(&[5, 6])).unwrap(), 1.0);
        assert_eq!(average_precision(&[5, 1, 6, 2], &set(&[5, 6])).unwrap(), 5.0 / 6.0);
        assert_eq!(average_precision(&[5, 1, 2, 6], &set(&[5, 6])).unwrap(), 0.75);
        assert_eq!(average_precision(&[1, 2], &set(&[5, 6])).unwrap(), 0.0);
        assert!(matches!(average_precision(&[1], &set(&[])), Err(Error::EmptyRelevant)));
    }

    #[test]
    fn ns_examples() {
        let g = set(&[0, 1, 2, 3]);
        assert_eq!(ns_score(&[0, 2, 1, 3, 9], &g).unwrap(), 4.0);
        assert_eq!(ns_score(&[0, 2, 9, 3, 1], &g).unwrap(), 3.0);
        assert!(matches!(ns_score(&[0], &set(&[0, 1, 2])), Err(Error::GroupSize(3))));
        // query counted at rank 1
        assert_eq!(score_query(Metric::Ns, 0, &[2, 9, 3, 1], &g).unwrap(), 3.0);
        assert_eq!(
            score_query(Metric::Map, 0, &[2, 9, 3, 1], &g).unwrap(),
            (1.0 + 2.0 / 3.0 + 3.0 / 4.0) / 3.0
        );
    }

    #[test]
    fn aggregate_examples() {
        assert_eq!(aggregate("map", vec![(0, 1.0), (1, 0.5)]).unwrap().mean, 0.75);
        assert_eq!(aggregate("map", vec![(0, 0.3)]).unwrap().mean, 0.3);
        assert_eq!(
            aggregate("ns", vec![(0, 4.0), (1, 4.0), (2, 2.0)]).unwrap().mean,
            10.0 / 3.0
        );
        assert!(matches!(aggregate("ns", vec![]), Err(Error::EmptyAggregate)));
        assert_eq!("map".parse::<Metric>().unwrap(), Metric::Map);
        assert!("ndcg".parse::<Metric>().is_err());
    }

    fn ranking_and_relevant() -> impl Strategy<Value = (Vec<usize>, BTreeSet<usize>)> {
        (5usize..30).prop_flat_map(|n| {
            (
                Just((0..n).collect::<Vec<_>>()).prop_shuffle(),
                proptest::collection::btree_set(0..n, 1..5),
            )
        })
    }

    proptest! {
        #[test]
        fn ap_bounds_and_tail_invariance((order, rel) in ranking_and_relevant(), seed: u64) {
            let ap = average_precision(&order, &rel).unwrap();
            prop_assert!((0.0..=1.0).contains(&ap));
            let last = order.iter().rposition(|id| rel.contains(id)).unwrap();
            let mut shuffled = order.clone();
            let tail = &mut shuffled[last + 1..];
            let len = tail.len();
            if len > 1 {
                tail.rotate_left((seed as usize) % len);
            }
            prop_assert_eq!(average_precision(&shuffled, &rel).unwrap(), ap);
        }

        #[test]
        fn promoting_a_relevant_item_never_hurts((order, rel) in ranking_and_relevant(), pick in any::<prop::sample::Index>()) {
            let hits: Vec<usize> = order.iter().enumerate().filter(|(_, id)| rel.contains(id)).map(|(i, _)| i).collect();
            let pos = hits[pick.index(hits.len())];
            prop_assume!(pos > 0);
            let mut up = order.clone();
            up.swap(pos, pos - 1);
            prop_assert!(average_precision(&up, &rel).unwrap() >= average_precision(&order, &rel).unwrap());
        }

        #[test]
        fn ns_ignores_order_within_top4(mut order in Just((0..12usize).collect::<Vec<_>>()), rot in 0usize..4) {
            let g = set(&[0, 3, 5, 11]);
            let base = ns_score(&order, &g).unwrap();
            order[..4].rotate_left(rot);
            prop_assert_eq!(ns_score(&order, &g).unwrap(), base);
            prop_assert!((0.0..=4.0).contains(&base));
        }
    }
}
