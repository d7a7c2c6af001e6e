//! Non-synthetic strategies: random over / under sampling, NearMiss1 and
//! class weighting.

use rand::seq::index;
use rand::Rng;

use crate::dataset::{Dataset, MAJORITY, MINORITY};
use crate::error::{Error, Result};
use crate::neighbors::knn;
use crate::rng::Seed;

/// Number of minority rows to add so that minority / majority reaches
/// `target_ratio`: `round(N_majority · r) - n`, at least 0.
pub fn synthetic_quota(ds: &Dataset, target_ratio: f64) -> usize {
    let want = (ds.majority_count() as f64 * target_ratio).round() as usize;
    want.saturating_sub(ds.minority_count())
}

/// Rows retained by an undersampling strategy, in their original order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Resampled {
    pub rows: Vec<usize>,
}

fn majority_target(ds: &Dataset, target_ratio: f64) -> Result<usize> {
    let target = (ds.minority_count() as f64 / target_ratio).round() as usize;
    if target < 1 {
        return Err(Error::Infeasible(format!(
            "target ratio {target_ratio} leaves no majority row"
        )));
    }
    Ok(target.min(ds.majority_count()))
}

fn keep_with_majority(ds: &Dataset, kept_majority: &[usize]) -> Resampled {
    let mut keep = vec![false; ds.len()];
    for &i in kept_majority {
        keep[i] = true;
    }
    Resampled {
        rows: (0..ds.len())
            .filter(|&i| ds.labels()[i] == MINORITY || keep[i])
            .collect(),
    }
}

/// Random undersampling: a uniform subset of `round(n / r)` majority rows,
/// drawn without replacement.
pub fn rus(ds: &Dataset, target_ratio: f64, seed: Seed) -> Result<Resampled> {
    ds.require_both_classes()?;
    let target = majority_target(ds, target_ratio)?;
    let majority = ds.majority_indices();
    let picked: Vec<usize> = index::sample(&mut seed.stream(), majority.len(), target)
        .into_iter()
        .map(|j| majority[j])
        .collect();
    Ok(keep_with_majority(ds, &picked))
}

/// Random oversampling: minority rows (as input row indices) to duplicate,
/// drawn uniformly with replacement.
pub fn ros(ds: &Dataset, target_ratio: f64, seed: Seed) -> Result<Vec<usize>> {
    ds.require_both_classes()?;
    let minority = ds.minority_indices();
    let quota = synthetic_quota(ds, target_ratio);
    Ok((0..quota)
        .map(|i| minority[seed.derive(i as u64).stream().random_range(0..minority.len())])
        .collect())
}

/// NearMiss1: score each majority row by its mean distance to the `k`
/// nearest minority rows and drop the lowest scores (ties: lowest index
/// first) until `round(n / r)` majority rows remain.
pub fn nearmiss1(ds: &Dataset, k: usize, target_ratio: f64) -> Result<Resampled> {
    ds.require_both_classes()?;
    let target = majority_target(ds, target_ratio)?;
    let majority = ds.majority_indices();
    let table = knn(&ds.minority_points(), &ds.features().select_rows(&majority), k, false)?;
    let mut scored: Vec<(f64, usize)> = (0..majority.len())
        .map(|q| (table.distances(q).iter().sum::<f64>() / k as f64, majority[q]))
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let drop = majority.len() - target;
    let kept: Vec<usize> = scored[drop..].iter().map(|s| s.1).collect();
    Ok(keep_with_majority(ds, &kept))
}

/// `(ρ, 1)` with `ρ = (N - n) / n`.
pub fn class_weights(ds: &Dataset) -> Result<(f64, f64)> {
    let n = ds.minority_count();
    if n == 0 {
        return Err(Error::InvalidDataset("no minority rows".into()));
    }
    Ok((ds.labels().iter().filter(|&&y| y == MAJORITY).count() as f64 / n as f64, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;
    use proptest::prelude::*;
    use rand::Rng;

    fn ds_from(xs: &[f64], labels: &[u8]) -> Dataset {
        let rows: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
        Dataset::new(Matrix::from_rows(&rows).unwrap(), labels.to_vec()).unwrap()
    }

    #[test]
    fn balanced_is_noop() {
        let ds = ds_from(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0], &[1, 1, 1, 1, 1, 0, 0, 0, 0, 0]);
        assert!(ros(&ds, 1.0, Seed(1)).unwrap().is_empty());
        assert_eq!(rus(&ds, 1.0, Seed(1)).unwrap().rows.len(), 10);
    }

    #[test]
    fn ros_copies_minority() {
        let mut labels = vec![1, 1];
        labels.extend([0; 10]);
        let xs: Vec<f64> = (0..12).map(f64::from).collect();
        let ds = ds_from(&xs, &labels);
        let src = ros(&ds, 1.0, Seed(2)).unwrap();
        assert_eq!(src.len(), 8);
        assert!(src.iter().all(|&i| i < 2));
    }

    #[test]
    fn rus_subset() {
        let mut labels = vec![1, 1, 1];
        labels.extend([0; 9]);
        let xs: Vec<f64> = (0..12).map(|i| (i * i) as f64).collect();
        let ds = ds_from(&xs, &labels);
        let r = rus(&ds, 1.0, Seed(3)).unwrap();
        let maj: Vec<usize> = r.rows.iter().copied().filter(|&i| labels[i] == 0).collect();
        assert_eq!(maj.len(), 3);
        let mut dedup = maj.clone();
        dedup.dedup();
        assert_eq!(dedup, maj);
    }

    #[test]
    fn rus_infeasible() {
        let ds = ds_from(&[0.0, 1.0, 2.0], &[1, 0, 0]);
        assert!(matches!(rus(&ds, 1e-9, Seed(0)), Ok(_)));
        let ds = ds_from(&[0.0, 1.0], &[1, 0]);
        assert!(rus(&ds, 1.0, Seed(0)).is_ok());
        // round(1 / 0.3) = 3 > 1 majority row: kept as is
        assert_eq!(rus(&ds, 0.3, Seed(0)).unwrap().rows, vec![0, 1]);
    }

    #[test]
    fn class_weight_examples() {
        let mut labels = vec![1u8; 80];
        labels.extend([0u8; 226]);
        let xs: Vec<f64> = (0..306).map(f64::from).collect();
        assert_eq!(class_weights(&ds_from(&xs, &labels)).unwrap(), (2.825, 1.0));
        assert_eq!(class_weights(&ds_from(&[0.0, 1.0], &[1, 0])).unwrap(), (1.0, 1.0));
        let mut labels = vec![1u8];
        labels.extend([0u8; 100]);
        let xs: Vec<f64> = (0..101).map(f64::from).collect();
        assert_eq!(class_weights(&ds_from(&xs, &labels)).unwrap(), (100.0, 1.0));
    }

    #[test]
    fn nearmiss_drops_closest_first() {
        // minority at 0 and 0.1; majority 2 coincides with a minority point
        let ds = ds_from(&[0.0, 0.1, 0.0, 5.0, 9.0, 7.0], &[1, 1, 0, 0, 0, 0]);
        let r = nearmiss1(&ds, 1, 1.0).unwrap();
        assert_eq!(r.rows, vec![0, 1, 4, 5]);
    }

    #[test]
    fn nearmiss_ties_drop_low_index() {
        let ds = ds_from(&[0.0, 3.0, -3.0, 3.0, -3.0], &[1, 0, 0, 0, 0]);
        let r = nearmiss1(&ds, 1, 1.0).unwrap();
        assert_eq!(r.rows, vec![0, 4]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn nearmiss_matches_sort_oracle(seed in any::<u64>()) {
            let mut rng = Seed(seed).stream();
            let xs: Vec<f64> = (0..40).map(|_| rng.random::<f64>() * 10.0).collect();
            let labels: Vec<u8> = (0..40).map(|i| u8::from(i % 4 == 0)).collect();
            let ds = ds_from(&xs, &labels);
            let k = 3;
            let r = nearmiss1(&ds, k, 1.0).unwrap();
            let mins: Vec<f64> = (0..40).filter(|&i| labels[i] == 1).map(|i| xs[i]).collect();
            let mut scores: Vec<(f64, usize)> = (0..40).filter(|&i| labels[i] == 0).map(|i| {
                let mut d: Vec<f64> = mins.iter().map(|m| (m - xs[i]).abs()).collect();
                d.sort_by(|a, b| a.partial_cmp(b).unwrap());
                (d[..k].iter().sum::<f64>() / k as f64, i)
            }).collect();
            scores.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            let mut kept: Vec<usize> = scores[scores.len() - 10..].iter().map(|s| s.1).collect();
            kept.extend((0..40).filter(|&i| labels[i] == 1));
            kept.sort_unstable();
            prop_assert_eq!(r.rows, kept);
        }
    }
}
