//! SMOTE and Borderline SMOTE: synthetic points on segments between a
//! central point and one of its neighbours.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;

use super::{synthetic_quota, Provenance, SyntheticBatch};
use crate::dataset::{Dataset, MAJORITY};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::neighbors::{knn_of_points, NeighborTable};
use crate::rng::Seed;

/// `x_c + w (x_k - x_c)`.
#[inline]
pub fn interpolate(x_c: &[f64], x_k: &[f64], w: f64) -> Vec<f64> {
    x_c.iter().zip(x_k).map(|(c, k)| c + w * (k - c)).collect()
}

/// Per-point random choices, drawn from the point's own stream.
struct Draw {
    central: usize,
    rank: usize,
    weight: f64,
}

/// `count` points, each interpolating between a central point drawn
/// uniformly from `pool` (rows of `points`) and one of its `k` nearest
/// neighbours among all rows of `points` (itself excluded), with weight
/// `U[0, w_max)`.
fn interpolate_batch(points: &Matrix, pool: &[usize], k: usize, count: usize, w_max: f64, seed: Seed) -> Result<SyntheticBatch> {
    let draws: Vec<Draw> = (0..count)
        .map(|i| {
            let mut rng = seed.derive(i as u64).stream();
            Draw {
                central: pool[rng.random_range(0..pool.len())],
                rank: rng.random_range(0..k),
                weight: w_max * rng.random::<f64>(),
            }
        })
        .collect();
    let mut used: Vec<usize> = draws.iter().map(|d| d.central).collect();
    used.sort_unstable();
    used.dedup();
    let table = if used.is_empty() {
        None
    } else {
        Some(knn_of_points(points, &used, k)?)
    };
    let slot: BTreeMap<usize, usize> = used.iter().enumerate().map(|(j, &c)| (c, j)).collect();
    let d = points.cols();
    let rows: Vec<(Vec<f64>, Provenance)> = draws
        .par_iter()
        .map(|dr| {
            let t: &NeighborTable = table.as_ref().expect("nonempty batch has a table");
            let neighbor = t.indices(slot[&dr.central])[dr.rank];
            let z = interpolate(points.row(dr.central), points.row(neighbor), dr.weight);
            (
                z,
                Provenance::Interpolation {
                    central: dr.central,
                    neighbor,
                    weight: dr.weight,
                },
            )
        })
        .collect();
    let mut out = Matrix::with_capacity(d, count);
    let mut provenance = Vec::with_capacity(count);
    for (z, p) in rows {
        out.push_row(&z)?;
        provenance.push(p);
    }
    Ok(SyntheticBatch {
        points: out,
        provenance,
        fallback: false,
        warnings: Vec::new(),
    })
}

fn check_interpolation(n: usize, k: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::CannotInterpolate(n));
    }
    if k == 0 || k > n - 1 {
        return Err(Error::InvalidK { k, max: n - 1 });
    }
    Ok(())
}

/// `count` SMOTE points from the rows of `minority`. Provenance indices are
/// rows of `minority`.
pub fn smote_matrix(minority: &Matrix, k: usize, count: usize, seed: Seed) -> Result<SyntheticBatch> {
    check_interpolation(minority.rows(), k)?;
    let pool: Vec<usize> = (0..minority.rows()).collect();
    interpolate_batch(minority, &pool, k, count, 1.0, seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BorderlineVariant {
    /// Neighbours among the minority class, weight `U[0, 1]`.
    One,
    /// Neighbours among both classes, weight `U[0, 0.5]`.
    Two,
}

/// Minority rows of `ds` with `m/2 <= m_- < m`, where `m_-` counts the
/// majority rows among the `m` nearest neighbours in the whole dataset.
/// `m` is clipped to `N - 1`.
pub fn danger_set(ds: &Dataset, m: usize) -> Result<Vec<usize>> {
    let m = m.min(ds.len().saturating_sub(1));
    let minority = ds.minority_indices();
    if m == 0 {
        return Ok(Vec::new());
    }
    let table = knn_of_points(ds.features(), &minority, m)?;
    Ok(minority
        .iter()
        .enumerate()
        .filter(|&(q, _)| {
            let m_minus = table.indices(q).iter().filter(|&&i| ds.labels()[i] == MAJORITY).count();
            2 * m_minus >= m && m_minus < m
        })
        .map(|(_, &row)| row)
        .collect())
}

/// Borderline SMOTE, generating up to the parity quota at `target_ratio`.
/// Central points are drawn uniformly with replacement from the danger
/// set. Provenance indices are rows of `ds`.
///
/// An empty danger set falls back to plain SMOTE over the whole minority
/// class; the batch is then flagged with `fallback`.
pub fn borderline_smote(
    ds: &Dataset,
    k: usize,
    m: usize,
    variant: BorderlineVariant,
    target_ratio: f64,
    seed: Seed,
) -> Result<SyntheticBatch> {
    if m < 2 {
        return Err(Error::InvalidConfig(format!("m must be at least 2, got {m}")));
    }
    ds.require_both_classes()?;
    let minority = ds.minority_indices();
    check_interpolation(minority.len(), k)?;
    let quota = synthetic_quota(ds, target_ratio);
    let mut warnings = Vec::new();
    if m > ds.len() - 1 {
        warnings.push(format!("m = {m} exceeds N - 1; clipped to {}", ds.len() - 1));
    }
    let danger = danger_set(ds, m)?;
    if danger.is_empty() {
        let mut batch = smote_matrix(&ds.minority_points(), k, quota, seed)?;
        batch.remap(&minority);
        batch.fallback = true;
        batch.warnings = warnings;
        batch.warnings.push("empty danger set: fell back to SMOTE over the minority class".into());
        return Ok(batch);
    }
    let mut batch = match variant {
        BorderlineVariant::One => {
            let local: Vec<usize> = danger
                .iter()
                .map(|r| minority.binary_search(r).expect("danger rows are minority rows"))
                .collect();
            let mut b = interpolate_batch(&ds.minority_points(), &local, k, quota, 1.0, seed)?;
            b.remap(&minority);
            b
        }
        BorderlineVariant::Two => {
            if k > ds.len() - 1 {
                return Err(Error::InvalidK { k, max: ds.len() - 1 });
            }
            interpolate_batch(ds.features(), &danger, k, quota, 0.5, seed)?
        }
    };
    batch.warnings = warnings;
    Ok(batch)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::MINORITY;
    use crate::geometry::{convex_hull, in_convex_polygon};
    use proptest::prelude::*;

    fn line_set() -> Matrix {
        Matrix::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap()
    }

    #[test]
    fn midpoint_and_copy() {
        let m = line_set();
        assert_eq!(interpolate(m.row(0), m.row(1), 0.5), vec![0.5, 0.0]);
        assert_eq!(interpolate(m.row(0), m.row(1), 0.0), m.row(0).to_vec());
    }

    #[test]
    fn two_point_set_stays_on_segment() {
        let b = smote_matrix(&line_set(), 1, 200, Seed(1)).unwrap();
        for (z, p) in b.points.iter_rows().zip(&b.provenance) {
            let Provenance::Interpolation { central, neighbor, weight } = p else { panic!() };
            assert_eq!(central + neighbor, 1);
            assert!((0.0..1.0).contains(weight));
            assert!(z[1] == 0.0 && (0.0..=1.0).contains(&z[0]));
        }
    }

    #[test]
    fn errors() {
        let one = Matrix::from_rows(&[vec![1.0]]).unwrap();
        assert!(matches!(smote_matrix(&one, 1, 3, Seed(0)), Err(Error::CannotInterpolate(1))));
        assert!(matches!(smote_matrix(&line_set(), 2, 3, Seed(0)), Err(Error::InvalidK { .. })));
    }

    #[test]
    fn pair_frequencies_are_uniform() {
        // 3 points, K = 2: each (central, neighbour) pair has probability 1/6
        let m = Matrix::from_rows(&[vec![0.0], vec![1.0], vec![3.0]]).unwrap();
        let draws = 10_000;
        let b = smote_matrix(&m, 2, draws, Seed(9)).unwrap();
        let mut counts = [[0usize; 3]; 3];
        for p in &b.provenance {
            if let Provenance::Interpolation { central, neighbor, .. } = p {
                counts[*central][*neighbor] += 1;
            }
        }
        let p = 1.0 / 6.0;
        let sd = (draws as f64 * p * (1.0 - p)).sqrt();
        for (c, row) in counts.iter().enumerate() {
            for (k, &v) in row.iter().enumerate() {
                if c == k {
                    assert_eq!(v, 0);
                } else {
                    assert!((v as f64 - draws as f64 * p).abs() < 3.0 * sd, "{c},{k}: {v}");
                }
            }
        }
    }

    fn two_clusters() -> Dataset {
        use rand::Rng;
        let mut rng = Seed(4).stream();
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..120 {
            let y = u8::from(i < 40);
            let cx = if y == 1 { 0.0 } else { 0.6 };
            rows.push(vec![cx + rng.random::<f64>(), rng.random::<f64>()]);
            labels.push(y);
        }
        Dataset::new(Matrix::from_rows(&rows).unwrap(), labels).unwrap()
    }

    #[test]
    fn danger_set_matches_brute_force() {
        let ds = two_clusters();
        let m = 10;
        let got = danger_set(&ds, m).unwrap();
        let mut want = Vec::new();
        for i in ds.minority_indices() {
            let mut all: Vec<(f64, usize)> = (0..ds.len())
                .filter(|&j| j != i)
                .map(|j| (crate::matrix::distance(ds.features().row(i), ds.features().row(j)), j))
                .collect();
            all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            let m_minus = all[..m].iter().filter(|p| ds.labels()[p.1] == MAJORITY).count();
            if m_minus * 2 >= m && m_minus < m {
                want.push(i);
            }
        }
        assert_eq!(got, want);
        assert!(!got.is_empty());
    }

    #[test]
    fn danger_excludes_safe_and_noise() {
        // minority 0 is surrounded by minority; minority 5 sits inside the majority
        let mut rows = vec![vec![0.0], vec![0.1], vec![0.2], vec![-0.1], vec![-0.2]];
        rows.push(vec![10.0]);
        let mut labels = vec![1u8; 6];
        for i in 0..6 {
            rows.push(vec![10.0 + 0.1 * (i as f64 + 1.0)]);
            labels.push(0);
        }
        let ds = Dataset::new(Matrix::from_rows(&rows).unwrap(), labels).unwrap();
        let danger = danger_set(&ds, 4).unwrap();
        assert!(!danger.contains(&0));
        assert!(!danger.contains(&5));
    }

    #[test]
    fn empty_danger_falls_back() {
        let rows = vec![vec![0.0], vec![0.1], vec![0.2], vec![5.0], vec![5.1], vec![5.2], vec![5.3]];
        let ds = Dataset::new(Matrix::from_rows(&rows).unwrap(), vec![1, 1, 1, 0, 0, 0, 0]).unwrap();
        let b = borderline_smote(&ds, 1, 2, BorderlineVariant::One, 1.0, Seed(0)).unwrap();
        assert!(b.fallback);
        assert_eq!(b.len(), 1);
        assert!(!b.warnings.is_empty());
    }

    #[test]
    fn borderline_weights_and_labels() {
        let ds = two_clusters();
        let danger = danger_set(&ds, 10).unwrap();
        for (variant, w_max) in [(BorderlineVariant::One, 1.0), (BorderlineVariant::Two, 0.5)] {
            let b = borderline_smote(&ds, 5, 10, variant, 1.0, Seed(2)).unwrap();
            assert_eq!(b.len(), 40);
            for (z, p) in b.points.iter_rows().zip(&b.provenance) {
                let Provenance::Interpolation { central, neighbor, weight } = *p else { panic!() };
                assert!(danger.contains(&central));
                assert!((0.0..=w_max).contains(&weight));
                if variant == BorderlineVariant::One {
                    assert_eq!(ds.labels()[neighbor], MINORITY);
                }
                let want = interpolate(ds.features().row(central), ds.features().row(neighbor), weight);
                assert_eq!(z, want.as_slice());
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn smote_points_in_hull(seed in any::<u64>(), n in 3usize..30, k in 1usize..5) {
            use rand::Rng;
            let mut rng = Seed(seed).stream();
            let pts: Vec<[f64; 2]> = (0..n).map(|_| [rng.random::<f64>() * 4.0 - 2.0, rng.random::<f64>()]).collect();
            let m = Matrix::from_rows(&pts.iter().map(|p| p.to_vec()).collect::<Vec<_>>()).unwrap();
            let k = k.min(n - 1);
            let b = smote_matrix(&m, k, 100, Seed(seed ^ 1)).unwrap();
            let hull = convex_hull(&pts);
            for (z, p) in b.points.iter_rows().zip(&b.provenance) {
                let Provenance::Interpolation { central, neighbor, weight } = *p else { panic!() };
                let want = interpolate(m.row(central), m.row(neighbor), weight);
                for j in 0..2 {
                    prop_assert!((z[j] - want[j]).abs() <= 1e-12);
                }
                prop_assert!(in_convex_polygon(&hull, [z[0], z[1]], 1e-12));
            }
        }

        #[test]
        fn determinism(seed in any::<u64>()) {
            let m = Matrix::from_rows(&[vec![0.0, 1.0], vec![2.0, 0.5], vec![1.0, -1.0], vec![0.3, 0.3]]).unwrap();
            prop_assert_eq!(smote_matrix(&m, 2, 50, Seed(seed)).unwrap(), smote_matrix(&m, 2, 50, Seed(seed)).unwrap());
        }
    }
}
