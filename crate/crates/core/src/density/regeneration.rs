//! Energy distance between SMOTE output and the base law.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::DensitySpec;
use crate::error::{Error, Result};
use crate::matrix::{distance, Matrix};
use crate::rng::Seed;
use crate::samplers::{smote_matrix, KRule};

fn mean_cross(a: &Matrix, b: &Matrix) -> f64 {
    let s: f64 = (0..a.rows())
        .into_par_iter()
        .map(|i| b.iter_rows().map(|y| distance(a.row(i), y)).sum::<f64>())
        .sum();
    s / (a.rows() * b.rows()) as f64
}

/// Energy distance (V-statistic) `2 E|A-B| - E|A-A'| - E|B-B'|`.
pub fn energy_distance(a: &Matrix, b: &Matrix) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::TooSmall { needed: 1, found: 0 });
    }
    if a.cols() != b.cols() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} columns", a.cols()),
            found: format!("{} columns", b.cols()),
        });
    }
    Ok(2.0 * mean_cross(a, b) - mean_cross(a, a) - mean_cross(b, b))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermutationTest {
    pub statistic: f64,
    /// 95% quantile of the permutation distribution.
    pub threshold: f64,
    pub p_value: f64,
    pub permutations: usize,
}

/// Largest pooled sample accepted by [`energy_permutation_test`]; the test
/// keeps the full pooled distance matrix in memory.
pub const MAX_POOLED: usize = 4000;

/// Permutation test of equal distributions based on the energy distance.
pub fn energy_permutation_test(a: &Matrix, b: &Matrix, permutations: usize, seed: Seed) -> Result<PermutationTest> {
    let statistic = energy_distance(a, b)?;
    let (na, nb) = (a.rows(), b.rows());
    let total = na + nb;
    if total > MAX_POOLED {
        return Err(Error::Unsupported(format!("permutation test on {total} points (max {MAX_POOLED})")));
    }
    let mut pooled = a.clone();
    pooled.extend(b)?;
    let dist: Vec<f64> = (0..total)
        .into_par_iter()
        .flat_map_iter(|i| {
            let p = &pooled;
            (0..total).map(move |j| distance(p.row(i), p.row(j)))
        })
        .collect();
    let stat_for = |labels: &[bool]| {
        let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
        for i in 0..total {
            let row = &dist[i * total..(i + 1) * total];
            for j in 0..total {
                match (labels[i], labels[j]) {
                    (true, true) => aa += row[j],
                    (false, false) => bb += row[j],
                    _ => ab += row[j],
                }
            }
        }
        // ab counts each cross pair twice
        ab / (na * nb) as f64 - aa / (na * na) as f64 - bb / (nb * nb) as f64
    };
    let mut permuted: Vec<f64> = (0..permutations)
        .into_par_iter()
        .map(|p| {
            let mut labels: Vec<bool> = (0..total).map(|i| i < na).collect();
            labels.shuffle(&mut seed.derive(p as u64).stream());
            stat_for(&labels)
        })
        .collect();
    let exceed = permuted.iter().filter(|&&s| s >= statistic).count();
    permuted.sort_by(f64::total_cmp);
    let q = ((0.95 * permutations as f64).ceil() as usize).clamp(1, permutations.max(1)) - 1;
    Ok(PermutationTest {
        statistic,
        threshold: permuted.get(q).copied().unwrap_or(f64::NAN),
        p_value: (exceed + 1) as f64 / (permutations + 1) as f64,
        permutations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegenerationPoint {
    pub n: usize,
    pub k: usize,
    pub mean: f64,
    pub standard_error: f64,
    pub per_trial: Vec<f64>,
}

/// For each `n`: draw `n` base points, `n` SMOTE points from them and a
/// fresh reference sample of size `n`; record the energy distance between
/// the SMOTE points and the reference, over `trials` repetitions.
pub fn regeneration_distance(
    n_list: &[usize],
    rule: KRule,
    spec: &dyn DensitySpec,
    trials: usize,
    seed: Seed,
) -> Result<Vec<RegenerationPoint>> {
    let mut out = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let k = rule.resolve(n)?;
        let per_trial: Vec<Result<f64>> = (0..trials)
            .into_par_iter()
            .map(|t| {
                let s = seed.derive(n as u64).derive(t as u64);
                let x = spec.sample(n, &mut s.derive(0).stream());
                let z = smote_matrix(&x, k, n, s.derive(1))?;
                let reference = spec.sample(n, &mut s.derive(2).stream());
                energy_distance(&z.points, &reference)
            })
            .collect();
        let per_trial: Vec<f64> = per_trial.into_iter().collect::<Result<_>>()?;
        let mean = per_trial.iter().sum::<f64>() / trials as f64;
        let var = if trials > 1 {
            per_trial.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (trials - 1) as f64
        } else {
            0.0
        };
        out.push(RegenerationPoint {
            n,
            k,
            mean,
            standard_error: (var / trials as f64).sqrt(),
            per_trial,
        });
    }
    Ok(out)
}
