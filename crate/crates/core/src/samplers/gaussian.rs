//! Multivariate Gaussian SMOTE: draws from the Gaussian fitted to a central
//! point and its nearest neighbours.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{Provenance, SyntheticBatch};
use crate::error::{Error, Result};
use crate::linalg::psd_sqrt_factor;
use crate::matrix::Matrix;
use crate::neighbors::nearest;
use crate::rng::{digest_f64, Seed};

/// Mean and biased covariance (divided by the set size) of the rows
/// `members` of `points`. The mean is accumulated as offsets from the first
/// member, so identical members give that member back exactly.
pub fn gaussian_neighbourhood(points: &Matrix, members: &[usize]) -> (Vec<f64>, Vec<f64>) {
    let d = points.cols();
    let m = members.len() as f64;
    let origin = points.row(members[0]);
    let mut mean = vec![0.0; d];
    for &i in members {
        for (j, v) in points.row(i).iter().enumerate() {
            mean[j] += v - origin[j];
        }
    }
    for j in 0..d {
        mean[j] = origin[j] + mean[j] / m;
    }
    let mut cov = vec![0.0; d * d];
    for &i in members {
        let r = points.row(i);
        for a in 0..d {
            let da = r[a] - mean[a];
            for b in a..d {
                cov[a * d + b] += da * (r[b] - mean[b]);
            }
        }
    }
    for a in 0..d {
        for b in a..d {
            let v = cov[a * d + b] / m;
            cov[a * d + b] = v;
            cov[b * d + a] = v;
        }
    }
    (mean, cov)
}

struct Fitted {
    mean: Vec<f64>,
    factor: Vec<f64>,
    digest: String,
}

/// `count` MGS points from the rows of `minority`, each from
/// `N(mean, cov)` of a uniformly drawn central point together with its `k`
/// nearest neighbours. Provenance indices are rows of `minority`.
pub fn mgs_matrix(minority: &Matrix, k: usize, count: usize, seed: Seed) -> Result<SyntheticBatch> {
    let n = minority.rows();
    if n < 2 {
        return Err(Error::CannotInterpolate(n));
    }
    if k == 0 || k > n - 1 {
        return Err(Error::InvalidK { k, max: n - 1 });
    }
    let d = minority.cols();
    let draws: Vec<(usize, Vec<f64>)> = (0..count)
        .map(|i| {
            let mut rng = seed.derive(i as u64).stream();
            let c = rng.random_range(0..n);
            let g: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            (c, g)
        })
        .collect();
    let mut used: Vec<usize> = draws.iter().map(|d| d.0).collect();
    used.sort_unstable();
    used.dedup();
    let fitted: BTreeMap<usize, Fitted> = used
        .par_iter()
        .map(|&c| {
            let mut members = vec![c];
            members.extend(nearest(minority, minority.row(c), k, Some(c)).into_iter().map(|p| p.1));
            let (mean, cov) = gaussian_neighbourhood(minority, &members);
            let factor = psd_sqrt_factor(&cov, d);
            let digest = format!("{:016x}", digest_f64(&cov));
            (c, Fitted { mean, factor, digest })
        })
        .collect();
    let mut out = Matrix::with_capacity(d, count);
    let mut provenance = Vec::with_capacity(count);
    for (c, g) in &draws {
        let f = &fitted[c];
        let z: Vec<f64> = (0..d)
            .map(|a| f.mean[a] + (0..d).map(|b| f.factor[a * d + b] * g[b]).sum::<f64>())
            .collect();
        out.push_row(&z)?;
        provenance.push(Provenance::Gaussian {
            central: *c,
            mean: f.mean.clone(),
            cov_digest: f.digest.clone(),
        });
    }
    Ok(SyntheticBatch {
        points: out,
        provenance,
        fallback: false,
        warnings: Vec::new(),
    })
}
