//! How close SMOTE output stays to the sample it came from.

use std::fmt::Write as _;

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::{DensitySpec, UniformBox};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::neighbors::knn;
use crate::rng::{tag, Seed};
use crate::samplers::{smote_matrix, KRule};

/// Mean distance from each row of `z` to its nearest row of `x`.
pub fn similarity_c(z: &Matrix, x: &Matrix) -> Result<f64> {
    if z.rows() == 0 || x.rows() == 0 {
        return Err(Error::TooSmall { needed: 1, found: 0 });
    }
    if z.cols() != x.cols() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} columns", x.cols()),
            found: format!("{} columns", z.cols()),
        });
    }
    let table = knn(x, z, 1, false)?;
    Ok((0..z.rows()).map(|q| table.distances(q)[0]).sum::<f64>() / z.rows() as f64)
}

/// One `(n, K rule)` cell averaged over repetitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityPoint {
    pub n: usize,
    pub rule: KRule,
    /// K after flooring and clipping.
    pub k: usize,
    /// Mean of `C(Z, X)`.
    pub c_bar: f64,
    /// Mean of `C(X̃, X)` for a fresh sample `X̃`.
    pub c_bar_ref: f64,
    /// `c_bar / c_bar_ref`, absent when the reference is zero.
    pub ratio: Option<f64>,
    pub c_se: f64,
    pub c_ref_se: f64,
    pub reps: usize,
    /// `(C(Z, X), C(X̃, X))` per repetition.
    pub per_rep: Vec<(f64, f64)>,
    pub flag: Option<String>,
}

impl SimilarityPoint {
    pub fn from_reps(n: usize, rule: KRule, k: usize, per_rep: Vec<(f64, f64)>) -> Self {
        let (c_bar, c_se) = mean_se(per_rep.iter().map(|p| p.0));
        let (c_bar_ref, c_ref_se) = mean_se(per_rep.iter().map(|p| p.1));
        let (ratio, flag) = if c_bar_ref > 0.0 {
            (Some(c_bar / c_bar_ref), None)
        } else {
            (None, Some("reference distance is zero; ratio undefined".to_string()))
        };
        SimilarityPoint {
            n,
            rule,
            k,
            c_bar,
            c_bar_ref,
            ratio,
            c_se,
            c_ref_se,
            reps: per_rep.len(),
            per_rep,
            flag,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityResult {
    pub points: Vec<SimilarityPoint>,
    pub seed: Seed,
}

impl SimilarityResult {
    pub fn get(&self, n: usize, rule: KRule) -> Option<&SimilarityPoint> {
        self.points.iter().find(|p| p.n == n && p.rule == rule)
    }

    /// `n,K_rule,C_bar,C_bar_ref,ratio` with `NaN` for an undefined ratio.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,K_rule,C_bar,C_bar_ref,ratio\n");
        for p in &self.points {
            let ratio = p.ratio.map_or("NaN".to_string(), |r| format!("{r:.17e}"));
            writeln!(s, "{},{},{:.17e},{:.17e},{}", p.n, p.rule, p.c_bar, p.c_bar_ref, ratio).expect("write to string");
        }
        s
    }
}

fn mean_se(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    if n < 2.0 {
        return (mean, 0.0);
    }
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Default base law of the simulated experiment, `U([-3, 3]²)`.
pub fn default_simulation_law() -> UniformBox {
    UniformBox::cube(2, -3.0, 3.0).expect("valid box")
}

/// Simulated similarity experiment. For each `n`, repetition and K rule:
/// draw `X` (n points), generate `m` SMOTE points `Z` from it, draw a fresh
/// `X̃` of size `m`, and record `C(Z, X)` and `C(X̃, X)`. The same `X` and
/// `X̃` are shared by every rule within a repetition.
pub fn simulated_protocol(
    n_list: &[usize],
    rules: &[KRule],
    m: usize,
    reps: usize,
    law: &dyn DensitySpec,
    seed: Seed,
) -> Result<SimilarityResult> {
    if m == 0 || reps == 0 {
        return Err(Error::InvalidConfig("m and the repetition count must be positive".into()));
    }
    let mut points = Vec::new();
    for &n in n_list {
        let ks: Vec<usize> = rules.iter().map(|r| r.resolve(n)).collect::<Result<_>>()?;
        let per: Vec<Vec<(f64, f64)>> = (0..reps)
            .into_par_iter()
            .map(|b| {
                let task = seed.derive_path(&[tag("simulated"), n as u64, b as u64]);
                let x = law.sample(n, &mut task.derive(0).stream());
                let fresh = law.sample(m, &mut task.derive(1).stream());
                let reference = similarity_c(&fresh, &x)?;
                ks.iter()
                    .enumerate()
                    .map(|(ri, &k)| {
                        let z = smote_matrix(&x, k, m, task.derive(2).derive(ri as u64))?;
                        Ok((similarity_c(&z.points, &x)?, reference))
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        for (ri, (&rule, &k)) in rules.iter().zip(&ks).enumerate() {
            let reps: Vec<(f64, f64)> = per.iter().map(|r| r[ri]).collect();
            points.push(SimilarityPoint::from_reps(n, rule, k, reps));
        }
    }
    Ok(SimilarityResult { points, seed })
}

/// Real-data variant: per `n` and repetition, draw `n` rows of `minority`
/// without replacement and split them in two random halves `X` and `X̃`;
/// `m = |X̃|` SMOTE points are generated from `X`, with K resolved on `|X|`.
pub fn realdata_protocol(minority: &Matrix, n_list: &[usize], rules: &[KRule], reps: usize, seed: Seed) -> Result<SimilarityResult> {
    if reps == 0 {
        return Err(Error::InvalidConfig("the repetition count must be positive".into()));
    }
    let mut points = Vec::new();
    for &n in n_list {
        if n > minority.rows() {
            return Err(Error::TooSmall {
                needed: n,
                found: minority.rows(),
            });
        }
        if n < 4 {
            return Err(Error::TooSmall { needed: 4, found: n });
        }
        let half = n / 2;
        let ks: Vec<usize> = rules.iter().map(|r| r.resolve(half)).collect::<Result<_>>()?;
        let per: Vec<Vec<(f64, f64)>> = (0..reps)
            .into_par_iter()
            .map(|b| {
                let task = seed.derive_path(&[tag("realdata"), n as u64, b as u64]);
                let picked = index::sample(&mut task.derive(0).stream(), minority.rows(), n).into_vec();
                let x = minority.select_rows(&picked[..half]);
                let fresh = minority.select_rows(&picked[half..]);
                let reference = similarity_c(&fresh, &x)?;
                ks.iter()
                    .enumerate()
                    .map(|(ri, &k)| {
                        let z = smote_matrix(&x, k, fresh.rows(), task.derive(2).derive(ri as u64))?;
                        Ok((similarity_c(&z.points, &x)?, reference))
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        for (ri, (&rule, &k)) in rules.iter().zip(&ks).enumerate() {
            let reps: Vec<(f64, f64)> = per.iter().map(|r| r[ri]).collect();
            points.push(SimilarityPoint::from_reps(n, rule, k, reps));
        }
    }
    Ok(SimilarityResult { points, seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn hand_cases() {
        let x = Matrix::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(similarity_c(&x, &x).unwrap(), 0.0);
        let z = Matrix::from_rows(&[vec![2.0, 0.0]]).unwrap();
        assert_eq!(similarity_c(&z, &x).unwrap(), 1.0);
        assert!(similarity_c(&Matrix::from_rows(&[vec![1.0]]).unwrap(), &x).is_err());
    }

    #[test]
    fn matches_double_loop() {
        let mut rng = Seed(1).stream();
        let mk = |rng: &mut crate::rng::Stream, n: usize| {
            let rows: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()]).collect();
            Matrix::from_rows(&rows).unwrap()
        };
        let z = mk(&mut rng, 37);
        let x = mk(&mut rng, 53);
        let mut want = 0.0;
        for a in z.iter_rows() {
            let mut best = f64::INFINITY;
            for b in x.iter_rows() {
                best = best.min(a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt());
            }
            want += best;
        }
        want /= 37.0;
        assert!((similarity_c(&z, &x).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn invariant_under_rigid_motion() {
        let mut rng = Seed(2).stream();
        let pts = |rng: &mut crate::rng::Stream, n: usize| -> Vec<[f64; 2]> { (0..n).map(|_| [rng.random::<f64>(), rng.random::<f64>()]).collect() };
        let z = pts(&mut rng, 20);
        let x = pts(&mut rng, 30);
        let (c, s) = (0.7f64.cos(), 0.7f64.sin());
        let tf = |p: &[[f64; 2]]| {
            Matrix::from_rows(&p.iter().map(|q| vec![c * q[0] - s * q[1] + 5.0, s * q[0] + c * q[1] - 2.0]).collect::<Vec<_>>()).unwrap()
        };
        let plain = |p: &[[f64; 2]]| Matrix::from_rows(&p.iter().map(|q| q.to_vec()).collect::<Vec<_>>()).unwrap();
        let a = similarity_c(&plain(&z), &plain(&x)).unwrap();
        let b = similarity_c(&tf(&z), &tf(&x)).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn coincident_sample_gives_zero() {
        let x = Matrix::from_rows(&[vec![0.4, -1.0], vec![0.4, -1.0]]).unwrap();
        let z = smote_matrix(&x, 1, 10, Seed(3)).unwrap();
        let c = similarity_c(&z.points, &x).unwrap();
        assert_eq!(c, 0.0);
        let p = SimilarityPoint::from_reps(2, KRule::Fixed(1), 1, vec![(c, 0.0)]);
        assert!(p.ratio.is_none() && p.flag.is_some());
        let r = SimilarityResult { points: vec![p], seed: Seed(3) };
        assert!(r.to_csv().lines().nth(1).unwrap().ends_with("NaN"));
    }

    #[test]
    fn realdata_guard_and_determinism() {
        let same = Matrix::from_rows(&vec![vec![1.0, 2.0]; 40]).unwrap();
        let r = realdata_protocol(&same, &[20], &[KRule::Fixed(5)], 3, Seed(1)).unwrap();
        assert!(r.points[0].ratio.is_none());
        let mut rng = Seed(5).stream();
        let rows: Vec<Vec<f64>> = (0..60).map(|_| vec![rng.random::<f64>(), rng.random::<f64>()]).collect();
        let m = Matrix::from_rows(&rows).unwrap();
        let a = realdata_protocol(&m, &[20, 60], &[KRule::Fixed(5), KRule::Fraction(0.1)], 4, Seed(2)).unwrap();
        let b = realdata_protocol(&m, &[20, 60], &[KRule::Fixed(5), KRule::Fraction(0.1)], 4, Seed(2)).unwrap();
        assert_eq!(a, b);
        assert!(realdata_protocol(&m, &[61], &[KRule::Fixed(5)], 1, Seed(2)).is_err());
    }

    #[test]
    fn standard_error_shrinks_like_root_b() {
        let law = default_simulation_law();
        let se: Vec<f64> = [10, 40, 160]
            .iter()
            .map(|&b| simulated_protocol(&[100], &[KRule::Fixed(5)], 100, b, &law, Seed(7)).unwrap().points[0].c_se)
            .collect();
        // quadrupling B halves the standard error, up to sampling noise in the sd
        for w in se.windows(2) {
            let r = w[0] / w[1];
            assert!((1.3..3.0).contains(&r), "{se:?}");
        }
    }
}
