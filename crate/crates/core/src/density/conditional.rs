//! Density and simulation of a SMOTE point given its central point.

use rand::Rng;
use rand_distr::{Beta, Distribution};

use super::DensitySpec;
use crate::error::{Error, Result};
use crate::quadrature::{integrate_with_breaks, QuadOptions};
use crate::rng::Stream;
use crate::specfun::binom_cdf;

fn check_args(z: &[f64], x_c: &[f64], k: usize, n: usize, spec: &dyn DensitySpec) -> Result<f64> {
    let d = spec.dim();
    if z.len() != d || x_c.len() != d {
        return Err(Error::ShapeMismatch {
            expected: format!("points of dimension {d}"),
            found: format!("{} and {}", z.len(), x_c.len()),
        });
    }
    if n < 2 || k == 0 || k > n - 1 {
        return Err(Error::InvalidK { k, max: n.saturating_sub(1) });
    }
    if !spec.contains(x_c) {
        return Err(Error::Domain("central point outside the support".into()));
    }
    let rho = crate::matrix::distance(z, x_c);
    if rho == 0.0 {
        return Err(Error::Singularity);
    }
    Ok(rho)
}

/// Probability that a given point among the `n - 1` others at measure-radius
/// `mu` is picked as the neighbour, times `n - 1`: `(n-1)/K · P(Bin(n-2, mu) <= K-1)`.
fn neighbour_weight(mu: f64, k: usize, n: usize) -> f64 {
    let cdf = binom_cdf((k - 1) as u64, (n - 2) as u64, mu.clamp(0.0, 1.0)).unwrap_or(f64::NAN);
    (n - 1) as f64 / k as f64 * cdf
}

fn breaks_between(mut breaks: Vec<f64>, lo: f64, hi: f64) -> Vec<f64> {
    breaks.retain(|&b| b > lo && b < hi);
    breaks.push(lo);
    breaks.push(hi);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    breaks
}

fn quad_opts() -> QuadOptions {
    QuadOptions {
        abs_tol: 1e-11,
        rel_tol: 1e-11,
        max_intervals: 2000,
    }
}

/// Conditional density of a SMOTE point at `z` given the central point
/// `x_c`, for `n` minority samples and `k` neighbours, evaluated as an
/// integral over the distance `r` of the selected neighbour along the ray
/// from `x_c` through `z`.
pub fn smote_conditional_density(z: &[f64], x_c: &[f64], k: usize, n: usize, spec: &dyn DensitySpec) -> Result<f64> {
    let rho = check_args(z, x_c, k, n, spec)?;
    let d = spec.dim();
    let dir: Vec<f64> = z.iter().zip(x_c).map(|(a, b)| (a - b) / rho).collect();
    let exit = spec.ray_exit(x_c, &dir);
    if rho >= exit {
        return Ok(0.0);
    }
    let mut point = vec![0.0; d];
    let mut failure = None;
    let integrand = |r: f64| {
        for j in 0..d {
            point[j] = x_c[j] + dir[j] * r;
        }
        let f = spec.pdf(&point);
        if f == 0.0 {
            return 0.0;
        }
        let mu = match spec.ball_measure(x_c, r) {
            Ok(m) => m,
            Err(e) => {
                failure.get_or_insert(e);
                return 0.0;
            }
        };
        f * r.powi(d as i32 - 2) / rho.powi(d as i32 - 1) * neighbour_weight(mu, k, n)
    };
    let breaks = breaks_between(spec.measure_breaks(x_c), rho, exit);
    let q = integrate_with_breaks(integrand, &breaks, &quad_opts());
    match failure {
        Some(e) => Err(e),
        None => Ok(q.value),
    }
}

/// The same density written as an integral over the interpolation weight.
pub fn smote_conditional_density_w(z: &[f64], x_c: &[f64], k: usize, n: usize, spec: &dyn DensitySpec) -> Result<f64> {
    let rho = check_args(z, x_c, k, n, spec)?;
    let d = spec.dim();
    let dir: Vec<f64> = z.iter().zip(x_c).map(|(a, b)| (a - b) / rho).collect();
    let exit = spec.ray_exit(x_c, &dir);
    if rho >= exit {
        return Ok(0.0);
    }
    let mut point = vec![0.0; d];
    let mut failure = None;
    let integrand = |w: f64| {
        for j in 0..d {
            point[j] = x_c[j] + (z[j] - x_c[j]) / w;
        }
        let f = spec.pdf(&point);
        if f == 0.0 {
            return 0.0;
        }
        let mu = match spec.ball_measure(x_c, rho / w) {
            Ok(m) => m,
            Err(e) => {
                failure.get_or_insert(e);
                return 0.0;
            }
        };
        f / w.powi(d as i32) * neighbour_weight(mu, k, n)
    };
    let w_breaks: Vec<f64> = spec.measure_breaks(x_c).into_iter().filter(|&b| b > 0.0).map(|b| rho / b).collect();
    let breaks = breaks_between(w_breaks, rho / exit, 1.0);
    let q = integrate_with_breaks(integrand, &breaks, &quad_opts());
    match failure {
        Some(e) => Err(e),
        None => Ok(q.value),
    }
}

/// One SMOTE draw given `x_c`, simulated literally: `n - 1` fresh points
/// from `spec`, a uniform pick among the `k` nearest, a uniform weight.
pub fn literal_conditional_draw(
    spec: &dyn DensitySpec,
    x_c: &[f64],
    k: usize,
    n: usize,
    rng: &mut Stream,
    out: &mut [f64],
) {
    let d = spec.dim();
    let mut pts = vec![0.0; (n - 1) * d];
    let mut dist: Vec<(f64, usize)> = Vec::with_capacity(n - 1);
    for (i, p) in pts.chunks_mut(d).enumerate() {
        spec.sample_into(rng, p);
        dist.push((crate::matrix::squared_distance(p, x_c), i));
    }
    let j = rng.random_range(0..k);
    dist.select_nth_unstable_by(j, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let chosen = &pts[dist[j].1 * d..(dist[j].1 + 1) * d];
    let w: f64 = rng.random();
    for t in 0..d {
        out[t] = x_c[t] + w * (chosen[t] - x_c[t]);
    }
}

/// Exact sampler for a SMOTE point given `x_c` that avoids drawing the
/// `n - 1` other points: the ball measure at the `j`-th nearest neighbour
/// is `Beta(j, n - j)`, which is inverted to a radius, then a point on that
/// sphere is drawn from the base density.
pub struct ConditionalSampler<'a> {
    spec: &'a dyn DensitySpec,
    x_c: Vec<f64>,
    k: usize,
    betas: Vec<Beta<f64>>,
}

impl<'a> ConditionalSampler<'a> {
    pub fn new(spec: &'a dyn DensitySpec, x_c: &[f64], k: usize, n: usize) -> Result<Self> {
        if n < 2 || k == 0 || k > n - 1 {
            return Err(Error::InvalidK { k, max: n.saturating_sub(1) });
        }
        if x_c.len() != spec.dim() {
            return Err(Error::ShapeMismatch {
                expected: format!("dimension {}", spec.dim()),
                found: x_c.len().to_string(),
            });
        }
        spec.ball_measure(x_c, 1.0)?;
        let betas = (1..=k)
            .map(|j| Beta::new(j as f64, (n - j) as f64).map_err(|e| Error::Domain(e.to_string())))
            .collect::<Result<_>>()?;
        Ok(ConditionalSampler {
            spec,
            x_c: x_c.to_vec(),
            k,
            betas,
        })
    }

    /// Smallest radius whose ball measure around `x_c` reaches `u`.
    fn invert_measure(&self, u: f64) -> f64 {
        let mut lo = 0.0;
        let mut hi = 2.0 * self.spec.support_radius() + crate::matrix::norm(&self.x_c);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if !(mid > lo && mid < hi) {
                break;
            }
            if self.spec.ball_measure(&self.x_c, mid).unwrap_or(1.0) >= u {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    fn neighbour_radius(&self, rng: &mut Stream) -> f64 {
        let j = rng.random_range(0..self.k);
        let u = self.betas[j].sample(rng);
        self.invert_measure(u)
    }

    /// `‖Z - x_c‖` only.
    pub fn draw_distance(&self, rng: &mut Stream) -> f64 {
        let r = self.neighbour_radius(rng);
        let w: f64 = rng.random();
        w * r
    }

    pub fn draw_into(&self, rng: &mut Stream, out: &mut [f64]) {
        let r = self.neighbour_radius(rng);
        let mut nb = vec![0.0; self.x_c.len()];
        self.spec.sphere_point_into(&self.x_c, r, rng, &mut nb);
        let w: f64 = rng.random();
        for t in 0..out.len() {
            out[t] = self.x_c[t] + w * (nb[t] - self.x_c[t]);
        }
    }
}
