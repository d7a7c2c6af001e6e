//! Monte-Carlo checks of the distance-to-centre and boundary bounds.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{unit_ball_volume, ConditionalSampler, DensitySpec, UniformBall};
use crate::error::{Error, Result};
use crate::matrix::norm;
use crate::rng::Seed;
use crate::samplers::smote_matrix;

/// Draws per parallel chunk; fixed so results do not depend on threads.
const CHUNK: usize = 10_000;

/// Outcome of comparing a Monte-Carlo estimate with a theoretical bound.
///
/// `pass` is `empirical <= bound + margin` with `margin` three standard
/// errors. A bound whose hypotheses do not hold is reported with
/// `applicable = false` and counts as passing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub name: String,
    pub bound: f64,
    pub empirical: f64,
    pub standard_error: f64,
    pub margin: f64,
    pub draws: u64,
    pub applicable: bool,
    pub pass: bool,
    pub note: String,
}

impl BoundReport {
    pub fn checked(name: impl Into<String>, bound: f64, empirical: f64, standard_error: f64, draws: u64) -> Self {
        let margin = 3.0 * standard_error;
        BoundReport {
            name: name.into(),
            bound,
            empirical,
            standard_error,
            margin,
            draws,
            applicable: true,
            pass: empirical <= bound + margin,
            note: String::new(),
        }
    }

    pub fn inapplicable(name: impl Into<String>, bound: f64, note: impl Into<String>) -> Self {
        BoundReport {
            name: name.into(),
            bound,
            empirical: f64::NAN,
            standard_error: f64::NAN,
            margin: f64::NAN,
            draws: 0,
            applicable: false,
            pass: true,
            note: note.into(),
        }
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }
}

fn frequency(hits: u64, draws: u64) -> (f64, f64) {
    let p = hits as f64 / draws as f64;
    (p, (p * (1.0 - p) / draws as f64).sqrt())
}

/// Count events over `draws` trials split into fixed chunks, each chunk
/// with its own derived stream.
fn count_events<F>(draws: usize, seed: Seed, event: F) -> u64
where
    F: Fn(&mut crate::rng::Stream) -> bool + Sync,
{
    let chunks = draws.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = seed.derive(c as u64).stream();
            let len = CHUNK.min(draws - c * CHUNK);
            (0..len).filter(|_| event(&mut rng)).count() as u64
        })
        .sum()
}

/// The constant in front of the exponential in the tail bound.
pub fn tail_eta(alpha: f64, d: usize, c2: f64, radius: f64) -> f64 {
    let base = c2 * unit_ball_volume(d) * radius.powi(d as i32);
    let t = 2.0 * radius / alpha;
    if d == 1 {
        base * t.ln()
    } else {
        base * (t.powi(d as i32 - 1) - 1.0) / (d as f64 - 1.0)
    }
}

/// Upper bound on `P(‖Z - X_c‖ >= α | X_c = x_c)`, or `None` when
/// `K > (n-1) μ(B(x_c, α))` or `α` is outside `(0, 2R)`.
pub fn tail_bound(alpha: f64, x_c: &[f64], k: usize, n: usize, spec: &dyn DensitySpec) -> Result<Option<f64>> {
    let radius = spec.support_radius();
    if !(alpha > 0.0 && alpha < 2.0 * radius) {
        return Ok(None);
    }
    let mu = spec.ball_measure(x_c, alpha)?;
    let kn = k as f64 / (n - 1) as f64;
    if kn > mu {
        return Ok(None);
    }
    let (_, c2) = spec.density_bounds();
    let eta = tail_eta(alpha, spec.dim(), c2, radius);
    Ok(Some(eta * (-2.0 * (n - 1) as f64 * (mu - kn).powi(2)).exp()))
}

/// Empirical `P(‖Z - X_c‖ >= α | X_c = x_c)` over `draws` exact draws,
/// against [`tail_bound`].
pub fn tail_bound_check(
    alpha: f64,
    x_c: &[f64],
    k: usize,
    n: usize,
    spec: &dyn DensitySpec,
    draws: usize,
    seed: Seed,
) -> Result<BoundReport> {
    let name = format!("tail alpha={alpha} k={k} n={n}");
    let Some(bound) = tail_bound(alpha, x_c, k, n, spec)? else {
        return Ok(BoundReport::inapplicable(name, f64::NAN, "K exceeds (n-1) mu(B(x_c, alpha)) or alpha outside (0, 2R)"));
    };
    let sampler = ConditionalSampler::new(spec, x_c, k, n)?;
    let hits = count_events(draws, seed, |rng| sampler.draw_distance(rng) >= alpha);
    let (p, se) = frequency(hits, draws as u64);
    Ok(BoundReport::checked(name, bound, p, se, draws as u64))
}

/// Frequency of `‖Z - X_c‖ > 12 R (K/n)^γ` for unconditional SMOTE draws,
/// against `(K/n)^(2/d - 2γ)`. Returns the distance form first and the
/// squared-distance form second; both use the same draws.
pub fn characteristic_distance_check(
    spec: &dyn DensitySpec,
    k: usize,
    n: usize,
    gamma: f64,
    draws: usize,
    seed: Seed,
) -> Result<[BoundReport; 2]> {
    let d = spec.dim();
    if d < 2 || !(gamma > 0.0 && gamma < 1.0 / d as f64) {
        return Err(Error::InvalidConfig(format!("need d >= 2 and gamma in (0, 1/d), got d={d} gamma={gamma}")));
    }
    let ratio = k as f64 / n as f64;
    let threshold = 12.0 * spec.support_radius() * ratio.powf(gamma);
    let bound = ratio.powf(2.0 / d as f64 - 2.0 * gamma);
    let chunks = draws.div_ceil(CHUNK);
    let counts: Vec<Result<(u64, u64)>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = seed.derive(c as u64).stream();
            let len = CHUNK.min(draws - c * CHUNK);
            let mut x_c = vec![0.0; d];
            let (mut plain, mut squared) = (0u64, 0u64);
            for _ in 0..len {
                spec.sample_into(&mut rng, &mut x_c);
                let s = ConditionalSampler::new(spec, &x_c, k, n)?;
                let r = s.draw_distance(&mut rng);
                plain += u64::from(r > threshold);
                squared += u64::from(r * r > threshold);
            }
            Ok((plain, squared))
        })
        .collect();
    let (mut plain, mut squared) = (0, 0);
    for c in counts {
        let (a, b) = c?;
        plain += a;
        squared += b;
    }
    let (p1, s1) = frequency(plain, draws as u64);
    let (p2, s2) = frequency(squared, draws as u64);
    Ok([
        BoundReport::checked(format!("characteristic distance k={k} n={n}"), bound, p1, s1, draws as u64)
            .with_note(format!("event |Z - X_c| > {threshold}")),
        BoundReport::checked(format!("characteristic squared distance k={k} n={n}"), bound, p2, s2, draws as u64)
            .with_note(format!("event |Z - X_c|^2 > {threshold}")),
    ])
}

/// `C2^{3/2} 2^{d+2} c_d^{1/2} / (d^{1/2} K)`: the boundary bound is this
/// times `(n - 1) (ε/R)^{1/4}`.
pub fn boundary_coefficient(d: usize, c2: f64, k: usize) -> f64 {
    c2.powf(1.5) * 2f64.powi(d as i32 + 2) * unit_ball_volume(d).sqrt() / (d as f64).sqrt() / k as f64
}

pub fn boundary_bound(d: usize, c2: f64, radius: f64, n: usize, k: usize, eps: f64) -> f64 {
    boundary_coefficient(d, c2, k) * (n - 1) as f64 * (eps / radius).powf(0.25)
}

/// Average SMOTE density in the shell `B(0,R) \ B(0,R-ε)` for each `ε`,
/// estimated from `datasets` independent minority samples of size `n`
/// with `per_dataset` SMOTE points each, against the boundary bound.
pub fn boundary_check(
    spec: &UniformBall,
    eps: &[f64],
    k: usize,
    n: usize,
    datasets: usize,
    per_dataset: usize,
    seed: Seed,
) -> Result<Vec<BoundReport>> {
    let d = spec.dim();
    if d < 2 {
        return Err(Error::Unsupported("boundary bound needs d > 1".into()));
    }
    if datasets < 2 {
        return Err(Error::TooSmall { needed: 2, found: datasets });
    }
    let radius = spec.support_radius();
    let (_, c2) = spec.density_bounds();
    let limit = unit_ball_volume(d) / (2f64.sqrt() * d as f64 * c2);
    let shell_volume = |e: f64| unit_ball_volume(d) * radius.powi(d as i32) * -((d as f64) * (-e / radius).ln_1p()).exp_m1();
    let per_set: Vec<Result<Vec<f64>>> = (0..datasets)
        .into_par_iter()
        .map(|t| {
            let s = seed.derive(t as u64);
            let x = spec.sample(n, &mut s.derive(0).stream());
            let z = smote_matrix(&x, k, per_dataset, s.derive(1))?;
            let radii: Vec<f64> = z.points.iter_rows().map(norm).collect();
            Ok(eps
                .iter()
                .map(|&e| {
                    if e <= 0.0 {
                        return 0.0;
                    }
                    let inner = radius - e;
                    let c = radii.iter().filter(|&&r| r > inner && r <= radius).count();
                    c as f64 / (per_dataset as f64 * shell_volume(e))
                })
                .collect())
        })
        .collect();
    let per_set: Vec<Vec<f64>> = per_set.into_iter().collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(eps.len());
    for (i, &e) in eps.iter().enumerate() {
        let name = format!("boundary eps={e} k={k} n={n}");
        if !(e >= 0.0 && e < radius) || (e / radius).sqrt() > limit {
            out.push(BoundReport::inapplicable(name, f64::NAN, "eps outside the range of the boundary bound"));
            continue;
        }
        let vals: Vec<f64> = per_set.iter().map(|v| v[i]).collect();
        let m = vals.iter().sum::<f64>() / datasets as f64;
        let var = vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (datasets - 1) as f64;
        let se = (var / datasets as f64).sqrt();
        let bound = boundary_bound(d, c2, radius, n, k, e);
        out.push(BoundReport::checked(name, bound, m, se, (datasets * per_dataset) as u64));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::UniformBox;

    #[test]
    fn eta_on_the_square() {
        let spec = UniformBox::cube(2, -3.0, 3.0).unwrap();
        let r = spec.support_radius();
        let eta = tail_eta(1.0, 2, 1.0 / 36.0, r);
        let by_hand = std::f64::consts::PI * 18.0 / 36.0 * (2.0 * r - 1.0);
        assert!((eta - by_hand).abs() < 1e-12);
        assert!((eta - 11.757).abs() < 1e-3);
        assert!(tail_eta(2.0 * r, 2, 1.0 / 36.0, r).abs() < 1e-12);
        assert!((tail_eta(0.5, 1, 1.0, 1.0) - 2.0 * 4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn coefficient_three_ball() {
        let c2 = 1.0 / unit_ball_volume(3);
        let c = boundary_coefficient(3, c2, 5);
        assert!((0.88..=0.89).contains(&c), "{c}");
        assert_eq!(boundary_bound(3, c2, 1.0, 100, 5, 0.0), 0.0);
    }

    #[test]
    fn report_pass_flag() {
        assert!(BoundReport::checked("a", 1.0, 1.2, 0.1, 10).pass);
        assert!(!BoundReport::checked("a", 1.0, 1.4, 0.1, 10).pass);
        let r = BoundReport::inapplicable("b", 0.0, "x");
        assert!(r.pass && !r.applicable);
    }

    #[test]
    fn tail_precondition() {
        let spec = UniformBox::cube(2, -3.0, 3.0).unwrap();
        // μ(B(0, 0.1)) ≈ 8.7e-4 < 5/99
        let r = tail_bound_check(0.1, &[0.0, 0.0], 5, 100, &spec, 100, Seed(1)).unwrap();
        assert!(!r.applicable);
        let r = tail_bound_check(1.0, &[0.0, 0.0], 5, 1000, &spec, 20_000, Seed(1)).unwrap();
        assert!(r.applicable && r.pass, "{r:?}");
    }
}
