//! Base densities, the SMOTE conditional density, Monte-Carlo estimates and
//! the tail / boundary bound checks built on them.

mod agreement;
mod bounds;
mod conditional;
mod histogram;
mod regeneration;

pub use agreement::{density_agreement, DensityAgreement};
pub use bounds::{
    boundary_bound, boundary_coefficient, characteristic_distance_check, tail_bound, tail_bound_check,
    tail_eta, boundary_check, BoundReport,
};
pub use conditional::{
    smote_conditional_density, smote_conditional_density_w, ConditionalSampler, literal_conditional_draw,
};
pub use histogram::{BinSpec, Histogram};
pub use regeneration::{energy_distance, energy_permutation_test, regeneration_distance, PermutationTest, RegenerationPoint};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::Stream;
use crate::specfun::ln_gamma;

/// Volume of the unit ball in `d` dimensions.
pub fn unit_ball_volume(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    (h * std::f64::consts::PI.ln() - ln_gamma(h + 1.0)).exp()
}

/// A base density with bounded support, as needed by the SMOTE density
/// formula: pointwise evaluation, ball measures and sampling.
pub trait DensitySpec: Send + Sync {
    fn dim(&self) -> usize;
    fn pdf(&self, x: &[f64]) -> f64;
    /// Probability mass of the closed ball `B(center, radius)`.
    fn ball_measure(&self, center: &[f64], radius: f64) -> Result<f64>;
    /// `R` such that the support lies inside `B(0, R)`.
    fn support_radius(&self) -> f64;
    /// `(C1, C2)` with `C1 <= f <= C2` on the support.
    fn density_bounds(&self) -> (f64, f64);
    /// Distance from `origin` (inside the support) to the support boundary
    /// along the unit vector `dir`.
    fn ray_exit(&self, origin: &[f64], dir: &[f64]) -> f64;
    /// Radii at which `r -> ball_measure(center, r)` is not smooth.
    fn measure_breaks(&self, center: &[f64]) -> Vec<f64>;
    fn sample_into(&self, rng: &mut Stream, out: &mut [f64]);
    fn volume(&self) -> f64;

    fn contains(&self, x: &[f64]) -> bool {
        self.pdf(x) > 0.0
    }

    fn sample(&self, n: usize, rng: &mut Stream) -> Matrix {
        let d = self.dim();
        let mut data = vec![0.0; n * d];
        for row in data.chunks_mut(d) {
            self.sample_into(rng, row);
        }
        Matrix::from_vec(n, d, data).expect("shape is consistent")
    }

    /// Point on the sphere `S(center, r)` drawn with density proportional to
    /// `f` restricted to the sphere. Exact for uniform densities, which are
    /// the only ones provided here.
    fn sphere_point_into(&self, center: &[f64], r: f64, rng: &mut Stream, out: &mut [f64]) {
        let d = self.dim();
        let mut dir = vec![0.0; d];
        for _ in 0..10_000_000 {
            random_direction(rng, &mut dir);
            for j in 0..d {
                out[j] = center[j] + r * dir[j];
            }
            if self.contains(out) {
                return;
            }
        }
        out.copy_from_slice(center);
    }
}

pub(crate) fn random_direction(rng: &mut Stream, dir: &mut [f64]) {
    if dir.len() == 1 {
        dir[0] = if rng.random::<bool>() { 1.0 } else { -1.0 };
        return;
    }
    loop {
        let mut s = 0.0;
        for v in dir.iter_mut() {
            *v = rng.sample(StandardNormal);
            s += *v * *v;
        }
        if s > 1e-300 {
            let s = s.sqrt();
            dir.iter_mut().for_each(|v| *v /= s);
            return;
        }
    }
}

/// Uniform law on an axis-aligned box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl UniformBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() || lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return Err(Error::InvalidConfig("box needs lo < hi in every coordinate".into()));
        }
        Ok(UniformBox { lo, hi })
    }

    /// `[lo, hi]^d`.
    pub fn cube(d: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; d], vec![hi; d])
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }
}

impl DensitySpec for UniformBox {
    fn dim(&self) -> usize {
        self.lo.len()
    }

    fn pdf(&self, x: &[f64]) -> f64 {
        let inside = x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (a, b))| *a <= *v && *v <= *b);
        if inside {
            1.0 / self.volume()
        } else {
            0.0
        }
    }

    fn ball_measure(&self, center: &[f64], radius: f64) -> Result<f64> {
        if radius <= 0.0 {
            return Ok(0.0);
        }
        let area = match self.dim() {
            1 => ((center[0] + radius).min(self.hi[0]) - (center[0] - radius).max(self.lo[0])).max(0.0),
            2 => box_disk_area(center, radius, &self.lo, &self.hi),
            d => return Err(Error::Unsupported(format!("box ball measure in {d} dimensions"))),
        };
        Ok((area / self.volume()).clamp(0.0, 1.0))
    }

    fn support_radius(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| a.abs().max(b.abs()).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    fn density_bounds(&self) -> (f64, f64) {
        let v = 1.0 / self.volume();
        (v, v)
    }

    fn ray_exit(&self, origin: &[f64], dir: &[f64]) -> f64 {
        let mut t = f64::INFINITY;
        for j in 0..self.dim() {
            if dir[j] > 0.0 {
                t = t.min((self.hi[j] - origin[j]) / dir[j]);
            } else if dir[j] < 0.0 {
                t = t.min((self.lo[j] - origin[j]) / dir[j]);
            }
        }
        t.max(0.0)
    }

    fn measure_breaks(&self, center: &[f64]) -> Vec<f64> {
        let mut out = Vec::new();
        for j in 0..self.dim() {
            out.push((center[j] - self.lo[j]).abs());
            out.push((self.hi[j] - center[j]).abs());
        }
        if self.dim() == 2 {
            for &x in &[self.lo[0], self.hi[0]] {
                for &y in &[self.lo[1], self.hi[1]] {
                    out.push(((x - center[0]).powi(2) + (y - center[1]).powi(2)).sqrt());
                }
            }
        }
        out
    }

    fn sample_into(&self, rng: &mut Stream, out: &mut [f64]) {
        for j in 0..self.dim() {
            out[j] = self.lo[j] + (self.hi[j] - self.lo[j]) * rng.random::<f64>();
        }
    }

    fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }
}

/// `∫_{u}^{v} sqrt(r² - t²) dt` for `-r <= u <= v <= r`.
fn half_chord_integral(r: f64, u: f64, v: f64) -> f64 {
    let f = |x: f64| {
        let x = x.clamp(-r, r);
        0.5 * (x * (r * r - x * x).max(0.0).sqrt() + r * r * (x / r).clamp(-1.0, 1.0).asin())
    };
    f(v) - f(u)
}

/// Area of `{ |p| <= r, p.x <= x, p.y <= y }` (disk centred at the origin).
fn disk_quadrant(r: f64, x: f64, y: f64) -> f64 {
    if x <= -r || y <= -r {
        return 0.0;
    }
    let top = x.min(r);
    let mut area = 0.0;
    let mut piece = |lo: f64, hi: f64, f: &dyn Fn(f64, f64) -> f64| {
        let hi = hi.min(top);
        if hi > lo {
            area += f(lo, hi);
        }
    };
    if y >= r {
        piece(-r, r, &|a, b| 2.0 * half_chord_integral(r, a, b));
    } else {
        let x0 = (r * r - y * y).sqrt();
        let cap = |a: f64, b: f64| y * (b - a) + half_chord_integral(r, a, b);
        if y >= 0.0 {
            let full = |a: f64, b: f64| 2.0 * half_chord_integral(r, a, b);
            piece(-r, -x0, &full);
            piece(-x0, x0, &cap);
            piece(x0, r, &full);
        } else {
            piece(-x0, x0, &cap);
        }
    }
    area
}

/// Exact area of a disk intersected with an axis-aligned rectangle.
pub fn box_disk_area(center: &[f64], r: f64, lo: &[f64], hi: &[f64]) -> f64 {
    let (x0, x1) = (lo[0] - center[0], hi[0] - center[0]);
    let (y0, y1) = (lo[1] - center[1], hi[1] - center[1]);
    let a = disk_quadrant(r, x1, y1) - disk_quadrant(r, x0, y1) - disk_quadrant(r, x1, y0) + disk_quadrant(r, x0, y0);
    a.max(0.0)
}

/// Uniform law on the ball `B(0, R)`, `d` in 1..=3.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformBall {
    d: usize,
    radius: f64,
}

impl UniformBall {
    pub fn new(d: usize, radius: f64) -> Result<Self> {
        if !(1..=3).contains(&d) {
            return Err(Error::Unsupported(format!("uniform ball in {d} dimensions")));
        }
        if !(radius > 0.0) {
            return Err(Error::InvalidConfig("ball radius must be positive".into()));
        }
        Ok(UniformBall { d, radius })
    }
}

/// Volume of `B(0, big) ∩ B(c, small)` where `|c| = s`, in `d` = 1, 2, 3.
fn ball_lens(d: usize, s: f64, r: f64, big: f64) -> f64 {
    let full = |x: f64| unit_ball_volume(d) * x.powi(d as i32);
    if s + r <= big {
        return full(r);
    }
    if s + big <= r {
        return full(big);
    }
    if s >= r + big {
        return 0.0;
    }
    match d {
        1 => (s + r).min(big) - (s - r).max(-big),
        2 => {
            let a1 = ((s * s + r * r - big * big) / (2.0 * s * r)).clamp(-1.0, 1.0).acos();
            let a2 = ((s * s + big * big - r * r) / (2.0 * s * big)).clamp(-1.0, 1.0).acos();
            let k = ((-s + r + big) * (s + r - big) * (s - r + big) * (s + r + big)).max(0.0).sqrt();
            r * r * a1 + big * big * a2 - 0.5 * k
        }
        3 => {
            std::f64::consts::PI * (big + r - s).powi(2)
                * (s * s + 2.0 * s * r - 3.0 * r * r + 2.0 * s * big + 6.0 * r * big - 3.0 * big * big)
                / (12.0 * s)
        }
        _ => unreachable!("dimension checked at construction"),
    }
}

impl DensitySpec for UniformBall {
    fn dim(&self) -> usize {
        self.d
    }

    fn pdf(&self, x: &[f64]) -> f64 {
        if crate::matrix::norm(x) <= self.radius {
            1.0 / self.volume()
        } else {
            0.0
        }
    }

    fn ball_measure(&self, center: &[f64], radius: f64) -> Result<f64> {
        if radius <= 0.0 {
            return Ok(0.0);
        }
        let s = crate::matrix::norm(center);
        Ok((ball_lens(self.d, s, radius, self.radius) / self.volume()).clamp(0.0, 1.0))
    }

    fn support_radius(&self) -> f64 {
        self.radius
    }

    fn density_bounds(&self) -> (f64, f64) {
        let v = 1.0 / self.volume();
        (v, v)
    }

    fn ray_exit(&self, origin: &[f64], dir: &[f64]) -> f64 {
        // |o + t u|² = R² with |u| = 1
        let b: f64 = origin.iter().zip(dir).map(|(o, u)| o * u).sum();
        let c: f64 = origin.iter().map(|o| o * o).sum::<f64>() - self.radius * self.radius;
        (-b + (b * b - c).max(0.0).sqrt()).max(0.0)
    }

    fn measure_breaks(&self, center: &[f64]) -> Vec<f64> {
        let s = crate::matrix::norm(center);
        vec![(self.radius - s).abs(), self.radius + s]
    }

    fn sample_into(&self, rng: &mut Stream, out: &mut [f64]) {
        random_direction(rng, out);
        let u: f64 = rng.random();
        let r = self.radius * u.powf(1.0 / self.d as f64);
        out.iter_mut().for_each(|v| *v *= r);
    }

    fn volume(&self) -> f64 {
        unit_ball_volume(self.d) * self.radius.powi(self.d as i32)
    }
}
