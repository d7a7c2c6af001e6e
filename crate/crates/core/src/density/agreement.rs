//! Quadrature conditional density against a Monte-Carlo histogram of SMOTE
//! draws with the same central point.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::conditional::{literal_conditional_draw, smote_conditional_density, ConditionalSampler};
use super::histogram::{BinSpec, Histogram};
use super::DensitySpec;
use crate::error::{Error, Result};
use crate::quadrature::{integrate_with_breaks, QuadOptions};
use crate::rng::Seed;

const CHUNK: usize = 10_000;

/// Per-bin comparison of the histogram with the bin-averaged density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityAgreement {
    pub x_c: Vec<f64>,
    pub k: usize,
    pub n: usize,
    pub draws: u64,
    /// Bin-averaged quadrature density per cell (`NaN` for skipped cells).
    pub expected: Vec<f64>,
    pub observed: Vec<f64>,
    pub standard_error: Vec<f64>,
    pub compared: usize,
    pub within: usize,
    /// Fraction of compared cells within three standard errors.
    pub fraction_within: f64,
    /// `∫ density` over the support (1-D only).
    pub quadrature_mass: Option<f64>,
}

fn cell_opts() -> QuadOptions {
    QuadOptions {
        abs_tol: 1e-9,
        rel_tol: 1e-9,
        max_intervals: 400,
    }
}

/// Average of the density over a 1-D cell, split at `x_c` when inside.
fn cell_average_1d(lo: f64, hi: f64, x_c: f64, k: usize, n: usize, spec: &dyn DensitySpec) -> Result<f64> {
    let mut failure = None;
    let f = |z: f64| match smote_conditional_density(&[z], &[x_c], k, n, spec) {
        Ok(v) => v,
        Err(Error::Singularity) => 0.0,
        Err(e) => {
            failure.get_or_insert(e);
            0.0
        }
    };
    let breaks: Vec<f64> = if x_c > lo && x_c < hi { vec![lo, x_c, hi] } else { vec![lo, hi] };
    let q = integrate_with_breaks(f, &breaks, &cell_opts());
    match failure {
        Some(e) => Err(e),
        None => Ok(q.value / (hi - lo)),
    }
}

/// Average over a cell in `d >= 2` by a `4^d` midpoint subgrid.
fn cell_average_nd(lo: &[f64], hi: &[f64], x_c: &[f64], k: usize, n: usize, spec: &dyn DensitySpec) -> Result<f64> {
    let d = lo.len();
    let sub = 4usize;
    let total = sub.pow(d as u32);
    let mut z = vec![0.0; d];
    let mut acc = 0.0;
    for idx in 0..total {
        let mut rest = idx;
        for j in 0..d {
            let b = rest % sub;
            rest /= sub;
            z[j] = lo[j] + (b as f64 + 0.5) * (hi[j] - lo[j]) / sub as f64;
        }
        acc += smote_conditional_density(&z, x_c, k, n, spec)?;
    }
    Ok(acc / total as f64)
}

/// Compare `draws` SMOTE points given `x_c` (simulated literally when
/// `literal`, else with [`ConditionalSampler`]) with the quadrature density
/// on `grid`. In `d >= 2` the cell holding `x_c` is skipped, as the density
/// is singular there; the standard error of each cell is the binomial one
/// under the expected cell probability.
pub fn density_agreement(
    spec: &dyn DensitySpec,
    x_c: &[f64],
    k: usize,
    n: usize,
    grid: &BinSpec,
    draws: usize,
    literal: bool,
    seed: Seed,
) -> Result<DensityAgreement> {
    let d = spec.dim();
    if grid.lo.len() != d || x_c.len() != d {
        return Err(Error::ShapeMismatch {
            expected: format!("dimension {d}"),
            found: format!("grid {} / x_c {}", grid.lo.len(), x_c.len()),
        });
    }
    if draws < super::histogram::MIN_SAMPLES {
        return Err(Error::TooSmall {
            needed: super::histogram::MIN_SAMPLES,
            found: draws,
        });
    }
    let sampler = ConditionalSampler::new(spec, x_c, k, n)?;
    let chunks = draws.div_ceil(CHUNK);
    let parts: Vec<Result<Histogram>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut h = Histogram::empty(grid.clone())?;
            let mut rng = seed.derive(c as u64).stream();
            let mut z = vec![0.0; d];
            for _ in 0..CHUNK.min(draws - c * CHUNK) {
                if literal {
                    literal_conditional_draw(spec, x_c, k, n, &mut rng, &mut z);
                } else {
                    sampler.draw_into(&mut rng, &mut z);
                }
                h.add(&z);
            }
            Ok(h)
        })
        .collect();
    let mut hist = Histogram::empty(grid.clone())?;
    for p in parts {
        hist.merge(&p?);
    }
    let observed = hist.density();
    let cells = grid.cell_count();
    let volume = grid.cell_volume();
    let expected: Vec<Result<f64>> = (0..cells)
        .into_par_iter()
        .map(|cell| {
            let (lo, hi) = grid.cell_bounds(cell);
            if d == 1 {
                cell_average_1d(lo[0], hi[0], x_c[0], k, n, spec)
            } else if (0..d).all(|j| x_c[j] >= lo[j] && x_c[j] <= hi[j]) {
                Ok(f64::NAN)
            } else {
                cell_average_nd(&lo, &hi, x_c, k, n, spec)
            }
        })
        .collect();
    let expected: Vec<f64> = expected.into_iter().collect::<Result<_>>()?;
    let total = hist.total as f64;
    let mut standard_error = vec![f64::NAN; cells];
    let (mut compared, mut within) = (0, 0);
    for c in 0..cells {
        if expected[c].is_nan() {
            continue;
        }
        let p = (expected[c] * volume).clamp(0.0, 1.0);
        let se = (p * (1.0 - p) / total).sqrt() / volume;
        standard_error[c] = se;
        compared += 1;
        if (observed[c] - expected[c]).abs() <= 3.0 * se {
            within += 1;
        }
    }
    let quadrature_mass = if d == 1 {
        let lo = grid.lo[0].min(x_c[0] - 2.0 * spec.support_radius());
        let hi = grid.hi[0].max(x_c[0] + 2.0 * spec.support_radius());
        let mut failure = None;
        let f = |z: f64| match smote_conditional_density(&[z], x_c, k, n, spec) {
            Ok(v) => v,
            Err(Error::Singularity) => 0.0,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        };
        let mut breaks = vec![lo, x_c[0], hi];
        breaks.extend(spec.measure_breaks(x_c).iter().flat_map(|b| [x_c[0] - b, x_c[0] + b]));
        breaks.retain(|b| *b >= lo && *b <= hi);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let q = integrate_with_breaks(f, &breaks, &cell_opts());
        if let Some(e) = failure {
            return Err(e);
        }
        Some(q.value)
    } else {
        None
    };
    Ok(DensityAgreement {
        x_c: x_c.to_vec(),
        k,
        n,
        draws: hist.total,
        expected,
        observed,
        standard_error,
        compared,
        within,
        fraction_within: within as f64 / compared.max(1) as f64,
        quadrature_mass,
    })
}
