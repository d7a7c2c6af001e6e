//! Regular-grid histogram density estimates with binomial standard errors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// A regular axis-aligned grid: `bins[j]` equal cells on `[lo[j], hi[j])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub bins: Vec<usize>,
}

impl BinSpec {
    pub fn uniform(d: usize, lo: f64, hi: f64, bins: usize) -> Self {
        BinSpec {
            lo: vec![lo; d],
            hi: vec![hi; d],
            bins: vec![bins; d],
        }
    }

    fn validate(&self) -> Result<()> {
        let d = self.lo.len();
        if d == 0 || self.hi.len() != d || self.bins.len() != d {
            return Err(Error::InvalidConfig("bin spec dimensions disagree".into()));
        }
        if self.bins.iter().any(|&b| b == 0) || self.lo.iter().zip(&self.hi).any(|(a, b)| !(a < b)) {
            return Err(Error::InvalidConfig("degenerate histogram grid".into()));
        }
        Ok(())
    }

    pub fn cell_count(&self) -> usize {
        self.bins.iter().product()
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.lo.len()).map(|j| (self.hi[j] - self.lo[j]) / self.bins[j] as f64).product()
    }

    /// Flat cell index of `x`, or `None` outside the grid. The last cell in
    /// each direction is closed on the right.
    pub fn locate(&self, x: &[f64]) -> Option<usize> {
        let mut idx = 0;
        for j in 0..self.lo.len() {
            if !(x[j] >= self.lo[j] && x[j] <= self.hi[j]) {
                return None;
            }
            let w = (self.hi[j] - self.lo[j]) / self.bins[j] as f64;
            let b = (((x[j] - self.lo[j]) / w) as usize).min(self.bins[j] - 1);
            idx = idx * self.bins[j] + b;
        }
        Some(idx)
    }

    /// Lower and upper corner of a cell.
    pub fn cell_bounds(&self, cell: usize) -> (Vec<f64>, Vec<f64>) {
        let d = self.lo.len();
        let mut rest = cell;
        let mut lo = vec![0.0; d];
        let mut hi = vec![0.0; d];
        for j in (0..d).rev() {
            let b = rest % self.bins[j];
            rest /= self.bins[j];
            let w = (self.hi[j] - self.lo[j]) / self.bins[j] as f64;
            lo[j] = self.lo[j] + b as f64 * w;
            hi[j] = if b + 1 == self.bins[j] { self.hi[j] } else { self.lo[j] + (b + 1) as f64 * w };
        }
        (lo, hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub spec: BinSpec,
    pub counts: Vec<u64>,
    /// All samples, including those outside the grid.
    pub total: u64,
}

/// Minimum sample count accepted by [`Histogram::from_samples`].
pub const MIN_SAMPLES: usize = 1000;

impl Histogram {
    pub fn empty(spec: BinSpec) -> Result<Self> {
        spec.validate()?;
        let cells = spec.cell_count();
        Ok(Histogram {
            spec,
            counts: vec![0; cells],
            total: 0,
        })
    }

    pub fn from_samples(samples: &Matrix, spec: BinSpec) -> Result<Self> {
        if samples.rows() < MIN_SAMPLES {
            return Err(Error::TooSmall {
                needed: MIN_SAMPLES,
                found: samples.rows(),
            });
        }
        if samples.cols() != spec.lo.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} columns", spec.lo.len()),
                found: format!("{} columns", samples.cols()),
            });
        }
        let mut h = Histogram::empty(spec)?;
        for row in samples.iter_rows() {
            h.add(row);
        }
        Ok(h)
    }

    pub fn add(&mut self, x: &[f64]) {
        self.total += 1;
        if let Some(c) = self.spec.locate(x) {
            self.counts[c] += 1;
        }
    }

    pub fn merge(&mut self, other: &Histogram) {
        assert_eq!(self.spec, other.spec, "histograms on different grids");
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.total += other.total;
    }

    /// Estimated density in each cell: count / (total · cell volume).
    pub fn density(&self) -> Vec<f64> {
        let v = self.spec.cell_volume();
        let t = self.total.max(1) as f64;
        self.counts.iter().map(|&c| c as f64 / (t * v)).collect()
    }

    /// Binomial standard error of each cell density.
    pub fn standard_error(&self) -> Vec<f64> {
        let v = self.spec.cell_volume();
        let t = self.total.max(1) as f64;
        self.counts
            .iter()
            .map(|&c| {
                let p = c as f64 / t;
                (p * (1.0 - p) / t).sqrt() / v
            })
            .collect()
    }

    /// Total estimated mass on the grid.
    pub fn mass(&self) -> f64 {
        self.counts.iter().sum::<u64>() as f64 / self.total.max(1) as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    use crate::rng::Seed;

    fn column(v: Vec<f64>) -> Matrix {
        let n = v.len();
        Matrix::from_vec(n, 1, v).unwrap()
    }

    #[test]
    fn flat_uniform() {
        let mut rng = Seed(1).stream();
        let s = column((0..1_000_000).map(|_| rng.random::<f64>()).collect());
        let h = Histogram::from_samples(&s, BinSpec::uniform(1, 0.0, 1.0, 20)).unwrap();
        assert!((h.mass() - 1.0).abs() < 1e-12);
        for (d, se) in h.density().iter().zip(h.standard_error()) {
            assert!((d - 1.0).abs() <= 3.5 * se, "{d} ± {se}");
        }
    }

    #[test]
    fn single_spike() {
        let s = column(vec![0.37; 2000]);
        let h = Histogram::from_samples(&s, BinSpec::uniform(1, 0.0, 1.0, 10)).unwrap();
        let dens = h.density();
        assert_eq!(dens.iter().filter(|&&d| d > 0.0).count(), 1);
        assert!((dens[3] * 0.1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_against_pdf() {
        let mut rng = Seed(2).stream();
        let s = column((0..400_000).map(|_| rng.sample::<f64, _>(StandardNormal)).collect());
        let spec = BinSpec::uniform(1, -2.0, 2.0, 16);
        let h = Histogram::from_samples(&s, spec.clone()).unwrap();
        let pdf = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let mut ok = 0;
        for (c, (d, se)) in h.density().iter().zip(h.standard_error()).enumerate() {
            let (lo, hi) = spec.cell_bounds(c);
            // cell average of the pdf by Simpson's rule
            let avg = (pdf(lo[0]) + 4.0 * pdf(0.5 * (lo[0] + hi[0])) + pdf(hi[0])) / 6.0;
            if (d - avg).abs() <= 3.0 * se {
                ok += 1;
            }
        }
        assert!(ok >= 15, "{ok}/16 cells within 3 SE");
    }

    #[test]
    fn grid_errors() {
        assert!(Histogram::empty(BinSpec::uniform(1, 0.0, 1.0, 0)).is_err());
        assert!(Histogram::empty(BinSpec::uniform(1, 1.0, 1.0, 3)).is_err());
        let s = column(vec![0.5; 10]);
        assert!(matches!(
            Histogram::from_samples(&s, BinSpec::uniform(1, 0.0, 1.0, 3)),
            Err(Error::TooSmall { .. })
        ));
    }

    #[test]
    fn cell_geometry_two_dimensional() {
        let spec = BinSpec { lo: vec![0.0, 0.0], hi: vec![2.0, 1.0], bins: vec![4, 2] };
        let c = spec.locate(&[1.2, 0.7]).unwrap();
        let (lo, hi) = spec.cell_bounds(c);
        assert_eq!((lo, hi), (vec![1.0, 0.5], vec![1.5, 1.0]));
        assert_eq!(spec.locate(&[2.0, 1.0]), Some(7));
        assert_eq!(spec.locate(&[2.1, 0.0]), None);
    }
}
