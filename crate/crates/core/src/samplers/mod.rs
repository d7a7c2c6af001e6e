//! Rebalancing strategies.
//!
//! Every strategy works on a [`Dataset`] whose minority class is label 1
//! and returns a [`Rebalanced`] training set. Synthetic points are appended
//! after the original rows; sampling strategies keep rows in their
//! original order.

mod cv;
mod gaussian;
mod interpolation;
mod resample;

pub use cv::{cv_smote, cv_smote_grid, CvSmoteOutcome};
pub use gaussian::{gaussian_neighbourhood, mgs_matrix};
pub use interpolation::{borderline_smote, danger_set, interpolate, smote_matrix, BorderlineVariant};
pub use resample::{class_weights, nearmiss1, ros, rus, synthetic_quota, Resampled};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classify::ClassifierSpec;
use crate::dataset::{Dataset, MINORITY};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::{tag, Seed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyKind {
    None,
    ClassWeight,
    Rus,
    Ros,
    #[serde(rename = "nearmiss1")]
    NearMiss1,
    Smote,
    #[serde(rename = "borderline-smote1")]
    BorderlineSmote1,
    #[serde(rename = "borderline-smote2")]
    BorderlineSmote2,
    CvSmote,
    Mgs,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 10] = [
        StrategyKind::None,
        StrategyKind::ClassWeight,
        StrategyKind::Rus,
        StrategyKind::Ros,
        StrategyKind::NearMiss1,
        StrategyKind::Smote,
        StrategyKind::BorderlineSmote1,
        StrategyKind::BorderlineSmote2,
        StrategyKind::CvSmote,
        StrategyKind::Mgs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::None => "none",
            StrategyKind::ClassWeight => "class-weight",
            StrategyKind::Rus => "rus",
            StrategyKind::Ros => "ros",
            StrategyKind::NearMiss1 => "nearmiss1",
            StrategyKind::Smote => "smote",
            StrategyKind::BorderlineSmote1 => "borderline-smote1",
            StrategyKind::BorderlineSmote2 => "borderline-smote2",
            StrategyKind::CvSmote => "cv-smote",
            StrategyKind::Mgs => "mgs",
        }
    }

    /// Whether the strategy appends generated minority rows.
    pub fn is_synthetic(self) -> bool {
        matches!(
            self,
            StrategyKind::Smote
                | StrategyKind::BorderlineSmote1
                | StrategyKind::BorderlineSmote2
                | StrategyKind::CvSmote
                | StrategyKind::Mgs
        )
    }

    /// Neighbour count used when none is configured; `d` is the feature count.
    pub fn default_k(self, d: usize) -> Option<usize> {
        match self {
            StrategyKind::Smote | StrategyKind::BorderlineSmote1 | StrategyKind::BorderlineSmote2 => Some(5),
            StrategyKind::Mgs => Some(d + 1),
            StrategyKind::NearMiss1 => Some(3),
            _ => None,
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        let alias = match key.as_str() {
            "cw" => "class-weight",
            "bs1" | "borderline1" => "borderline-smote1",
            "bs2" | "borderline2" => "borderline-smote2",
            "nearmiss" | "near-miss1" => "nearmiss1",
            "cvsmote" => "cv-smote",
            other => other,
        };
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.name() == alias)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown strategy '{s}'")))
    }
}

/// How the neighbour count is derived from a sample size `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum KRule {
    Fixed(usize),
    Sqrt,
    Fraction(f64),
}

impl KRule {
    /// `⌊rule(n)⌋` clipped to `[1, n - 1]`.
    pub fn resolve(self, n: usize) -> Result<usize> {
        if n < 2 {
            return Err(Error::InvalidK { k: 1, max: n.saturating_sub(1) });
        }
        let raw = match self {
            KRule::Fixed(k) => k,
            KRule::Sqrt => (n as f64).sqrt().floor() as usize,
            KRule::Fraction(f) => (f * n as f64).floor() as usize,
        };
        Ok(raw.clamp(1, n - 1))
    }
}

impl fmt::Display for KRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KRule::Fixed(k) => write!(f, "{k}"),
            KRule::Sqrt => f.write_str("sqrt"),
            KRule::Fraction(x) => write!(f, "{x}n"),
        }
    }
}

impl FromStr for KRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("sqrt") || t.eq_ignore_ascii_case("sqrtn") {
            return Ok(KRule::Sqrt);
        }
        if let Some(frac) = t.strip_suffix('n') {
            return frac
                .parse::<f64>()
                .ok()
                .filter(|f| *f > 0.0 && *f < 1.0)
                .map(KRule::Fraction)
                .ok_or_else(|| Error::InvalidConfig(format!("bad K rule '{s}'")));
        }
        t.parse::<usize>()
            .ok()
            .filter(|&k| k >= 1)
            .map(KRule::Fixed)
            .ok_or_else(|| Error::InvalidConfig(format!("bad K rule '{s}'")))
    }
}

/// Where a generated point came from. Indices are rows of the input
/// dataset (or of the point matrix for the matrix-level functions).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Interpolation { central: usize, neighbor: usize, weight: f64 },
    Gaussian { central: usize, mean: Vec<f64>, cov_digest: String },
    Copy { source: usize },
}

impl Provenance {
    fn remap(&mut self, rows: &[usize]) {
        match self {
            Provenance::Interpolation { central, neighbor, .. } => {
                *central = rows[*central];
                *neighbor = rows[*neighbor];
            }
            Provenance::Gaussian { central, .. } => *central = rows[*central],
            Provenance::Copy { source } => *source = rows[*source],
        }
    }
}

/// Generated points with one provenance record each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticBatch {
    pub points: Matrix,
    pub provenance: Vec<Provenance>,
    /// Set when a strategy fell back to another generator (e.g. an empty
    /// Borderline SMOTE danger set).
    pub fallback: bool,
    pub warnings: Vec<String>,
}

impl SyntheticBatch {
    pub fn len(&self) -> usize {
        self.points.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.rows() == 0
    }

    pub(crate) fn remap(&mut self, rows: &[usize]) {
        for p in &mut self.provenance {
            p.remap(rows);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyConfig {
    pub kind: StrategyKind,
    /// Neighbour count; `None` uses [`StrategyKind::default_k`].
    pub k: Option<usize>,
    /// Borderline SMOTE danger-zone neighbour count.
    pub m: usize,
    /// Desired minority / majority ratio after rebalancing.
    pub target_ratio: f64,
    pub seed: Seed,
    /// CV-SMOTE folds.
    pub cv_folds: usize,
    /// CV-SMOTE inner classifier.
    pub cv_classifier: ClassifierSpec,
}

impl StrategyConfig {
    pub fn new(kind: StrategyKind, seed: impl Into<Seed>) -> Self {
        StrategyConfig {
            kind,
            k: None,
            m: 10,
            target_ratio: 1.0,
            seed: seed.into(),
            cv_folds: 5,
            cv_classifier: ClassifierSpec::default(),
        }
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = Some(k);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.target_ratio > 0.0 && self.target_ratio <= 1.0) {
            return Err(Error::InvalidConfig(format!("target ratio {} outside (0, 1]", self.target_ratio)));
        }
        if self.k == Some(0) {
            return Err(Error::InvalidConfig("K must be at least 1".into()));
        }
        if self.m < 2 {
            return Err(Error::InvalidConfig(format!("m must be at least 2, got {}", self.m)));
        }
        if self.kind == StrategyKind::CvSmote && self.cv_folds < 2 {
            return Err(Error::InvalidConfig("CV-SMOTE needs at least 2 folds".into()));
        }
        Ok(())
    }
}

/// Output of [`rebalance`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rebalanced {
    pub dataset: Dataset,
    /// One flag per output row: true for generated or duplicated rows.
    pub synthetic: Vec<bool>,
    /// For each output row, the input row it is (or, if synthetic, `None`).
    pub source_rows: Vec<Option<usize>>,
    pub batch: Option<SyntheticBatch>,
    /// `(minority weight, majority weight)` for class weighting.
    pub class_weights: Option<(f64, f64)>,
    pub warnings: Vec<String>,
    /// Neighbour count actually used.
    pub k_used: Option<usize>,
    /// CV-SMOTE per-K mean scores.
    pub cv_scores: Option<Vec<(usize, f64)>>,
}

impl Rebalanced {
    fn identity(ds: &Dataset) -> Self {
        Rebalanced {
            dataset: ds.clone(),
            synthetic: vec![false; ds.len()],
            source_rows: (0..ds.len()).map(Some).collect(),
            batch: None,
            class_weights: None,
            warnings: Vec::new(),
            k_used: None,
            cv_scores: None,
        }
    }

    fn subset(ds: &Dataset, rows: Vec<usize>) -> Self {
        Rebalanced {
            dataset: ds.subset(&rows),
            synthetic: vec![false; rows.len()],
            source_rows: rows.into_iter().map(Some).collect(),
            batch: None,
            class_weights: None,
            warnings: Vec::new(),
            k_used: None,
            cv_scores: None,
        }
    }

    fn with_batch(ds: &Dataset, batch: SyntheticBatch) -> Result<Self> {
        let mut out = Rebalanced::identity(ds);
        out.dataset.append(&batch.points, MINORITY)?;
        out.synthetic.extend(std::iter::repeat_n(true, batch.len()));
        out.source_rows.extend(std::iter::repeat_n(None, batch.len()));
        out.warnings.extend(batch.warnings.iter().cloned());
        out.batch = Some(batch);
        Ok(out)
    }

    /// Per-row training weights: the class weights when set, else ones.
    pub fn sample_weights(&self) -> Vec<f64> {
        match self.class_weights {
            Some((wmin, wmaj)) => self
                .dataset
                .labels()
                .iter()
                .map(|&y| if y == MINORITY { wmin } else { wmaj })
                .collect(),
            None => vec![1.0; self.dataset.len()],
        }
    }
}

fn generation_seed(config: &StrategyConfig) -> Seed {
    config.seed.derive(tag("generate"))
}

/// Resolve the neighbour count for a minority class of size `n`, clipping
/// the MGS default to `n - 1` with a warning.
fn neighbour_count(config: &StrategyConfig, d: usize, n: usize, warnings: &mut Vec<String>) -> Result<usize> {
    let default = config.kind.default_k(d).unwrap_or(5);
    let k = config.k.unwrap_or(default);
    if config.kind == StrategyKind::Mgs && config.k.is_none() && k > n.saturating_sub(1) {
        if n < 2 {
            return Err(Error::CannotInterpolate(n));
        }
        warnings.push(format!("MGS default K = d + 1 = {k} exceeds n - 1; clipped to {}", n - 1));
        return Ok(n - 1);
    }
    Ok(k)
}

/// Apply the configured strategy to a training set.
pub fn rebalance(ds: &Dataset, config: &StrategyConfig) -> Result<Rebalanced> {
    config.validate()?;
    if config.kind == StrategyKind::None {
        return Ok(Rebalanced::identity(ds));
    }
    ds.require_both_classes()?;
    let ratio = config.target_ratio;
    let d = ds.n_features();
    let minority_rows = ds.minority_indices();
    let n = minority_rows.len();
    let quota = synthetic_quota(ds, ratio);
    let mut warnings = Vec::new();
    let seed = generation_seed(config);
    let mut out = match config.kind {
        StrategyKind::None => unreachable!("handled above"),
        StrategyKind::ClassWeight => {
            let mut out = Rebalanced::identity(ds);
            let (wmin, wmaj) = class_weights(ds)?;
            out.class_weights = Some((wmin * ratio, wmaj));
            out
        }
        StrategyKind::Rus => Rebalanced::subset(ds, rus(ds, ratio, seed)?.rows),
        StrategyKind::NearMiss1 => {
            let k = neighbour_count(config, d, n, &mut warnings)?;
            let mut out = Rebalanced::subset(ds, nearmiss1(ds, k, ratio)?.rows);
            out.k_used = Some(k);
            out
        }
        StrategyKind::Ros => {
            let sources = ros(ds, ratio, seed)?;
            let mut out = Rebalanced::identity(ds);
            let copies = ds.features().select_rows(&sources);
            out.dataset.append(&copies, MINORITY)?;
            out.synthetic.extend(std::iter::repeat_n(true, sources.len()));
            out.source_rows.extend(sources.iter().map(|&s| Some(s)));
            out.batch = Some(SyntheticBatch {
                points: copies,
                provenance: sources.iter().map(|&s| Provenance::Copy { source: s }).collect(),
                fallback: false,
                warnings: Vec::new(),
            });
            out
        }
        StrategyKind::Smote => {
            let k = neighbour_count(config, d, n, &mut warnings)?;
            let mut batch = smote_matrix(&ds.minority_points(), k, quota, seed)?;
            batch.remap(&minority_rows);
            let mut out = Rebalanced::with_batch(ds, batch)?;
            out.k_used = Some(k);
            out
        }
        StrategyKind::Mgs => {
            let k = neighbour_count(config, d, n, &mut warnings)?;
            let mut batch = mgs_matrix(&ds.minority_points(), k, quota, seed)?;
            batch.remap(&minority_rows);
            let mut out = Rebalanced::with_batch(ds, batch)?;
            out.k_used = Some(k);
            out
        }
        StrategyKind::BorderlineSmote1 | StrategyKind::BorderlineSmote2 => {
            let k = neighbour_count(config, d, n, &mut warnings)?;
            let variant = if config.kind == StrategyKind::BorderlineSmote1 {
                BorderlineVariant::One
            } else {
                BorderlineVariant::Two
            };
            let batch = borderline_smote(ds, k, config.m, variant, ratio, seed)?;
            let mut out = Rebalanced::with_batch(ds, batch)?;
            out.k_used = Some(k);
            out
        }
        StrategyKind::CvSmote => {
            let cv = cv_smote(ds, config.cv_folds, &config.cv_classifier, ratio, config.seed.derive(tag("cv")))?;
            warnings.extend(cv.warnings.iter().cloned());
            let mut batch = smote_matrix(&ds.minority_points(), cv.chosen_k, quota, seed)?;
            batch.remap(&minority_rows);
            let mut out = Rebalanced::with_batch(ds, batch)?;
            out.k_used = Some(cv.chosen_k);
            out.cv_scores = Some(cv.scores);
            out
        }
    };
    out.warnings.splice(0..0, warnings);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(n_min: usize, n_maj: usize, seed: u64) -> Dataset {
        use rand::Rng;
        let mut rng = Seed(seed).stream();
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n_min + n_maj {
            let y = u8::from(i < n_min);
            let shift = if y == 1 { 1.5 } else { 0.0 };
            rows.push(vec![rng.random::<f64>() + shift, rng.random::<f64>()]);
            labels.push(y);
        }
        Dataset::new(Matrix::from_rows(&rows).unwrap(), labels).unwrap()
    }

    #[test]
    fn names_round_trip() {
        for k in StrategyKind::ALL {
            assert_eq!(k.name().parse::<StrategyKind>().unwrap(), k);
            let json = serde_json::to_string(&k).unwrap();
            assert_eq!(json, format!("\"{}\"", k.name()));
        }
        assert!("bogus".parse::<StrategyKind>().is_err());
    }

    #[test]
    fn k_rules() {
        assert_eq!("5".parse::<KRule>().unwrap(), KRule::Fixed(5));
        assert_eq!("sqrt".parse::<KRule>().unwrap(), KRule::Sqrt);
        assert_eq!("0.01n".parse::<KRule>().unwrap(), KRule::Fraction(0.01));
        assert_eq!(KRule::Fraction(0.01).resolve(50).unwrap(), 1);
        assert_eq!(KRule::Sqrt.resolve(1000).unwrap(), 31);
        assert_eq!(KRule::Fixed(5).resolve(3).unwrap(), 2);
        assert_eq!(KRule::Fraction(0.1).resolve(10_000).unwrap(), 1000);
        assert!("0n".parse::<KRule>().is_err());
    }

    #[test]
    fn none_is_identity() {
        let ds = toy(5, 20, 1);
        let out = rebalance(&ds, &StrategyConfig::new(StrategyKind::None, 3)).unwrap();
        assert_eq!(out.dataset, ds);
        assert!(out.synthetic.iter().all(|s| !s));
    }

    #[test]
    fn smote_parity_count() {
        let ds = toy(20, 80, 2);
        let out = rebalance(&ds, &StrategyConfig::new(StrategyKind::Smote, 3)).unwrap();
        assert_eq!(out.batch.as_ref().unwrap().len(), 60);
        assert_eq!(out.dataset.minority_count(), 80);
    }

    #[test]
    fn parity_for_every_strategy() {
        let ds = toy(12, 40, 3);
        for kind in StrategyKind::ALL {
            if matches!(kind, StrategyKind::None | StrategyKind::ClassWeight) {
                continue;
            }
            let out = rebalance(&ds, &StrategyConfig::new(kind, 4)).unwrap();
            assert_eq!(
                out.dataset.minority_count(),
                out.dataset.majority_count(),
                "{kind}"
            );
            assert_eq!(out.synthetic.len(), out.dataset.len());
        }
    }

    #[test]
    fn class_weight_rows() {
        let ds = toy(10, 30, 4);
        let out = rebalance(&ds, &StrategyConfig::new(StrategyKind::ClassWeight, 4)).unwrap();
        assert_eq!(out.class_weights, Some((3.0, 1.0)));
        let w = out.sample_weights();
        assert_eq!(w.iter().filter(|&&v| v == 3.0).count(), 10);
    }

    #[test]
    fn provenance_points_to_minority_rows() {
        let ds = toy(15, 45, 5);
        for kind in [StrategyKind::Smote, StrategyKind::Mgs, StrategyKind::BorderlineSmote1, StrategyKind::Ros] {
            let out = rebalance(&ds, &StrategyConfig::new(kind, 8)).unwrap();
            for p in &out.batch.unwrap().provenance {
                let rows: Vec<usize> = match p {
                    Provenance::Interpolation { central, .. } => vec![*central],
                    Provenance::Gaussian { central, .. } => vec![*central],
                    Provenance::Copy { source } => vec![*source],
                };
                for r in rows {
                    assert_eq!(ds.labels()[r], MINORITY, "{kind}");
                }
            }
        }
    }

    #[test]
    fn deterministic() {
        let ds = toy(15, 45, 6);
        for kind in StrategyKind::ALL {
            let c = StrategyConfig::new(kind, 99);
            assert_eq!(rebalance(&ds, &c).unwrap(), rebalance(&ds, &c).unwrap(), "{kind}");
        }
    }

    #[test]
    fn mgs_default_k_is_clipped() {
        let rows: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64; 6]).collect();
        let labels = (0..12).map(|i| u8::from(i < 4)).collect();
        let ds = Dataset::new(Matrix::from_rows(&rows).unwrap(), labels).unwrap();
        let out = rebalance(&ds, &StrategyConfig::new(StrategyKind::Mgs, 1)).unwrap();
        assert_eq!(out.k_used, Some(3));
        assert!(out.warnings.iter().any(|w| w.contains("clipped")));
    }

    #[test]
    fn invalid_configs() {
        let ds = toy(5, 10, 7);
        let mut c = StrategyConfig::new(StrategyKind::Smote, 1);
        c.target_ratio = 1.5;
        assert!(rebalance(&ds, &c).is_err());
        let mut c = StrategyConfig::new(StrategyKind::BorderlineSmote1, 1);
        c.m = 1;
        assert!(rebalance(&ds, &c).is_err());
    }
}
