//! Forest depth selection by inner cross-validation.

use serde::{Deserialize, Serialize};

use super::forest::{fit_forest, ForestConfig, ForestModel};
use super::metrics::roc_auc;
use crate::dataset::{stratified_kfold, Dataset};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::{tag, Seed};
use crate::samplers::{rebalance, StrategyConfig};

/// Candidate depth limits, ascending, with `None` (unlimited) last.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DepthGrid {
    depths: Vec<Option<usize>>,
}

impl DepthGrid {
    pub fn new(depths: impl IntoIterator<Item = Option<usize>>) -> Result<Self> {
        let mut depths: Vec<Option<usize>> = depths.into_iter().collect();
        if depths.is_empty() {
            return Err(Error::InvalidConfig("depth grid is empty".into()));
        }
        if depths.contains(&Some(0)) {
            return Err(Error::InvalidConfig("depth 0 is not a tree".into()));
        }
        depths.sort_by_key(|d| d.unwrap_or(usize::MAX));
        depths.dedup();
        Ok(DepthGrid { depths })
    }

    /// `⌊linspace(5, mean, 8)⌋`, deduplicated, plus unlimited.
    pub fn from_mean_depth(mean: f64) -> Self {
        let values = (0..8).map(|i| {
            let v = 5.0 + (mean - 5.0) * i as f64 / 7.0;
            Some((v.floor() as usize).max(1))
        });
        DepthGrid::new(values.chain([None])).expect("grid has entries")
    }

    pub fn depths(&self) -> &[Option<usize>] {
        &self.depths
    }
}

/// Inner-CV record of a depth search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthTuning {
    pub chosen: Option<usize>,
    pub grid: DepthGrid,
    /// Mean held-out ROC AUC per grid entry.
    pub scores: Vec<(Option<usize>, f64)>,
    pub untuned_mean_depth: f64,
    pub folds_used: usize,
    pub warnings: Vec<String>,
}

/// Forest fitted on the rebalanced training set, used at the tuned depth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TunedForest {
    /// Unlimited-depth fit; cutting it at `tuning.chosen` is the tuned model.
    pub model: ForestModel,
    pub tuning: DepthTuning,
}

impl TunedForest {
    pub fn predict_proba(&self, x: &Matrix) -> Result<Vec<f64>> {
        self.model.predict_proba_at(x, self.tuning.chosen)
    }
}

fn fit_rebalanced(ds: &Dataset, strategy: &StrategyConfig, forest: &ForestConfig, seed: Seed) -> Result<ForestModel> {
    let rb = rebalance(ds, strategy)?;
    let weights = rb.class_weights.map(|_| rb.sample_weights());
    let unlimited = ForestConfig {
        max_depth: None,
        ..forest.clone()
    };
    fit_forest(rb.dataset.features(), rb.dataset.labels(), weights.as_deref(), &unlimited, seed)
}

/// Select `max_depth` for a forest trained after `strategy`.
///
/// The grid defaults to one built from the mean depth of an untuned fit on
/// the rebalanced `train`. Each inner fold rebalances its own training part,
/// fits once without a depth limit and scores every grid entry by cutting
/// the trees, which equals refitting with that limit. Ties go to the
/// smaller depth.
pub fn tune_max_depth(
    train: &Dataset,
    strategy: &StrategyConfig,
    forest: &ForestConfig,
    grid: Option<&DepthGrid>,
    folds: usize,
    seed: Seed,
) -> Result<TunedForest> {
    let model = fit_rebalanced(train, strategy, forest, seed.derive(tag("untuned")))?;
    let untuned_mean_depth = model.mean_depth();
    let grid = match grid {
        Some(g) => g.clone(),
        None => DepthGrid::from_mean_depth(untuned_mean_depth),
    };
    let assignment = stratified_kfold(train, folds, seed.derive(tag("inner-folds")))?;
    let mut sums = vec![0.0; grid.depths().len()];
    let mut used = 0;
    let mut warnings = Vec::new();
    for f in 0..folds {
        let tr = train.subset(&assignment.train_indices(f));
        let te = train.subset(&assignment.test_indices(f));
        let cfg = StrategyConfig {
            seed: strategy.seed.derive(tag("inner")).derive(f as u64),
            ..strategy.clone()
        };
        let fitted = fit_rebalanced(&tr, &cfg, forest, seed.derive(tag("inner-fit")).derive(f as u64));
        let m = match fitted {
            Ok(m) => m,
            Err(e) => {
                warnings.push(format!("inner fold {f} skipped: {e}"));
                continue;
            }
        };
        let mut fold_scores = Vec::with_capacity(sums.len());
        for &depth in grid.depths() {
            fold_scores.push(roc_auc(&m.predict_proba_at(te.features(), depth)?, te.labels())?);
        }
        for (s, v) in sums.iter_mut().zip(fold_scores) {
            *s += v;
        }
        used += 1;
    }
    if used == 0 {
        return Err(Error::AllFoldsSkipped);
    }
    let scores: Vec<(Option<usize>, f64)> = grid
        .depths()
        .iter()
        .zip(&sums)
        .map(|(&d, &s)| (d, s / used as f64))
        .collect();
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if s.1 > scores[best].1 {
            best = i;
        }
    }
    Ok(TunedForest {
        model,
        tuning: DepthTuning {
            chosen: scores[best].0,
            grid,
            scores,
            untuned_mean_depth,
            folds_used: used,
            warnings,
        },
    })
}
