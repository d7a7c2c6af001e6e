//! CV-SMOTE: SMOTE with K chosen by stratified cross-validation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{rebalance, StrategyConfig, StrategyKind};
use crate::classify::{roc_auc, ClassifierSpec};
use crate::dataset::{stratified_kfold, Dataset};
use crate::error::{Error, Result};
use crate::rng::{tag, Seed};

/// `{1..15} ∪ ⌊{0.01, 0.1, 0.5, 0.7} n⌋ ∪ ⌊√n⌋`, clipped to `[1, n - 1]`,
/// sorted and deduplicated.
pub fn cv_smote_grid(n: usize) -> Vec<usize> {
    if n < 2 {
        return Vec::new();
    }
    let nf = n as f64;
    let mut grid: Vec<usize> = (1..=15).collect();
    grid.extend([0.01, 0.1, 0.5, 0.7].iter().map(|f| (f * nf).floor() as usize));
    grid.push(nf.sqrt().floor() as usize);
    for k in &mut grid {
        *k = (*k).clamp(1, n - 1);
    }
    grid.sort_unstable();
    grid.dedup();
    grid
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvSmoteOutcome {
    pub chosen_k: usize,
    /// Mean held-out ROC AUC per grid entry.
    pub scores: Vec<(usize, f64)>,
    pub warnings: Vec<String>,
}

/// Score each K of [`cv_smote_grid`] (built from the minority count of `ds`)
/// by `folds`-fold stratified CV: the training part is rebalanced with
/// SMOTE(K) up to `target_ratio`, where K is capped at the fold's minority
/// count minus one, the classifier is fitted and ROC AUC is measured on the
/// held-out part. The highest mean wins; ties go to the smallest K.
pub fn cv_smote(ds: &Dataset, folds: usize, classifier: &ClassifierSpec, target_ratio: f64, seed: Seed) -> Result<CvSmoteOutcome> {
    let grid = cv_smote_grid(ds.minority_count());
    if grid.is_empty() {
        return Err(Error::CannotInterpolate(ds.minority_count()));
    }
    let assignment = stratified_kfold(ds, folds, seed.derive(tag("folds")))?;
    let mut warnings = Vec::new();
    let mut usable = Vec::new();
    for f in 0..folds {
        let tr = ds.subset(&assignment.train_indices(f));
        let te = ds.subset(&assignment.test_indices(f));
        if tr.minority_count() < 2 || te.require_both_classes().is_err() {
            warnings.push(format!("CV-SMOTE fold {f} skipped: degenerate split"));
            continue;
        }
        usable.push((f, tr, te));
    }
    if usable.is_empty() {
        return Err(Error::AllFoldsSkipped);
    }
    let tasks: Vec<(usize, usize)> = (0..usable.len()).flat_map(|u| grid.iter().map(move |&k| (u, k))).collect();
    let results: Vec<Result<f64>> = tasks
        .par_iter()
        .map(|&(u, k)| {
            let (f, tr, te) = &usable[u];
            let k_eff = k.min(tr.minority_count() - 1);
            let task = seed.derive(*f as u64).derive(k as u64);
            let mut cfg = StrategyConfig::new(StrategyKind::Smote, task.derive(0)).with_k(k_eff);
            cfg.target_ratio = target_ratio;
            let rb = rebalance(tr, &cfg)?;
            let model = classifier.fit(rb.dataset.features(), rb.dataset.labels(), None, task.derive(1))?;
            roc_auc(&model.predict_proba(te.features())?, te.labels())
        })
        .collect();
    let mut scores = Vec::with_capacity(grid.len());
    for (gi, &k) in grid.iter().enumerate() {
        let mut total = 0.0;
        let mut count = 0;
        for u in 0..usable.len() {
            match &results[u * grid.len() + gi] {
                Ok(v) => {
                    total += v;
                    count += 1;
                }
                Err(e) => warnings.push(format!("CV-SMOTE K={k} fold {}: {e}", usable[u].0)),
            }
        }
        if count > 0 {
            scores.push((k, total / count as f64));
        }
    }
    if scores.is_empty() {
        return Err(Error::AllFoldsSkipped);
    }
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if s.1 > scores[best].1 {
            best = i;
        }
    }
    Ok(CvSmoteOutcome {
        chosen_k: scores[best].0,
        scores,
        warnings,
    })
}
