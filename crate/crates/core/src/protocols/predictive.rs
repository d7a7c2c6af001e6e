//! Cross-validated predictive comparison of rebalancing strategies.

use std::collections::HashSet;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{pr_auc, roc_auc, tune_max_depth, ClassifierSpec};
use crate::dataset::{stratified_kfold, Dataset};
use crate::error::{Error, Result};
use crate::rng::{tag, Seed};
use crate::samplers::{rebalance, StrategyConfig, StrategyKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictiveConfig {
    pub strategies: Vec<StrategyKind>,
    pub classifier: ClassifierSpec,
    pub folds: usize,
    pub reps: usize,
    /// Tune the forest depth by inner CV (forest classifier only).
    pub tune_depth: bool,
    pub tuning_folds: usize,
    /// Applied to every strategy; `kind` and `seed` are overridden per cell.
    pub strategy_template: StrategyConfig,
    pub seed: Seed,
}

impl PredictiveConfig {
    pub fn new(strategies: Vec<StrategyKind>, classifier: ClassifierSpec, seed: Seed) -> Self {
        PredictiveConfig {
            strategies,
            classifier,
            folds: 5,
            reps: 20,
            tune_depth: false,
            tuning_folds: 5,
            strategy_template: StrategyConfig::new(StrategyKind::None, seed),
            seed,
        }
    }
}

/// Outcome of one (repetition, strategy, fold) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub rep: usize,
    pub fold: usize,
    pub strategy: StrategyKind,
    pub roc_auc: Option<f64>,
    pub pr_auc: Option<f64>,
    pub chosen_depth: Option<Option<usize>>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyRow {
    pub dataset: String,
    pub strategy: StrategyKind,
    pub roc_auc_mean: f64,
    pub roc_auc_std: f64,
    pub pr_auc_mean: f64,
    pub pr_auc_std: f64,
    pub evaluations: usize,
    pub failed: usize,
    /// Set when any fold failed; the means then cover the successful folds.
    pub flag: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub dataset: String,
    pub rows: Vec<StrategyRow>,
    pub cells: Vec<CellResult>,
    /// Fold-assignment digest per repetition, shared by every strategy.
    pub fold_digests: Vec<String>,
    /// Number of (cell) leak checks that ran; each one passed.
    pub leak_checks: usize,
    pub seed: Seed,
    pub classifier: ClassifierSpec,
    pub tune_depth: bool,
    pub folds: usize,
    pub reps: usize,
}

impl EvaluationReport {
    pub fn row(&self, strategy: StrategyKind) -> Option<&StrategyRow> {
        self.rows.iter().find(|r| r.strategy == strategy)
    }

    /// `dataset,strategy,roc_auc_mean,roc_auc_std,pr_auc_mean,pr_auc_std,flag`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("dataset,strategy,roc_auc_mean,roc_auc_std,pr_auc_mean,pr_auc_std,flag\n");
        for r in &self.rows {
            writeln!(
                s,
                "{},{},{:.17e},{:.17e},{:.17e},{:.17e},{}",
                r.dataset,
                r.strategy,
                r.roc_auc_mean,
                r.roc_auc_std,
                r.pr_auc_mean,
                r.pr_auc_std,
                r.flag.as_deref().unwrap_or("")
            )
            .expect("write to string");
        }
        s
    }
}

/// Population mean and standard deviation.
fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Training rows must be disjoint from test rows, and every row of the
/// rebalanced set must come from the training part or be generated.
fn leak_check(train: &[usize], test: &[usize], source_rows: &[Option<usize>]) -> Result<()> {
    let test_set: HashSet<usize> = test.iter().copied().collect();
    if train.iter().any(|i| test_set.contains(i)) {
        return Err(Error::Infeasible("test row present in the training fold".into()));
    }
    for s in source_rows.iter().flatten() {
        let Some(&row) = train.get(*s) else {
            return Err(Error::Infeasible("rebalanced row outside the training fold".into()));
        };
        if test_set.contains(&row) {
            return Err(Error::Infeasible("test row leaked into the rebalanced set".into()));
        }
    }
    Ok(())
}

fn evaluate_cell(
    ds: &Dataset,
    train_rows: &[usize],
    test_rows: &[usize],
    kind: StrategyKind,
    config: &PredictiveConfig,
    cell_seed: Seed,
) -> Result<(f64, f64, Option<Option<usize>>)> {
    let train = ds.subset(train_rows);
    let test = ds.subset(test_rows);
    let strategy = StrategyConfig {
        kind,
        seed: cell_seed.derive(tag("strategy")),
        ..config.strategy_template.clone()
    };
    let model_seed = cell_seed.derive(tag("model"));
    let rb = rebalance(&train, &strategy)?;
    leak_check(train_rows, test_rows, &rb.source_rows)?;
    let (scores, depth) = match (&config.classifier, config.tune_depth) {
        (ClassifierSpec::RandomForest(forest), true) => {
            let tuned = tune_max_depth(&train, &strategy, forest, None, config.tuning_folds, model_seed)?;
            (tuned.predict_proba(test.features())?, Some(tuned.tuning.chosen))
        }
        (spec, _) => {
            let weights = rb.class_weights.map(|_| rb.sample_weights());
            let model = spec.fit(rb.dataset.features(), rb.dataset.labels(), weights.as_deref(), model_seed)?;
            (model.predict_proba(test.features())?, None)
        }
    };
    Ok((roc_auc(&scores, test.labels())?, pr_auc(&scores, test.labels())?, depth))
}

/// Repeated stratified k-fold evaluation. In each repetition all strategies
/// see the same folds and the same per-fold seeds; rebalancing touches only
/// the training folds. A failed cell is recorded, not raised.
pub fn predictive_protocol(name: &str, ds: &Dataset, config: &PredictiveConfig) -> Result<EvaluationReport> {
    if config.strategies.is_empty() || config.reps == 0 {
        return Err(Error::InvalidConfig("need at least one strategy and one repetition".into()));
    }
    ds.require_both_classes()?;
    let mut assignments = Vec::with_capacity(config.reps);
    for r in 0..config.reps {
        assignments.push(stratified_kfold(ds, config.folds, config.seed.derive_path(&[tag("folds"), r as u64]))?);
    }
    let mut tasks = Vec::new();
    for r in 0..config.reps {
        for &kind in &config.strategies {
            for f in 0..config.folds {
                tasks.push((r, kind, f));
            }
        }
    }
    let cells: Vec<CellResult> = tasks
        .par_iter()
        .map(|&(rep, strategy, fold)| {
            let a = &assignments[rep];
            let seed = config.seed.derive_path(&[tag("cell"), rep as u64, fold as u64]);
            let out = evaluate_cell(ds, &a.train_indices(fold), &a.test_indices(fold), strategy, config, seed);
            match out {
                Ok((roc, pr, depth)) => CellResult {
                    rep,
                    fold,
                    strategy,
                    roc_auc: Some(roc),
                    pr_auc: Some(pr),
                    chosen_depth: depth,
                    error: None,
                },
                Err(e) => CellResult {
                    rep,
                    fold,
                    strategy,
                    roc_auc: None,
                    pr_auc: None,
                    chosen_depth: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    if let Some(leak) = cells.iter().find_map(|c| c.error.as_ref().filter(|e| e.contains("leak") || e.contains("test row"))) {
        return Err(Error::Infeasible(leak.clone()));
    }
    let rows = config
        .strategies
        .iter()
        .map(|&kind| {
            let mine: Vec<&CellResult> = cells.iter().filter(|c| c.strategy == kind).collect();
            let roc: Vec<f64> = mine.iter().filter_map(|c| c.roc_auc).collect();
            let pr: Vec<f64> = mine.iter().filter_map(|c| c.pr_auc).collect();
            let failed = mine.len() - roc.len();
            let (roc_auc_mean, roc_auc_std) = mean_std(&roc);
            let (pr_auc_mean, pr_auc_std) = mean_std(&pr);
            StrategyRow {
                dataset: name.to_string(),
                strategy: kind,
                roc_auc_mean,
                roc_auc_std,
                pr_auc_mean,
                pr_auc_std,
                evaluations: roc.len(),
                failed,
                flag: (failed > 0).then(|| format!("{failed} of {} folds failed", mine.len())),
            }
        })
        .collect();
    let leak_checks = cells.iter().filter(|c| c.error.is_none()).count();
    Ok(EvaluationReport {
        dataset: name.to_string(),
        rows,
        cells,
        fold_digests: assignments.iter().map(|a| format!("{:016x}", a.digest())).collect(),
        leak_checks,
        seed: config.seed,
        classifier: config.classifier.clone(),
        tune_depth: config.tune_depth,
        folds: config.folds,
        reps: config.reps,
    })
}
