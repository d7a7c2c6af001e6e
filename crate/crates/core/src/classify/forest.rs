//! Bagged CART trees with weighted gini impurity.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::{Seed, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// `None` grows trees until leaves are pure.
    pub max_depth: Option<usize>,
    pub bootstrap: bool,
    /// Features tried per split; `None` means `⌈√d⌉`.
    pub max_features: Option<usize>,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 100,
            max_depth: None,
            bootstrap: true,
            max_features: None,
        }
    }
}

/// A node is a leaf when `feature` is `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub feature: Option<usize>,
    pub threshold: f64,
    pub left: usize,
    pub right: usize,
    /// Weighted class-1 fraction of the training rows reaching the node.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
    pub depth: usize,
}

impl Tree {
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        self.predict_row_at(x, None)
    }

    /// Prediction of the tree cut at `max_depth`.
    pub fn predict_row_at(&self, x: &[f64], max_depth: Option<usize>) -> f64 {
        let mut i = 0;
        let mut depth = 0;
        loop {
            let node = &self.nodes[i];
            match node.feature {
                Some(f) if max_depth.is_none_or(|m| depth < m) => {
                    i = if x[f] <= node.threshold { node.left } else { node.right };
                    depth += 1;
                }
                _ => return node.value,
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
    pub n_features: usize,
    pub config: ForestConfig,
}

impl ForestModel {
    pub fn depths(&self) -> Vec<usize> {
        self.trees.iter().map(|t| t.depth).collect()
    }

    pub fn mean_depth(&self) -> f64 {
        self.trees.iter().map(|t| t.depth as f64).sum::<f64>() / self.trees.len() as f64
    }

    pub fn predict_proba(&self, x: &Matrix) -> Result<Vec<f64>> {
        self.predict_proba_at(x, self.config.max_depth)
    }

    /// Probabilities of the forest with every tree cut at `max_depth`. With
    /// the same seed this equals a forest fitted with that depth limit.
    pub fn predict_proba_at(&self, x: &Matrix, max_depth: Option<usize>) -> Result<Vec<f64>> {
        if x.cols() != self.n_features {
            return Err(Error::ShapeMismatch {
                expected: format!("{} features", self.n_features),
                found: format!("{} features", x.cols()),
            });
        }
        let t = self.trees.len() as f64;
        Ok(x
            .iter_rows()
            .map(|r| self.trees.iter().map(|tree| tree.predict_row_at(r, max_depth)).sum::<f64>() / t)
            .collect())
    }
}

/// `W_L gini_L + W_R gini_R` written as `2 (a_L b_L / W_L + a_R b_R / W_R)`
/// with `a` the class-1 and `b` the class-0 weight.
#[inline]
fn weighted_gini(w1: f64, w: f64) -> f64 {
    if w <= 0.0 {
        0.0
    } else {
        2.0 * w1 * (w - w1) / w
    }
}

struct Builder<'a> {
    x: &'a Matrix,
    y: &'a [u8],
    w: &'a [f64],
    max_depth: Option<usize>,
    max_features: usize,
    nodes: Vec<Node>,
    depth: usize,
    /// Per feature, the training rows ordered by `(value, row)`. A node owns
    /// the same range `start..end` in every list.
    sorted: Vec<Vec<usize>>,
    goes_left: Vec<bool>,
    buffer: Vec<usize>,
}

impl Builder<'_> {
    fn leaf(&mut self, value: f64) -> usize {
        self.nodes.push(Node {
            feature: None,
            threshold: 0.0,
            left: 0,
            right: 0,
            value,
        });
        self.nodes.len() - 1
    }

    /// Best split of the node as `(feature, threshold, impurity)`.
    fn best_split(&self, start: usize, end: usize, total: f64, total1: f64, rng: &mut Stream) -> Option<(usize, f64, f64)> {
        let d = self.x.cols();
        let mut order: Vec<usize> = (0..d).collect();
        order.shuffle(rng);
        let mut best: Option<(usize, f64, f64)> = None;
        let mut tried = 0;
        for &f in &order {
            if tried == self.max_features {
                break;
            }
            let rows = &self.sorted[f][start..end];
            if self.x.get(rows[0], f) == self.x.get(rows[rows.len() - 1], f) {
                continue;
            }
            tried += 1;
            let (mut wl, mut wl1) = (0.0, 0.0);
            for p in 0..rows.len() - 1 {
                let i = rows[p];
                wl += self.w[i];
                if self.y[i] == 1 {
                    wl1 += self.w[i];
                }
                let here = self.x.get(i, f);
                let next = self.x.get(rows[p + 1], f);
                if here == next {
                    continue;
                }
                let impurity = weighted_gini(wl1, wl) + weighted_gini(total1 - wl1, total - wl);
                if best.is_none_or(|b| impurity < b.2) {
                    let mut threshold = here + (next - here) / 2.0;
                    if threshold >= next {
                        threshold = here;
                    }
                    best = Some((f, threshold, impurity));
                }
            }
        }
        best
    }

    /// Each node draws from its own stream derived from the path to it, so a
    /// depth-capped tree is exactly the unlimited tree cut at that depth.
    fn grow(&mut self, start: usize, end: usize, depth: usize, seed: Seed) -> usize {
        self.depth = self.depth.max(depth);
        let rows = &self.sorted[0][start..end];
        let total: f64 = rows.iter().map(|&i| self.w[i]).sum();
        let total1: f64 = rows.iter().filter(|&&i| self.y[i] == 1).map(|&i| self.w[i]).sum();
        let value = total1 / total;
        let pure = total1 == 0.0 || total1 == total;
        if pure || end - start < 2 || self.max_depth.is_some_and(|m| depth >= m) {
            return self.leaf(value);
        }
        let Some((f, threshold, _)) = self.best_split(start, end, total, total1, &mut seed.stream()) else {
            return self.leaf(value);
        };
        let id = self.leaf(value);
        let mut mid = start;
        for &i in &self.sorted[f][start..end] {
            let left = self.x.get(i, f) <= threshold;
            self.goes_left[i] = left;
            mid += usize::from(left);
        }
        // stable partition keeps every list sorted within each child
        for list in &mut self.sorted {
            self.buffer.clear();
            let mut l = start;
            for p in start..end {
                let i = list[p];
                if self.goes_left[i] {
                    list[l] = i;
                    l += 1;
                } else {
                    self.buffer.push(i);
                }
            }
            list[l..end].copy_from_slice(&self.buffer);
        }
        let l = self.grow(start, mid, depth + 1, seed.derive(0));
        let r = self.grow(mid, end, depth + 1, seed.derive(1));
        let node = &mut self.nodes[id];
        node.feature = Some(f);
        node.threshold = threshold;
        node.left = l;
        node.right = r;
        id
    }
}

/// One CART tree on rows with positive weight `w`.
pub fn fit_tree(x: &Matrix, y: &[u8], w: &[f64], max_depth: Option<usize>, max_features: usize, seed: Seed) -> Tree {
    let rows: Vec<usize> = (0..x.rows()).filter(|&i| w[i] > 0.0).collect();
    let sorted = (0..x.cols())
        .map(|f| {
            let mut r = rows.clone();
            r.sort_unstable_by(|&a, &b| x.get(a, f).total_cmp(&x.get(b, f)).then(a.cmp(&b)));
            r
        })
        .collect();
    let mut b = Builder {
        x,
        y,
        w,
        max_depth,
        max_features,
        nodes: Vec::new(),
        depth: 0,
        sorted,
        goes_left: vec![false; x.rows()],
        buffer: Vec::with_capacity(rows.len()),
    };
    if !rows.is_empty() {
        b.grow(0, rows.len(), 0, seed);
    }
    Tree {
        nodes: b.nodes,
        depth: b.depth,
    }
}

pub fn fit_forest(x: &Matrix, y: &[u8], weights: Option<&[f64]>, config: &ForestConfig, seed: Seed) -> Result<ForestModel> {
    if config.n_trees == 0 {
        return Err(Error::InvalidConfig("forest needs at least one tree".into()));
    }
    if y.len() != x.rows() || weights.is_some_and(|w| w.len() != x.rows()) {
        return Err(Error::ShapeMismatch {
            expected: format!("{} labels and weights", x.rows()),
            found: format!("{} labels", y.len()),
        });
    }
    if x.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::MalformedInput {
            row: 0,
            column: String::new(),
            message: "non-finite feature value".into(),
        });
    }
    if let Some(w) = weights {
        if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidConfig("sample weights must be finite and non-negative".into()));
        }
    }
    let ones = vec![1.0; x.rows()];
    let base = weights.unwrap_or(&ones);
    let has = |label: u8| y.iter().zip(base).any(|(&t, &w)| t == label && w > 0.0);
    if !(has(0) && has(1)) {
        return Err(Error::InvalidDataset("both classes need positive weight".into()));
    }
    let d = x.cols();
    let max_features = config.max_features.unwrap_or((d as f64).sqrt().ceil() as usize).clamp(1, d);
    let n = x.rows();
    let trees: Vec<Tree> = (0..config.n_trees)
        .into_par_iter()
        .map(|t| {
            let tree_seed = seed.derive(t as u64);
            let w: Vec<f64> = if config.bootstrap {
                let mut rng = tree_seed.derive(0).stream();
                let mut counts = vec![0.0; n];
                for _ in 0..n {
                    counts[rng.random_range(0..n)] += 1.0;
                }
                counts.iter().zip(base).map(|(c, b)| c * b).collect()
            } else {
                base.to_vec()
            };
            if !w.iter().any(|&v| v > 0.0) {
                // a bootstrap draw can miss every weighted row
                return Tree {
                    nodes: vec![Node {
                        feature: None,
                        threshold: 0.0,
                        left: 0,
                        right: 0,
                        value: 0.0,
                    }],
                    depth: 0,
                };
            }
            fit_tree(x, y, &w, config.max_depth, max_features, tree_seed.derive(1))
        })
        .collect();
    Ok(ForestModel {
        trees,
        n_features: d,
        config: config.clone(),
    })
}
