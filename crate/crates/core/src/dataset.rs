//! Binary-labelled tabular data, CSV ingestion, stratified folds and the
//! nested minority subsampler.
//!
//! The minority class is always label `1`.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::Seed;

pub const MINORITY: u8 = 1;
pub const MAJORITY: u8 = 0;

/// Which CSV column holds the class label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    Name(String),
    Index(usize),
    Last,
}

impl std::str::FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    /// Integers select by position, anything else by header name.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(s.to_string()),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    features: Matrix,
    labels: Vec<u8>,
    feature_names: Vec<String>,
    label_name: String,
}

impl Dataset {
    pub fn new(features: Matrix, labels: Vec<u8>) -> Result<Self> {
        let names = (0..features.cols()).map(|j| format!("x{j}")).collect();
        Self::with_names(features, labels, names, "label".to_string())
    }

    pub fn with_names(
        features: Matrix,
        labels: Vec<u8>,
        feature_names: Vec<String>,
        label_name: String,
    ) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} labels", features.rows()),
                found: format!("{} labels", labels.len()),
            });
        }
        if feature_names.len() != features.cols() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} feature names", features.cols()),
                found: format!("{} feature names", feature_names.len()),
            });
        }
        if let Some(bad) = labels.iter().find(|&&y| y > 1) {
            return Err(Error::InvalidDataset(format!("label {bad} is not 0 or 1")));
        }
        for (i, row) in features.iter_rows().enumerate() {
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::MalformedInput {
                    row: i + 1,
                    column: feature_names[j].clone(),
                    message: "non-finite value".into(),
                });
            }
        }
        Ok(Dataset {
            features,
            labels,
            feature_names,
            label_name,
        })
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn label_name(&self) -> &str {
        &self.label_name
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.features.cols()
    }

    pub fn minority_count(&self) -> usize {
        self.labels.iter().filter(|&&y| y == MINORITY).count()
    }

    pub fn majority_count(&self) -> usize {
        self.len() - self.minority_count()
    }

    /// n / N.
    pub fn imbalance_ratio(&self) -> f64 {
        self.minority_count() as f64 / self.len() as f64
    }

    pub fn indices_of(&self, label: u8) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.labels[i] == label).collect()
    }

    pub fn minority_indices(&self) -> Vec<usize> {
        self.indices_of(MINORITY)
    }

    pub fn majority_indices(&self) -> Vec<usize> {
        self.indices_of(MAJORITY)
    }

    pub fn minority_points(&self) -> Matrix {
        self.features.select_rows(&self.minority_indices())
    }

    /// Rows in the given order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            feature_names: self.feature_names.clone(),
            label_name: self.label_name.clone(),
        }
    }

    /// Append rows that all carry `label`.
    pub fn append(&mut self, rows: &Matrix, label: u8) -> Result<()> {
        if label > 1 {
            return Err(Error::InvalidDataset(format!("label {label} is not 0 or 1")));
        }
        self.features.extend(rows)?;
        self.labels.extend(std::iter::repeat_n(label, rows.rows()));
        Ok(())
    }

    /// Both classes must be present before a strategy is applied.
    pub fn require_both_classes(&self) -> Result<()> {
        let n = self.minority_count();
        if n == 0 || n == self.len() {
            return Err(Error::InvalidDataset(format!(
                "need both classes, found {} minority and {} majority rows",
                n,
                self.len() - n
            )));
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        self.write_csv_with_flag(out, None)
    }

    /// Write as CSV, optionally with one extra trailing 0/1 column.
    pub fn write_csv_with_flag<W: Write>(&self, mut out: W, flag: Option<(&str, &[bool])>) -> Result<()> {
        let io = |e| Error::io("<csv output>", e);
        let mut header: Vec<&str> = self.feature_names.iter().map(String::as_str).collect();
        header.push(&self.label_name);
        if let Some((name, values)) = flag {
            if values.len() != self.len() {
                return Err(Error::ShapeMismatch {
                    expected: format!("{} flags", self.len()),
                    found: format!("{} flags", values.len()),
                });
            }
            header.push(name);
        }
        writeln!(out, "{}", header.join(",")).map_err(io)?;
        let mut line = String::new();
        for i in 0..self.len() {
            line.clear();
            for v in self.features.row(i) {
                line.push_str(&v.to_string());
                line.push(',');
            }
            line.push_str(&self.labels[i].to_string());
            if let Some((_, values)) = flag {
                line.push(',');
                line.push(if values[i] { '1' } else { '0' });
            }
            writeln!(out, "{line}").map_err(io)?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(f);
        self.write_csv(&mut w)?;
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Load a comma-separated file with a header row.
///
/// The label column may hold any two distinct tokens. The rarer one becomes
/// label 1; on a tie the larger value (numerically when both parse) does.
pub fn load_csv(path: &Path, label_column: &LabelColumn) -> Result<Dataset> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(f, label_column)
}

pub fn read_csv<R: Read>(input: R, label_column: &LabelColumn) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| malformed_csv(0, "<header>", e))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.len() < 2 {
        return Err(Error::InvalidDataset(
            "need at least one feature column and a label column".into(),
        ));
    }
    let label_idx = match label_column {
        LabelColumn::Last => header.len() - 1,
        LabelColumn::Index(i) if *i < header.len() => *i,
        LabelColumn::Index(i) => {
            return Err(Error::InvalidConfig(format!(
                "label column index {i} out of range for {} columns",
                header.len()
            )))
        }
        LabelColumn::Name(name) => header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::InvalidConfig(format!("no column named `{name}`")))?,
    };

    let d = header.len() - 1;
    let mut features = Matrix::with_capacity(d, 0);
    let mut raw_labels = Vec::new();
    let mut row_buf = Vec::with_capacity(d);
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| malformed_csv(row, "<record>", e))?;
        if record.len() != header.len() {
            return Err(Error::MalformedInput {
                row,
                column: "<record>".into(),
                message: format!("expected {} fields, found {}", header.len(), record.len()),
            });
        }
        row_buf.clear();
        for (j, field) in record.iter().enumerate() {
            if j == label_idx {
                raw_labels.push(field.to_string());
                continue;
            }
            let v: f64 = field.parse().map_err(|_| Error::MalformedInput {
                row,
                column: header[j].clone(),
                message: format!("`{field}` is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::MalformedInput {
                    row,
                    column: header[j].clone(),
                    message: format!("`{field}` is not finite"),
                });
            }
            row_buf.push(v);
        }
        features.push_row(&row_buf)?;
    }

    let labels = coerce_labels(&raw_labels)?;
    let feature_names = header
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != label_idx)
        .map(|(_, h)| h.clone())
        .collect();
    Dataset::with_names(features, labels, feature_names, header[label_idx].clone())
}

fn malformed_csv(row: usize, column: &str, e: csv::Error) -> Error {
    Error::MalformedInput {
        row,
        column: column.into(),
        message: e.to_string(),
    }
}

fn coerce_labels(raw: &[String]) -> Result<Vec<u8>> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for v in raw {
        *counts.entry(v.as_str()).or_default() += 1;
    }
    if counts.len() != 2 {
        return Err(Error::InvalidDataset(format!(
            "label column must hold exactly two classes, found {}",
            counts.len()
        )));
    }
    let mut classes: Vec<(&str, usize)> = counts.into_iter().collect();
    // Order: rarer first; on a tie the larger value first.
    classes.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| compare_label_values(b.0, a.0)));
    let minority = classes[0].0;
    Ok(raw.iter().map(|v| u8::from(v == minority)).collect())
}

fn compare_label_values(a: &str, b: &str) -> std::cmp::Ordering {
    match (a.parse::<f64>(), b.parse::<f64>()) {
        (Ok(x), Ok(y)) => x.total_cmp(&y),
        _ => a.cmp(b),
    }
}

/// Fold index per sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    k: usize,
    fold_of: Vec<usize>,
}

impl FoldAssignment {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn fold_of(&self) -> &[usize] {
        &self.fold_of
    }

    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len()).filter(|&i| self.fold_of[i] == fold).collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len()).filter(|&i| self.fold_of[i] != fold).collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.fold_of {
            sizes[f] += 1;
        }
        sizes
    }

    /// 64-bit FNV digest of the assignment, for run logs.
    pub fn digest(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for &f in &self.fold_of {
            h ^= f as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01B3);
        }
        h
    }
}

/// Stratified k-fold: each class is shuffled independently and dealt
/// round-robin into the folds. The deal for class 1 continues where class 0
/// stopped, so fold sizes differ by at most one.
pub fn stratified_kfold(ds: &Dataset, k: usize, seed: Seed) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::InvalidConfig(format!("need k >= 2 folds, got {k}")));
    }
    let mut fold_of = vec![0usize; ds.len()];
    let mut next = 0usize;
    for label in [MAJORITY, MINORITY] {
        let mut members = ds.indices_of(label);
        if members.len() < k {
            return Err(Error::StratificationImpossible {
                label,
                count: members.len(),
                folds: k,
            });
        }
        members.shuffle(&mut seed.derive(u64::from(label)).stream());
        for i in members {
            fold_of[i] = next;
            next = (next + 1) % k;
        }
    }
    Ok(FoldAssignment { k, fold_of })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImbalanceSpec {
    pub target_ratio: f64,
    pub seed: Seed,
}

impl ImbalanceSpec {
    pub fn new(target_ratio: f64, seed: u64) -> Self {
        ImbalanceSpec {
            target_ratio,
            seed: Seed(seed),
        }
    }

    /// n' = max(1, round(r * N_majority / (1 - r))).
    pub fn minority_target(&self, majority: usize) -> usize {
        let r = self.target_ratio;
        ((r * majority as f64 / (1.0 - r)).round() as usize).max(1)
    }
}

/// Result of [`subsample_minority`].
#[derive(Debug, Clone)]
pub struct Subsample {
    pub dataset: Dataset,
    /// Row indices (into the input dataset) of the retained minority rows;
    /// pass these as `nested_within` for the next, smaller ratio.
    pub minority_rows: Vec<usize>,
}

/// Drop minority rows uniformly without replacement until n'/N' reaches the
/// target ratio. Majority rows, and all feature values, are untouched.
///
/// With `nested_within`, the retained minority rows are drawn from that
/// earlier selection, giving 1% ⊂ 10% ⊂ 20% chains.
pub fn subsample_minority(
    ds: &Dataset,
    spec: &ImbalanceSpec,
    nested_within: Option<&[usize]>,
) -> Result<Subsample> {
    let r = spec.target_ratio;
    if !(r > 0.0 && r <= 0.5) {
        return Err(Error::InvalidConfig(format!("target ratio {r} outside (0, 0.5]")));
    }
    ds.require_both_classes()?;
    let current = ds.imbalance_ratio();
    if r >= current {
        return Err(Error::NoOpSubsample { target: r, current });
    }
    let minority = ds.minority_indices();
    let candidates: Vec<usize> = match nested_within {
        Some(sel) => {
            let mut sel = sel.to_vec();
            sel.sort_unstable();
            sel.dedup();
            if let Some(&bad) = sel.iter().find(|&&i| minority.binary_search(&i).is_err()) {
                return Err(Error::InvalidConfig(format!(
                    "nesting selection contains row {bad}, which is not a minority row"
                )));
            }
            sel
        }
        None => minority,
    };
    let target = spec.minority_target(ds.majority_count());
    if target > candidates.len() {
        return Err(Error::InfeasibleNesting {
            needed: target,
            available: candidates.len(),
        });
    }
    let mut rng = spec.seed.stream();
    let mut picked: Vec<usize> = index::sample(&mut rng, candidates.len(), target)
        .into_iter()
        .map(|j| candidates[j])
        .collect();
    picked.sort_unstable();

    let keep: Vec<usize> = (0..ds.len())
        .filter(|&i| ds.labels()[i] == MAJORITY || picked.binary_search(&i).is_ok())
        .collect();
    Ok(Subsample {
        dataset: ds.subset(&keep),
        minority_rows: picked,
    })
}

/// Split the minority rows of `ds` uniformly into two disjoint halves of
/// sizes ⌊n/2⌋ and ⌈n/2⌉. Both halves contain minority rows only.
pub fn split_half(ds: &Dataset, seed: Seed) -> Result<(Dataset, Dataset)> {
    let mut minority = ds.minority_indices();
    if minority.len() < 4 {
        return Err(Error::TooSmall {
            needed: 4,
            found: minority.len(),
        });
    }
    minority.shuffle(&mut seed.stream());
    let half = minority.len() / 2;
    Ok((ds.subset(&minority[..half]), ds.subset(&minority[half..])))
}
