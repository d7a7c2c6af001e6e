//! Exact brute-force Euclidean k-nearest-neighbour search.
//!
//! Ties in distance are broken by ascending point index, so results are a
//! deterministic function of the inputs.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{squared_distance, Matrix};

/// Per-query neighbours sorted by (distance, index).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborTable {
    k: usize,
    indices: Vec<usize>,
    distances: Vec<f64>,
}

impl NeighborTable {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn query_count(&self) -> usize {
        if self.k == 0 {
            0
        } else {
            self.indices.len() / self.k
        }
    }

    pub fn indices(&self, q: usize) -> &[usize] {
        &self.indices[q * self.k..(q + 1) * self.k]
    }

    pub fn distances(&self, q: usize) -> &[f64] {
        &self.distances[q * self.k..(q + 1) * self.k]
    }
}

#[inline]
fn by_distance_then_index(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

/// The `k` nearest points to `query`, skipping point `skip` if given.
/// Returned as (distance, index) pairs in order.
pub fn nearest(points: &Matrix, query: &[f64], k: usize, skip: Option<usize>) -> Vec<(f64, usize)> {
    let mut cand: Vec<(f64, usize)> = (0..points.rows())
        .filter(|&i| Some(i) != skip)
        .map(|i| (squared_distance(points.row(i), query), i))
        .collect();
    if k < cand.len() {
        cand.select_nth_unstable_by(k, by_distance_then_index);
        cand.truncate(k);
    }
    cand.sort_unstable_by(by_distance_then_index);
    for c in &mut cand {
        c.0 = c.0.sqrt();
    }
    cand
}

fn check_k(points: &Matrix, k: usize, excluded: usize) -> Result<()> {
    let max = points.rows().saturating_sub(excluded);
    if k == 0 || k > max {
        return Err(Error::InvalidK { k, max });
    }
    Ok(())
}

fn check_dim(points: &Matrix, d: usize) -> Result<()> {
    if points.cols() != d {
        return Err(Error::ShapeMismatch {
            expected: format!("{} columns", points.cols()),
            found: format!("{d} columns"),
        });
    }
    Ok(())
}

/// K nearest points for every query row.
///
/// With `exclude_self`, query `i` is identified with point `i` (the two
/// matrices must have the same number of rows) and never returned as its
/// own neighbour.
pub fn knn(points: &Matrix, queries: &Matrix, k: usize, exclude_self: bool) -> Result<NeighborTable> {
    check_dim(points, queries.cols())?;
    check_k(points, k, usize::from(exclude_self))?;
    if exclude_self && queries.rows() != points.rows() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} queries (one per point)", points.rows()),
            found: format!("{} queries", queries.rows()),
        });
    }
    let per_query: Vec<Vec<(f64, usize)>> = (0..queries.rows())
        .into_par_iter()
        .map(|q| nearest(points, queries.row(q), k, exclude_self.then_some(q)))
        .collect();
    Ok(assemble(k, per_query))
}

/// Neighbours of a subset of the points themselves, self excluded.
/// Row `j` of the table belongs to point `subset[j]`.
pub fn knn_of_points(points: &Matrix, subset: &[usize], k: usize) -> Result<NeighborTable> {
    check_k(points, k, 1)?;
    if let Some(&bad) = subset.iter().find(|&&i| i >= points.rows()) {
        return Err(Error::ShapeMismatch {
            expected: format!("point index < {}", points.rows()),
            found: bad.to_string(),
        });
    }
    let per_query: Vec<Vec<(f64, usize)>> = subset
        .par_iter()
        .map(|&i| nearest(points, points.row(i), k, Some(i)))
        .collect();
    Ok(assemble(k, per_query))
}

fn assemble(k: usize, per_query: Vec<Vec<(f64, usize)>>) -> NeighborTable {
    let mut indices = Vec::with_capacity(per_query.len() * k);
    let mut distances = Vec::with_capacity(per_query.len() * k);
    for row in per_query {
        for (d, i) in row {
            indices.push(i);
            distances.push(d);
        }
    }
    NeighborTable { k, indices, distances }
}

/// Distance from `query` to its k-th nearest point (1-based k).
pub fn kth_distance(points: &Matrix, query: &[f64], k: usize, skip: Option<usize>) -> Result<f64> {
    check_dim(points, query.len())?;
    check_k(points, k, usize::from(skip.is_some_and(|s| s < points.rows())))?;
    Ok(nearest(points, query, k, skip)[k - 1].0)
}
