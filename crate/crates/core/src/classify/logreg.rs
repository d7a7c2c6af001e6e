//! L2-regularised weighted logistic regression, fitted by full-batch
//! gradient descent on weighted-standardised features.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegConfig {
    pub l2: f64,
    pub max_iter: usize,
    /// Stop once the gradient norm falls below this.
    pub tol: f64,
    /// Fixed step; `None` uses `1 / L` for the standardised problem.
    pub step: Option<f64>,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        LogRegConfig {
            l2: 1e-4,
            max_iter: 2000,
            tol: 1e-6,
            step: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegModel {
    /// `d` feature weights followed by the bias.
    pub weights: Vec<f64>,
    pub iterations: usize,
    pub gradient_norm: f64,
}

#[inline]
fn sigmoid(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(s))` without overflow.
#[inline]
fn softplus(s: f64) -> f64 {
    if s > 0.0 {
        s + (-s).exp().ln_1p()
    } else {
        s.exp().ln_1p()
    }
}

/// Design matrix with columns standardised by weighted mean / sd.
pub(crate) struct Standardised {
    pub z: Matrix,
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

pub(crate) fn standardise(x: &Matrix, w: &[f64]) -> Standardised {
    let d = x.cols();
    let total: f64 = w.iter().sum();
    let mut mean = vec![0.0; d];
    for (row, &wi) in x.iter_rows().zip(w) {
        for j in 0..d {
            mean[j] += wi * row[j];
        }
    }
    mean.iter_mut().for_each(|m| *m /= total);
    let mut var = vec![0.0; d];
    for (row, &wi) in x.iter_rows().zip(w) {
        for j in 0..d {
            var[j] += wi * (row[j] - mean[j]).powi(2);
        }
    }
    let scale: Vec<f64> = var
        .iter()
        .map(|v| {
            let s = (v / total).sqrt();
            if s > 0.0 && s.is_finite() {
                s
            } else {
                1.0
            }
        })
        .collect();
    let mut data = Vec::with_capacity(x.rows() * d);
    for row in x.iter_rows() {
        for j in 0..d {
            data.push((row[j] - mean[j]) / scale[j]);
        }
    }
    Standardised {
        z: Matrix::from_vec(x.rows(), d, data).expect("shape is consistent"),
        mean,
        scale,
    }
}

/// Objective `Σ w (softplus(s) - y s) / Σ w + l2/2 ‖β‖²` (bias not
/// penalised) and its gradient; `beta` holds `d` weights then the bias.
pub(crate) fn objective_and_gradient(z: &Matrix, y: &[u8], w: &[f64], beta: &[f64], l2: f64) -> (f64, Vec<f64>) {
    let d = z.cols();
    let total: f64 = w.iter().sum();
    let mut obj = 0.0;
    let mut grad = vec![0.0; d + 1];
    for ((row, &yi), &wi) in z.iter_rows().zip(y).zip(w) {
        if wi == 0.0 {
            continue;
        }
        let s = beta[d] + row.iter().zip(beta).map(|(a, b)| a * b).sum::<f64>();
        let t = f64::from(yi);
        obj += wi * (softplus(s) - t * s);
        let r = wi * (sigmoid(s) - t);
        for j in 0..d {
            grad[j] += r * row[j];
        }
        grad[d] += r;
    }
    obj /= total;
    grad.iter_mut().for_each(|g| *g /= total);
    for j in 0..d {
        obj += 0.5 * l2 * beta[j] * beta[j];
        grad[j] += l2 * beta[j];
    }
    (obj, grad)
}

fn check_inputs(x: &Matrix, y: &[u8], w: &[f64]) -> Result<()> {
    if y.len() != x.rows() || w.len() != x.rows() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} labels and weights", x.rows()),
            found: format!("{} labels, {} weights", y.len(), w.len()),
        });
    }
    if x.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::MalformedInput {
            row: 0,
            column: String::new(),
            message: "non-finite feature value".into(),
        });
    }
    if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::InvalidConfig("sample weights must be finite and non-negative".into()));
    }
    let w1: f64 = y.iter().zip(w).filter(|p| *p.0 == 1).map(|p| p.1).sum();
    let w0: f64 = y.iter().zip(w).filter(|p| *p.0 == 0).map(|p| p.1).sum();
    if !(w1 > 0.0 && w0 > 0.0) {
        return Err(Error::InvalidDataset("both classes need positive weight".into()));
    }
    Ok(())
}

pub fn fit_logreg(x: &Matrix, y: &[u8], weights: Option<&[f64]>, config: &LogRegConfig) -> Result<LogRegModel> {
    let ones;
    let w = match weights {
        Some(w) => w,
        None => {
            ones = vec![1.0; x.rows()];
            &ones
        }
    };
    check_inputs(x, y, w)?;
    let d = x.cols();
    let st = standardise(x, w);
    let step = config.step.unwrap_or(1.0 / (0.25 * (d as f64 + 1.0) + config.l2));
    let mut beta = vec![0.0; d + 1];
    let mut iterations = 0;
    let mut gnorm = f64::INFINITY;
    while iterations < config.max_iter {
        let (_, g) = objective_and_gradient(&st.z, y, w, &beta, config.l2);
        gnorm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if gnorm <= config.tol {
            break;
        }
        for (b, gi) in beta.iter_mut().zip(&g) {
            *b -= step * gi;
        }
        iterations += 1;
    }
    // back to the original feature scale
    let mut weights = vec![0.0; d + 1];
    let mut bias = beta[d];
    for j in 0..d {
        weights[j] = beta[j] / st.scale[j];
        bias -= beta[j] * st.mean[j] / st.scale[j];
    }
    weights[d] = bias;
    Ok(LogRegModel {
        weights,
        iterations,
        gradient_norm: gnorm,
    })
}

impl LogRegModel {
    pub fn decision(&self, x: &[f64]) -> f64 {
        let d = self.weights.len() - 1;
        self.weights[d] + x.iter().zip(&self.weights[..d]).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn predict_proba(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.cols() + 1 != self.weights.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} features", self.weights.len() - 1),
                found: format!("{} features", x.cols()),
            });
        }
        Ok(x.iter_rows().map(|r| sigmoid(self.decision(r))).collect())
    }
}
