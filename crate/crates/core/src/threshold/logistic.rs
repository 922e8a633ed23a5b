//! Univariate logistic regression fitted by iteratively reweighted least squares.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const RIDGE: f64 = 1e-6;
pub const MAX_ITERATIONS: usize = 500;
pub const TOLERANCE: f64 = 1e-8;

/// Numerically stable logistic function.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticFit {
    pub beta0: f64,
    pub beta1: f64,
    pub iterations: usize,
    pub converged: bool,
    /// The classes are perfectly separated by the feature; the ridge term is
    /// what keeps the parameters finite.
    pub separated: bool,
    /// The feature is constant, so the slope is not identified.
    pub degenerate: bool,
}

impl LogisticFit {
    pub fn predict(&self, x: f64) -> f64 {
        sigmoid(self.beta0 + self.beta1 * x)
    }
}

fn penalized_log_likelihood(x: &[f64], y: &[bool], b0: f64, b1: f64) -> f64 {
    let ll: f64 = x
        .iter()
        .zip(y)
        .map(|(&xi, &yi)| {
            let eta = b0 + b1 * xi;
            if yi {
                eta - softplus(eta)
            } else {
                -softplus(eta)
            }
        })
        .sum();
    ll - 0.5 * RIDGE * (b0 * b0 + b1 * b1)
}

/// Maximum-likelihood fit of `P(y = 1 | x) = σ(β0 + β1·x)` with an L2 ridge
/// of [`RIDGE`] on both parameters.
///
/// Newton steps are halved until the penalised likelihood does not decrease.
/// Stops once every parameter moves by less than [`TOLERANCE`], or after
/// [`MAX_ITERATIONS`].
pub fn fit(x: &[f64], y: &[bool]) -> Result<LogisticFit> {
    if x.len() != y.len() {
        return Err(Error::Inconsistency(format!(
            "{} features but {} labels",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::TrainingData("need at least two samples".into()));
    }
    if let Some(v) = x.iter().find(|v| !v.is_finite()) {
        return Err(Error::TrainingData(format!("non-finite feature value {v}")));
    }
    let positives = y.iter().filter(|&&b| b).count();
    if positives == 0 || positives == y.len() {
        return Err(Error::TrainingData("both classes must be present".into()));
    }

    let max_of = |want: bool| {
        x.iter()
            .zip(y)
            .filter(|(_, &l)| l == want)
            .map(|(&v, _)| v)
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let min_of = |want: bool| {
        x.iter()
            .zip(y)
            .filter(|(_, &l)| l == want)
            .map(|(&v, _)| v)
            .fold(f64::INFINITY, f64::min)
    };
    let separated = max_of(true) < min_of(false) || max_of(false) < min_of(true);
    let degenerate = x.iter().all(|&v| v == x[0]);

    let base_rate = positives as f64 / y.len() as f64;
    let (mut b0, mut b1) = (logit(base_rate), 0.0);
    let mut objective = penalized_log_likelihood(x, y, b0, b1);
    let mut iterations = 0;
    let mut converged = false;

    while iterations < MAX_ITERATIONS {
        iterations += 1;
        // gradient and negative Hessian of the penalised log-likelihood
        let (mut g0, mut g1) = (-RIDGE * b0, -RIDGE * b1);
        let (mut h00, mut h01, mut h11) = (RIDGE, 0.0, RIDGE);
        for (&xi, &yi) in x.iter().zip(y) {
            let p = sigmoid(b0 + b1 * xi);
            let r = f64::from(u8::from(yi)) - p;
            let w = p * (1.0 - p);
            g0 += r;
            g1 += r * xi;
            h00 += w;
            h01 += w * xi;
            h11 += w * xi * xi;
        }
        let det = h00 * h11 - h01 * h01;
        if !(det.is_finite() && det > 0.0) {
            break;
        }
        let d0 = (h11 * g0 - h01 * g1) / det;
        let d1 = (h00 * g1 - h01 * g0) / det;

        let mut scale = 1.0;
        let (mut n0, mut n1);
        loop {
            n0 = b0 + scale * d0;
            n1 = b1 + scale * d1;
            let candidate = penalized_log_likelihood(x, y, n0, n1);
            if candidate >= objective || scale < 1e-10 {
                objective = candidate.max(objective);
                break;
            }
            scale *= 0.5;
        }
        let change = (n0 - b0).abs().max((n1 - b1).abs());
        b0 = n0;
        b1 = n1;
        if change < TOLERANCE {
            converged = true;
            break;
        }
    }

    Ok(LogisticFit {
        beta0: b0,
        beta1: b1,
        iterations,
        converged,
        separated,
        degenerate,
    })
}
