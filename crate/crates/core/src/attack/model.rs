//! k-arm XOR logistic model.
//!
//! Each arm computes a_j = w_j·Φ and the model forms t = Π_j a_j. A
//! negative arm value encodes a response bit of 1, so an odd number of
//! negative arms (t < 0) encodes an XOR of 1. The model reports
//! P(response = 1) = σ(−t).

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::features::Dataset;
use crate::device::logistic;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct XorModel {
    k: usize,
    dim: usize,
    /// Arm weights, arm-major.
    weights: Vec<f64>,
}

impl XorModel {
    pub fn new(arms: Vec<Vec<f64>>) -> Result<Self> {
        let dim = arms
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::config("attack.k", "XOR fan-in must be >= 1"))?;
        if let Some(bad) = arms.iter().find(|a| a.len() != dim) {
            return Err(Error::Dimension {
                expected: dim,
                found: bad.len(),
            });
        }
        let weights: Vec<f64> = arms.into_iter().flatten().collect();
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Domain("model weights must be finite".into()));
        }
        Ok(Self {
            k: weights.len() / dim.max(1),
            dim,
            weights,
        })
    }

    /// Standard-normal initialization.
    pub fn random<R: Rng + ?Sized>(k: usize, dim: usize, rng: &mut R) -> Result<Self> {
        if k == 0 {
            return Err(Error::config("attack.k", "XOR fan-in must be >= 1"));
        }
        let weights = (0..k * dim).map(|_| StandardNormal.sample(rng)).collect();
        Ok(Self { k, dim, weights })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn arm(&self, j: usize) -> &[f64] {
        &self.weights[j * self.dim..(j + 1) * self.dim]
    }

    pub fn arm_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.weights[j * self.dim..(j + 1) * self.dim]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    fn check_dim(&self, features: &[f64]) -> Result<()> {
        if features.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                found: features.len(),
            });
        }
        Ok(())
    }

    fn arm_values_into(&self, features: &[f64], out: &mut [f64]) {
        for (j, a) in out.iter_mut().enumerate() {
            *a = dot(self.arm(j), features);
        }
    }

    /// Product of arm values.
    pub fn score(&self, features: &[f64]) -> Result<f64> {
        self.check_dim(features)?;
        Ok((0..self.k).map(|j| dot(self.arm(j), features)).product())
    }

    /// Probability that the response bit is 1.
    pub fn forward(&self, features: &[f64]) -> Result<f64> {
        Ok(logistic(-self.score(features)?))
    }

    /// Predicted bit: 1 iff the probability exceeds one half (t < 0).
    pub fn predict(&self, features: &[f64]) -> Result<bool> {
        Ok(self.score(features)? < 0.0)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// ln(1 + e^x) without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Mean loss, number of correct predictions and (optionally) the mean
/// gradient over a dataset, in one pass.
pub(crate) fn batch_pass(
    model: &XorModel,
    data: &Dataset,
    mut grad: Option<&mut [f64]>,
) -> (f64, usize) {
    let (k, dim) = (model.k, model.dim);
    if let Some(g) = grad.as_deref_mut() {
        g.fill(0.0);
    }
    let mut arms = vec![0.0; k];
    let mut loss = 0.0;
    let mut correct = 0usize;
    for (x, y) in data.iter() {
        model.arm_values_into(x, &mut arms);
        let t: f64 = arms.iter().product();
        // z = +1 encodes bit 0, −1 encodes bit 1; loss = softplus(−z·t)
        let z = if y { -1.0 } else { 1.0 };
        loss += softplus(-z * t);
        correct += usize::from((t < 0.0) == y);
        if let Some(g) = grad.as_deref_mut() {
            let dl_dt = -z * logistic(-z * t);
            for j in 0..k {
                let others: f64 = arms
                    .iter()
                    .enumerate()
                    .filter(|&(m, _)| m != j)
                    .map(|(_, a)| a)
                    .product();
                let coef = dl_dt * others;
                let gj = &mut g[j * dim..(j + 1) * dim];
                for (gi, xi) in gj.iter_mut().zip(x) {
                    *gi += coef * xi;
                }
            }
        }
    }
    let n = data.len().max(1) as f64;
    if let Some(g) = grad {
        g.iter_mut().for_each(|v| *v /= n);
    }
    (loss / n, correct)
}

/// Mean cross-entropy of the model on `data` and its gradient with respect
/// to every weight, arm-major.
pub fn loss_and_gradient(model: &XorModel, data: &Dataset) -> Result<(f64, Vec<f64>)> {
    if data.dim() != model.dim {
        return Err(Error::Dimension {
            expected: model.dim,
            found: data.dim(),
        });
    }
    let mut g = vec![0.0; model.weights.len()];
    let (loss, _) = batch_pass(model, data, Some(&mut g));
    Ok((loss, g))
}

/// Fraction of correctly predicted responses.
pub fn evaluate(model: &XorModel, data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::InsufficientData("empty evaluation set".into()));
    }
    if data.dim() != model.dim {
        return Err(Error::Dimension {
            expected: model.dim,
            found: data.dim(),
        });
    }
    let (_, correct) = batch_pass(model, data, None);
    Ok(correct as f64 / data.len() as f64)
}
