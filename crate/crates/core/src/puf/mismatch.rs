use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest relative capacitance kept after clamping an extreme draw.
pub const CLAMP_FLOOR: f64 = 1e-3;

/// Monte-Carlo model of static capacitor mismatch: every capacitor deviates
/// from nominal by an independent Normal(0, sigma_c²) relative error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct CapMismatchModel {
    pub sigma_c: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapWeights {
    pub weights: Vec<f64>,
    /// Number of draws with 1 + δ below the clamp floor.
    pub clamp_events: usize,
}

impl CapMismatchModel {
    pub fn new(sigma_c: f64) -> Result<Self> {
        if !(sigma_c.is_finite() && sigma_c >= 0.0) {
            return Err(Error::config("array.sigma_c", "must be finite and >= 0"));
        }
        Ok(Self { sigma_c })
    }

    /// Draws the coupling weights of an `n`-cell row.
    pub fn sample_weights<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<CapWeights> {
        if n == 0 {
            return Err(Error::Domain("a row needs at least one capacitor".into()));
        }
        if self.sigma_c == 0.0 {
            return Ok(CapWeights {
                weights: vec![1.0 / n as f64; n],
                clamp_events: 0,
            });
        }
        let normal = Normal::new(0.0, self.sigma_c)
            .map_err(|e| Error::config("array.sigma_c", e.to_string()))?;
        let deltas: Vec<f64> = (0..n).map(|_| normal.sample(rng)).collect();
        Ok(normalize_deviations(&deltas))
    }
}

/// w_i = (1 + δ_i) / Σ_j (1 + δ_j), with each 1 + δ clamped to the floor.
pub fn normalize_deviations(deltas: &[f64]) -> CapWeights {
    let mut clamp_events = 0;
    let caps: Vec<f64> = deltas
        .iter()
        .map(|d| {
            let c = 1.0 + d;
            if c < CLAMP_FLOOR {
                clamp_events += 1;
                CLAMP_FLOOR
            } else {
                c
            }
        })
        .collect();
    let total: f64 = caps.iter().sum();
    CapWeights {
        weights: caps.iter().map(|c| c / total).collect(),
        clamp_events,
    }
}
