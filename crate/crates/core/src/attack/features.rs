use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::puf::{parity_transform, Challenge, CrpSet, PufKind};

/// How a challenge is lifted into the linear model's input space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureKind {
    /// x_i = 1 − 2c_i. The proposed row responds with the sign of a linear
    /// form in these ±1 values.
    ProposedDirect,
    /// Φ_i = Π_{j≥i} (1 − 2c_j), the additive-delay arbiter transform.
    ArbiterParity,
}

impl FeatureKind {
    pub fn for_puf(kind: PufKind) -> Self {
        match kind {
            PufKind::Proposed => FeatureKind::ProposedDirect,
            PufKind::Arbiter => FeatureKind::ArbiterParity,
        }
    }
}

/// Feature vector of length n + 1; the last entry is the constant bias 1.
pub fn feature_map(challenge: &Challenge, kind: FeatureKind) -> Vec<f64> {
    match kind {
        FeatureKind::ProposedDirect => challenge
            .bits()
            .iter()
            .map(|&c| if c { -1.0 } else { 1.0 })
            .chain(std::iter::once(1.0))
            .collect(),
        FeatureKind::ArbiterParity => parity_transform(challenge),
    }
}

/// Row-major feature matrix with binary labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    features: Vec<f64>,
    labels: Vec<bool>,
}

impl Dataset {
    pub fn from_crps(crps: &CrpSet) -> Self {
        Self::from_crps_with(crps, FeatureKind::for_puf(crps.kind))
    }

    pub fn from_crps_with(crps: &CrpSet, kind: FeatureKind) -> Self {
        let dim = crps.n + 1;
        let mut features = Vec::with_capacity(dim * crps.len());
        let mut labels = Vec::with_capacity(crps.len());
        for p in &crps.pairs {
            features.extend(feature_map(&p.challenge, kind));
            labels.push(p.response);
        }
        Self {
            dim,
            features,
            labels,
        }
    }

    pub fn from_parts(dim: usize, samples: Vec<(Vec<f64>, bool)>) -> Result<Self> {
        let mut features = Vec::with_capacity(dim * samples.len());
        let mut labels = Vec::with_capacity(samples.len());
        for (x, y) in samples {
            if x.len() != dim {
                return Err(crate::Error::Dimension {
                    expected: dim,
                    found: x.len(),
                });
            }
            features.extend(x);
            labels.push(y);
        }
        Ok(Self {
            dim,
            features,
            labels,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn sample(&self, i: usize) -> (&[f64], bool) {
        (
            &self.features[i * self.dim..(i + 1) * self.dim],
            self.labels[i],
        )
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], bool)> + '_ {
        self.features
            .chunks_exact(self.dim)
            .zip(self.labels.iter().copied())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::puf::bits;

    #[test]
    fn zero_challenge_maps_to_ones() {
        for kind in [FeatureKind::ProposedDirect, FeatureKind::ArbiterParity] {
            let f = feature_map(&Challenge::new(vec![false; 6]), kind);
            assert_eq!(f, vec![1.0; 7]);
        }
    }

    #[test]
    fn hand_values() {
        assert_eq!(
            feature_map(&Challenge::new(bits("101")), FeatureKind::ArbiterParity),
            vec![1.0, -1.0, -1.0, 1.0]
        );
        assert_eq!(
            feature_map(&Challenge::new(bits("10")), FeatureKind::ProposedDirect),
            vec![-1.0, 1.0, 1.0]
        );
    }

    #[test]
    fn dataset_layout() {
        let d =
            Dataset::from_parts(2, vec![(vec![1.0, 2.0], true), (vec![3.0, 4.0], false)]).unwrap();
        assert_eq!(d.sample(1), (&[3.0, 4.0][..], false));
        assert_eq!(d.iter().count(), 2);
        assert!(Dataset::from_parts(2, vec![(vec![1.0], true)]).is_err());
    }
}
