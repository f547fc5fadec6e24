//! Additive-delay arbiter PUF baseline, optionally XORed.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::challenge::Challenge;
use crate::error::{Error, Result};

/// Parity feature vector: Φ_i = Π_{j≥i} (1 − 2c_j) for i < n, plus a
/// trailing constant 1.
pub fn parity_transform(challenge: &Challenge) -> Vec<f64> {
    let n = challenge.len();
    let mut phi = vec![1.0; n + 1];
    let mut acc = 1.0;
    for i in (0..n).rev() {
        if challenge.bits()[i] {
            acc = -acc;
        }
        phi[i] = acc;
    }
    phi
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArbiterPuf {
    n: usize,
    arms: Vec<Vec<f64>>,
}

impl ArbiterPuf {
    /// k independent arbiter chains with Normal(0, 1) stage delay
    /// differences.
    pub fn new<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<Self> {
        if n == 0 {
            return Err(Error::config("attack.n", "challenge length must be >= 1"));
        }
        if k == 0 {
            return Err(Error::config("attack.k", "XOR fan-in must be >= 1"));
        }
        let arms = (0..k)
            .map(|_| (0..=n).map(|_| StandardNormal.sample(rng)).collect())
            .collect();
        Ok(Self { n, arms })
    }

    pub fn from_weights(arms: Vec<Vec<f64>>) -> Result<Self> {
        let n = arms
            .first()
            .map(|a| a.len())
            .filter(|&len| len >= 2)
            .ok_or_else(|| Error::config("attack.k", "need at least one arm of length >= 2"))?
            - 1;
        if let Some(bad) = arms.iter().find(|a| a.len() != n + 1) {
            return Err(Error::Dimension {
                expected: n + 1,
                found: bad.len(),
            });
        }
        Ok(Self { n, arms })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.arms.len()
    }

    pub fn arms(&self) -> &[Vec<f64>] {
        &self.arms
    }

    /// XOR of the arm bits [Φ·w > 0]; an exact zero counts as 0.
    pub fn response(&self, challenge: &Challenge) -> Result<bool> {
        challenge.check_len(self.n)?;
        let phi = parity_transform(challenge);
        Ok(self.arms.iter().fold(false, |acc, w| {
            let delay: f64 = w.iter().zip(&phi).map(|(a, b)| a * b).sum();
            acc ^ (delay > 0.0)
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::puf::challenge::bits;
    use crate::rng::stream_from_seed;

    #[test]
    fn parity_hand_values() {
        assert_eq!(parity_transform(&Challenge::new(bits("0"))), vec![1.0, 1.0]);
        assert_eq!(
            parity_transform(&Challenge::new(bits("1"))),
            vec![-1.0, 1.0]
        );
        assert_eq!(
            parity_transform(&Challenge::new(bits("101"))),
            vec![1.0, -1.0, -1.0, 1.0]
        );
        assert!(parity_transform(&Challenge::new(vec![false; 9]))
            .iter()
            .all(|&x| x == 1.0));
    }

    #[test]
    fn rejects_zero_sizes() {
        let mut rng = stream_from_seed(0);
        assert!(ArbiterPuf::new(0, 1, &mut rng).is_err());
        assert!(ArbiterPuf::new(4, 0, &mut rng).is_err());
        assert!(ArbiterPuf::from_weights(vec![]).is_err());
        assert!(ArbiterPuf::from_weights(vec![vec![1.0, 2.0], vec![1.0]]).is_err());
    }

    #[test]
    fn known_weights_respond_by_sign() {
        // Φ(c=1) = (-1, 1): delay = -2 + 1 < 0
        let p = ArbiterPuf::from_weights(vec![vec![2.0, 1.0]]).unwrap();
        assert!(p.response(&Challenge::new(bits("0"))).unwrap());
        assert!(!p.response(&Challenge::new(bits("1"))).unwrap());
        let tie = ArbiterPuf::from_weights(vec![vec![1.0, -1.0]]).unwrap();
        assert!(!tie.response(&Challenge::new(bits("0"))).unwrap());
    }

    #[test]
    fn instances_are_unique() {
        let mut rng = stream_from_seed(12);
        let challenges = Challenge::random_set(32, 200, &mut rng);
        let instances: Vec<ArbiterPuf> = (0..30)
            .map(|_| ArbiterPuf::new(32, 1, &mut rng).unwrap())
            .collect();
        let resp: Vec<Vec<bool>> = instances
            .iter()
            .map(|p| challenges.iter().map(|c| p.response(c).unwrap()).collect())
            .collect();
        let mut total = 0.0;
        let mut pairs = 0;
        for i in 0..resp.len() {
            for j in i + 1..resp.len() {
                let d = resp[i].iter().zip(&resp[j]).filter(|(a, b)| a != b).count();
                total += d as f64 / challenges.len() as f64;
                pairs += 1;
            }
        }
        let mean = total / pairs as f64;
        assert!((mean - 0.5).abs() < 0.05, "mean {mean}");
    }
}
