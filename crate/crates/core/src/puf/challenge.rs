use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};

/// An N-bit challenge. Index 0 is the first cell of a row and is printed
/// first (most-significant position) in bitstrings.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Challenge {
    bits: Vec<bool>,
}

/// Responses of one PUF to an ordered challenge list.
pub type ResponseVector = Vec<bool>;

impl Challenge {
    pub fn new(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        Self {
            bits: (0..n).map(|_| rng.random::<bool>()).collect(),
        }
    }

    pub fn random_set<R: Rng + ?Sized>(n: usize, count: usize, rng: &mut R) -> Vec<Self> {
        (0..count).map(|_| Self::random(n, rng)).collect()
    }

    /// Enumerates all 2^n challenges in counting order.
    pub fn all(n: usize) -> impl Iterator<Item = Challenge> {
        assert!(n < 64, "exhaustive enumeration limited to n < 64");
        (0u64..1 << n).map(move |v| Challenge {
            bits: (0..n).map(|i| (v >> (n - 1 - i)) & 1 == 1).collect(),
        })
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn complement(&self) -> Challenge {
        Challenge {
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    pub fn check_len(&self, expected: usize) -> Result<()> {
        if self.bits.len() != expected {
            return Err(Error::Dimension {
                expected,
                found: self.bits.len(),
            });
        }
        Ok(())
    }
}

impl fmt::Display for Challenge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Challenge {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Parse {
                    line: 0,
                    msg: format!("invalid challenge character `{other}`"),
                }),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Challenge { bits })
    }
}

impl From<Vec<bool>> for Challenge {
    fn from(bits: Vec<bool>) -> Self {
        Self { bits }
    }
}

/// Shorthand for tests and examples: `bits("0101")`.
pub fn bits(s: &str) -> Vec<bool> {
    s.chars().map(|c| c == '1').collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bitstring_roundtrip() {
        let c: Challenge = "100110".parse().unwrap();
        assert_eq!(c.bits(), &bits("100110")[..]);
        assert_eq!(c.to_string(), "100110");
        assert!("10a".parse::<Challenge>().is_err());
    }

    #[test]
    fn enumeration_covers_space() {
        let all: Vec<Challenge> = Challenge::all(3).collect();
        assert_eq!(all.len(), 8);
        assert_eq!(all[1].to_string(), "001");
        assert_eq!(all[4].to_string(), "100");
        let uniq: std::collections::HashSet<_> = all.into_iter().collect();
        assert_eq!(uniq.len(), 8);
    }
}
