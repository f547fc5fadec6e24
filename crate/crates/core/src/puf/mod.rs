//! Voltage-mode FeFET strong PUF: cells, rows, arrays, XOR composition,
//! the arbiter baseline and challenge-response sets.

mod arbiter;
mod cell;
mod challenge;
mod crp;
mod mismatch;
mod row;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use arbiter::{parity_transform, ArbiterPuf};
pub use cell::{CellRegistration, PufCell, SenseConfig, MAX_TIE_RESAMPLES};
pub use challenge::{bits, Challenge, ResponseVector};
pub use crp::{Crp, CrpSet};
pub use mismatch::{normalize_deviations, CapMismatchModel, CapWeights, CLAMP_FLOOR};
pub use row::{
    compare, ground_truth_bit, PufArray, PufRow, RegistrationRecord, SenseOutcome, TIE_TOLERANCE,
};

use crate::device::{DeviceParams, WriteConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PufKind {
    Proposed,
    Arbiter,
}

impl PufKind {
    pub fn name(self) -> &'static str {
        match self {
            PufKind::Proposed => "proposed",
            PufKind::Arbiter => "arbiter",
        }
    }
}

impl fmt::Display for PufKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PufKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "proposed" => Ok(PufKind::Proposed),
            "arbiter" => Ok(PufKind::Arbiter),
            other => Err(Error::config("kind", format!("unknown PUF kind `{other}`"))),
        }
    }
}

/// Anything that maps challenges to single response bits.
pub trait Puf: Sync {
    fn kind(&self) -> PufKind;
    fn challenge_len(&self) -> usize;
    fn xor_fan_in(&self) -> usize;
    fn respond(&self, challenge: &Challenge) -> Result<bool>;
}

impl Puf for PufRow {
    fn kind(&self) -> PufKind {
        PufKind::Proposed
    }

    fn challenge_len(&self) -> usize {
        self.len()
    }

    fn xor_fan_in(&self) -> usize {
        1
    }

    fn respond(&self, challenge: &Challenge) -> Result<bool> {
        self.response_bit(challenge)
    }
}

impl Puf for ArbiterPuf {
    fn kind(&self) -> PufKind {
        PufKind::Arbiter
    }

    fn challenge_len(&self) -> usize {
        self.n()
    }

    fn xor_fan_in(&self) -> usize {
        self.k()
    }

    fn respond(&self, challenge: &Challenge) -> Result<bool> {
        self.response(challenge)
    }
}

/// (n,k)-XOR composition of k independent proposed-PUF rows.
#[derive(Debug, Clone, PartialEq)]
pub struct XorGroup {
    rows: Vec<PufRow>,
}

impl XorGroup {
    pub fn new(rows: Vec<PufRow>) -> Result<Self> {
        let n = rows
            .first()
            .map(PufRow::len)
            .ok_or_else(|| Error::config("attack.k", "XOR fan-in must be >= 1"))?;
        if let Some(r) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::Dimension {
                expected: n,
                found: r.len(),
            });
        }
        Ok(Self { rows })
    }

    /// Fabricates and registers k fresh rows of n cells.
    pub fn fabricate<R: Rng + ?Sized>(
        n: usize,
        k: usize,
        recipe: &RowRecipe,
        rng: &mut R,
    ) -> Result<Self> {
        if k == 0 {
            return Err(Error::config("attack.k", "XOR fan-in must be >= 1"));
        }
        let rows = (0..k)
            .map(|_| recipe.registered_row(n, rng))
            .collect::<Result<Vec<_>>>()?;
        Self::new(rows)
    }

    pub fn rows(&self) -> &[PufRow] {
        &self.rows
    }
}

impl Puf for XorGroup {
    fn kind(&self) -> PufKind {
        PufKind::Proposed
    }

    fn challenge_len(&self) -> usize {
        self.rows[0].len()
    }

    fn xor_fan_in(&self) -> usize {
        self.rows.len()
    }

    fn respond(&self, challenge: &Challenge) -> Result<bool> {
        self.rows
            .iter()
            .try_fold(false, |acc, r| Ok(acc ^ r.response_bit(challenge)?))
    }
}

/// Everything needed to fabricate and register a proposed-PUF row.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RowRecipe {
    pub device: DeviceParams,
    pub write: WriteConfig,
    pub mismatch: CapMismatchModel,
    pub sense: SenseConfig,
}

impl RowRecipe {
    pub fn row<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<PufRow> {
        PufRow::new(n, self.device, &self.mismatch, self.sense, rng)
    }

    pub fn registered_row<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<PufRow> {
        let mut row = self.row(n, rng)?;
        let rec = row.register(&self.write, rng)?;
        if !rec.degenerate_cells.is_empty() {
            return Err(Error::Runtime(format!(
                "{} cells registered degenerate; check device.sigma_c2c",
                rec.degenerate_cells.len()
            )));
        }
        Ok(row)
    }
}

/// Maps `respond` over a challenge list.
pub fn response_vector<P: Puf + ?Sized>(
    puf: &P,
    challenges: &[Challenge],
) -> Result<ResponseVector> {
    challenges.iter().map(|c| puf.respond(c)).collect()
}
