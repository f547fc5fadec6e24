use rand::Rng;
use rayon::prelude::*;

use super::cell::{PufCell, SenseConfig};
use super::challenge::Challenge;
use super::mismatch::CapMismatchModel;
use crate::device::{DeviceParams, WriteConfig};
use crate::error::{Error, Result};
use crate::rng::stream_from_seed;

/// Relative band (of vdd) around the comparator threshold treated as an
/// exact tie. Covers summation-order rounding of ideally equal voltages.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Per-row result of a registration pass.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RegistrationRecord {
    pub vx_cycle1: Vec<f64>,
    pub vx_cycle2: Vec<f64>,
    pub delta_vx: Vec<f64>,
    pub states: Vec<bool>,
    pub tie_resamples: u32,
    /// Cells whose tie budget ran out.
    pub degenerate_cells: Vec<usize>,
}

/// Comparator decision with tie flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SenseOutcome {
    pub bit: bool,
    pub tie: bool,
}

/// `vsum > threshold`, with values inside the tie band resolved to 0.
pub fn compare(vsum: f64, threshold: f64, vdd: f64) -> SenseOutcome {
    if (vsum - threshold).abs() <= TIE_TOLERANCE * vdd {
        SenseOutcome {
            bit: false,
            tie: true,
        }
    } else {
        SenseOutcome {
            bit: vsum > threshold,
            tie: false,
        }
    }
}

/// Response of an ideal row (uniform weights, no offset): 1 iff more than
/// half of the cells see state XOR challenge = 1.
pub fn ground_truth_bit(states: &[bool], challenge: &Challenge) -> Result<bool> {
    challenge.check_len(states.len())?;
    let hits = states
        .iter()
        .zip(challenge.bits())
        .filter(|(s, c)| *s ^ *c)
        .count();
    Ok(2 * hits > states.len())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PufRow {
    cells: Vec<PufCell>,
    cap_weights: Vec<f64>,
    sense_offset: f64,
    clamp_events: usize,
    sense: SenseConfig,
}

impl PufRow {
    /// Fabricates an unregistered row: 2n devices, static capacitor weights
    /// and a static comparator offset drawn uniformly in ±offset_rel·vdd.
    pub fn new<R: Rng + ?Sized>(
        n: usize,
        params: DeviceParams,
        mismatch: &CapMismatchModel,
        sense: SenseConfig,
        rng: &mut R,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::config("array.n", "a row needs at least one cell"));
        }
        sense.validate()?;
        let cells = (0..n)
            .map(|_| PufCell::new(params, rng))
            .collect::<Result<Vec<_>>>()?;
        let w = mismatch.sample_weights(n, rng)?;
        let half = sense.offset_rel * sense.vdd;
        let sense_offset = if half > 0.0 {
            rng.random_range(-half..=half)
        } else {
            0.0
        };
        Ok(Self {
            cells,
            cap_weights: w.weights,
            sense_offset,
            clamp_events: w.clamp_events,
            sense,
        })
    }

    /// Replaces the comparator offset. Used by tests and by experiments that
    /// pin the offset instead of sampling it.
    pub fn with_sense_offset(mut self, offset: f64) -> Self {
        self.sense_offset = offset;
        self
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &[PufCell] {
        &self.cells
    }

    pub fn cap_weights(&self) -> &[f64] {
        &self.cap_weights
    }

    pub fn sense_offset(&self) -> f64 {
        self.sense_offset
    }

    pub fn clamp_events(&self) -> usize {
        self.clamp_events
    }

    pub fn sense(&self) -> &SenseConfig {
        &self.sense
    }

    /// Registered state pattern, or `None` if any cell is unregistered.
    pub fn states(&self) -> Option<Vec<bool>> {
        self.cells.iter().map(PufCell::state).collect()
    }

    pub fn is_registered(&self) -> bool {
        self.cells.iter().all(|c| c.state().is_some())
    }

    pub fn register<R: Rng + ?Sized>(
        &mut self,
        write: &WriteConfig,
        rng: &mut R,
    ) -> Result<RegistrationRecord> {
        let mut rec = RegistrationRecord::default();
        for (i, cell) in self.cells.iter_mut().enumerate() {
            let r = cell.register(write, &self.sense, rng)?;
            rec.vx_cycle1.push(r.vx_cycle1);
            rec.vx_cycle2.push(r.vx_cycle2);
            rec.delta_vx.push(r.delta_vx());
            rec.states.push(r.state);
            rec.tie_resamples += r.tie_resamples;
            if r.degenerate {
                rec.degenerate_cells.push(i);
            }
        }
        Ok(rec)
    }

    /// Stage 4: re-run registration on an already registered row.
    pub fn reconfigure<R: Rng + ?Sized>(
        &mut self,
        write: &WriteConfig,
        rng: &mut R,
    ) -> Result<RegistrationRecord> {
        if !self.is_registered() {
            return Err(Error::State("reconfigure requires a registered row".into()));
        }
        self.register(write, rng)
    }

    /// Capacitively weighted average of the cell node voltages.
    pub fn vsum(&self, challenge: &Challenge) -> Result<f64> {
        challenge.check_len(self.cells.len())?;
        let mut acc = 0.0;
        for ((cell, &w), &c) in self
            .cells
            .iter()
            .zip(&self.cap_weights)
            .zip(challenge.bits())
        {
            acc += w * cell.vx(c, &self.sense)?;
        }
        Ok(acc)
    }

    pub fn threshold(&self) -> f64 {
        0.5 * self.sense.vdd + self.sense_offset
    }

    pub fn sense_outcome(&self, challenge: &Challenge) -> Result<SenseOutcome> {
        let v = self.vsum(challenge)?;
        Ok(compare(v, self.threshold(), self.sense.vdd))
    }

    pub fn response_bit(&self, challenge: &Challenge) -> Result<bool> {
        Ok(self.sense_outcome(challenge)?.bit)
    }

    pub fn ground_truth_bit(&self, challenge: &Challenge) -> Result<bool> {
        let states = self
            .states()
            .ok_or_else(|| Error::State("ground truth of an unregistered row".into()))?;
        ground_truth_bit(&states, challenge)
    }
}

/// M rows sharing N and the read/sense settings.
#[derive(Debug, Clone, PartialEq)]
pub struct PufArray {
    rows: Vec<PufRow>,
    sense: SenseConfig,
}

impl PufArray {
    pub fn new<R: Rng + ?Sized>(
        rows: usize,
        n: usize,
        params: DeviceParams,
        mismatch: &CapMismatchModel,
        sense: SenseConfig,
        rng: &mut R,
    ) -> Result<Self> {
        if rows == 0 {
            return Err(Error::config(
                "array.rows",
                "an array needs at least one row",
            ));
        }
        let rows = (0..rows)
            .map(|_| PufRow::new(n, params, mismatch, sense, rng))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { rows, sense })
    }

    pub fn from_rows(rows: Vec<PufRow>) -> Result<Self> {
        let first = rows
            .first()
            .ok_or_else(|| Error::config("array.rows", "an array needs at least one row"))?;
        let (n, sense) = (first.len(), *first.sense());
        for r in &rows {
            if r.len() != n {
                return Err(Error::Dimension {
                    expected: n,
                    found: r.len(),
                });
            }
            if *r.sense() != sense {
                return Err(Error::config(
                    "array.vdd",
                    "rows disagree on sense settings",
                ));
            }
        }
        Ok(Self { rows, sense })
    }

    pub fn rows(&self) -> &[PufRow] {
        &self.rows
    }

    pub fn into_rows(self) -> Vec<PufRow> {
        self.rows
    }

    pub fn sense(&self) -> &SenseConfig {
        &self.sense
    }

    pub fn row_len(&self) -> usize {
        self.rows[0].len()
    }

    /// Registers every row. One sub-seed per row is drawn from `rng` up
    /// front, so the result does not depend on the thread count.
    pub fn register<R: Rng + ?Sized>(
        &mut self,
        write: &WriteConfig,
        rng: &mut R,
    ) -> Result<Vec<RegistrationRecord>> {
        let seeds: Vec<u64> = (0..self.rows.len()).map(|_| rng.random()).collect();
        self.rows
            .par_iter_mut()
            .zip(seeds)
            .map(|(row, seed)| row.register(write, &mut stream_from_seed(seed)))
            .collect()
    }

    pub fn reconfigure<R: Rng + ?Sized>(
        &mut self,
        write: &WriteConfig,
        rng: &mut R,
    ) -> Result<Vec<RegistrationRecord>> {
        if !self.rows.iter().all(PufRow::is_registered) {
            return Err(Error::State(
                "reconfigure requires a registered array".into(),
            ));
        }
        self.register(write, rng)
    }
}
