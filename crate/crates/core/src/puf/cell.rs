//! Two-FeFET cell: registration by cycle-to-cycle comparison, then a
//! complementary split that freezes the state bit.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::device::{DeviceParams, FeFetDevice, WriteConfig};
use crate::error::{Error, Result};

/// Maximum number of times stages 1-2 are re-run on an exact ΔVx tie.
pub const MAX_TIE_RESAMPLES: u32 = 8;

/// Read bias and comparator settings shared by every row of an array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SenseConfig {
    /// Challenge rail voltage.
    pub vdd: f64,
    /// Gate bias used for every read.
    pub read_gate: f64,
    /// Half-width of the static comparator offset, as a fraction of vdd.
    pub offset_rel: f64,
}

impl Default for SenseConfig {
    fn default() -> Self {
        Self {
            vdd: 0.5,
            read_gate: 0.9,
            offset_rel: 0.005,
        }
    }
}

impl SenseConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.vdd.is_finite() && self.vdd > 0.0) {
            return Err(Error::config("array.vdd", "must be > 0"));
        }
        if !self.read_gate.is_finite() {
            return Err(Error::config("array.read_gate", "must be finite"));
        }
        if !(self.offset_rel.is_finite() && (0.0..0.5).contains(&self.offset_rel)) {
            return Err(Error::config("array.offset_rel", "must lie in [0, 0.5)"));
        }
        Ok(())
    }
}

/// Outcome of registering a single cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellRegistration {
    pub vx_cycle1: f64,
    pub vx_cycle2: f64,
    pub state: bool,
    pub tie_resamples: u32,
    /// Tie budget exhausted; the state defaulted to 0. Only reachable without
    /// cycle-to-cycle noise.
    pub degenerate: bool,
}

impl CellRegistration {
    pub fn delta_vx(&self) -> f64 {
        self.vx_cycle2 - self.vx_cycle1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PufCell {
    pub t1: FeFetDevice,
    pub t2: FeFetDevice,
    state: Option<bool>,
}

impl PufCell {
    pub fn new<R: Rng + ?Sized>(params: DeviceParams, rng: &mut R) -> Result<Self> {
        Ok(Self {
            t1: FeFetDevice::new(params, rng)?,
            t2: FeFetDevice::new(params, rng)?,
            state: None,
        })
    }

    pub fn state(&self) -> Option<bool> {
        self.state
    }

    /// Stages 1-3: two reset-and-weak-write cycles on T1, compare the node
    /// voltages, then split the pair into opposite saturated states.
    /// ΔVx > 0 registers state 1.
    pub fn register<R: Rng + ?Sized>(
        &mut self,
        write: &WriteConfig,
        sense: &SenseConfig,
        rng: &mut R,
    ) -> Result<CellRegistration> {
        let mut tie_resamples = 0;
        let (vx1, vx2, state, degenerate) = loop {
            let vx1 = self.write_cycle(write, sense, rng)?;
            let vx2 = self.write_cycle(write, sense, rng)?;
            if vx2 > vx1 {
                break (vx1, vx2, true, false);
            } else if vx2 < vx1 {
                break (vx1, vx2, false, false);
            } else if tie_resamples == MAX_TIE_RESAMPLES {
                break (vx1, vx2, false, true);
            }
            tie_resamples += 1;
        };
        self.split(state);
        Ok(CellRegistration {
            vx_cycle1: vx1,
            vx_cycle2: vx2,
            state,
            tie_resamples,
            degenerate,
        })
    }

    fn write_cycle<R: Rng + ?Sized>(
        &mut self,
        write: &WriteConfig,
        sense: &SenseConfig,
        rng: &mut R,
    ) -> Result<f64> {
        self.t1.erase();
        self.t2.erase();
        self.t1.write_weak(write, rng)?;
        Ok(self.t1.read_vx(sense.read_gate, sense.vdd))
    }

    /// State 0: T1 high-Vth, T2 low-Vth. State 1: T1 low-Vth, T2 high-Vth.
    pub fn split(&mut self, state: bool) {
        if state {
            self.t1.program_strong();
            self.t2.erase();
        } else {
            self.t1.erase();
            self.t2.program_strong();
        }
        self.state = Some(state);
    }

    /// Node voltage under a challenge bit. T1's source sits on the
    /// complement rail and T2's on the challenge rail, so the conducting
    /// device passes vdd exactly when state XOR challenge is 1.
    pub fn vx(&self, challenge_bit: bool, sense: &SenseConfig) -> Result<f64> {
        if self.state.is_none() {
            return Err(Error::State("cell read before registration".into()));
        }
        let (c, cbar) = if challenge_bit {
            (sense.vdd, 0.0)
        } else {
            (0.0, sense.vdd)
        };
        Ok(self.t1.read_vx(sense.read_gate, cbar) + self.t2.read_vx(sense.read_gate, c))
    }
}
