//! Behavioral FeFET model.
//!
//! Threshold voltage after a weak write is the sum of a population mean
//! (shifted by pulse amplitude and temperature), a per-device offset drawn
//! once at construction (device-to-device variation) and a fresh Gaussian
//! sample per write (cycle-to-cycle variation). Erase and strong program are
//! deterministic and saturate the device to the high and low threshold.
//! The node voltage read through a device is a logistic transfer in the
//! gate overdrive.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pulse amplitude at which `weak_mean_base` is specified.
pub const REFERENCE_AMPLITUDE: f64 = 2.8;
/// Temperature (°C) at which `weak_mean_base` is specified.
pub const REFERENCE_TEMPERATURE: f64 = 25.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeviceParams {
    /// Threshold after erase (high-Vth state), volts.
    pub vth_erased: f64,
    /// Threshold after strong program (low-Vth state), volts.
    pub vth_programmed: f64,
    /// Population mean of the weak-write threshold at 2.8 V and 25 °C.
    pub weak_mean_base: f64,
    /// Mean threshold decrease per volt of additional pulse amplitude.
    pub amplitude_slope: f64,
    /// Mean threshold decrease per °C above 25 °C.
    pub temp_slope: f64,
    pub sigma_d2d: f64,
    pub sigma_c2c: f64,
    /// Softness of the read transfer function, volts.
    pub read_slope: f64,
    /// Lowest pulse amplitude treated as a weak write.
    pub weak_min: f64,
    /// Highest pulse amplitude treated as a weak write.
    pub weak_max: f64,
}

impl Default for DeviceParams {
    fn default() -> Self {
        Self {
            vth_erased: 1.6,
            vth_programmed: 0.2,
            weak_mean_base: 0.7,
            amplitude_slope: 0.375,
            temp_slope: 0.002,
            sigma_d2d: 0.20,
            sigma_c2c: 0.05,
            read_slope: 0.1,
            weak_min: 2.8,
            weak_max: 3.6,
        }
    }
}

impl DeviceParams {
    /// Checks the ordering and positivity constraints. The noise terms may
    /// be zero, which yields the degenerate noise-free device used in tests.
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("vth_erased", self.vth_erased),
            ("vth_programmed", self.vth_programmed),
            ("weak_mean_base", self.weak_mean_base),
            ("amplitude_slope", self.amplitude_slope),
            ("temp_slope", self.temp_slope),
            ("sigma_d2d", self.sigma_d2d),
            ("sigma_c2c", self.sigma_c2c),
            ("read_slope", self.read_slope),
            ("weak_min", self.weak_min),
            ("weak_max", self.weak_max),
        ];
        for (key, v) in fields {
            if !v.is_finite() {
                return Err(Error::config(format!("device.{key}"), "must be finite"));
            }
        }
        if !(self.vth_erased > self.weak_mean_base && self.weak_mean_base > self.vth_programmed) {
            return Err(Error::config(
                "device.weak_mean_base",
                "require vth_erased > weak_mean_base > vth_programmed",
            ));
        }
        if self.sigma_d2d < 0.0 {
            return Err(Error::config("device.sigma_d2d", "must be >= 0"));
        }
        if self.sigma_c2c < 0.0 {
            return Err(Error::config("device.sigma_c2c", "must be >= 0"));
        }
        if self.read_slope <= 0.0 {
            return Err(Error::config("device.read_slope", "must be > 0"));
        }
        if self.amplitude_slope <= 0.0 {
            return Err(Error::config("device.amplitude_slope", "must be > 0"));
        }
        if self.weak_min > self.weak_max {
            return Err(Error::config("device.weak_min", "must not exceed weak_max"));
        }
        Ok(())
    }

    /// True when a gate bias reads split devices within 1% of the rails,
    /// i.e. both saturated thresholds sit at least six read slopes away.
    pub fn separates_at(&self, read_gate: f64) -> bool {
        let margin = 6.0 * self.read_slope;
        self.vth_programmed + margin < read_gate && read_gate < self.vth_erased - margin
    }

    /// Population mean of the weak-write threshold under the given conditions.
    pub fn weak_mean(&self, pulse_amplitude: f64, temperature: f64) -> f64 {
        self.weak_mean_base
            - self.amplitude_slope * (pulse_amplitude - REFERENCE_AMPLITUDE)
            - self.temp_slope * (temperature - REFERENCE_TEMPERATURE)
    }

    pub fn with_size(mut self, size: SizeProfile) -> Self {
        self.sigma_c2c *= size.c2c_scale();
        self
    }
}

/// Device geometry presets. Smaller devices show larger write noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum SizeProfile {
    #[default]
    #[serde(rename = "500x500")]
    W500L500,
    #[serde(rename = "200x200")]
    W200L200,
    #[serde(rename = "200x100")]
    W200L100,
}

impl SizeProfile {
    pub const ALL: [SizeProfile; 3] = [
        SizeProfile::W500L500,
        SizeProfile::W200L200,
        SizeProfile::W200L100,
    ];

    pub fn c2c_scale(self) -> f64 {
        match self {
            SizeProfile::W500L500 => 1.0,
            SizeProfile::W200L200 => 1.2,
            SizeProfile::W200L100 => 1.4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SizeProfile::W500L500 => "500x500",
            SizeProfile::W200L200 => "200x200",
            SizeProfile::W200L100 => "200x100",
        }
    }
}

impl fmt::Display for SizeProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SizeProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SizeProfile::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::config("device.size", format!("unknown size profile `{s}`")))
    }
}

/// Pulse amplitude and temperature of a weak write.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WriteConfig {
    pub pulse_amplitude: f64,
    pub temperature: f64,
}

impl Default for WriteConfig {
    fn default() -> Self {
        Self {
            pulse_amplitude: REFERENCE_AMPLITUDE,
            temperature: REFERENCE_TEMPERATURE,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeFetDevice {
    params: DeviceParams,
    d2d_offset: f64,
    vth: f64,
}

impl FeFetDevice {
    /// Samples a new device. The device-to-device offset is fixed here for
    /// the device's lifetime; the device starts erased.
    pub fn new<R: Rng + ?Sized>(params: DeviceParams, rng: &mut R) -> Result<Self> {
        params.validate()?;
        let d2d_offset = sample_normal(params.sigma_d2d, rng);
        Ok(Self {
            params,
            d2d_offset,
            vth: params.vth_erased,
        })
    }

    pub fn params(&self) -> &DeviceParams {
        &self.params
    }

    pub fn d2d_offset(&self) -> f64 {
        self.d2d_offset
    }

    pub fn vth(&self) -> f64 {
        self.vth
    }

    pub fn erase(&mut self) {
        self.vth = self.params.vth_erased;
    }

    pub fn program_strong(&mut self) {
        self.vth = self.params.vth_programmed;
    }

    /// Partial-polarization write. Each call draws a fresh cycle-to-cycle
    /// sample.
    pub fn write_weak<R: Rng + ?Sized>(&mut self, write: &WriteConfig, rng: &mut R) -> Result<()> {
        let p = &self.params;
        let a = write.pulse_amplitude;
        if !(a >= p.weak_min && a <= p.weak_max) {
            return Err(Error::Domain(format!(
                "pulse amplitude {a} V outside weak-write range [{}, {}] V",
                p.weak_min, p.weak_max
            )));
        }
        if !write.temperature.is_finite() {
            return Err(Error::Domain("temperature must be finite".into()));
        }
        let noise = sample_normal(p.sigma_c2c, rng);
        self.vth = p.weak_mean(a, write.temperature) + self.d2d_offset + noise;
        Ok(())
    }

    /// Node voltage passed by the device with `source_voltage` on its source
    /// rail and `gate_voltage` on its gate.
    pub fn read_vx(&self, gate_voltage: f64, source_voltage: f64) -> f64 {
        read_transfer(
            gate_voltage,
            self.vth,
            self.params.read_slope,
            source_voltage,
        )
    }
}

pub fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn read_transfer(gate_voltage: f64, vth: f64, read_slope: f64, source_voltage: f64) -> f64 {
    source_voltage * logistic((gate_voltage - vth) / read_slope)
}

fn sample_normal<R: Rng + ?Sized>(sigma: f64, rng: &mut R) -> f64 {
    if sigma == 0.0 {
        return 0.0;
    }
    // sigma is validated finite and non-negative
    Normal::new(0.0, sigma).expect("valid sigma").sample(rng)
}
