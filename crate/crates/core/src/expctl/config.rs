//! TOML experiment configuration. Every key has a default; unknown keys and
//! out-of-range values are rejected before any computation starts.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::attack::RpropConfig;
use crate::device::{DeviceParams, SizeProfile, WriteConfig};
use crate::error::{Error, Result};
use crate::puf::{CapMismatchModel, PufKind, RowRecipe, SenseConfig};

pub const ENV_SEED: &str = "FERROPUF_SEED";
pub const ENV_OUT: &str = "FERROPUF_OUT";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub device: DeviceSection,
    pub array: ArraySection,
    pub experiment: ExperimentSection,
    pub sweep: SweepSection,
    pub attack: AttackSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 20_211,
            device: DeviceSection::default(),
            array: ArraySection::default(),
            experiment: ExperimentSection::default(),
            sweep: SweepSection::default(),
            attack: AttackSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeviceSection {
    pub vth_erased: f64,
    pub vth_programmed: f64,
    pub weak_mean_base: f64,
    pub amplitude_slope: f64,
    pub temp_slope: f64,
    pub sigma_d2d: f64,
    pub sigma_c2c: f64,
    pub read_slope: f64,
    pub weak_min: f64,
    pub weak_max: f64,
    pub pulse_amplitude: f64,
    pub temperature: f64,
    pub size: SizeProfile,
}

impl Default for DeviceSection {
    fn default() -> Self {
        let p = DeviceParams::default();
        let w = WriteConfig::default();
        Self {
            vth_erased: p.vth_erased,
            vth_programmed: p.vth_programmed,
            weak_mean_base: p.weak_mean_base,
            amplitude_slope: p.amplitude_slope,
            temp_slope: p.temp_slope,
            sigma_d2d: p.sigma_d2d,
            sigma_c2c: p.sigma_c2c,
            read_slope: p.read_slope,
            weak_min: p.weak_min,
            weak_max: p.weak_max,
            pulse_amplitude: w.pulse_amplitude,
            temperature: w.temperature,
            size: SizeProfile::default(),
        }
    }
}

impl DeviceSection {
    /// Device parameters with the size profile applied.
    pub fn params(&self) -> DeviceParams {
        DeviceParams {
            vth_erased: self.vth_erased,
            vth_programmed: self.vth_programmed,
            weak_mean_base: self.weak_mean_base,
            amplitude_slope: self.amplitude_slope,
            temp_slope: self.temp_slope,
            sigma_d2d: self.sigma_d2d,
            sigma_c2c: self.sigma_c2c,
            read_slope: self.read_slope,
            weak_min: self.weak_min,
            weak_max: self.weak_max,
        }
        .with_size(self.size)
    }

    pub fn write(&self) -> WriteConfig {
        WriteConfig {
            pulse_amplitude: self.pulse_amplitude,
            temperature: self.temperature,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArraySection {
    /// Cells per row (challenge length).
    pub n: usize,
    pub rows: usize,
    pub sigma_c: f64,
    pub offset_rel: f64,
    pub vdd: f64,
    pub read_gate: f64,
}

impl Default for ArraySection {
    fn default() -> Self {
        let s = SenseConfig::default();
        Self {
            n: 27,
            rows: 1,
            sigma_c: 0.01,
            offset_rel: s.offset_rel,
            vdd: s.vdd,
            read_gate: s.read_gate,
        }
    }
}

impl ArraySection {
    pub fn sense(&self) -> SenseConfig {
        SenseConfig {
            vdd: self.vdd,
            read_gate: self.read_gate,
            offset_rel: self.offset_rel,
        }
    }

    pub fn mismatch(&self) -> CapMismatchModel {
        CapMismatchModel {
            sigma_c: self.sigma_c,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSection {
    /// Random challenges applied in the metrics protocol.
    pub challenges: usize,
    /// Registrations of one row whose responses form the HD_inter matrix.
    pub registrations: usize,
    /// Independently fabricated rows for the across-instances mode and the
    /// flip-chance average.
    pub instances: usize,
    pub reconfigurations: usize,
    /// Repeated generations in the temporal reliability check.
    pub repeats: usize,
    /// Challenges per row in the flip-chance estimate.
    pub flip_challenges: usize,
    /// Registration rounds recorded by `register`.
    pub register_rounds: usize,
    pub histogram_bins: usize,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            challenges: 100,
            registrations: 100,
            instances: 100,
            reconfigurations: 10,
            repeats: 1000,
            flip_challenges: 1000,
            register_rounds: 10,
            histogram_bins: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub pulses: Vec<f64>,
    pub temperatures: Vec<f64>,
    pub sizes: Vec<SizeProfile>,
    pub sigma_cs: Vec<f64>,
    pub challenge_lengths: Vec<usize>,
    /// σ_C used throughout the challenge-length sweep.
    pub length_sigma_c: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            pulses: vec![2.8, 3.2, 3.6],
            temperatures: vec![25.0, 55.0, 85.0],
            sizes: SizeProfile::ALL.to_vec(),
            sigma_cs: vec![0.0, 0.01, 0.02, 0.05, 0.1],
            challenge_lengths: vec![17, 27, 41, 65],
            length_sigma_c: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttackTargets {
    Proposed,
    Arbiter,
    Both,
}

impl AttackTargets {
    pub fn kinds(self) -> Vec<PufKind> {
        match self {
            AttackTargets::Proposed => vec![PufKind::Proposed],
            AttackTargets::Arbiter => vec![PufKind::Arbiter],
            AttackTargets::Both => vec![PufKind::Proposed, PufKind::Arbiter],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AttackSection {
    pub targets: AttackTargets,
    pub n: usize,
    pub ks: Vec<usize>,
    pub train_sizes: Vec<usize>,
    pub trials: usize,
    pub test_size: usize,
    /// Challenge lengths of the length sweep; empty skips it.
    pub length_ns: Vec<usize>,
    pub length_ks: Vec<usize>,
    pub length_train_sizes: Vec<usize>,
    /// Test accuracy a training size must exceed to count as the threshold.
    pub threshold_level: f64,
    pub crp_kind: PufKind,
    pub crp_k: usize,
    pub crp_count: usize,
    pub rprop: RpropConfig,
}

impl Default for AttackSection {
    fn default() -> Self {
        Self {
            targets: AttackTargets::Both,
            n: 27,
            ks: vec![1, 2, 3],
            // half-octave grid: 100·√2^m rounded, up to 6400
            train_sizes: vec![
                100, 141, 200, 283, 400, 566, 800, 1131, 1600, 2263, 3200, 4525, 6400,
            ],
            trials: 3,
            test_size: 10_000,
            length_ns: vec![9, 17, 27, 41],
            length_ks: vec![2],
            length_train_sizes: vec![250, 500, 1000],
            threshold_level: 0.9,
            crp_kind: PufKind::Proposed,
            crp_k: 1,
            crp_count: 10_000,
            rprop: RpropConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| toml_error(text, &e))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a TOML config, or the config snapshot inside a run manifest
    /// (`.json`).
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        if path.extension().is_some_and(|e| e == "json") {
            let manifest: super::RunManifest = serde_json::from_str(&text)
                .map_err(|e| Error::config("manifest", e.to_string()))?;
            return Self::from_toml_str(&manifest.config);
        }
        Self::from_toml_str(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn recipe(&self) -> RowRecipe {
        RowRecipe {
            device: self.device.params(),
            write: self.device.write(),
            mismatch: self.array.mismatch(),
            sense: self.array.sense(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let params = self.device.params();
        params.validate()?;
        let w = self.device.write();
        if !(w.pulse_amplitude >= params.weak_min && w.pulse_amplitude <= params.weak_max) {
            return Err(Error::config(
                "device.pulse_amplitude",
                format!(
                    "must lie in the weak range [{}, {}]",
                    params.weak_min, params.weak_max
                ),
            ));
        }
        if !w.temperature.is_finite() {
            return Err(Error::config("device.temperature", "must be finite"));
        }
        let a = &self.array;
        if a.n == 0 {
            return Err(Error::config("array.n", "must be >= 1"));
        }
        if a.rows == 0 {
            return Err(Error::config("array.rows", "must be >= 1"));
        }
        CapMismatchModel::new(a.sigma_c)?;
        a.sense().validate()?;
        if !params.separates_at(a.read_gate) {
            return Err(Error::config(
                "array.read_gate",
                "split devices must read within 1% of the rails (six read slopes of margin)",
            ));
        }
        let e = &self.experiment;
        let positive = [
            ("experiment.challenges", e.challenges, 1),
            ("experiment.registrations", e.registrations, 2),
            ("experiment.instances", e.instances, 2),
            ("experiment.reconfigurations", e.reconfigurations, 2),
            ("experiment.repeats", e.repeats, 1),
            ("experiment.flip_challenges", e.flip_challenges, 1),
            ("experiment.register_rounds", e.register_rounds, 1),
            ("experiment.histogram_bins", e.histogram_bins, 1),
        ];
        for (key, v, min) in positive {
            if v < min {
                return Err(Error::config(key, format!("must be >= {min}")));
            }
        }
        let s = &self.sweep;
        for &p in &s.pulses {
            if !(p >= params.weak_min && p <= params.weak_max) {
                return Err(Error::config(
                    "sweep.pulses",
                    format!("{p} V outside the weak range"),
                ));
            }
        }
        if s.temperatures.iter().any(|t| !t.is_finite()) {
            return Err(Error::config("sweep.temperatures", "must be finite"));
        }
        for &sc in s.sigma_cs.iter().chain([&s.length_sigma_c]) {
            CapMismatchModel::new(sc)
                .map_err(|_| Error::config("sweep.sigma_cs", "must be finite and >= 0"))?;
        }
        if s.challenge_lengths.contains(&0) {
            return Err(Error::config(
                "sweep.challenge_lengths",
                "entries must be >= 1",
            ));
        }
        let t = &self.attack;
        let nonzero = |key: &str, v: &[usize]| -> Result<()> {
            if v.is_empty() || v.contains(&0) {
                return Err(Error::config(key, "must be non-empty with entries >= 1"));
            }
            Ok(())
        };
        if t.n == 0 {
            return Err(Error::config("attack.n", "must be >= 1"));
        }
        nonzero("attack.ks", &t.ks)?;
        nonzero("attack.train_sizes", &t.train_sizes)?;
        if !t.length_ns.is_empty() {
            nonzero("attack.length_ns", &t.length_ns)?;
            nonzero("attack.length_ks", &t.length_ks)?;
            nonzero("attack.length_train_sizes", &t.length_train_sizes)?;
        }
        if t.trials == 0 {
            return Err(Error::config("attack.trials", "must be >= 1"));
        }
        if t.test_size == 0 {
            return Err(Error::config("attack.test_size", "must be >= 1"));
        }
        if !(t.threshold_level > 0.0 && t.threshold_level < 1.0) {
            return Err(Error::config(
                "attack.threshold_level",
                "must lie in (0, 1)",
            ));
        }
        if t.crp_k == 0 {
            return Err(Error::config("attack.crp_k", "must be >= 1"));
        }
        if t.crp_count == 0 {
            return Err(Error::config("attack.crp_count", "must be >= 1"));
        }
        t.rprop.validate()
    }
}

fn toml_error(text: &str, e: &toml::de::Error) -> Error {
    let line = e
        .span()
        .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1);
    let key = line.map_or_else(|| "config".to_string(), |l| format!("line {l}"));
    Error::config(key, e.message().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_roundtrip() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        let back = ExperimentConfig::from_toml_str(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(ExperimentConfig::from_toml_str("").unwrap(), cfg);
    }

    #[test]
    fn partial_sections_keep_defaults() {
        let cfg = ExperimentConfig::from_toml_str("seed = 5\n[array]\nn = 9\n").unwrap();
        assert_eq!(cfg.seed, 5);
        assert_eq!(cfg.array.n, 9);
        assert_eq!(cfg.array.rows, 1);
        assert_eq!(cfg.experiment.challenges, 100);
    }

    #[test]
    fn unknown_keys_are_rejected_with_line() {
        let err =
            ExperimentConfig::from_toml_str("seed = 1\n[array]\nn = 9\nbogus = 2\n").unwrap_err();
        match err {
            Error::Config { key, msg } => {
                assert_eq!(key, "line 4");
                assert!(msg.contains("bogus"), "{msg}");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(ExperimentConfig::from_toml_str("[nonsense]\n").is_err());
    }

    #[test]
    fn out_of_range_values_name_their_key() {
        let key_of = |toml: &str| match ExperimentConfig::from_toml_str(toml).unwrap_err() {
            Error::Config { key, .. } => key,
            other => panic!("unexpected {other:?}"),
        };
        assert_eq!(key_of("[array]\nn = 0\n"), "array.n");
        assert_eq!(
            key_of("[experiment]\nchallenges = 0\n"),
            "experiment.challenges"
        );
        assert_eq!(
            key_of("[device]\npulse_amplitude = 4.0\n"),
            "device.pulse_amplitude"
        );
        assert_eq!(key_of("[array]\nread_gate = 0.5\n"), "array.read_gate");
        assert_eq!(key_of("[attack]\nks = [0]\n"), "attack.ks");
        assert_eq!(
            key_of("[attack.rprop]\neta_plus = 0.5\n"),
            "attack.rprop.eta_minus"
        );
        assert_eq!(key_of("[sweep]\npulses = [5.0]\n"), "sweep.pulses");
    }

    #[test]
    fn size_profile_parses_by_name() {
        let cfg = ExperimentConfig::from_toml_str("[device]\nsize = \"200x100\"\n").unwrap();
        assert_eq!(cfg.device.size, SizeProfile::W200L100);
        assert!((cfg.device.params().sigma_c2c - 0.07).abs() < 1e-12);
        assert!(ExperimentConfig::from_toml_str("[device]\nsize = \"1x1\"\n").is_err());
    }
}
