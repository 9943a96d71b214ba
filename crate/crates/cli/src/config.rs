//! Run configuration document.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "mode": "sampled",
//!   "preset": "h2",
//!   "settings": { "schedule": { "outer_cycles": 8 } },
//!   "noise": { "p1_given_0": 0.02, "p0_given_1": 0.02 },
//!   "mitigation": { "enabled": true },
//!   "seed": 7,
//!   "out_dir": "out"
//! }
//! ```
//!
//! `settings` is merged key by key over the preset, so it only needs the
//! fields that differ.

use std::path::{Path, PathBuf};

use dvqe::driver::DvqeSettings;
use dvqe::mitigation::{calibrate, MitigationOptions, ReadoutNoise};
use dvqe::objective::{EvaluationMode, Sampler};
use dvqe::seed;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Exact,
    Sampled,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    #[default]
    H2,
    H2Hardware,
    TwoQubit,
    FourQubit,
    Lih,
}

impl Preset {
    pub fn settings(self) -> DvqeSettings {
        match self {
            Preset::H2 => DvqeSettings::h2(),
            Preset::H2Hardware => DvqeSettings::h2_hardware(),
            Preset::TwoQubit => DvqeSettings::two_qubit(),
            Preset::FourQubit => DvqeSettings::four_qubit(),
            Preset::Lih => DvqeSettings::lih(),
        }
    }
}

/// Independent bit flips on every measured qubit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub p1_given_0: f64,
    pub p0_given_1: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MitigationConfig {
    pub enabled: bool,
    /// Shots per prepared basis state when estimating the confusion matrix.
    pub calibration_shots: usize,
    pub clip_negative: bool,
    pub condition_floor: f64,
}

impl Default for MitigationConfig {
    fn default() -> Self {
        let o = MitigationOptions::default();
        Self {
            enabled: false,
            calibration_shots: 8000,
            clip_negative: o.clip_negative,
            condition_floor: o.condition_floor,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub mode: Mode,
    #[serde(default)]
    pub preset: Preset,
    /// Overrides merged over the preset.
    #[serde(default)]
    pub settings: Value,
    #[serde(default)]
    pub noise: Option<NoiseConfig>,
    #[serde(default)]
    pub mitigation: MitigationConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text).map_err(|e| e.at(path))
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let config: RunConfig = serde_json::from_str(text).map_err(CliError::json)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if !(self.settings.is_null() || self.settings.is_object()) {
            return Err(CliError::Config("settings must be an object".into()));
        }
        if self.mode == Mode::Exact {
            if self.mitigation.enabled {
                return Err(CliError::Config("mitigation requires sampled mode".into()));
            }
            if self.noise.is_some() {
                return Err(CliError::Config(
                    "a noise model requires sampled mode".into(),
                ));
            }
        }
        if self.mitigation.enabled && self.mitigation.calibration_shots == 0 {
            return Err(CliError::Config(
                "calibration_shots must be positive".into(),
            ));
        }
        self.settings()?;
        if let Some(n) = self.noise {
            ReadoutNoise::uniform(1, n.p1_given_0, n.p0_given_1)
                .map_err(|e| CliError::Config(e.to_string()))?;
        }
        Ok(())
    }

    /// The preset with `settings` merged over it.
    pub fn settings(&self) -> Result<DvqeSettings, CliError> {
        let mut base = serde_json::to_value(self.preset.settings()).map_err(CliError::json)?;
        merge(&mut base, &self.settings);
        let settings: DvqeSettings =
            serde_json::from_value(base).map_err(|e| CliError::Config(format!("settings: {e}")))?;
        settings
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        Ok(settings)
    }

    /// Applies a `--mode` override. Noise and mitigation only apply to
    /// sampled runs and are dropped with a warning when switching to exact.
    pub fn override_mode(&mut self, mode: Mode) {
        if mode == Mode::Exact && (self.noise.is_some() || self.mitigation.enabled) {
            log::warn!("exact mode ignores the configured noise model and mitigation");
            self.noise = None;
            self.mitigation.enabled = false;
        }
        self.mode = mode;
    }

    /// Evaluation mode for a `qubits`-qubit Hamiltonian. With mitigation on,
    /// confusion matrices are calibrated for the system register and for the
    /// system plus ancilla.
    pub fn evaluation_mode(&self, qubits: usize, shots: usize) -> Result<EvaluationMode, CliError> {
        if self.mode == Mode::Exact {
            return Ok(EvaluationMode::Exact);
        }
        let mut sampler = Sampler::new(shots);
        sampler.mitigation = MitigationOptions {
            clip_negative: self.mitigation.clip_negative,
            condition_floor: self.mitigation.condition_floor,
        };
        let noise = |n: usize| -> Result<Option<ReadoutNoise>, CliError> {
            self.noise
                .map(|c| ReadoutNoise::uniform(n, c.p1_given_0, c.p0_given_1))
                .transpose()
                .map_err(CliError::Core)
        };
        if let Some(full) = noise(qubits + 1)? {
            sampler = sampler.with_noise(full);
        }
        if self.mitigation.enabled {
            let calibration_seed = seed::derive(self.seed, &[u64::MAX - 1]);
            for n in [qubits, qubits + 1] {
                let channel = match noise(n)? {
                    Some(c) => c,
                    None => ReadoutNoise::uniform(n, 0.0, 0.0).map_err(CliError::Core)?,
                };
                let m = calibrate(
                    n,
                    self.mitigation.calibration_shots,
                    &channel,
                    seed::derive(calibration_seed, &[n as u64]),
                )
                .map_err(CliError::Core)?;
                sampler = sampler.with_calibration(m);
            }
        }
        Ok(EvaluationMode::Sampled(sampler))
    }
}

/// Recursively overlays `patch` on `base`; non-object values replace.
fn merge(base: &mut Value, patch: &Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (_, Value::Null) => {}
        (slot, v) => *slot = v.clone(),
    }
}
