//! Experiment configuration: a TOML document with `[plant]`, `[excitation]`,
//! `[identify]`, `[control]` and `[output]` sections. Unknown keys are
//! rejected; missing keys take the defaults listed on each field.

use serde::Deserialize;

use honu::plant::{ExcitationKind, ExcitationSpec, PlantParams, PlantSimulator};
use honu::signal::SignalProfile;
use honu::training::{LearningConfig, TrainingMethod};
use honu::unit::Architecture;

use crate::error::AppError;

// Default constants shared by every preset. The plant parameters and the
// excitation design were fixed together: the multisine's slow band wanders
// the operating point through the cubic stiffness so the quadratic model has
// genuine structure to pick up, while the main band excites the dynamics.
pub const DEFAULT_NATURAL_FREQ: f64 = 170.0;
pub const DEFAULT_DAMPING: f64 = 1.5;
pub const DEFAULT_GAIN: f64 = 26_010.0; // 0.9 * omega^2: static gain 0.9
pub const DEFAULT_CUBIC: f64 = 5_780.0; // 0.2 * omega^2
pub const DEFAULT_PLANT_SEED: u64 = 17;
pub const DEFAULT_AMPLITUDE: f64 = 2.3;
pub const DEFAULT_HORIZON_S: f64 = 10.0;
pub const DEFAULT_DT_S: f64 = 0.001;
pub const DEFAULT_EXCITATION_SEED: u64 = 10;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlantSection {
    pub natural_freq_rad_s: f64,
    pub damping_ratio: f64,
    pub input_gain: f64,
    pub cubic_coeff: f64,
    pub noise_std: f64,
    pub seed: u64,
}

impl Default for PlantSection {
    fn default() -> Self {
        Self {
            natural_freq_rad_s: DEFAULT_NATURAL_FREQ,
            damping_ratio: DEFAULT_DAMPING,
            input_gain: DEFAULT_GAIN,
            cubic_coeff: DEFAULT_CUBIC,
            noise_std: 0.0,
            seed: DEFAULT_PLANT_SEED,
        }
    }
}

impl PlantSection {
    pub fn params(&self) -> PlantParams {
        PlantParams {
            natural_freq: self.natural_freq_rad_s,
            damping: self.damping_ratio,
            gain: self.input_gain,
            cubic: self.cubic_coeff,
            noise_std: self.noise_std,
        }
    }

    pub fn simulator(&self, dt: f64) -> Result<PlantSimulator, AppError> {
        Ok(PlantSimulator::new(self.params(), dt, self.seed)?)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExcitationSection {
    pub kind: ExcitationKindConfig,
    pub amplitude: f64,
    pub horizon_s: f64,
    pub dt_s: f64,
    pub seed: u64,
}

impl Default for ExcitationSection {
    fn default() -> Self {
        Self {
            kind: ExcitationKindConfig::Multisine,
            amplitude: DEFAULT_AMPLITUDE,
            horizon_s: DEFAULT_HORIZON_S,
            dt_s: DEFAULT_DT_S,
            seed: DEFAULT_EXCITATION_SEED,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExcitationKindConfig {
    Prbs,
    Multisine,
    Chirp,
}

impl From<ExcitationKindConfig> for ExcitationKind {
    fn from(k: ExcitationKindConfig) -> Self {
        match k {
            ExcitationKindConfig::Prbs => ExcitationKind::Prbs,
            ExcitationKindConfig::Multisine => ExcitationKind::Multisine,
            ExcitationKindConfig::Chirp => ExcitationKind::Chirp,
        }
    }
}

impl ExcitationSection {
    pub fn spec(&self) -> ExcitationSpec {
        ExcitationSpec {
            kind: self.kind.into(),
            amplitude: self.amplitude,
            horizon: self.horizon_s,
            dt: self.dt_s,
            seed: self.seed,
        }
    }

    pub fn sample_count(&self) -> Result<usize, AppError> {
        Ok(self.spec().sample_count()?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelArchitecture {
    Dlnu,
    Dqnu,
}

impl std::fmt::Display for ModelArchitecture {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModelArchitecture::Dlnu => write!(f, "dlnu"),
            ModelArchitecture::Dqnu => write!(f, "dqnu"),
        }
    }
}

impl From<ModelArchitecture> for Architecture {
    fn from(a: ModelArchitecture) -> Self {
        match a {
            ModelArchitecture::Dlnu => Architecture::Lnu,
            ModelArchitecture::Dqnu => Architecture::Qnu,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControllerArchitecture {
    Lnu,
    Qnu,
}

impl std::fmt::Display for ControllerArchitecture {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ControllerArchitecture::Lnu => write!(f, "lnu"),
            ControllerArchitecture::Qnu => write!(f, "qnu"),
        }
    }
}

impl From<ControllerArchitecture> for Architecture {
    fn from(a: ControllerArchitecture) -> Self {
        match a {
            ControllerArchitecture::Lnu => Architecture::Lnu,
            ControllerArchitecture::Qnu => Architecture::Qnu,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodConfig {
    Rtrl,
    Bptt,
}

impl From<MethodConfig> for TrainingMethod {
    fn from(m: MethodConfig) -> Self {
        match m {
            MethodConfig::Rtrl => TrainingMethod::Rtrl,
            MethodConfig::Bptt => TrainingMethod::Bptt,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IdentifySection {
    pub architecture: ModelArchitecture,
    pub method: MethodConfig,
    pub mu: f64,
    pub epochs: usize,
    pub n_y: usize,
    pub n_u: usize,
    pub normalize: bool,
}

impl Default for IdentifySection {
    fn default() -> Self {
        // The reference identification settings shared by every preset.
        Self {
            architecture: ModelArchitecture::Dqnu,
            method: MethodConfig::Rtrl,
            mu: 1.0,
            epochs: 10,
            n_y: 3,
            n_u: 5,
            normalize: true,
        }
    }
}

impl IdentifySection {
    pub fn learning_config(&self) -> Result<LearningConfig, AppError> {
        let cfg = LearningConfig {
            mu: self.mu,
            epochs: self.epochs,
            normalize: self.normalize,
            n_y: self.n_y,
            n_u: self.n_u,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalKindConfig {
    Zero,
    Constant,
    Step,
    BandLimited,
    PulseThenRipple,
}

/// One reference or disturbance signal. `kind` selects the profile; only the
/// fields belonging to that kind may be set, anything else is rejected.
#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct SignalSection {
    pub kind: Option<SignalKindConfig>,
    pub level: Option<f64>,
    pub at_sample: Option<usize>,
    pub amplitude: Option<f64>,
    pub cutoff_hz: Option<f64>,
    pub components: Option<usize>,
    pub seed: Option<u64>,
    pub peak: Option<f64>,
    pub pulse_samples: Option<usize>,
    pub ripple_amplitude: Option<f64>,
    pub ripple_cutoff_hz: Option<f64>,
    pub ripple_components: Option<usize>,
}

impl SignalSection {
    pub fn zero() -> Self {
        Self {
            kind: Some(SignalKindConfig::Zero),
            ..Self::default()
        }
    }

    pub fn band_limited(amplitude: f64, cutoff_hz: f64, components: usize, seed: u64) -> Self {
        Self {
            kind: Some(SignalKindConfig::BandLimited),
            amplitude: Some(amplitude),
            cutoff_hz: Some(cutoff_hz),
            components: Some(components),
            seed: Some(seed),
            ..Self::default()
        }
    }

    pub fn pulse_then_ripple(
        peak: f64,
        pulse_samples: usize,
        ripple_amplitude: f64,
        ripple_cutoff_hz: f64,
        ripple_components: usize,
        seed: u64,
    ) -> Self {
        Self {
            kind: Some(SignalKindConfig::PulseThenRipple),
            peak: Some(peak),
            pulse_samples: Some(pulse_samples),
            ripple_amplitude: Some(ripple_amplitude),
            ripple_cutoff_hz: Some(ripple_cutoff_hz),
            ripple_components: Some(ripple_components),
            seed: Some(seed),
            ..Self::default()
        }
    }

    fn reject_unused(&self, context: &str, allowed: &[&str]) -> Result<(), AppError> {
        let fields: [(&str, bool); 11] = [
            ("level", self.level.is_some()),
            ("at_sample", self.at_sample.is_some()),
            ("amplitude", self.amplitude.is_some()),
            ("cutoff_hz", self.cutoff_hz.is_some()),
            ("components", self.components.is_some()),
            ("seed", self.seed.is_some()),
            ("peak", self.peak.is_some()),
            ("pulse_samples", self.pulse_samples.is_some()),
            ("ripple_amplitude", self.ripple_amplitude.is_some()),
            ("ripple_cutoff_hz", self.ripple_cutoff_hz.is_some()),
            ("ripple_components", self.ripple_components.is_some()),
        ];
        for (name, set) in fields {
            if set && !allowed.contains(&name) {
                return Err(AppError::config(format!(
                    "{context}: field `{name}` does not apply to this signal kind"
                )));
            }
        }
        Ok(())
    }

    fn need<T: Copy>(v: Option<T>, context: &str, name: &str) -> Result<T, AppError> {
        v.ok_or_else(|| AppError::config(format!("{context}: missing required field `{name}`")))
    }

    pub fn to_profile(&self, context: &str) -> Result<SignalProfile, AppError> {
        match self.kind.unwrap_or(SignalKindConfig::Zero) {
            SignalKindConfig::Zero => {
                self.reject_unused(context, &[])?;
                Ok(SignalProfile::Zero)
            }
            SignalKindConfig::Constant => {
                self.reject_unused(context, &["level"])?;
                Ok(SignalProfile::Constant {
                    level: Self::need(self.level, context, "level")?,
                })
            }
            SignalKindConfig::Step => {
                self.reject_unused(context, &["level", "at_sample"])?;
                Ok(SignalProfile::Step {
                    level: Self::need(self.level, context, "level")?,
                    at_sample: Self::need(self.at_sample, context, "at_sample")?,
                })
            }
            SignalKindConfig::BandLimited => {
                self.reject_unused(context, &["amplitude", "cutoff_hz", "components", "seed"])?;
                Ok(SignalProfile::BandLimited {
                    amplitude: Self::need(self.amplitude, context, "amplitude")?,
                    cutoff_hz: Self::need(self.cutoff_hz, context, "cutoff_hz")?,
                    components: self.components.unwrap_or(6),
                    seed: self.seed.unwrap_or(0),
                })
            }
            SignalKindConfig::PulseThenRipple => {
                self.reject_unused(
                    context,
                    &[
                        "peak",
                        "pulse_samples",
                        "ripple_amplitude",
                        "ripple_cutoff_hz",
                        "ripple_components",
                        "seed",
                    ],
                )?;
                Ok(SignalProfile::PulseThenRipple {
                    peak: Self::need(self.peak, context, "peak")?,
                    pulse_samples: self.pulse_samples.unwrap_or(80),
                    ripple_amplitude: Self::need(self.ripple_amplitude, context, "ripple_amplitude")?,
                    ripple_cutoff_hz: self.ripple_cutoff_hz.unwrap_or(2.0),
                    ripple_components: self.ripple_components.unwrap_or(4),
                    seed: self.seed.unwrap_or(0),
                })
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControlSection {
    pub architecture: ControllerArchitecture,
    pub method: MethodConfig,
    pub mu: f64,
    pub epochs: usize,
    pub n_qy: usize,
    pub n_qe: usize,
    pub resample_stride: usize,
    /// Symmetric actuator clamp on the manipulated signal; absent = none.
    pub q_limit: Option<f64>,
    pub desired: SignalSection,
    pub disturbance: SignalSection,
}

impl Default for ControlSection {
    fn default() -> Self {
        // fig8 settings; see presets.
        Self {
            architecture: ControllerArchitecture::Qnu,
            method: MethodConfig::Bptt,
            mu: 1.0,
            epochs: 5,
            n_qy: 0,
            n_qe: 3,
            resample_stride: 1,
            q_limit: None,
            desired: SignalSection::band_limited(0.2, 1.0, 6, 7),
            disturbance: SignalSection::pulse_then_ripple(3.0, 80, 0.2, 2.0, 4, 3),
        }
    }
}

impl ControlSection {
    pub fn learning_config(&self) -> Result<LearningConfig, AppError> {
        let cfg = LearningConfig {
            mu: self.mu,
            epochs: self.epochs,
            normalize: false,
            n_y: 0,
            n_u: 0,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: String,
    /// Emitted table formats; only `csv` exists.
    pub formats: Vec<String>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: "out".into(),
            formats: vec!["csv".into()],
        }
    }
}

impl OutputSection {
    pub fn validate(&self) -> Result<(), AppError> {
        for f in &self.formats {
            if f != "csv" {
                return Err(AppError::config(format!(
                    "[output] formats: unsupported format `{f}` (only `csv`)"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub plant: PlantSection,
    pub excitation: ExcitationSection,
    pub identify: IdentifySection,
    pub control: ControlSection,
    pub output: OutputSection,
}

impl ExperimentConfig {
    /// Parse a TOML document, rejecting unknown keys with a line-anchored
    /// message.
    pub fn from_toml(text: &str) -> Result<Self, AppError> {
        let cfg: Self = toml::from_str(text).map_err(|e| AppError::config(e.to_string()))?;
        cfg.output.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self, AppError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| AppError::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }
}
