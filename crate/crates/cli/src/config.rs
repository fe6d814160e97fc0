//! Experiment configuration: one JSON document per run.

use crate::CliError;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Profile,
    Sweep,
    Limits,
    Converge,
    Verify,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Profile => "profile",
            Mode::Sweep => "sweep",
            Mode::Limits => "limits",
            Mode::Converge => "converge",
            Mode::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    pub jumps: Vec<f64>,
    pub viscosities: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContinuousSpec {
    /// Only "linear" is recognized: `K(z) = base + slope z` on `[0, cap]`,
    /// held constant beyond.
    pub name: String,
    #[serde(default = "default_one")]
    pub base: f64,
    #[serde(default = "default_one")]
    pub slope: f64,
    pub cap: f64,
    pub steps: Vec<usize>,
}

impl ContinuousSpec {
    pub fn viscosity_fn(&self) -> impl Fn(f64) -> f64 + '_ {
        move |z| self.base + self.slope * z
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindSpec {
    pub u_g: f64,
    pub v_g: f64,
}

impl Default for WindSpec {
    fn default() -> Self {
        Self { u_g: 1.0, v_g: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingSpec {
    /// Defaults to the last jump plus ten top-layer decay lengths.
    #[serde(default)]
    pub z_max: Option<f64>,
    #[serde(default = "default_count")]
    pub count: usize,
}

impl Default for SamplingSpec {
    fn default() -> Self {
        Self {
            z_max: None,
            count: default_count(),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl RangeSpec {
    /// Log-spaced values including both endpoints.
    pub fn log_grid(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        let lo = self.min.log10();
        let hi = self.max.log10();
        (0..self.count)
            .map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / (self.count - 1) as f64))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub l: RangeSpec,
    pub h: RangeSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_out_dir")]
    pub dir: PathBuf,
    #[serde(default = "default_format")]
    pub format: OutputFormat,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            dir: default_out_dir(),
            format: default_format(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    #[serde(default)]
    pub profile: Option<ProfileSpec>,
    #[serde(default)]
    pub continuous: Option<ContinuousSpec>,
    #[serde(default)]
    pub wind: WindSpec,
    #[serde(default)]
    pub sampling: SamplingSpec,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub output: OutputSpec,
}

fn default_one() -> f64 {
    1.0
}

fn default_count() -> usize {
    2000
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_format() -> OutputFormat {
    OutputFormat::Csv
}

impl ExperimentConfig {
    /// Built-in configuration for modes that can run without a file.
    pub fn built_in(mode: Mode) -> Self {
        Self {
            mode,
            profile: None,
            continuous: None,
            wind: WindSpec::default(),
            sampling: SamplingSpec::default(),
            sweep: None,
            output: OutputSpec::default(),
        }
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let config: Self =
            serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let fail = |msg: String| Err(CliError::Config(msg));
        match self.mode {
            Mode::Profile => {
                if self.profile.is_none() {
                    return fail("mode \"profile\" requires a \"profile\" section".into());
                }
            }
            Mode::Sweep => {
                let sweep = match &self.sweep {
                    Some(s) => s,
                    None => return fail("mode \"sweep\" requires a \"sweep\" section".into()),
                };
                for (name, r) in [("l", &sweep.l), ("h", &sweep.h)] {
                    if !(r.min > 0.0) || !(r.max >= r.min) || r.count == 0 {
                        return fail(format!(
                            "sweep range \"{name}\" must be positive and non-empty (min {}, max {}, count {})",
                            r.min, r.max, r.count
                        ));
                    }
                }
            }
            Mode::Converge => {
                let cont = match &self.continuous {
                    Some(c) => c,
                    None => {
                        return fail("mode \"converge\" requires a \"continuous\" section".into())
                    }
                };
                if cont.name != "linear" {
                    return fail(format!(
                        "unknown continuous profile \"{}\"; expected \"linear\"",
                        cont.name
                    ));
                }
                if !(cont.cap > 0.0) {
                    return fail(format!("continuous cap must be positive, got {}", cont.cap));
                }
                if cont.steps.is_empty() || cont.steps.contains(&0) {
                    return fail("continuous step counts must be nonzero and non-empty".into());
                }
                if cont.base <= 0.0 || cont.base + cont.slope * cont.cap <= 0.0 {
                    return fail("continuous viscosity must stay positive on [0, cap]".into());
                }
            }
            Mode::Limits | Mode::Verify => {}
        }
        if self.sampling.count < 2 {
            return fail(format!(
                "sampling count must be at least 2, got {}",
                self.sampling.count
            ));
        }
        if let Some(z_max) = self.sampling.z_max {
            if !(z_max > 0.0) {
                return fail(format!("sampling z_max must be positive, got {z_max}"));
            }
        }
        Ok(())
    }
}
