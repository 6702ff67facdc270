//! TOML run configuration. Every section rejects unknown keys: a typo in a
//! converter parameter would otherwise silently fall back to a default and
//! produce plausible-looking but wrong results.

use std::path::Path;

use dabsig::{DabParams, DabSchedule, Polarity, SimConfig, Spacing, SurfaceLabel, SweepSpec, TimingOverride, Tolerances};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub converter: DabParams,
    #[serde(default)]
    pub sim: SimConfig,
    /// Frequency grid; defaults to 64 log points over `[fs/1000, fs/10]`.
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub overrides: Overrides,
    #[serde(default)]
    pub verify: VerifySettings,
    #[serde(default)]
    pub compare: CompareSettings,
}

/// Deliberate deviations from the nominal model, for negative tests.
#[derive(Debug, Clone, Copy, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    /// Forces `T₃` (seconds); `T₄` follows as `T_h - T₃`.
    pub t3: Option<f64>,
    /// Replaces the modulator polarity of the secondary-side surfaces in
    /// the surface-equivalence checks.
    pub secondary_polarity: Option<Polarity>,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySettings {
    /// Seed for the random matrices of the resolvent-similarity check.
    pub seed: u64,
    pub random_matrices: usize,
    /// Unit-circle points for the surface-equivalence checks.
    pub z_points: usize,
    /// Unit-circle points for the `ΔH` dual-path check.
    pub delta_h_points: usize,
}

impl Default for VerifySettings {
    fn default() -> Self {
        Self {
            seed: 0x5eed,
            random_matrices: 100,
            z_points: 64,
            delta_h_points: 100,
        }
    }
}

/// Injection settings for `compare`. Sweep frequencies are snapped to the
/// nearest one coherent with the measurement window.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareSettings {
    pub surface: SurfaceLabel,
    pub measure_periods: usize,
    pub settle_periods: usize,
    /// Peak control perturbation in V; automatic when absent.
    pub amplitude: Option<f64>,
    /// Number of sweep points to measure; the full sweep when absent.
    pub points: Option<usize>,
}

impl Default for CompareSettings {
    fn default() -> Self {
        Self {
            surface: SurfaceLabel::PrimaryPlus,
            measure_periods: 4000,
            settle_periods: 2000,
            amplitude: None,
            points: Some(8),
        }
    }
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::config(format!("{}: {}", path.display(), e.message)))
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::config(e.to_string()))?;
        cfg.converter.validate().map_err(|e| CliError::config(e.to_string()))?;
        cfg.sim
            .validate(cfg.converter.period())
            .map_err(|e| CliError::config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn sweep(&self) -> SweepSpec {
        self.sweep.unwrap_or(SweepSpec {
            f_min: self.converter.fs / 1000.0,
            f_max: self.converter.fs / 10.0,
            points: 64,
            spacing: Spacing::Log,
        })
    }

    pub fn schedule(&self) -> Result<DabSchedule, CliError> {
        let timing = TimingOverride { t3: self.overrides.t3 };
        Ok(DabSchedule::build_with(self.converter, timing)?)
    }
}
