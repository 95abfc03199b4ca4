//! Run configuration: one TOML file with a section per subcommand.
//!
//! ```toml
//! seed = 7
//! out = "results"
//!
//! [spectrum]
//! qubit = "qubits/G.toml"
//! phi_start = 0.45
//! phi_stop = 0.55
//! phi_step = 0.001
//! ```
//!
//! Relative paths resolve against the directory holding the config file.

use std::path::{Path, PathBuf};

use fluxcoh_core::extract::TanDeltaOptions;
use fluxcoh_core::fit::InitLabel;
use fluxcoh_core::synth::{TlsDip, TraceModel, WaferGroupSpec};
use fluxcoh_core::wafer::GroupTarget;
use fluxcoh_core::SequenceType;
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub spectrum: Option<SpectrumSection>,
    pub fit: Option<FitSection>,
    pub extract: Option<ExtractSection>,
    pub synth: Option<SynthSection>,
    pub wafer: Option<WaferSection>,
    pub zeta: Option<ZetaSection>,
}

/// Evenly spaced grid `start, start + step, …, stop`.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Grid {
    pub fn points(&self, field: &str) -> std::result::Result<Vec<f64>, String> {
        let Grid { start, stop, step } = *self;
        if !(start.is_finite() && stop.is_finite() && step.is_finite() && step > 0.0 && stop >= start) {
            return Err(format!("`{field}` needs finite start <= stop and step > 0"));
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
        if n > 1_000_000 {
            return Err(format!("`{field}` has {n} points; limit is 1000000"));
        }
        // rounding keeps grid values free of accumulated step error
        Ok((0..n)
            .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
            .collect())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSection {
    pub qubit: PathBuf,
    pub phi_start: f64,
    pub phi_stop: f64,
    pub phi_step: f64,
    #[serde(default = "default_levels")]
    pub n_levels: usize,
}

fn default_levels() -> usize {
    4
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitModel {
    Exp,
    Joint,
    Nonexp,
    Gaussian,
    Composite,
}

impl FitModel {
    pub fn name(self) -> &'static str {
        match self {
            FitModel::Exp => "exp",
            FitModel::Joint => "joint",
            FitModel::Nonexp => "nonexp",
            FitModel::Gaussian => "gaussian",
            FitModel::Composite => "composite",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvelopeMode {
    #[default]
    Gaussian,
    Exponential,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSection {
    pub model: FitModel,
    /// One trace, two for `joint`, one tri-phase file for `composite`.
    pub traces: Vec<PathBuf>,
    /// Init labels of the `joint` traces, in file order.
    pub inits: Option<[InitLabel; 2]>,
    /// Enables the effective-temperature report of `joint`.
    pub f01_mhz: Option<f64>,
    pub fixed_b: Option<f64>,
    /// T1 held fixed by `gaussian` and `composite`, μs.
    pub t1_us: Option<f64>,
    pub sequence: Option<SequenceType>,
    #[serde(default)]
    pub mode: EnvelopeMode,
    #[serde(default)]
    pub include_white: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TanDeltaVariant {
    #[default]
    Both,
    FiniteT,
    T0,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtractSection {
    pub qubit: PathBuf,
    pub scan: PathBuf,
    /// Supplies `temp_mk` when not given directly.
    pub noise: Option<PathBuf>,
    pub temp_mk: Option<f64>,
    #[serde(default = "yes")]
    pub tan_delta: bool,
    #[serde(default = "yes")]
    pub flux_noise: bool,
    #[serde(default)]
    pub variant: TanDeltaVariant,
    #[serde(default = "default_asymmetry")]
    pub asymmetry: f64,
    #[serde(default = "default_mask_factor")]
    pub mask_factor: f64,
    #[serde(default)]
    pub exclude_masked: bool,
    #[serde(default = "yes")]
    pub fit_white: bool,
}

fn yes() -> bool {
    true
}

fn default_asymmetry() -> f64 {
    TanDeltaOptions::default().asymmetry
}

fn default_mask_factor() -> f64 {
    TanDeltaOptions::default().mask_factor
}

/// What `synth` generates.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SynthSection {
    /// T1/Tφ versus flux in the flux-scan schema.
    Scan {
        qubit: PathBuf,
        noise: PathBuf,
        phi: Grid,
        sequences: Vec<SequenceType>,
        #[serde(default)]
        dips: Vec<TlsDip>,
        #[serde(default)]
        scatter: f64,
    },
    /// Decay traces in the trace schema.
    Trace {
        model: TraceModel,
        delays: Grid,
        #[serde(default)]
        shots: u64,
    },
    /// One 1/f flux trajectory.
    Noise {
        a_phi: f64,
        duration_us: f64,
        dt_us: f64,
        f_low_hz: Option<f64>,
        f_high_hz: Option<f64>,
    },
    /// Monte Carlo dephasing envelope.
    Ensemble {
        a_phi: f64,
        /// rad·GHz/Φ0.
        dispersion: f64,
        sequence: SequenceType,
        delays: Grid,
        n_traj: usize,
        dt_us: f64,
    },
    /// Junction resistance map in the wafer schema.
    Wafer { groups: Vec<WaferGroupSpec>, n_dies: usize },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaferSection {
    pub map: PathBuf,
    #[serde(default)]
    pub edge_dies: Vec<String>,
    #[serde(default = "yes")]
    pub drop_open_short: bool,
    pub short_threshold_ohm: Option<f64>,
    /// Per-group expected R_n; enables the yield report.
    #[serde(default)]
    pub targets: Vec<GroupTarget>,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// Gap used for the E_J column, GHz.
    pub delta_gap_ghz: Option<f64>,
}

fn default_tolerance() -> f64 {
    0.2
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZetaSection {
    /// Qubit files carrying a published `t1_ms`.
    pub qubits: Vec<PathBuf>,
    pub band: Option<BandSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandSection {
    pub f01_mhz: Grid,
    /// tanδ_C range in units of 1e-6.
    pub tand_min: f64,
    pub tand_max: f64,
    pub a_phi: f64,
    #[serde(default)]
    pub temp_mk: f64,
    /// Qubit whose E_L and E_C set the flux-noise term.
    pub representative: PathBuf,
}

/// A parsed configuration with its location and content hash.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub path: PathBuf,
    pub base_dir: PathBuf,
    /// Hex SHA-256 of the config file bytes.
    pub sha256: String,
}

impl LoadedConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| CliError::config(path, e.to_string()))?;
        let text = String::from_utf8(bytes.clone()).map_err(|_| CliError::config(path, "not valid UTF-8"))?;
        let config: RunConfig = toml::from_str(&text).map_err(|e| CliError::config(path, e.message().to_string()))?;
        let sha256 = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Self {
            config,
            path: path.to_owned(),
            base_dir,
            sha256,
        })
    }

    /// Resolves an input path and checks that it exists.
    pub fn input(&self, field: &str, p: &Path) -> Result<PathBuf> {
        let full = self.base_dir.join(p);
        if !full.is_file() {
            return Err(CliError::config(
                &self.path,
                format!("`{field}` refers to missing file {}", full.display()),
            ));
        }
        Ok(full)
    }

    pub fn section<'a, T>(&self, name: &str, s: &'a Option<T>) -> Result<&'a T> {
        s.as_ref()
            .ok_or_else(|| CliError::config(&self.path, format!("missing [{name}] section")))
    }

    pub fn invalid(&self, reason: impl Into<String>) -> CliError {
        CliError::config(&self.path, reason)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_has_exact_endpoints() {
        let g = Grid {
            start: 0.45,
            stop: 0.55,
            step: 0.001,
        };
        let p = g.points("phi").unwrap();
        assert_eq!(p.len(), 101);
        assert_eq!(p[50], 0.5);
        assert_eq!(p[100], 0.55);
    }

    #[test]
    fn bad_grid_is_rejected() {
        assert!(Grid {
            start: 1.0,
            stop: 0.0,
            step: 0.1
        }
        .points("g")
        .is_err());
        assert!(Grid {
            start: 0.0,
            stop: 1.0,
            step: 0.0
        }
        .points("g")
        .is_err());
    }

    #[test]
    fn synth_sections_parse() {
        let text = r#"
            seed = 3
            [synth]
            kind = "trace"
            model = { model = "exponential", a = 0.9, t1 = 100.0, b = 0.05 }
            delays = { start = 0.0, stop = 500.0, step = 10.0 }
            shots = 1000
        "#;
        let c: RunConfig = toml::from_str(text).unwrap();
        assert!(matches!(c.synth, Some(SynthSection::Trace { shots: 1000, .. })));
    }
}
