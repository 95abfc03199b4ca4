//! Forward models of every decoherence channel.
//!
//! Rates are returned in 1/μs and times in μs. The 1/f flux-noise spectrum is
//! two-sided, S_Φ(f) = A_Φ² (1 Hz/|f|), with A_Φ in μΦ0/√Hz.

mod channels;
mod filter;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{mk_to_k, ALUMINUM_GAP_GHZ};

pub use channels::{
    cavity_temperature, coth_factor, dielectric_rate, effective_temperature, flux_noise_relaxation_rate,
    n_bar_from_dephasing, photon_shot_dephasing, pure_dephasing_rate, quasiparticle_rate, t1_dielectric,
    t1_quasiparticle, thermal_population, zeta, QpChannel,
};
pub use filter::{
    dephasing_envelope, envelope_from_u, filter_u_coefficient, gaussian_exponent, white_rate, FilterCoefficients,
};

/// Parameters of every noise channel acting on one device.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseEnvironment {
    pub tan_delta_c: f64,
    /// Effective qubit temperature in K; 0 selects the TLS-bath variant.
    pub temp: f64,
    /// Exponent ε in tanδ(f) = tanδ_C·(f / 1 GHz)^ε.
    pub loss_exponent: f64,
    /// 1/f flux-noise amplitude, μΦ0/√Hz.
    pub a_phi: f64,
    /// Flat flux-noise amplitude, μΦ0/√Hz.
    pub a_white: f64,
    pub x_qp: f64,
    /// Superconducting gap Δ/h in GHz.
    pub delta_gap: f64,
}

impl Default for NoiseEnvironment {
    fn default() -> Self {
        Self {
            tan_delta_c: 0.0,
            temp: 0.0,
            loss_exponent: 0.0,
            a_phi: 0.0,
            a_white: 0.0,
            x_qp: 0.0,
            delta_gap: ALUMINUM_GAP_GHZ,
        }
    }
}

impl NoiseEnvironment {
    pub fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("tan_delta_c", self.tan_delta_c),
            ("temp", self.temp),
            ("a_phi", self.a_phi),
            ("a_white", self.a_white),
            ("x_qp", self.x_qp),
            ("delta_gap", self.delta_gap),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(
                    field,
                    format!("must be finite and nonnegative, got {v}"),
                ));
            }
        }
        if !self.loss_exponent.is_finite() {
            return Err(Error::invalid("loss_exponent", "must be finite"));
        }
        Ok(())
    }
}

/// On-disk noise environment; temperature in mK.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseFile {
    #[serde(default)]
    pub tan_delta_c: f64,
    #[serde(default)]
    pub temp_mk: f64,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default)]
    pub a_phi_uphi0: f64,
    #[serde(default)]
    pub a_white: f64,
    #[serde(default)]
    pub x_qp: f64,
    #[serde(default = "default_gap")]
    pub delta_gap_ghz: f64,
}

fn default_gap() -> f64 {
    ALUMINUM_GAP_GHZ
}

impl NoiseFile {
    pub fn load(path: impl AsRef<Path>) -> Result<NoiseEnvironment> {
        let path = path.as_ref();
        let text = read(path)?;
        let file: NoiseFile = toml::from_str(&text).map_err(|e| crate::qubit::parse_error(path, &text, e))?;
        file.environment()
    }

    pub fn environment(&self) -> Result<NoiseEnvironment> {
        let env = NoiseEnvironment {
            tan_delta_c: self.tan_delta_c,
            temp: mk_to_k(self.temp_mk),
            loss_exponent: self.epsilon,
            a_phi: self.a_phi_uphi0,
            a_white: self.a_white,
            x_qp: self.x_qp,
            delta_gap: self.delta_gap_ghz,
        };
        env.validate().map_err(|e| match e {
            Error::InvalidInput { field, reason } => Error::InvalidInput {
                field: file_field(&field).to_string(),
                reason,
            },
            other => other,
        })?;
        Ok(env)
    }
}

fn file_field(field: &str) -> &str {
    match field {
        "temp" => "temp_mk",
        "loss_exponent" => "epsilon",
        "a_phi" => "a_phi_uphi0",
        "delta_gap" => "delta_gap_ghz",
        other => other,
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

/// Readout cavity seen by the qubit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CavityParams {
    /// Linewidth κ/2π in MHz.
    pub kappa_mhz: f64,
    /// Dispersive shift χ/2π in MHz.
    pub chi_mhz: f64,
    pub f_cavity_ghz: f64,
    #[serde(default)]
    pub n_bar: f64,
}

impl CavityParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa_mhz.is_finite() && self.kappa_mhz > 0.0) {
            return Err(Error::invalid("kappa_mhz", "must be positive"));
        }
        if !(self.chi_mhz.is_finite() && self.chi_mhz != 0.0) {
            return Err(Error::invalid("chi_mhz", "must be finite and nonzero"));
        }
        if !(self.n_bar.is_finite() && self.n_bar >= 0.0) {
            return Err(Error::invalid("n_bar", "must be nonnegative"));
        }
        if !(self.f_cavity_ghz.is_finite() && self.f_cavity_ghz > 0.0) {
            return Err(Error::invalid("f_cavity_ghz", "must be positive"));
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = read(path)?;
        let cav: CavityParams = toml::from_str(&text).map_err(|e| crate::qubit::parse_error(path, &text, e))?;
        cav.validate()?;
        Ok(cav)
    }
}

/// Default low-frequency cutoff of the Ramsey filter, Hz.
pub const RAMSEY_CUTOFF_HZ: f64 = 1.0;

/// Pulse sequence used to measure dephasing. Spin echo is `Cpmg { pulses: 1 }`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum SequenceType {
    Ramsey { cutoff_hz: f64 },
    Cpmg { pulses: u32 },
}

impl SequenceType {
    pub fn ramsey() -> Self {
        SequenceType::Ramsey {
            cutoff_hz: RAMSEY_CUTOFF_HZ,
        }
    }

    pub fn echo() -> Self {
        SequenceType::Cpmg { pulses: 1 }
    }

    pub fn cpmg(pulses: u32) -> Result<Self> {
        if pulses == 0 {
            return Err(Error::invalid("pulses", "CPMG needs at least one π pulse"));
        }
        Ok(SequenceType::Cpmg { pulses })
    }

    pub fn ramsey_with_cutoff(cutoff_hz: f64) -> Result<Self> {
        if !(cutoff_hz.is_finite() && cutoff_hz > 0.0) {
            return Err(Error::invalid("ramsey_cutoff", "must be positive"));
        }
        Ok(SequenceType::Ramsey { cutoff_hz })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            SequenceType::Ramsey { cutoff_hz } => Self::ramsey_with_cutoff(cutoff_hz).map(|_| ()),
            SequenceType::Cpmg { pulses } => Self::cpmg(pulses).map(|_| ()),
        }
    }
}

impl fmt::Display for SequenceType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SequenceType::Ramsey { .. } => write!(f, "ramsey"),
            SequenceType::Cpmg { pulses } => write!(f, "cpmg{pulses}"),
        }
    }
}

impl FromStr for SequenceType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "ramsey" => Ok(Self::ramsey()),
            "echo" => Ok(Self::echo()),
            _ => lower
                .strip_prefix("cpmg")
                .and_then(|n| n.parse::<u32>().ok())
                .ok_or_else(|| Error::invalid("sequence", format!("unknown sequence `{s}`")))
                .and_then(Self::cpmg),
        }
    }
}

impl TryFrom<String> for SequenceType {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<SequenceType> for String {
    fn from(s: SequenceType) -> String {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequence_labels_round_trip() {
        for s in ["ramsey", "cpmg1", "cpmg8"] {
            assert_eq!(s.parse::<SequenceType>().unwrap().to_string(), s);
        }
        assert_eq!("echo".parse::<SequenceType>().unwrap(), SequenceType::echo());
        assert!("cpmg0".parse::<SequenceType>().is_err());
        assert!("t1".parse::<SequenceType>().is_err());
    }

    #[test]
    fn noise_file_defaults_and_units() {
        let f: NoiseFile = toml::from_str("tan_delta_c = 2.64e-6\ntemp_mk = 18.7").unwrap();
        let env = f.environment().unwrap();
        assert!((env.temp - 0.0187).abs() < 1e-15);
        assert_eq!(env.delta_gap, 44.0);
        let bad: NoiseFile = toml::from_str("x_qp = -1.0").unwrap();
        assert!(bad.environment().unwrap_err().to_string().contains("x_qp"));
    }

    #[test]
    fn cavity_requires_nonzero_chi() {
        let c = CavityParams {
            kappa_mhz: 2.19,
            chi_mhz: 0.0,
            f_cavity_ghz: 6.69,
            n_bar: 0.0,
        };
        assert!(c.validate().is_err());
    }
}
