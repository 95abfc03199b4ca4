use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Circuit energies of one fluxonium device, all as E/h in GHz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxoniumParams {
    pub label: String,
    pub e_c: f64,
    pub e_j: f64,
    pub e_l: f64,
}

impl FluxoniumParams {
    pub fn new(label: impl Into<String>, e_c: f64, e_j: f64, e_l: f64) -> Result<Self> {
        let p = Self {
            label: label.into(),
            e_c,
            e_j,
            e_l,
        };
        p.validate()?;
        Ok(p)
    }

    /// Rejects nonpositive or non-finite energies. A large or small E_J/E_C
    /// ratio only produces a warning.
    pub fn validate(&self) -> Result<()> {
        for (field, v) in [("e_c", self.e_c), ("e_j", self.e_j), ("e_l", self.e_l)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(field, format!("must be positive and finite, got {v}")));
            }
        }
        if let Some(w) = self.ratio_warning() {
            log::warn!("{}: {w}", self.label);
        }
        Ok(())
    }

    pub fn ratio_warning(&self) -> Option<String> {
        let r = self.e_j / self.e_c;
        (!(0.5..=20.0).contains(&r)).then(|| format!("E_J/E_C = {r:.3} is outside the usual fluxonium range [0.5, 20]"))
    }

    /// Zero-point phase spread of the linear part, (2 E_C / E_L)^(1/4).
    pub fn phi_zp(&self) -> f64 {
        (2.0 * self.e_c / self.e_l).powf(0.25)
    }

    /// Plasma frequency of the linear part, √(8 E_C E_L), in GHz.
    pub fn plasma_frequency(&self) -> f64 {
        (8.0 * self.e_c * self.e_l).sqrt()
    }
}

/// External flux in units of Φ0.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FluxBias(f64);

impl FluxBias {
    pub fn new(phi_ext: f64) -> Result<Self> {
        if !phi_ext.is_finite() {
            return Err(Error::invalid("phi_ext", format!("must be finite, got {phi_ext}")));
        }
        Ok(Self(phi_ext))
    }

    /// The flux frustration point Φ0/2.
    pub fn half() -> Self {
        Self(0.5)
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Values reported alongside a device in its parameter file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PublishedMetrics {
    pub f01_mhz: Option<f64>,
    pub t1_ms: Option<f64>,
    pub t2echo_ms: Option<f64>,
    pub temp_mk: Option<f64>,
    /// In units of 1e-6.
    pub tand_finite_t: Option<f64>,
    /// In units of 1e-6.
    pub tand_t0: Option<f64>,
    /// μΦ0/√Hz.
    pub a_phi: Option<f64>,
}

/// On-disk qubit parameter file.
///
/// ```toml
/// label = "G"
/// e_c_ghz = 1.212
/// e_j_ghz = 5.315
/// e_l_ghz = 0.547
///
/// [published]
/// f01_mhz = 197
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QubitFile {
    pub label: String,
    pub e_c_ghz: f64,
    pub e_j_ghz: f64,
    pub e_l_ghz: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub published: Option<PublishedMetrics>,
}

impl QubitFile {
    pub fn from_toml_str(text: &str, path: &Path) -> Result<Self> {
        let file: QubitFile = toml::from_str(text).map_err(|e| parse_error(path, text, e))?;
        for (field, v) in [
            ("e_c_ghz", file.e_c_ghz),
            ("e_j_ghz", file.e_j_ghz),
            ("e_l_ghz", file.e_l_ghz),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(field, format!("must be positive and finite, got {v}")));
            }
        }
        Ok(file)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_toml_str(&text, path)
    }

    pub fn params(&self) -> Result<FluxoniumParams> {
        FluxoniumParams::new(self.label.clone(), self.e_c_ghz, self.e_j_ghz, self.e_l_ghz)
    }
}

/// Maps a TOML decode error onto a line-numbered parse error. A missing
/// field becomes an `InvalidInput` naming that field.
pub(crate) fn parse_error(path: &Path, text: &str, e: toml::de::Error) -> Error {
    let msg = e.message().to_string();
    if let Some(rest) = msg.strip_prefix("missing field `") {
        if let Some(field) = rest.split('`').next() {
            return Error::invalid(field, format!("missing in {}", path.display()));
        }
    }
    let line = e
        .span()
        .map(|s| text[..s.start.min(text.len())].matches('\n').count() as u64 + 1)
        .unwrap_or(0);
    Error::Parse {
        path: path.to_owned(),
        line,
        reason: msg,
    }
}
