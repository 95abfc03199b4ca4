//! Inverse problems over flux scans.
//!
//! [`extract_tan_delta`] fits the dielectric loss tangent to T1 versus flux
//! with an asymmetric loss that tracks the upper envelope of the data.
//! [`extract_flux_noise`] and [`extract_flux_noise_curves`] fit the 1/f and
//! white flux-noise amplitudes jointly across pulse sequences. [`zeta_table`]
//! and [`model_band`] produce the frequency-normalized lifetime comparison.

mod flux_noise;
mod tan_delta;
mod zeta;

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::SequenceType;
use crate::qubit::{
    converged_spectrum, matrix_elements, solution_dispersion, FluxBias, FluxoniumParams, DEFAULT_REL_TOL,
};

pub use flux_noise::{dephasing_time, extract_flux_noise, extract_flux_noise_curves, DephasingCurve, FluxNoiseOptions};
pub use tan_delta::{extract_tan_delta, symmetric_tan_delta, TanDeltaOptions};
pub use zeta::{model_band, zeta_table, BandRow, ZetaPoint};

/// |D| below this (rad·GHz/Φ0) carries no first-order flux-noise information.
pub const INFORMATIVE_DISPERSION: f64 = 1e-6;

/// What a scan row measured.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum RecordKind {
    T1,
    /// Pure-dephasing 1/e time under the given sequence.
    Dephasing(SequenceType),
}

impl fmt::Display for RecordKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RecordKind::T1 => write!(f, "t1"),
            RecordKind::Dephasing(s) => write!(f, "{s}"),
        }
    }
}

impl FromStr for RecordKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim().eq_ignore_ascii_case("t1") {
            Ok(RecordKind::T1)
        } else {
            s.parse().map(RecordKind::Dephasing)
        }
    }
}

impl TryFrom<String> for RecordKind {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<RecordKind> for String {
    fn from(k: RecordKind) -> String {
        k.to_string()
    }
}

/// One fitted time constant at one flux bias.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRecord {
    #[serde(rename = "phi_ext_phi0")]
    pub phi_ext: f64,
    #[serde(rename = "sequence")]
    pub kind: RecordKind,
    pub time_constant_us: f64,
    pub err_us: Option<f64>,
}

impl ScanRecord {
    pub fn validate(&self) -> Result<()> {
        if !(self.phi_ext.is_finite() && (0.0..=1.0).contains(&self.phi_ext)) {
            return Err(Error::invalid(
                "phi_ext_phi0",
                format!("{} is outside one period [0, 1]", self.phi_ext),
            ));
        }
        if !(self.time_constant_us.is_finite() && self.time_constant_us > 0.0) {
            return Err(Error::invalid("time_constant_us", "must be positive"));
        }
        if let Some(e) = self.err_us {
            if !(e.is_finite() && e > 0.0) {
                return Err(Error::invalid("err_us", "must be positive when present"));
            }
        }
        Ok(())
    }
}

/// Time constants measured across a flux scan of one qubit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxScanDataset {
    pub qubit: FluxoniumParams,
    pub records: Vec<ScanRecord>,
    /// Flux at which the qubit idles, Φ0.
    #[serde(default)]
    pub idle_phi_ext: Option<f64>,
}

impl FluxScanDataset {
    pub fn new(qubit: FluxoniumParams, records: Vec<ScanRecord>) -> Result<Self> {
        qubit.validate()?;
        for (i, r) in records.iter().enumerate() {
            r.validate().map_err(|e| Error::Row {
                row: i + 1,
                source: Box::new(e),
            })?;
        }
        Ok(Self {
            qubit,
            records,
            idle_phi_ext: None,
        })
    }

    pub fn t1_records(&self) -> impl Iterator<Item = &ScanRecord> {
        self.records.iter().filter(|r| r.kind == RecordKind::T1)
    }

    pub fn dephasing_records(&self) -> impl Iterator<Item = (&ScanRecord, SequenceType)> {
        self.records.iter().filter_map(|r| match r.kind {
            RecordKind::Dephasing(s) => Some((r, s)),
            RecordKind::T1 => None,
        })
    }

    /// Reads `phi_ext_phi0,sequence,time_constant_us,err_us` rows; `#` lines
    /// are comments and an empty `err_us` means unknown.
    pub fn read_csv(path: impl AsRef<Path>, qubit: FluxoniumParams) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_reader(file, path, qubit)
    }

    pub fn from_reader(reader: impl Read, path: &Path, qubit: FluxoniumParams) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);
        let parse_err = |line: u64, reason: String| Error::Parse {
            path: path.to_owned(),
            line,
            reason,
        };
        let headers = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
        for col in ["phi_ext_phi0", "sequence", "time_constant_us", "err_us"] {
            if !headers.iter().any(|h| h == col) {
                return Err(parse_err(1, format!("missing column `{col}`")));
            }
        }
        let mut records = Vec::new();
        for row in rdr.records() {
            let row = row.map_err(|e| parse_err(e.position().map_or(0, |p| p.line()), e.to_string()))?;
            let line = row.position().map_or(0, |p| p.line());
            let rec: ScanRecord = row
                .deserialize(Some(&headers))
                .map_err(|e| parse_err(line, e.to_string()))?;
            rec.validate().map_err(|e| parse_err(line, e.to_string()))?;
            records.push(rec);
        }
        Self::new(qubit, records)
    }

    pub fn write_csv(&self, out: impl Write, comments: &[String]) -> std::io::Result<()> {
        let mut out = out;
        for c in comments {
            writeln!(out, "# {c}")?;
        }
        if let Some(idle) = self.idle_phi_ext {
            writeln!(out, "# idle_phi_ext = {idle}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        for r in &self.records {
            w.serialize(r)?;
        }
        w.flush()
    }
}

/// Model comparison at one scan row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointResidual {
    pub phi_ext: f64,
    pub kind: RecordKind,
    pub measured_us: f64,
    pub model_us: f64,
    /// ln(measured / model).
    pub log_residual: f64,
}

/// A row flagged as a likely TLS dip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskedPoint {
    pub phi_ext: f64,
    pub measured_us: f64,
    pub model_us: f64,
    pub reason: String,
    /// Whether the point was left out of the final fit.
    pub excluded: bool,
}

/// Extracted noise parameters with per-point diagnostics.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExtractionReport {
    pub qubit: String,
    pub temp_mk: Option<f64>,
    /// tanδ_C with thermal enhancement at `temp_mk`.
    pub tand_finite_t: Option<f64>,
    /// tanδ_C for the zero-temperature TLS bath.
    pub tand_t0: Option<f64>,
    /// μΦ0/√Hz.
    pub a_phi: Option<f64>,
    pub a_phi_err: Option<f64>,
    /// μΦ0/√Hz.
    pub a_white: Option<f64>,
    pub a_white_err: Option<f64>,
    pub residuals: Vec<PointResidual>,
    pub masked: Vec<MaskedPoint>,
    pub flags: Vec<String>,
}

impl ExtractionReport {
    /// Combines a tanδ report with a flux-noise report for the same qubit.
    pub fn merge(mut self, other: ExtractionReport) -> Self {
        self.temp_mk = self.temp_mk.or(other.temp_mk);
        self.tand_finite_t = self.tand_finite_t.or(other.tand_finite_t);
        self.tand_t0 = self.tand_t0.or(other.tand_t0);
        self.a_phi = self.a_phi.or(other.a_phi);
        self.a_phi_err = self.a_phi_err.or(other.a_phi_err);
        self.a_white = self.a_white.or(other.a_white);
        self.a_white_err = self.a_white_err.or(other.a_white_err);
        self.residuals.extend(other.residuals);
        self.masked.extend(other.masked);
        self.flags.extend(other.flags);
        self
    }
}

/// Qubit quantities at one flux bias.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct PointModel {
    pub f01: f64,
    pub phi01_sq: f64,
    pub sin_half_sq: f64,
    pub dispersion: f64,
}

pub(crate) fn point_model(params: &FluxoniumParams, phi_ext: f64) -> Result<PointModel> {
    let sol = converged_spectrum(params, FluxBias::new(phi_ext)?, 2, DEFAULT_REL_TOL)?;
    let elems = matrix_elements(&sol, 0, 1)?;
    Ok(PointModel {
        f01: sol.f01(),
        phi01_sq: elems.phi_abs().powi(2),
        sin_half_sq: elems.sin_half_phi_abs().powi(2),
        dispersion: solution_dispersion(&sol)?,
    })
}

/// Forward quantities for each flux value; distinct values are evaluated
/// once, in parallel.
pub(crate) fn point_models(params: &FluxoniumParams, phis: &[f64]) -> Result<Vec<PointModel>> {
    let mut unique: Vec<f64> = phis.to_vec();
    unique.sort_by(f64::total_cmp);
    unique.dedup();
    let solved: Vec<PointModel> = unique
        .par_iter()
        .map(|&p| point_model(params, p))
        .collect::<Result<_>>()?;
    Ok(phis.iter().map(|p| solved[unique.partition_point(|u| u < p)]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qubit() -> FluxoniumParams {
        FluxoniumParams::new("G", 1.212, 5.315, 0.547).unwrap()
    }

    #[test]
    fn record_kind_labels() {
        for s in ["t1", "ramsey", "cpmg1", "cpmg4"] {
            assert_eq!(s.parse::<RecordKind>().unwrap().to_string(), s);
        }
        assert!("t2".parse::<RecordKind>().is_err());
    }

    #[test]
    fn csv_round_trip() {
        let ds = FluxScanDataset::new(
            qubit(),
            vec![
                ScanRecord {
                    phi_ext: 0.49,
                    kind: RecordKind::T1,
                    time_constant_us: 812.5,
                    err_us: Some(20.0),
                },
                ScanRecord {
                    phi_ext: 0.51,
                    kind: RecordKind::Dephasing(SequenceType::cpmg(4).unwrap()),
                    time_constant_us: 60.0,
                    err_us: None,
                },
            ],
        )
        .unwrap();
        let mut buf = Vec::new();
        ds.write_csv(&mut buf, &["seed = 1".into()]).unwrap();
        let back = FluxScanDataset::from_reader(buf.as_slice(), Path::new("x.csv"), qubit()).unwrap();
        assert_eq!(back.records, ds.records);
    }

    #[test]
    fn csv_errors_name_lines_and_columns() {
        let bad = "phi_ext_phi0,sequence,time_constant_us\n0.5,t1,10\n";
        let e = FluxScanDataset::from_reader(bad.as_bytes(), Path::new("s.csv"), qubit()).unwrap_err();
        assert!(e.to_string().contains("err_us"), "{e}");
        let bad = "phi_ext_phi0,sequence,time_constant_us,err_us\n0.5,t1,10,\n0.5,t3,10,\n";
        let e = FluxScanDataset::from_reader(bad.as_bytes(), Path::new("s.csv"), qubit()).unwrap_err();
        assert!(e.to_string().starts_with("s.csv:3:"), "{e}");
        let bad = "phi_ext_phi0,sequence,time_constant_us,err_us\n1.5,t1,10,\n";
        assert!(FluxScanDataset::from_reader(bad.as_bytes(), Path::new("s.csv"), qubit()).is_err());
    }
}
