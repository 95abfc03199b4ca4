use fluxcoh_core::extract::{extract_flux_noise, extract_tan_delta, FluxNoiseOptions, RecordKind, TanDeltaOptions};
use fluxcoh_core::noise::NoiseFile;
use fluxcoh_core::qubit::{converged_spectrum, DEFAULT_REL_TOL};
use fluxcoh_core::units::{k_to_mk, mk_to_k};
use fluxcoh_core::{ExtractionReport, FluxBias, FluxScanDataset, SequenceType};

use super::load_qubit;
use crate::config::{LoadedConfig, TanDeltaVariant};
use crate::error::Result;
use crate::output::{cell, OutputDir};

/// Flux distance within which a scan row counts as taken at the idle point.
const IDLE_MATCH: f64 = 1e-3;

const TABLE_HEADER: &str = "qubit,f01_MHz,EC_GHz,EJ_GHz,EL_GHz,T1_ms,T2echo_ms,T_mK,tand_finiteT,tand_T0,A_phi";

pub fn run(cfg: &LoadedConfig, out: &mut OutputDir) -> Result<()> {
    let sec = cfg.section("extract", &cfg.config.extract)?;
    if !sec.tan_delta && !sec.flux_noise {
        return Err(cfg.invalid("extract: enable `tan_delta`, `flux_noise` or both"));
    }
    let (_, params) = load_qubit(&cfg.input("extract.qubit", &sec.qubit)?)?;
    let scan = FluxScanDataset::read_csv(cfg.input("extract.scan", &sec.scan)?, params.clone())?;
    let temp_k = match (sec.temp_mk, &sec.noise) {
        (Some(t), _) => Some(mk_to_k(t)),
        (None, Some(p)) => Some(NoiseFile::load(cfg.input("extract.noise", p)?)?.temp),
        (None, None) => None,
    };

    let mut report = ExtractionReport {
        qubit: params.label.clone(),
        ..Default::default()
    };
    if sec.tan_delta {
        let temp_k = temp_k.ok_or_else(|| cfg.invalid("extract: tanδ needs `temp_mk` or a `noise` file"))?;
        let opts = TanDeltaOptions {
            asymmetry: sec.asymmetry,
            mask_factor: sec.mask_factor,
            exclude_masked: sec.exclude_masked,
            ..Default::default()
        };
        let mut td = extract_tan_delta(&scan, temp_k, &opts)?;
        match sec.variant {
            TanDeltaVariant::Both => {}
            TanDeltaVariant::FiniteT => td.tand_t0 = None,
            TanDeltaVariant::T0 => td.tand_finite_t = None,
        }
        report = report.merge(td);
    }
    if sec.flux_noise {
        let opts = FluxNoiseOptions {
            fit_white: sec.fit_white,
        };
        report = report.merge(extract_flux_noise(&scan, &opts)?);
    }
    report.temp_mk = report.temp_mk.or(temp_k.map(k_to_mk));
    for f in &report.flags {
        log::warn!("{f}");
    }
    out.write_json("extraction_report.json", &report)?;

    let f01 = converged_spectrum(&params, FluxBias::half(), 2, DEFAULT_REL_TOL)?.f01();
    let idle = scan.idle_phi_ext.unwrap_or(0.5);
    let at_idle = |kind: RecordKind| {
        scan.records
            .iter()
            .filter(|r| r.kind == kind && (r.phi_ext - idle).abs() <= IDLE_MATCH)
            .min_by(|a, b| (a.phi_ext - idle).abs().total_cmp(&(b.phi_ext - idle).abs()))
            .map(|r| r.time_constant_us)
    };
    let t1 = at_idle(RecordKind::T1);
    let t2 = match (t1, at_idle(RecordKind::Dephasing(SequenceType::echo()))) {
        (Some(t1), Some(tphi)) => Some(echo_t2(t1, tphi)),
        _ => None,
    };
    let row = format!(
        "{},{},{},{},{},{},{},{},{},{},{}",
        params.label,
        f01 * 1e3,
        params.e_c,
        params.e_j,
        params.e_l,
        cell(t1.map(|t| t * 1e-3)),
        cell(t2.map(|t| t * 1e-3)),
        cell(report.temp_mk),
        cell(report.tand_finite_t.map(|v| v * 1e6)),
        cell(report.tand_t0.map(|v| v * 1e6)),
        cell(report.a_phi),
    );
    out.write_csv("table1_row.csv", TABLE_HEADER, &[row])?;
    Ok(())
}

/// 1/e time of exp(−t/2T1)·exp(−(t/Tφ)²), μs.
fn echo_t2(t1: f64, tphi: f64) -> f64 {
    let (a, b) = (1.0 / (tphi * tphi), 1.0 / (2.0 * t1));
    2.0 / (b + (b * b + 4.0 * a).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn echo_t2_limits() {
        assert!((echo_t2(100.0, 1e12) - 200.0).abs() < 1e-6);
        assert!((echo_t2(1e12, 50.0) - 50.0).abs() < 1e-6);
        let t = echo_t2(300.0, 80.0);
        assert!((t / 600.0 + (t / 80.0).powi(2) - 1.0).abs() < 1e-12);
    }
}
