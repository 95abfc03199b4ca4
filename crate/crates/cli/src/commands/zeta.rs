use fluxcoh_core::extract::{model_band, zeta_table};
use fluxcoh_core::units::mk_to_k;

use super::load_qubit;
use crate::config::LoadedConfig;
use crate::error::Result;
use crate::output::OutputDir;

pub fn run(cfg: &LoadedConfig, out: &mut OutputDir) -> Result<()> {
    let sec = cfg.section("zeta", &cfg.config.zeta)?;
    if sec.qubits.is_empty() {
        return Err(cfg.invalid("`zeta.qubits` is empty"));
    }
    let mut rows = Vec::with_capacity(sec.qubits.len());
    for q in &sec.qubits {
        let path = cfg.input("zeta.qubits", q)?;
        let (file, params) = load_qubit(&path)?;
        let t1_ms = file
            .published
            .as_ref()
            .and_then(|p| p.t1_ms)
            .ok_or_else(|| cfg.invalid(format!("{} has no published `t1_ms`", path.display())))?;
        rows.push((params, t1_ms * 1e3));
    }
    let points = zeta_table(&rows)?;
    let lines: Vec<String> = points
        .iter()
        .map(|p| format!("{},{},{},{},{}", p.label, p.f01_ghz * 1e3, p.phi01_abs, p.t1_us, p.zeta))
        .collect();
    out.write_csv(
        "zeta_points.csv",
        "qubit,f01_MHz,phi01_abs,T1_us,zeta_us_per_GHz",
        &lines,
    )?;

    if let Some(band) = &sec.band {
        let (_, rep) = load_qubit(&cfg.input("zeta.band.representative", &band.representative)?)?;
        let grid: Vec<f64> = band
            .f01_mhz
            .points("zeta.band.f01_mhz")
            .map_err(|r| cfg.invalid(r))?
            .into_iter()
            .map(|f| f * 1e-3)
            .collect();
        let rows = model_band(
            &grid,
            (band.tand_min * 1e-6, band.tand_max * 1e-6),
            band.a_phi,
            mk_to_k(band.temp_mk),
            &rep,
        )?;
        let lines: Vec<String> = rows
            .iter()
            .map(|r| format!("{},{},{},{}", r.f01_ghz * 1e3, r.zeta_lo, r.zeta_hi, r.zeta_flux))
            .collect();
        out.write_csv("zeta_band.csv", "f01_MHz,zeta_lo,zeta_hi,zeta_flux", &lines)?;
    }
    Ok(())
}
