use fluxcoh_core::qubit::{spectrum_sweep, CONVERGENCE_START, DEFAULT_REL_TOL};
use fluxcoh_core::FluxBias;
use serde::Serialize;

use super::load_qubit;
use crate::config::{Grid, LoadedConfig};
use crate::error::Result;
use crate::output::OutputDir;

#[derive(Serialize)]
struct Meta<'a> {
    qubit: &'a str,
    e_c_ghz: f64,
    e_j_ghz: f64,
    e_l_ghz: f64,
    n_levels: usize,
    n_points: usize,
    rel_tol: f64,
    basis_start: usize,
    basis_min: usize,
    basis_max: usize,
    sweet_spot_f01_mhz: Option<f64>,
    min_f01_phi_ext: f64,
}

pub fn run(cfg: &LoadedConfig, out: &mut OutputDir) -> Result<()> {
    let sec = cfg.section("spectrum", &cfg.config.spectrum)?;
    let (_, params) = load_qubit(&cfg.input("spectrum.qubit", &sec.qubit)?)?;
    let grid = Grid {
        start: sec.phi_start,
        stop: sec.phi_stop,
        step: sec.phi_step,
    }
    .points("spectrum.phi")
    .map_err(|r| cfg.invalid(r))?;
    let flux = grid
        .iter()
        .map(|&p| FluxBias::new(p))
        .collect::<fluxcoh_core::Result<Vec<_>>>()?;
    let n_levels = sec.n_levels.max(2);
    let rows = spectrum_sweep(&params, &flux, n_levels)?;

    let mut header = String::from("phi_ext_phi0");
    for k in 1..n_levels {
        header.push_str(&format!(",f0{k}_GHz"));
    }
    header.push_str(",phi01_abs,sin_half_phi01_abs,dispersion_rad_GHz_per_phi0,basis_size");
    let lines: Vec<String> = rows
        .iter()
        .map(|r| {
            let mut s = r.phi_ext.to_string();
            for t in &r.transitions {
                s.push_str(&format!(",{t}"));
            }
            s.push_str(&format!(
                ",{},{},{},{}",
                r.phi01_abs, r.sin_half_phi01_abs, r.dispersion, r.basis_size
            ));
            s
        })
        .collect();
    out.write_csv("spectrum_sweep.csv", &header, &lines)?;

    let argmin = rows
        .iter()
        .min_by(|a, b| a.f01().total_cmp(&b.f01()))
        .map_or(f64::NAN, |r| r.phi_ext);
    let meta = Meta {
        qubit: &params.label,
        e_c_ghz: params.e_c,
        e_j_ghz: params.e_j,
        e_l_ghz: params.e_l,
        n_levels,
        n_points: rows.len(),
        rel_tol: DEFAULT_REL_TOL,
        basis_start: CONVERGENCE_START,
        basis_min: rows.iter().map(|r| r.basis_size).min().unwrap_or(0),
        basis_max: rows.iter().map(|r| r.basis_size).max().unwrap_or(0),
        sweet_spot_f01_mhz: rows.iter().find(|r| r.phi_ext == 0.5).map(|r| r.f01() * 1e3),
        min_f01_phi_ext: argmin,
    };
    out.write_json("spectrum_meta.json", &meta)?;
    Ok(())
}
