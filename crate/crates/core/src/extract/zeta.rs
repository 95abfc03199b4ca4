use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::{coth_factor, zeta};
use crate::qubit::{converged_spectrum, matrix_elements, FluxBias, FluxoniumParams, DEFAULT_REL_TOL};

/// Frequency-normalized lifetime of one qubit at its sweet spot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZetaPoint {
    pub label: String,
    pub f01_ghz: f64,
    pub phi01_abs: f64,
    pub t1_us: f64,
    /// T1·|⟨0|φ|1⟩|²/E_C in μs/GHz.
    pub zeta: f64,
}

/// ζ for each (qubit, measured T1 in μs), sorted by sweet-spot f01.
pub fn zeta_table(rows: &[(FluxoniumParams, f64)]) -> Result<Vec<ZetaPoint>> {
    let mut out = rows
        .iter()
        .enumerate()
        .map(|(i, (params, t1))| {
            let point = || -> Result<ZetaPoint> {
                let sol = converged_spectrum(params, FluxBias::half(), 2, DEFAULT_REL_TOL)?;
                let elems = matrix_elements(&sol, 0, 1)?;
                Ok(ZetaPoint {
                    label: params.label.clone(),
                    f01_ghz: sol.f01(),
                    phi01_abs: elems.phi_abs(),
                    t1_us: *t1,
                    zeta: zeta(*t1, &elems, params)?,
                })
            };
            point().map_err(|e| Error::Row {
                row: i + 1,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    out.sort_by(|a, b| a.f01_ghz.total_cmp(&b.f01_ghz));
    Ok(out)
}

/// Model ζ range at one frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandRow {
    pub f01_ghz: f64,
    /// Combined with the upper tanδ.
    pub zeta_lo: f64,
    /// Combined with the lower tanδ.
    pub zeta_hi: f64,
    /// Flux-noise relaxation alone; infinite when A_Φ = 0.
    pub zeta_flux: f64,
}

/// ζ band from dielectric loss over `tan_delta_range` combined with 1/f flux
/// noise relaxation at `a_phi`.
///
/// With ζ = T1|φ01|²/E_C the dielectric part no longer depends on the
/// circuit: ζ_d = 1/((π f²/2)·tanδ·coth). The flux-noise part,
/// ζ_f = f / (16π⁴ E_L² A_Φ² E_C) in consistent units, uses E_L and E_C of
/// `representative`. The two add as rates.
pub fn model_band(
    f01_grid: &[f64],
    tan_delta_range: (f64, f64),
    a_phi: f64,
    temp_k: f64,
    representative: &FluxoniumParams,
) -> Result<Vec<BandRow>> {
    if f01_grid.is_empty() {
        return Err(Error::invalid("f01_grid", "must not be empty"));
    }
    if f01_grid.iter().any(|f| !(f.is_finite() && *f > 0.0)) {
        return Err(Error::invalid("f01_grid", "frequencies must be positive"));
    }
    if f01_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("f01_grid", "must be strictly ascending"));
    }
    let (lo, hi) = tan_delta_range;
    if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
        return Err(Error::invalid("tan_delta_range", "need 0 < lo <= hi"));
    }
    if !(a_phi.is_finite() && a_phi >= 0.0) {
        return Err(Error::invalid("a_phi", "must be nonnegative"));
    }
    if !(temp_k.is_finite() && temp_k >= 0.0) {
        return Err(Error::invalid("temp", "must be nonnegative"));
    }
    representative.validate()?;
    let (e_l, e_c) = (representative.e_l, representative.e_c);
    Ok(f01_grid
        .iter()
        .map(|&f| {
            let diel = |tan: f64| 1.0 / (PI * f * f / 2.0 * 1e3 * tan * coth_factor(f, temp_k));
            let flux = if a_phi == 0.0 {
                f64::INFINITY
            } else {
                f * 1e9 / (16.0 * PI.powi(4) * e_l * e_l * a_phi * a_phi * e_c)
            };
            let combine = |z: f64| 1.0 / (1.0 / z + 1.0 / flux);
            BandRow {
                f01_ghz: f,
                zeta_lo: combine(diel(hi)),
                zeta_hi: combine(diel(lo)),
                zeta_flux: flux,
            }
        })
        .collect())
}
