use std::f64::consts::PI;

use log::info;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::coth_factor;
use crate::units::k_to_mk;

use super::{point_models, ExtractionReport, FluxScanDataset, MaskedPoint, PointModel, PointResidual, RecordKind};

/// Settings of the upper-envelope tanδ fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TanDeltaOptions {
    /// Weight of points above the model relative to points below.
    pub asymmetry: f64,
    /// Points more than this factor below the model are flagged as TLS dips.
    pub mask_factor: f64,
    /// Refit without flagged points instead of only reporting them.
    pub exclude_masked: bool,
    /// ε in tanδ(f) = tanδ_C·(f / 1 GHz)^ε.
    pub loss_exponent: f64,
}

impl Default for TanDeltaOptions {
    fn default() -> Self {
        Self {
            asymmetry: 10.0,
            mask_factor: 3.0,
            exclude_masked: false,
            loss_exponent: 0.0,
        }
    }
}

impl TanDeltaOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.asymmetry.is_finite() && self.asymmetry >= 1.0) {
            return Err(Error::invalid("asymmetry", "must be at least 1"));
        }
        if !(self.mask_factor.is_finite() && self.mask_factor > 1.0) {
            return Err(Error::invalid("mask_factor", "must exceed 1"));
        }
        if !self.loss_exponent.is_finite() {
            return Err(Error::invalid("loss_exponent", "must be finite"));
        }
        Ok(())
    }
}

const MIN_POINTS: usize = 8;
const MAX_MASK_PASSES: usize = 20;

/// Dielectric rate per unit tanδ_C, 1/μs.
fn unit_rate(p: &PointModel, e_c: f64, eps: f64, temp_k: f64) -> f64 {
    PI * p.f01 * p.f01 / (2.0 * e_c) * 1e3 * p.f01.powf(eps) * p.phi01_sq * coth_factor(p.f01, temp_k)
}

/// Minimizer s of Σ w_i (s − c_i)² with w_i = `asym` when s > c_i, else 1.
///
/// The stationarity condition is piecewise linear and increasing in s, so
/// the solution is the weighted mean on the unique consistent interval.
fn asymmetric_center(c: &[f64], asym: f64) -> f64 {
    let mut sorted = c.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let total: f64 = sorted.iter().sum();
    let mut below = 0.0;
    for k in 0..=n {
        // first k sorted values lie below s and carry weight `asym`
        let s = (asym * below + (total - below)) / (asym * k as f64 + (n - k) as f64);
        let lo = if k == 0 { f64::NEG_INFINITY } else { sorted[k - 1] };
        let hi = if k == n { f64::INFINITY } else { sorted[k] };
        if s >= lo && s <= hi {
            return s;
        }
        if k < n {
            below += sorted[k];
        }
    }
    unreachable!("stationarity condition is monotone")
}

struct Prepared {
    phis: Vec<f64>,
    t1: Vec<f64>,
    models: Vec<PointModel>,
}

fn prepare(scan: &FluxScanDataset) -> Result<Prepared> {
    let rows: Vec<_> = scan.t1_records().collect();
    if rows.len() < MIN_POINTS {
        return Err(Error::invalid(
            "scan",
            format!(
                "tanδ extraction needs at least {MIN_POINTS} T1 points, got {}",
                rows.len()
            ),
        ));
    }
    let phis: Vec<f64> = rows.iter().map(|r| r.phi_ext).collect();
    if !(phis.iter().any(|&p| p < 0.5) && phis.iter().any(|&p| p > 0.5)) {
        return Err(Error::invalid("scan", "T1 points must lie on both sides of 0.5"));
    }
    let models = point_models(&scan.qubit, &phis)?;
    Ok(Prepared {
        t1: rows.iter().map(|r| r.time_constant_us).collect(),
        phis,
        models,
    })
}

fn unit_rates(prep: &Prepared, scan: &FluxScanDataset, eps: f64, temp_k: f64) -> Result<Vec<f64>> {
    let g: Vec<f64> = prep
        .models
        .iter()
        .map(|m| unit_rate(m, scan.qubit.e_c, eps, temp_k))
        .collect();
    if g.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::NonConvergence(
            "degenerate scan: vanishing dielectric coupling".into(),
        ));
    }
    Ok(g)
}

struct Solved {
    ln_tan: f64,
    masked: Vec<bool>,
}

fn solve(t1: &[f64], g: &[f64], opts: &TanDeltaOptions) -> Result<Solved> {
    let c: Vec<f64> = t1.iter().zip(g).map(|(t, g)| -(t.ln() + g.ln())).collect();
    let threshold = -opts.mask_factor.ln();
    let mut masked = vec![false; c.len()];
    for _ in 0..MAX_MASK_PASSES {
        let kept: Vec<f64> = c
            .iter()
            .zip(&masked)
            .filter(|(_, m)| !(opts.exclude_masked && **m))
            .map(|(c, _)| *c)
            .collect();
        if kept.is_empty() {
            return Err(Error::NonConvergence(
                "every T1 point lies below the model floor".into(),
            ));
        }
        let s = asymmetric_center(&kept, opts.asymmetry);
        let next: Vec<bool> = c.iter().map(|ci| s - ci < threshold).collect();
        if !opts.exclude_masked || next == masked {
            return Ok(Solved {
                ln_tan: s,
                masked: next,
            });
        }
        masked = next;
    }
    Err(Error::NonConvergence("TLS mask did not settle".into()))
}

/// Fits tanδ_C to the T1 rows of a flux scan.
///
/// The log residual ln(T1/T1_model) is weighted `asymmetry`× when the data
/// lie above the model, so the fit follows the upper envelope of T1 and
/// TLS dips pull it down only weakly. Both the finite-temperature variant at
/// `temp_k` and the T = 0 variant are returned; residuals and masks refer to
/// the finite-temperature fit.
pub fn extract_tan_delta(scan: &FluxScanDataset, temp_k: f64, opts: &TanDeltaOptions) -> Result<ExtractionReport> {
    opts.validate()?;
    if !(temp_k.is_finite() && temp_k >= 0.0) {
        return Err(Error::invalid("temp", "must be nonnegative"));
    }
    let prep = prepare(scan)?;
    let g_t = unit_rates(&prep, scan, opts.loss_exponent, temp_k)?;
    let g_0 = unit_rates(&prep, scan, opts.loss_exponent, 0.0)?;
    let finite = solve(&prep.t1, &g_t, opts)?;
    let zero = solve(&prep.t1, &g_0, opts)?;
    let tan = finite.ln_tan.exp();

    let mut report = ExtractionReport {
        qubit: scan.qubit.label.clone(),
        temp_mk: Some(k_to_mk(temp_k)),
        tand_finite_t: Some(tan),
        tand_t0: Some(zero.ln_tan.exp()),
        ..Default::default()
    };
    for i in 0..prep.t1.len() {
        let model = 1.0 / (tan * g_t[i]);
        report.residuals.push(PointResidual {
            phi_ext: prep.phis[i],
            kind: RecordKind::T1,
            measured_us: prep.t1[i],
            model_us: model,
            log_residual: (prep.t1[i] / model).ln(),
        });
        if finite.masked[i] {
            info!("phi_ext = {}: T1 {:.1} μs flagged as TLS dip", prep.phis[i], prep.t1[i]);
            report.masked.push(MaskedPoint {
                phi_ext: prep.phis[i],
                measured_us: prep.t1[i],
                model_us: model,
                reason: format!("T1 more than {}x below model", opts.mask_factor),
                excluded: opts.exclude_masked,
            });
        }
    }
    Ok(report)
}

/// Plain mean of per-point tanδ estimates, the symmetric baseline that TLS
/// dips bias upward.
pub fn symmetric_tan_delta(scan: &FluxScanDataset, temp_k: f64, loss_exponent: f64) -> Result<f64> {
    let prep = prepare(scan)?;
    let g = unit_rates(&prep, scan, loss_exponent, temp_k)?;
    let n = prep.t1.len() as f64;
    Ok(prep.t1.iter().zip(&g).map(|(t, g)| 1.0 / (t * g)).sum::<f64>() / n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(c: &[f64], asym: f64) -> f64 {
        let slope = |s: f64| -> f64 {
            c.iter()
                .map(|ci| {
                    let r = s - ci;
                    if r > 0.0 {
                        asym * r
                    } else {
                        r
                    }
                })
                .sum()
        };
        let (mut lo, mut hi) = (-100.0, 100.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if slope(mid) > 0.0 {
                hi = mid
            } else {
                lo = mid
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn center_matches_ternary_search() {
        let c = [0.3, -1.2, 4.0, 2.2, 2.2, 0.0, -0.7];
        for asym in [1.0, 2.5, 10.0, 100.0] {
            let s = asymmetric_center(&c, asym);
            assert!((s - brute(&c, asym)).abs() < 1e-9, "{asym}");
        }
        let mean = c.iter().sum::<f64>() / c.len() as f64;
        assert!((asymmetric_center(&c, 1.0) - mean).abs() < 1e-15);
    }

    #[test]
    fn center_of_constant_is_exact() {
        assert_eq!(asymmetric_center(&[-12.5; 9], 10.0), -12.5);
    }

    #[test]
    fn heavier_weight_tracks_lower_c() {
        let c = [0.0, 1.0, 2.0, 3.0];
        assert!(asymmetric_center(&c, 10.0) < asymmetric_center(&c, 2.0));
    }
}
