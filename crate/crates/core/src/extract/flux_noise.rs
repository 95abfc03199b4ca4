use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::engine::{multistart, Model};
use crate::fit::DecayTrace;
use crate::noise::{FilterCoefficients, SequenceType};
use crate::qubit::FluxoniumParams;

use super::{point_models, ExtractionReport, FluxScanDataset, PointResidual, RecordKind, INFORMATIVE_DISPERSION};

/// Settings of the joint flux-noise fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FluxNoiseOptions {
    /// Fit the white amplitude; otherwise it is held at zero.
    pub fit_white: bool,
}

impl Default for FluxNoiseOptions {
    fn default() -> Self {
        Self { fit_white: true }
    }
}

const FIXED_POINT_TOL: f64 = 1e-14;
const FIXED_POINT_ITERS: usize = 200;

/// 1e-3·D·u so that the Gaussian exponent is (t·k·A)².
fn gauss_coeff(d: f64, u: f64) -> f64 {
    1e-3 * d * u
}

/// 1/e time of exp(−Γt − αt²) for fixed α, Γ.
fn quadratic_root(alpha: f64, gamma: f64) -> f64 {
    if alpha <= 0.0 && gamma <= 0.0 {
        return f64::INFINITY;
    }
    2.0 / (gamma + (gamma * gamma + 4.0 * alpha).sqrt())
}

/// Solves Γ_w t + (1e-3·t·D·p^{1/2}·u(t))² = 1 for t, with p = A_Φ² and
/// Γ_w = D²q/2. Ramsey u depends on t and is iterated to a fixed point.
fn solve_tphi(table: &FilterCoefficients, seq: SequenceType, d: f64, p: f64, q: f64) -> Result<f64> {
    let gamma = 0.5 * d * d * q;
    let alpha_of = |u: f64| gauss_coeff(d, u).powi(2) * p;
    match seq {
        SequenceType::Cpmg { .. } => Ok(quadratic_root(alpha_of(table.u(seq, 1.0)?), gamma)),
        SequenceType::Ramsey { .. } => {
            if p <= 0.0 {
                return Ok(quadratic_root(0.0, gamma));
            }
            // start from the time set by u evaluated at 1 μs
            let mut t = quadratic_root(alpha_of(table.u(seq, 1.0)?), gamma);
            for _ in 0..FIXED_POINT_ITERS {
                let next = quadratic_root(alpha_of(table.u(seq, t)?), gamma);
                if (next - t).abs() <= FIXED_POINT_TOL * t {
                    return Ok(next);
                }
                t = next;
            }
            Err(Error::NonConvergence("Ramsey 1/e time did not settle".into()))
        }
    }
}

/// Pure-dephasing 1/e time (μs) under 1/f amplitude `a_phi` and white
/// amplitude `a_white`, both μΦ0/√Hz, at dispersion `d` rad·GHz/Φ0.
pub fn dephasing_time(seq: SequenceType, d: f64, a_phi: f64, a_white: f64) -> Result<f64> {
    let table = FilterCoefficients::new(&[seq])?;
    solve_tphi(&table, seq, d, a_phi * a_phi, a_white * a_white)
}

fn check_sequences(seqs: impl Iterator<Item = SequenceType>) -> Result<()> {
    let distinct: BTreeSet<String> = seqs.map(|s| s.to_string()).collect();
    if distinct.len() < 2 {
        return Err(Error::Unidentifiable(format!(
            "A_Φ unidentifiable: need at least two distinct sequences, got {}",
            distinct.len()
        )));
    }
    Ok(())
}

fn check_informative(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::Unidentifiable(format!(
            "A_Φ unidentifiable: {n} dephasing point(s) away from the sweet spot (|D| > {INFORMATIVE_DISPERSION:e}), need at least 2"
        )));
    }
    Ok(())
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    v.retain(|x| x.is_finite() && *x > 0.0);
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    Some(v[v.len() / 2])
}

/// Starting points in (p, q) from per-point single-mechanism estimates.
fn starts(p_hat: f64, q_hat: f64, fit_white: bool) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for scale in [1.0, 0.3, 3.0] {
        if fit_white {
            for (fp, fq) in [(1.0, 0.0), (0.0, 1.0), (0.5, 0.5), (0.9, 0.1), (0.1, 0.9)] {
                out.push(vec![fp * p_hat * scale, fq * q_hat * scale]);
            }
        } else {
            out.push(vec![p_hat * scale]);
        }
    }
    out
}

/// Turns fitted (p, q) and their standard errors into amplitudes. The
/// amplitude error is √(p + σ_p) − √p, which reduces to σ_p / 2√p away from
/// zero and stays finite at the bound.
fn amplitude(p: f64, se: f64) -> (f64, f64) {
    let a = p.max(0.0).sqrt();
    (a, (p.max(0.0) + se).sqrt() - a)
}

fn finish(report: &mut ExtractionReport, x: &[f64], errors: &[f64], fit_white: bool) -> Result<()> {
    if errors.iter().any(|e| !e.is_finite()) {
        return Err(Error::Unidentifiable(
            "A_Φ unidentifiable: singular curvature in the joint fit".into(),
        ));
    }
    let (a, ae) = amplitude(x[0], errors[0]);
    report.a_phi = Some(a);
    report.a_phi_err = Some(ae);
    if fit_white {
        let (w, we) = amplitude(x[1], errors[1]);
        report.a_white = Some(w);
        report.a_white_err = Some(we);
    } else {
        report.a_white = Some(0.0);
        report.flags.push("white amplitude held at zero".into());
    }
    Ok(())
}

/// Joint fit of pure-dephasing 1/e times across flux and sequences.
///
/// Each dephasing row is modeled as the time at which
/// exp(−Γ_w t − (t·D·A_Φ·u)²) reaches 1/e, with D from the spectrum at that
/// flux and u from the sequence. Residuals are logarithmic, weighted by the
/// relative error when one is given. T1 rows are ignored.
pub fn extract_flux_noise(scan: &FluxScanDataset, opts: &FluxNoiseOptions) -> Result<ExtractionReport> {
    let rows: Vec<_> = scan.dephasing_records().collect();
    check_sequences(rows.iter().map(|(_, s)| *s))?;
    let phis: Vec<f64> = rows.iter().map(|(r, _)| r.phi_ext).collect();
    let models = point_models(&scan.qubit, &phis)?;
    let mut report = ExtractionReport {
        qubit: scan.qubit.label.clone(),
        ..Default::default()
    };
    let mut used = Vec::new();
    for (i, m) in models.iter().enumerate() {
        if m.dispersion.abs() > INFORMATIVE_DISPERSION {
            used.push(i);
        } else {
            report.flags.push(format!(
                "phi_ext = {}: |D| below {INFORMATIVE_DISPERSION:e}, row ignored",
                phis[i]
            ));
        }
    }
    check_informative(used.len())?;
    check_sequences(used.iter().map(|&i| rows[i].1))?;

    let seqs: Vec<SequenceType> = used.iter().map(|&i| rows[i].1).collect();
    let table = FilterCoefficients::new(&seqs)?;
    let d: Vec<f64> = used.iter().map(|&i| models[i].dispersion).collect();
    let tm: Vec<f64> = used.iter().map(|&i| rows[i].0.time_constant_us).collect();
    let w: Vec<f64> = used
        .iter()
        .map(|&i| rows[i].0.err_us.map_or(1.0, |e| rows[i].0.time_constant_us / e))
        .collect();

    let mut p_est = Vec::new();
    let mut q_est = Vec::new();
    for k in 0..used.len() {
        let u = table.u(seqs[k], tm[k])?;
        p_est.push((1.0 / (gauss_coeff(d[k], u) * tm[k])).powi(2));
        q_est.push(2.0 / (d[k] * d[k] * tm[k]));
    }
    let p_hat = median(p_est).unwrap_or(1.0);
    let q_hat = median(q_est).unwrap_or(1.0);

    let fit_white = opts.fit_white;
    let model_times = |x: &[f64]| -> Result<Vec<f64>> {
        let q = if fit_white { x[1] } else { 0.0 };
        (0..d.len())
            .map(|k| solve_tphi(&table, seqs[k], d[k], x[0], q))
            .collect()
    };
    let residuals = |x: &[f64], out: &mut [f64]| -> bool {
        let Ok(t) = model_times(x) else { return false };
        for k in 0..t.len() {
            out[k] = (t[k].ln() - tm[k].ln()) * w[k];
        }
        out.iter().all(|r| r.is_finite())
    };
    let n_par = if fit_white { 2 } else { 1 };
    let model = Model {
        lower: vec![0.0; n_par],
        scale: [p_hat, q_hat][..n_par].to_vec(),
        m: d.len(),
        residuals: &residuals,
    };
    let best = multistart(&model, &starts(p_hat, q_hat, fit_white))?;
    finish(&mut report, &best.x, &best.errors, fit_white)?;

    let t = model_times(&best.x)?;
    for (k, &i) in used.iter().enumerate() {
        report.residuals.push(PointResidual {
            phi_ext: phis[i],
            kind: RecordKind::Dephasing(seqs[k]),
            measured_us: tm[k],
            model_us: t[k],
            log_residual: (tm[k] / t[k]).ln(),
        });
    }
    Ok(report)
}

/// One dephasing envelope measured at one flux bias.
#[derive(Debug, Clone, PartialEq)]
pub struct DephasingCurve {
    pub phi_ext: f64,
    pub sequence: SequenceType,
    pub envelope: DecayTrace,
    /// Relaxation time at this flux, μs.
    pub t1_us: f64,
}

/// 1/e crossing of y/y₀ after dividing out the T1 factor, by log-linear
/// interpolation; `None` when the curve never falls that far.
fn crossing_time(c: &DephasingCurve) -> Option<f64> {
    let t = &c.envelope.delays;
    let y: Vec<f64> = c
        .envelope
        .p1
        .iter()
        .zip(t)
        .map(|(v, t)| v * (0.5 * t / c.t1_us).exp())
        .collect();
    let y0 = y.first().copied().filter(|v| *v > 0.0)?;
    let target = (-1.0f64).exp();
    for k in 1..y.len() {
        let (a, b) = (y[k - 1] / y0, y[k] / y0);
        if b <= target && a > target {
            if b <= 0.0 {
                return Some(t[k]);
            }
            let f = (a.ln() - target.ln()) / (a.ln() - b.ln());
            return Some(t[k - 1] + f * (t[k] - t[k - 1]));
        }
    }
    None
}

/// Joint fit of raw dephasing envelopes with two noise parameters.
///
/// Each curve is a_k·exp(−t/2T1)·exp(−Γ_w t)·exp(−(t·D·A_Φ·u)²) with its own
/// amplitude a_k. The amplitudes enter linearly and are eliminated at every
/// step, so the nonlinear search runs over A_Φ² and a_white² only.
pub fn extract_flux_noise_curves(
    qubit: &FluxoniumParams,
    curves: &[DephasingCurve],
    opts: &FluxNoiseOptions,
) -> Result<ExtractionReport> {
    check_sequences(curves.iter().map(|c| c.sequence))?;
    for c in curves {
        if !(c.t1_us > 0.0) {
            return Err(Error::invalid("t1_us", "must be positive"));
        }
    }
    let phis: Vec<f64> = curves.iter().map(|c| c.phi_ext).collect();
    let models = point_models(qubit, &phis)?;
    let mut report = ExtractionReport {
        qubit: qubit.label.clone(),
        ..Default::default()
    };
    let used: Vec<usize> = (0..curves.len())
        .filter(|&i| models[i].dispersion.abs() > INFORMATIVE_DISPERSION)
        .collect();
    for i in (0..curves.len()).filter(|i| !used.contains(i)) {
        report.flags.push(format!(
            "phi_ext = {}: |D| below {INFORMATIVE_DISPERSION:e}, curve ignored",
            phis[i]
        ));
    }
    check_informative(used.len())?;
    check_sequences(used.iter().map(|&i| curves[i].sequence))?;

    let seqs: Vec<SequenceType> = used.iter().map(|&i| curves[i].sequence).collect();
    let table = FilterCoefficients::new(&seqs)?;
    struct Prepared<'a> {
        t: &'a [f64],
        y: &'a [f64],
        w: Vec<f64>,
        relax: Vec<f64>,
        k_gauss: Vec<f64>,
        half_d2: f64,
    }
    let prepared: Vec<Prepared> = used
        .iter()
        .map(|&i| {
            let c = &curves[i];
            let d = models[i].dispersion;
            let t = &c.envelope.delays;
            let k_gauss = t
                .iter()
                .map(|&tt| {
                    let u = if tt > 0.0 { table.u(c.sequence, tt)? } else { 0.0 };
                    Ok((gauss_coeff(d, u) * tt).powi(2))
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(Prepared {
                t,
                y: &c.envelope.p1,
                w: c.envelope
                    .sigmas()
                    .map_or(vec![1.0; t.len()], |s| s.iter().map(|s| 1.0 / s).collect()),
                relax: t.iter().map(|tt| 0.5 * tt / c.t1_us).collect(),
                k_gauss,
                half_d2: 0.5 * d * d,
            })
        })
        .collect::<Result<_>>()?;
    let m: usize = prepared.iter().map(|p| p.t.len()).sum();

    let mut p_est = Vec::new();
    let mut q_est = Vec::new();
    for (k, &i) in used.iter().enumerate() {
        let tc = crossing_time(&curves[i]).unwrap_or(*curves[i].envelope.delays.last().unwrap_or(&1.0));
        if tc > 0.0 {
            let d = models[i].dispersion;
            p_est.push((1.0 / (gauss_coeff(d, table.u(seqs[k], tc)?) * tc)).powi(2));
            q_est.push(2.0 / (d * d * tc));
        }
    }
    let p_hat = median(p_est).unwrap_or(1.0);
    let q_hat = median(q_est).unwrap_or(1.0);

    let fit_white = opts.fit_white;
    let y_all: Vec<f64> = prepared.iter().flat_map(|c| c.y.iter().copied()).collect();
    let w_all: Vec<f64> = prepared.iter().flat_map(|c| c.w.iter().copied()).collect();
    // model values for (p, q) with each curve's amplitude profiled out
    let project = |x: &[f64]| -> (Vec<f64>, Vec<f64>) {
        let q = if fit_white { x[1] } else { 0.0 };
        let mut amps = Vec::with_capacity(prepared.len());
        let mut values = Vec::with_capacity(m);
        for c in &prepared {
            let chi: Vec<f64> = (0..c.t.len())
                .map(|j| (-c.relax[j] - c.half_d2 * q * c.t[j] - c.k_gauss[j] * x[0]).exp())
                .collect();
            let (mut num, mut den) = (0.0, 0.0);
            for j in 0..chi.len() {
                let w2 = c.w[j] * c.w[j];
                num += w2 * c.y[j] * chi[j];
                den += w2 * chi[j] * chi[j];
            }
            let a = if den > 0.0 { num / den } else { 0.0 };
            values.extend(chi.iter().map(|v| a * v));
            amps.push(a);
        }
        (amps, values)
    };
    let residuals = |x: &[f64], out: &mut [f64]| -> bool {
        let (_, values) = project(x);
        for i in 0..m {
            out[i] = (values[i] - y_all[i]) * w_all[i];
        }
        out.iter().all(|r| r.is_finite())
    };
    let n_par = if fit_white { 2 } else { 1 };
    let model = Model {
        lower: vec![0.0; n_par],
        scale: [p_hat, q_hat][..n_par].to_vec(),
        m,
        residuals: &residuals,
    };
    let best = multistart(&model, &starts(p_hat, q_hat, fit_white))?;
    finish(&mut report, &best.x, &best.errors, fit_white)?;
    let (amps, _) = project(&best.x);
    for (k, a) in amps.iter().enumerate() {
        report.flags.push(format!(
            "curve {} ({} at phi_ext = {}): amplitude {a:.6}",
            k, seqs[k], phis[used[k]]
        ));
    }
    Ok(report)
}
