//! Exponential, joint and non-exponential relaxation fits.

use crate::error::{Error, Result};
use crate::noise::effective_temperature;
use crate::numeric::{geomspace, linear_least_squares};
use crate::units::k_to_mk;

use super::engine::{multistart, to_result, FitResult, FittedParam, Model};
use super::DecayTrace;

const TINY_TIME: f64 = 1e-9;

pub(crate) fn weights(trace: &DecayTrace) -> Vec<f64> {
    match trace.sigmas() {
        Some(s) => s.into_iter().map(|s| 1.0 / s).collect(),
        None => vec![1.0; trace.len()],
    }
}

pub(crate) fn span(delays: &[f64]) -> f64 {
    let s = delays[delays.len() - 1] - delays[0];
    if s > 0.0 {
        s
    } else {
        delays[delays.len() - 1].abs().max(1.0)
    }
}

/// Decay-time seed from a log-linear regression of the distance to the
/// curve's extreme (min for decaying traces, max for rising ones).
pub(crate) fn regression_seed(t: &[f64], y: &[f64]) -> Option<f64> {
    let rising = y[y.len() - 1] > y[0];
    let base = if rising {
        y.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    } else {
        y.iter().cloned().fold(f64::INFINITY, f64::min)
    };
    let dist: Vec<f64> = y.iter().map(|v| (v - base).abs()).collect();
    let top = dist.iter().cloned().fold(0.0, f64::max);
    let pts: Vec<(f64, f64)> = t
        .iter()
        .zip(&dist)
        .filter(|(_, d)| **d > 0.05 * top)
        .map(|(t, d)| (*t, d.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let (mt, my) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0 / n, a.1 + p.1 / n));
    let (sxy, sxx) = pts.iter().fold((0.0, 0.0), |a, p| {
        (a.0 + (p.0 - mt) * (p.1 - my), a.1 + (p.0 - mt).powi(2))
    });
    let slope = sxy / sxx;
    (slope < 0.0 && slope.is_finite()).then(|| -1.0 / slope)
}

/// Eight time-constant seeds: the regression seed followed by seven
/// log-spaced values across the delay span.
pub(crate) fn time_seeds(t: &[f64], y: &[f64]) -> Vec<f64> {
    let s = span(t);
    let mut seeds = vec![regression_seed(t, y)
        .map(|v| v.clamp(s / 100.0, 100.0 * s))
        .unwrap_or(s / 3.0)];
    seeds.extend(geomspace(s / 20.0, 5.0 * s, 7));
    seeds
}

fn is_constant(p: &[f64]) -> bool {
    let (lo, hi) = p
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |a, v| (a.0.min(*v), a.1.max(*v)));
    hi - lo <= 1e-12 * hi.abs().max(1.0)
}

/// Weighted linear least squares for amplitudes given fixed basis columns.
fn linear_amplitudes(columns: &[Vec<f64>], y: &[f64], w: &[f64]) -> Option<Vec<f64>> {
    let design: Vec<Vec<f64>> = (0..y.len())
        .map(|i| columns.iter().map(|c| c[i] * w[i]).collect())
        .collect();
    let rhs: Vec<f64> = y.iter().zip(w).map(|(v, w)| v * w).collect();
    linear_least_squares(&design, &rhs)
}

/// a·exp(−t/T1) + b.
pub fn fit_exponential(trace: &DecayTrace) -> Result<FitResult> {
    if trace.len() < 4 {
        return Err(Error::invalid("trace", "exponential fit needs at least 4 points"));
    }
    let t = &trace.delays;
    let y = &trace.p1;
    let w = weights(trace);
    if is_constant(y) {
        return Ok(degenerate(trace, &w));
    }
    let residuals = |p: &[f64], out: &mut [f64]| {
        for i in 0..t.len() {
            out[i] = (p[0] * (-t[i] / p[1]).exp() + p[2] - y[i]) * w[i];
        }
        true
    };
    let names = ["a", "T1", "b"];
    let model = Model {
        lower: vec![f64::NEG_INFINITY, TINY_TIME, f64::NEG_INFINITY],
        scale: vec![1.0, span(t), 1.0],
        m: t.len(),
        residuals: &residuals,
    };
    let starts: Vec<Vec<f64>> = time_seeds(t, y)
        .into_iter()
        .map(|tau| {
            let e: Vec<f64> = t.iter().map(|ti| (-ti / tau).exp()).collect();
            let ab = linear_amplitudes(&[e, vec![1.0; t.len()]], y, &w)
                .unwrap_or(vec![y[0] - y[y.len() - 1], y[y.len() - 1]]);
            vec![ab[0], tau, ab[1]]
        })
        .collect();
    let best = multistart(&model, &starts)?;
    Ok(to_result("exponential", &names, &best, t.len()))
}

fn degenerate(trace: &DecayTrace, w: &[f64]) -> FitResult {
    let n = trace.len();
    let wsum: f64 = w.iter().map(|w| w * w).sum();
    let b: f64 = trace.p1.iter().zip(w).map(|(p, w)| p * w * w).sum::<f64>() / wsum;
    let rss: f64 = trace.p1.iter().zip(w).map(|(p, w)| ((p - b) * w).powi(2)).sum();
    FitResult {
        model_id: "exponential".into(),
        parameters: vec![
            FittedParam {
                name: "a".into(),
                value: 0.0,
                error: f64::INFINITY,
            },
            FittedParam {
                name: "T1".into(),
                value: f64::NAN,
                error: f64::INFINITY,
            },
            FittedParam {
                name: "b".into(),
                value: b,
                error: 0.0,
            },
        ],
        residual_norm: rss.sqrt(),
        converged: true,
        n_points: n,
        flags: vec!["degenerate: constant trace, only b fitted".into()],
        derived: Default::default(),
    }
}

/// Options for [`fit_joint_t1`].
#[derive(Debug, Clone, Default)]
pub struct JointOptions {
    /// Holds the common offset at this value instead of fitting it.
    pub fixed_b: Option<f64>,
    /// Qubit frequency in GHz; enables the effective-temperature report.
    pub f01_ghz: Option<f64>,
}

/// Simultaneous fit of a1·exp(−t/T1) + b and a2·exp(−t/T1) + b.
///
/// `a1` belongs to the first trace and `a2` to the second.
pub fn fit_joint_t1(first: &DecayTrace, second: &DecayTrace, opts: &JointOptions) -> Result<FitResult> {
    if first.init == second.init {
        return Err(Error::invalid("init", "the two traces must carry distinct init labels"));
    }
    for tr in [first, second] {
        if tr.len() < 3 {
            return Err(Error::invalid("trace", "joint fit needs at least 3 points per trace"));
        }
    }
    let n1 = first.len();
    let t: Vec<f64> = first.delays.iter().chain(&second.delays).copied().collect();
    let y: Vec<f64> = first.p1.iter().chain(&second.p1).copied().collect();
    let w: Vec<f64> = weights(first).into_iter().chain(weights(second)).collect();
    let fixed_b = opts.fixed_b;
    let residuals = |p: &[f64], out: &mut [f64]| {
        let b = fixed_b.unwrap_or_else(|| p[3]);
        for i in 0..t.len() {
            let a = if i < n1 { p[0] } else { p[1] };
            out[i] = (a * (-t[i] / p[2]).exp() + b - y[i]) * w[i];
        }
        true
    };
    let names_full = ["a1", "a2", "T1", "b"];
    let names: &[&str] = if fixed_b.is_some() {
        &names_full[..3]
    } else {
        &names_full
    };
    let mut lower = vec![f64::NEG_INFINITY, f64::NEG_INFINITY, TINY_TIME];
    let mut scale = vec![1.0, 1.0, span(&t)];
    if fixed_b.is_none() {
        lower.push(f64::NEG_INFINITY);
        scale.push(1.0);
    }
    let model = Model {
        lower,
        scale,
        m: t.len(),
        residuals: &residuals,
    };
    // seed from whichever trace has the larger swing
    let swing = |tr: &DecayTrace| (tr.p1[0] - tr.p1[tr.len() - 1]).abs();
    let lead = if swing(first) >= swing(second) { first } else { second };
    let starts: Vec<Vec<f64>> = time_seeds(&lead.delays, &lead.p1)
        .into_iter()
        .map(|tau| {
            let e: Vec<f64> = t.iter().map(|ti| (-ti / tau).exp()).collect();
            let c1: Vec<f64> = (0..t.len()).map(|i| if i < n1 { e[i] } else { 0.0 }).collect();
            let c2: Vec<f64> = (0..t.len()).map(|i| if i < n1 { 0.0 } else { e[i] }).collect();
            match fixed_b {
                Some(b) => {
                    let shifted: Vec<f64> = y.iter().map(|v| v - b).collect();
                    let a = linear_amplitudes(&[c1, c2], &shifted, &w).unwrap_or(vec![0.5, -0.5]);
                    vec![a[0], a[1], tau]
                }
                None => {
                    let a = linear_amplitudes(&[c1, c2, vec![1.0; t.len()]], &y, &w).unwrap_or(vec![0.5, -0.5, 0.1]);
                    vec![a[0], a[1], tau, a[2]]
                }
            }
        })
        .collect();
    let best = multistart(&model, &starts)?;
    let mut result = to_result("joint_t1", names, &best, t.len());
    if first.delays == second.delays && first.p1 == second.p1 {
        result
            .flags
            .push("warning: identical traces, a1 and a2 are ill-conditioned".into());
    }
    if let Some(b) = fixed_b {
        result.parameters.push(FittedParam {
            name: "b".into(),
            value: b,
            error: 0.0,
        });
        result.flags.push("b held fixed".into());
    }
    if let Some(f01) = opts.f01_ghz {
        let b = result.value("b");
        match effective_temperature(b, f01) {
            Ok(temp) => {
                result.derived.insert("T_eff_mK".into(), k_to_mk(temp));
            }
            Err(e) => result.flags.push(format!("effective temperature unavailable: {e}")),
        }
    }
    Ok(result)
}

/// a·exp[n(exp(−t/T̃1) − 1)]·exp(−t/T1) + b.
pub fn nonexponential_model(p: &[f64], t: f64) -> f64 {
    p[0] * (p[1] * ((-t / p[2]).exp() - 1.0)).exp() * (-t / p[3]).exp() + p[4]
}

/// Non-exponential relaxation fit. The single-exponential optimum is always
/// one of the starts (with n = 0), so the residual never exceeds it.
pub fn fit_nonexponential(trace: &DecayTrace) -> Result<FitResult> {
    if trace.len() < 6 {
        return Err(Error::invalid("trace", "non-exponential fit needs at least 6 points"));
    }
    let exp_fit = fit_exponential(trace)?;
    let t = &trace.delays;
    let y = &trace.p1;
    let w = weights(trace);
    let names = ["a", "n", "T1_tilde", "T1", "b"];
    if exp_fit.flags.iter().any(|f| f.starts_with("degenerate")) {
        let mut r = pinned(&exp_fit, &names);
        r.flags.extend(exp_fit.flags.iter().cloned());
        return Ok(r);
    }
    let residuals = |p: &[f64], out: &mut [f64]| {
        for i in 0..t.len() {
            out[i] = (nonexponential_model(p, t[i]) - y[i]) * w[i];
        }
        true
    };
    let s = span(t);
    let model = Model {
        lower: vec![f64::NEG_INFINITY, 0.0, TINY_TIME, TINY_TIME, f64::NEG_INFINITY],
        scale: vec![1.0, 1.0, s, s, 1.0],
        m: t.len(),
        residuals: &residuals,
    };
    let (a_e, t1_e, b_e) = (exp_fit.value("a"), exp_fit.value("T1"), exp_fit.value("b"));
    let mut starts = vec![vec![a_e, 0.0, t1_e / 4.0, t1_e, b_e]];
    for tt in geomspace(s / 50.0, s / 2.0, 7) {
        let (n, t1) = (1.0, 1.5 * t1_e);
        let col: Vec<f64> = t
            .iter()
            .map(|ti| nonexponential_model(&[1.0, n, tt, t1, 0.0], *ti))
            .collect();
        let ab = linear_amplitudes(&[col, vec![1.0; t.len()]], y, &w).unwrap_or(vec![a_e, b_e]);
        starts.push(vec![ab[0], n, tt, t1, ab[1]]);
    }
    let best = multistart(&model, &starts)?;
    let mut result = to_result("nonexponential", &names, &best, t.len());
    result.derived.insert("exp_residual_norm".into(), exp_fit.residual_norm);
    // n → 0 leaves T̃1 unidentifiable
    if best.x[1] < 1e-6 || !(best.errors[1].is_finite()) && best.x[1] < 1e-3 {
        let mut r = pinned(&exp_fit, &names);
        r.derived.insert("exp_residual_norm".into(), exp_fit.residual_norm);
        return Ok(r);
    }
    Ok(result)
}

fn pinned(exp_fit: &FitResult, names: &[&str]) -> FitResult {
    let pick = |n: &str| exp_fit.get(n).cloned().unwrap();
    let mut params = Vec::new();
    for &name in names {
        params.push(match name {
            "n" => FittedParam {
                name: "n".into(),
                value: 0.0,
                error: 0.0,
            },
            "T1_tilde" => FittedParam {
                name: "T1_tilde".into(),
                value: f64::NAN,
                error: f64::INFINITY,
            },
            other => pick(other),
        });
    }
    FitResult {
        model_id: "nonexponential".into(),
        parameters: params,
        residual_norm: exp_fit.residual_norm,
        converged: true,
        n_points: exp_fit.n_points,
        flags: vec!["n pinned to 0: T1_tilde unidentifiable".into()],
        derived: Default::default(),
    }
}
