//! Tri-phase envelope extraction and dephasing fits.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::noise::SequenceType;

use super::engine::{multistart, to_result, FitResult, Model};
use super::relaxation::{span, time_seeds, weights};
use super::{DecayTrace, DephasingTriple};
use crate::numeric::{geomspace, linear_least_squares};

/// Bloch-vector magnitude per delay from the tri-phase readout.
///
/// Solves p_k = c + X cos φ_k + Y sin φ_k exactly for φ_k ∈ {0, π/3, 2π/3}.
pub fn bloch_envelope(triple: &DephasingTriple) -> Result<DecayTrace> {
    let phases = [0.0, PI / 3.0, 2.0 * PI / 3.0];
    let design = Matrix3::from_fn(|k, j| match j {
        0 => 1.0,
        1 => phases[k].cos(),
        _ => phases[k].sin(),
    });
    let inv = design
        .try_inverse()
        .ok_or_else(|| Error::Solver("tri-phase design matrix singular".into()))?;
    let [a, b, c] = triple.traces();
    let values = (0..a.len())
        .map(|i| {
            let sol = inv * Vector3::new(a.p1[i], b.p1[i], c.p1[i]);
            sol[1].hypot(sol[2])
        })
        .collect();
    DecayTrace::envelope(triple.delays().to_vec(), values)
}

/// Functional form used by [`fit_gaussian_dephasing`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DephasingMode {
    /// a·exp(−t/2T1)·exp(−Γ_w t)·exp(−(t/Tφ)²); Γ_w fitted only when
    /// `include_white` is set.
    Gaussian { include_white: bool },
    /// a·exp(−t/T2), the headline T2 convention. Tφ is derived from T1.
    Exponential,
}

fn check_not_rising(env: &DecayTrace) -> Result<()> {
    let n = env.len();
    let third = (n / 3).max(1);
    let head: f64 = env.p1[..third].iter().sum::<f64>() / third as f64;
    let tail: f64 = env.p1[n - third..].iter().sum::<f64>() / third as f64;
    if tail > head * 1.05 {
        return Err(Error::NonConvergence(format!(
            "envelope rises with delay (mean {head:.4} early vs {tail:.4} late)"
        )));
    }
    Ok(())
}

/// Fits a dephasing envelope with the T1 factor held at `t1_ref`.
pub fn fit_gaussian_dephasing(
    envelope: &DecayTrace,
    t1_ref: f64,
    seq: SequenceType,
    mode: DephasingMode,
) -> Result<FitResult> {
    if !(t1_ref > 0.0) {
        return Err(Error::invalid("t1_ref", "must be positive"));
    }
    seq.validate()?;
    let min_points = match mode {
        DephasingMode::Gaussian { include_white: true } => 4,
        _ => 3,
    };
    if envelope.len() < min_points {
        return Err(Error::invalid(
            "envelope",
            format!("needs at least {min_points} points"),
        ));
    }
    check_not_rising(envelope)?;
    let t = &envelope.delays;
    let y = &envelope.p1;
    let w = weights(envelope);
    let relax: Vec<f64> = t
        .iter()
        .map(|ti| {
            if t1_ref.is_infinite() {
                1.0
            } else {
                (-0.5 * ti / t1_ref).exp()
            }
        })
        .collect();
    let s = span(t);
    let amplitude = |shape: &[f64]| -> f64 {
        let design: Vec<Vec<f64>> = shape.iter().zip(&w).map(|(v, w)| vec![v * w]).collect();
        let rhs: Vec<f64> = y.iter().zip(&w).map(|(v, w)| v * w).collect();
        linear_least_squares(&design, &rhs).map(|a| a[0]).unwrap_or(y[0])
    };

    match mode {
        DephasingMode::Exponential => {
            let residuals = |p: &[f64], out: &mut [f64]| {
                for i in 0..t.len() {
                    out[i] = (p[0] * (-t[i] / p[1]).exp() - y[i]) * w[i];
                }
                true
            };
            let names = ["a", "T2"];
            let model = Model {
                lower: vec![0.0, 1e-9],
                scale: vec![1.0, s],
                m: t.len(),
                residuals: &residuals,
            };
            let starts: Vec<Vec<f64>> = time_seeds(t, y)
                .into_iter()
                .map(|tau| {
                    let shape: Vec<f64> = t.iter().map(|ti| (-ti / tau).exp()).collect();
                    vec![amplitude(&shape), tau]
                })
                .collect();
            let best = multistart(&model, &starts)?;
            let mut r = to_result(&format!("exponential_{seq}"), &names, &best, t.len());
            let t2 = r.value("T2");
            let rate = 1.0 / t2 - 0.5 / t1_ref;
            if rate > 0.0 {
                r.derived.insert("T_phi".into(), 1.0 / rate);
            } else {
                r.flags.push("T2 ≥ 2·T1_ref: pure dephasing time undefined".into());
            }
            Ok(r)
        }
        DephasingMode::Gaussian { include_white } => {
            let residuals = |p: &[f64], out: &mut [f64]| {
                let gw = if include_white { p[2] } else { 0.0 };
                for i in 0..t.len() {
                    let x = t[i] / p[1];
                    out[i] = (p[0] * relax[i] * (-gw * t[i] - x * x).exp() - y[i]) * w[i];
                }
                true
            };
            let names_full = ["a", "T_phi", "gamma_white"];
            let names: &[&str] = if include_white { &names_full } else { &names_full[..2] };
            let mut lower = vec![0.0, 1e-9];
            let mut scale = vec![1.0, s];
            if include_white {
                lower.push(0.0);
                scale.push(1.0 / s);
            }
            let model = Model {
                lower,
                scale,
                m: t.len(),
                residuals: &residuals,
            };
            let mut seeds = vec![gaussian_regression_seed(t, y, &relax).unwrap_or(s / 2.0)];
            seeds.extend(geomspace(s / 20.0, 5.0 * s, 7));
            let starts: Vec<Vec<f64>> = seeds
                .into_iter()
                .map(|tp| {
                    let shape: Vec<f64> = t
                        .iter()
                        .zip(&relax)
                        .map(|(ti, r)| r * (-(ti / tp).powi(2)).exp())
                        .collect();
                    let mut x0 = vec![amplitude(&shape), tp];
                    if include_white {
                        x0.push(0.0);
                    }
                    x0
                })
                .collect();
            let best = multistart(&model, &starts)?;
            let id = if include_white { "composite" } else { "gaussian" };
            Ok(to_result(&format!("{id}_{seq}"), names, &best, t.len()))
        }
    }
}

/// Tφ from a linear regression of ln(y/relax) on t².
fn gaussian_regression_seed(t: &[f64], y: &[f64], relax: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = t
        .iter()
        .zip(y.iter().zip(relax))
        .filter(|(_, (v, _))| **v > 0.0)
        .map(|(ti, (v, r))| (ti * ti, (v / r).ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let (mx, my) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0 / n, a.1 + p.1 / n));
    let (sxy, sxx) = pts.iter().fold((0.0, 0.0), |a, p| {
        (a.0 + (p.0 - mx) * (p.1 - my), a.1 + (p.0 - mx).powi(2))
    });
    let slope = sxy / sxx;
    (slope < 0.0 && slope.is_finite()).then(|| (-1.0 / slope).sqrt())
}
