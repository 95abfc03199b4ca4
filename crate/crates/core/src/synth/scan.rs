use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extract::{point_models, FluxScanDataset, RecordKind, ScanRecord, INFORMATIVE_DISPERSION};
use crate::noise::{
    dielectric_rate, filter_u_coefficient, gaussian_exponent, quasiparticle_rate, white_rate, NoiseEnvironment,
    QpChannel, SequenceType,
};
use crate::qubit::FluxoniumParams;

/// Multiplicative T1 suppression at the grid point nearest `phi_ext`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TlsDip {
    pub phi_ext: f64,
    pub suppression: f64,
}

const ROOT_TOL: f64 = 1e-13;
const ROOT_ITERS: usize = 200;

/// Pure-dephasing 1/e time, solving Γ_w t + (t·D·A_Φ·u(t))² = 1 by a
/// bracketed Illinois iteration. CPMG u comes from `cpmg_u`; Ramsey u is
/// integrated directly at every trial time.
fn tphi_by_root(seq: SequenceType, d: f64, env: &NoiseEnvironment, cpmg_u: &BTreeMap<u32, f64>) -> Result<Option<f64>> {
    if env.a_phi == 0.0 && env.a_white == 0.0 {
        return Ok(None);
    }
    let h = |t: f64| -> Result<f64> {
        let u = match seq {
            SequenceType::Cpmg { pulses } => cpmg_u[&pulses],
            SequenceType::Ramsey { .. } if env.a_phi > 0.0 => filter_u_coefficient(seq, Some(t))?,
            SequenceType::Ramsey { .. } => 0.0,
        };
        Ok(white_rate(d, env.a_white) * t + gaussian_exponent(t, d, env.a_phi, u) - 1.0)
    };
    let (mut a, mut b) = (0.0, 1.0);
    let (mut fa, mut fb) = (-1.0, h(b)?);
    while fb < 0.0 {
        a = b;
        fa = fb;
        b *= 2.0;
        if b > 1e12 {
            return Ok(None);
        }
        fb = h(b)?;
    }
    let mut side = 0;
    for _ in 0..ROOT_ITERS {
        let c = (a * fb - b * fa) / (fb - fa);
        if (b - a).abs() <= ROOT_TOL * b.abs() {
            return Ok(Some(c));
        }
        let fc = h(c)?;
        if fc == 0.0 {
            return Ok(Some(c));
        }
        if fc < 0.0 {
            a = c;
            fa = fc;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        } else {
            b = c;
            fb = fc;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
    }
    Err(Error::NonConvergence("dephasing time root did not converge".into()))
}

/// Synthetic T1 and Tφ flux scan.
///
/// T1 combines dielectric loss and, when `x_qp > 0`, quasiparticle tunneling
/// through the small junction. Dips divide T1 at their nearest grid point.
/// Tφ is the pure-dephasing 1/e time for each sequence; rows where the
/// dispersion vanishes are omitted. Every emitted value is multiplied by
/// exp(σz) with z standard normal and carries an error of σ times its value.
pub fn synth_flux_scan(
    qubit: &FluxoniumParams,
    env: &NoiseEnvironment,
    flux_grid: &[f64],
    sequences: &[SequenceType],
    dips: &[TlsDip],
    scatter: f64,
    seed: u64,
) -> Result<FluxScanDataset> {
    env.validate()?;
    if flux_grid.is_empty() {
        return Err(Error::invalid("flux_grid", "must not be empty"));
    }
    if flux_grid.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::invalid("flux_grid", "must lie within one period [0, 1]"));
    }
    if !(scatter.is_finite() && scatter >= 0.0) {
        return Err(Error::invalid("scatter", "must be nonnegative"));
    }
    for dip in dips {
        if !(dip.suppression.is_finite() && dip.suppression >= 1.0) {
            return Err(Error::invalid("suppression", "must be at least 1"));
        }
    }
    let mut cpmg_u = BTreeMap::new();
    for seq in sequences {
        seq.validate()?;
        if let SequenceType::Cpmg { pulses } = *seq {
            cpmg_u.insert(pulses, filter_u_coefficient(*seq, None)?);
        }
    }
    let models = point_models(qubit, flux_grid)?;
    let mut suppression = vec![1.0; flux_grid.len()];
    for dip in dips {
        let nearest = (0..flux_grid.len())
            .min_by(|&a, &b| {
                (flux_grid[a] - dip.phi_ext)
                    .abs()
                    .total_cmp(&(flux_grid[b] - dip.phi_ext).abs())
            })
            .expect("grid is nonempty");
        suppression[nearest] *= dip.suppression;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut emit = |phi_ext: f64, kind: RecordKind, value: f64| -> ScanRecord {
        let z: f64 = StandardNormal.sample(&mut rng);
        let v = value * (scatter * z).exp();
        ScanRecord {
            phi_ext,
            kind,
            time_constant_us: v,
            err_us: (scatter > 0.0).then_some(scatter * v),
        }
    };
    let mut records = Vec::new();
    for (i, m) in models.iter().enumerate() {
        let mut rate = dielectric_rate(m.f01, qubit.e_c, m.phi01_sq, env)?;
        if env.x_qp > 0.0 {
            rate += quasiparticle_rate(QpChannel::Jj, m.f01, qubit, m.sin_half_sq, env)?;
        }
        if rate > 0.0 {
            records.push(emit(flux_grid[i], RecordKind::T1, 1.0 / rate / suppression[i]));
        }
        if m.dispersion.abs() <= INFORMATIVE_DISPERSION {
            continue;
        }
        for &seq in sequences {
            if let Some(t) = tphi_by_root(seq, m.dispersion, env, &cpmg_u)? {
                records.push(emit(flux_grid[i], RecordKind::Dephasing(seq), t));
            }
        }
    }
    FluxScanDataset::new(qubit.clone(), records)
}
