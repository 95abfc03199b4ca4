use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qubit::{EigenSolution, FluxoniumParams, MatrixElements};
use crate::units::{reduced_energy, KB_OVER_H_GHZ_PER_K, TWO_PI};

use super::{CavityParams, NoiseEnvironment};

fn positive_frequency(f01: f64) -> Result<()> {
    if !(f01.is_finite() && f01 > 0.0) {
        return Err(Error::Domain(format!("f01 must be positive, got {f01} GHz")));
    }
    Ok(())
}

/// coth(h f / 2 k_B T), exactly 1 at T = 0.
pub fn coth_factor(f01: f64, temp_k: f64) -> f64 {
    if temp_k <= 0.0 {
        return 1.0;
    }
    1.0 / (0.5 * reduced_energy(f01, temp_k)).tanh()
}

/// Dielectric relaxation rate in 1/μs:
/// Γ = (π f01² / 2E_C) · tanδ(f01) · |⟨0|φ|1⟩|² · coth(h f01 / 2k_B T).
pub fn dielectric_rate(f01: f64, e_c: f64, phi01_sq: f64, env: &NoiseEnvironment) -> Result<f64> {
    positive_frequency(f01)?;
    let tan_delta = env.tan_delta_c * f01.powf(env.loss_exponent);
    Ok(PI * f01 * f01 / (2.0 * e_c) * 1e3 * tan_delta * phi01_sq * coth_factor(f01, env.temp))
}

/// Dielectric-limited T1 in μs.
pub fn t1_dielectric(sol: &EigenSolution, elems: &MatrixElements, env: &NoiseEnvironment) -> Result<f64> {
    env.validate()?;
    let rate = dielectric_rate(sol.f01(), sol.params.e_c, elems.phi_abs().powi(2), env)?;
    Ok(1.0 / rate)
}

/// Where the quasiparticle tunnels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QpChannel {
    /// The small phase-slip junction.
    Jj,
    /// The junction array.
    Jja,
}

/// Quasiparticle relaxation rate in 1/μs given the squared matrix element of
/// the channel (|⟨0|sin(φ/2)|1⟩|² or |⟨0|φ/2|1⟩|²).
pub fn quasiparticle_rate(
    channel: QpChannel,
    f01: f64,
    params: &FluxoniumParams,
    element_sq: f64,
    env: &NoiseEnvironment,
) -> Result<f64> {
    positive_frequency(f01)?;
    if env.delta_gap <= f01 {
        return Err(Error::Domain(format!(
            "gap {} GHz must exceed f01 = {f01} GHz",
            env.delta_gap
        )));
    }
    // 8E/(ħπ) with E/h in GHz is 16·E·1e9 per second
    let energy = match channel {
        QpChannel::Jj => params.e_j,
        QpChannel::Jja => params.e_l,
    };
    let occupation = if env.temp > 0.0 {
        1.0 + (-reduced_energy(f01, env.temp)).exp()
    } else {
        1.0
    };
    Ok(16.0 * energy * 1e3 * element_sq * env.x_qp * (2.0 * env.delta_gap / f01).sqrt() * occupation)
}

/// Quasiparticle relaxation rate in 1/μs for the chosen channel.
pub fn t1_quasiparticle(
    sol: &EigenSolution,
    elems: &MatrixElements,
    env: &NoiseEnvironment,
    channel: QpChannel,
) -> Result<f64> {
    env.validate()?;
    let element_sq = match channel {
        QpChannel::Jj => elems.sin_half_phi_abs().powi(2),
        QpChannel::Jja => 0.25 * elems.phi_abs().powi(2),
    };
    quasiparticle_rate(channel, sol.f01(), &sol.params, element_sq, env)
}

/// Excited-state fraction of a thermal two-level system.
pub fn thermal_population(f01: f64, temp_k: f64) -> f64 {
    if temp_k <= 0.0 {
        return 0.0;
    }
    1.0 / (1.0 + reduced_energy(f01, temp_k).exp())
}

/// Inverse of [`thermal_population`], in K.
pub fn effective_temperature(b: f64, f01: f64) -> Result<f64> {
    positive_frequency(f01)?;
    if !(b > 0.0 && b < 0.5) {
        return Err(Error::Domain(format!("thermal population {b} outside (0, 0.5)")));
    }
    Ok(f01 / (KB_OVER_H_GHZ_PER_K * (1.0 / b - 1.0).ln()))
}

/// Photon shot-noise dephasing Γφ = n̄κ / (1 + κ²/χ²) in 1/μs.
pub fn photon_shot_dephasing(cav: &CavityParams) -> Result<f64> {
    cav.validate()?;
    Ok(cav.n_bar * shot_noise_per_photon(cav))
}

fn shot_noise_per_photon(cav: &CavityParams) -> f64 {
    let kappa = TWO_PI * cav.kappa_mhz;
    kappa / (1.0 + (cav.kappa_mhz / cav.chi_mhz).powi(2))
}

/// Mean photon number that produces a given dephasing rate (1/μs).
pub fn n_bar_from_dephasing(gamma_phi: f64, cav: &CavityParams) -> Result<f64> {
    cav.validate()?;
    if !(gamma_phi.is_finite() && gamma_phi >= 0.0) {
        return Err(Error::invalid("gamma_phi", "must be nonnegative"));
    }
    Ok(gamma_phi / shot_noise_per_photon(cav))
}

/// Bose–Einstein temperature (K) of a mode with occupation `n_bar`.
pub fn cavity_temperature(n_bar: f64, f_cavity_ghz: f64) -> Result<f64> {
    if !(n_bar > 0.0 && n_bar.is_finite()) {
        return Err(Error::Domain(format!(
            "cavity temperature undefined for n_bar = {n_bar}"
        )));
    }
    positive_frequency(f_cavity_ghz)?;
    Ok(f_cavity_ghz / (KB_OVER_H_GHZ_PER_K * (1.0 + 1.0 / n_bar).ln()))
}

/// Pure dephasing rate 1/T2 − 1/(2T1) in 1/μs.
pub fn pure_dephasing_rate(t1_us: f64, t2_us: f64) -> Result<f64> {
    if !(t1_us > 0.0 && t2_us > 0.0) {
        return Err(Error::invalid("t1/t2", "must be positive"));
    }
    let rate = 1.0 / t2_us - 0.5 / t1_us;
    if rate < 0.0 {
        return Err(Error::Domain(format!(
            "T2 = {t2_us} μs exceeds 2·T1 = {} μs",
            2.0 * t1_us
        )));
    }
    Ok(rate)
}

/// Relaxation rate (1/μs) from the 1/f flux spectrum sampled at f01:
/// Γ = (2π)² (2π E_L)² |⟨0|φ|1⟩|² S_Φ(f01) with S_Φ two-sided.
pub fn flux_noise_relaxation_rate(f01: f64, e_l: f64, phi01_sq: f64, a_phi: f64) -> Result<f64> {
    positive_frequency(f01)?;
    // E_L and f01 in GHz, a_phi in μΦ0/√Hz: 16π⁴ E_L² |φ01|² A² / f01 × 1e-9 per μs
    Ok(16.0 * PI.powi(4) * e_l * e_l * phi01_sq * a_phi * a_phi / f01 * 1e-9)
}

/// ζ = T1 |⟨0|φ|1⟩|² / E_C in μs/GHz.
pub fn zeta(t1_us: f64, elems: &MatrixElements, params: &FluxoniumParams) -> Result<f64> {
    if !(t1_us > 0.0) {
        return Err(Error::invalid("t1", "must be positive"));
    }
    Ok(t1_us * elems.phi_abs().powi(2) / params.e_c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coth_at_qubit_g() {
        let direct = {
            let x: f64 = 0.197 / (2.0 * 20.836619 * 0.0187);
            x.cosh() / x.sinh()
        };
        assert!((coth_factor(0.197, 0.0187) - direct).abs() < 1e-12);
        assert!((direct - 4.04).abs() < 0.01);
    }

    #[test]
    fn zero_temperature_is_limit() {
        assert_eq!(coth_factor(0.2, 0.0), 1.0);
        assert!((coth_factor(0.2, 1e-6) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn thermal_round_trip() {
        let b = thermal_population(0.197, 0.0187);
        let t = effective_temperature(b, 0.197).unwrap();
        assert!((t - 0.0187).abs() < 1e-15);
        let t = effective_temperature(0.25, 0.197).unwrap();
        assert!((thermal_population(0.197, t) - 0.25).abs() < 1e-15);
        assert!(effective_temperature(0.5, 0.197).is_err());
        assert!(effective_temperature(0.0, 0.197).is_err());
        assert_eq!(thermal_population(0.197, 0.0), 0.0);
    }

    #[test]
    fn photon_numbers() {
        let gamma = pure_dephasing_rate(1070.0, 943.0).unwrap();
        assert!((1.0 / gamma - 1685.9).abs() < 1.0);
        let cav = CavityParams {
            kappa_mhz: 2.19,
            chi_mhz: 0.223,
            f_cavity_ghz: 6.69,
            n_bar: 0.0,
        };
        let n = n_bar_from_dephasing(gamma, &cav).unwrap();
        assert!((n / 4e-3 - 1.0).abs() < 0.1, "{n}");
        assert_eq!(photon_shot_dephasing(&cav).unwrap(), 0.0);
        let back = photon_shot_dephasing(&CavityParams { n_bar: n, ..cav }).unwrap();
        assert!((back - gamma).abs() < 1e-15);
        let t = cavity_temperature(4e-3, 6.69).unwrap();
        assert!((t * 1e3 - 59.0).abs() < 2.0, "{t}");
        assert!(cavity_temperature(0.0, 6.69).is_err());
    }

    #[test]
    fn quasiparticle_gap_check() {
        let p = FluxoniumParams::new("G", 1.212, 5.315, 0.547).unwrap();
        let env = NoiseEnvironment {
            x_qp: 1e-8,
            delta_gap: 0.1,
            ..Default::default()
        };
        assert!(matches!(
            quasiparticle_rate(QpChannel::Jj, 0.2, &p, 0.1, &env),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn quasiparticle_temperature_factor() {
        let p = FluxoniumParams::new("G", 1.212, 5.315, 0.547).unwrap();
        let cold = NoiseEnvironment {
            x_qp: 1e-8,
            ..Default::default()
        };
        let hot = NoiseEnvironment {
            temp: 1e9,
            ..cold.clone()
        };
        let a = quasiparticle_rate(QpChannel::Jja, 0.2, &p, 0.3, &cold).unwrap();
        let b = quasiparticle_rate(QpChannel::Jja, 0.2, &p, 0.3, &hot).unwrap();
        assert!((b / a - 2.0).abs() < 1e-9);
    }

    #[test]
    fn flux_relaxation_scaling() {
        let r1 = flux_noise_relaxation_rate(0.2, 0.5, 4.0, 2.0).unwrap();
        let r2 = flux_noise_relaxation_rate(0.4, 0.5, 4.0, 4.0).unwrap();
        assert!((r2 / r1 - 2.0).abs() < 1e-12);
    }
}
