//! Physical constants and unit bridges.
//!
//! Internally energies and frequencies are in GHz (E/h), times in μs, flux in
//! units of Φ0 and temperatures in kelvin.

/// k_B/h in GHz per kelvin.
pub const KB_OVER_H_GHZ_PER_K: f64 = 20.836_619;

/// Resistance quantum h/e² in ohms.
pub const RESISTANCE_QUANTUM_OHM: f64 = 25_812.807;

/// Default aluminum gap Δ/h in GHz.
pub const ALUMINUM_GAP_GHZ: f64 = 44.0;

pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// h·f / (k_B·T) for a frequency in GHz and temperature in K.
#[inline]
pub fn reduced_energy(freq_ghz: f64, temp_k: f64) -> f64 {
    freq_ghz / (KB_OVER_H_GHZ_PER_K * temp_k)
}

#[inline]
pub fn mk_to_k(mk: f64) -> f64 {
    mk * 1e-3
}

#[inline]
pub fn k_to_mk(k: f64) -> f64 {
    k * 1e3
}
