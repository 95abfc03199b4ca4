//! Filter-function coefficients for 1/f flux noise.
//!
//! For a sequence with toggling function s(τ) on the normalized interval
//! [0, 1], the accumulated phase variance under S_Φ(f) = A²(1 Hz/|f|) is
//! (t·D·A·u)² with
//!
//! u² = ∫₀^∞ |Ŷ(x)|² / x dx,  Ŷ(x) = ∫₀¹ s(τ) e^{ixτ} dτ,
//!
//! where x = ωt. Ramsey (s ≡ 1) diverges logarithmically and is cut at
//! x_c = 2π·f_c·t; CPMG sequences converge without a cutoff.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numeric::quad::GaussLegendre;

use super::{NoiseEnvironment, SequenceType};

/// Agreement required between the two quadrature orders.
const QUAD_TOL: f64 = 1e-9;

/// Ramsey cutoffs below this use the series expansion around x_c = 0.
const SERIES_LIMIT: f64 = 0.1;

fn cpmg_edges(pulses: u32) -> Vec<f64> {
    let n = pulses as f64;
    let mut edges = vec![0.0];
    edges.extend((1..=pulses).map(|j| (j as f64 - 0.5) / n));
    edges.push(1.0);
    edges
}

/// |Ŷ(x)|² for a piecewise ±1 toggling function with the given segment edges.
fn response_sq(edges: &[f64], x: f64) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    let mut sign = 1.0;
    for w in edges.windows(2) {
        let (a, len) = (w[0], w[1] - w[0]);
        let y = 0.5 * x * len;
        let sinc = if y.abs() < 1e-8 { 1.0 - y * y / 6.0 } else { y.sin() / y };
        acc += Complex64::from_polar(sign * len * sinc, x * (a + 0.5 * len));
        sign = -sign;
    }
    acc.norm_sqr()
}

/// ∫ f over [lo, hi] split at the given breakpoints.
fn integrate_pieces(gl: &GaussLegendre, pieces: &[f64], f: &dyn Fn(f64) -> f64) -> f64 {
    pieces.windows(2).map(|w| gl.integrate(w[0], w[1], f)).sum()
}

/// u² by direct quadrature from `x_lo` (0 for CPMG) to a cutoff X, plus the
/// mean-square tail ∫_X^∞ (Σ c_k²)/x³ dx where c_k are the jumps of s.
fn u_squared_direct(edges: &[f64], x_lo: f64, order: usize) -> f64 {
    let gl = GaussLegendre::new(order);
    let segments = edges.len() - 1;
    let upper = 2.0 * PI * (1024.0f64).max(64.0 * segments as f64);
    let mut pieces = Vec::new();
    if x_lo > 0.0 && x_lo < PI {
        let mut x = x_lo;
        while x < PI {
            pieces.push(x);
            x *= 2.0;
        }
        pieces.push(PI);
    } else {
        pieces.push(x_lo.max(0.0));
    }
    let mut x = *pieces.last().unwrap();
    while x < upper {
        x = (x + PI).min(upper);
        pieces.push(x);
    }
    let f = |x: f64| response_sq(edges, x) / x;
    let body = integrate_pieces(&gl, &pieces, &f);
    // jumps: -1 at τ=0, ±2 at each pulse, ±1 at τ=1
    let jump_sq = 2.0 + 4.0 * (segments as f64 - 1.0);
    body + 0.5 * jump_sq / (upper * upper)
}

fn checked(a: f64, b: f64, what: &str) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) || (a - b).abs() > QUAD_TOL * a.abs().max(1.0) {
        return Err(Error::NonConvergence(format!(
            "filter quadrature for {what} unstable ({a} vs {b})"
        )));
    }
    Ok(b)
}

fn ramsey_x_cut(cutoff_hz: f64, t_us: f64) -> f64 {
    2.0 * PI * cutoff_hz * t_us * 1e-6
}

fn require_time(t_us: Option<f64>) -> Result<f64> {
    match t_us {
        Some(t) if t.is_finite() && t > 0.0 => Ok(t),
        _ => Err(Error::invalid("t", "Ramsey u requires a positive evolution time")),
    }
}

/// u for one sequence by direct quadrature. `t_us` is required for Ramsey
/// and ignored for CPMG.
pub fn filter_u_coefficient(seq: SequenceType, t_us: Option<f64>) -> Result<f64> {
    seq.validate()?;
    let (edges, x_lo) = match seq {
        SequenceType::Ramsey { cutoff_hz } => (vec![0.0, 1.0], ramsey_x_cut(cutoff_hz, require_time(t_us)?)),
        SequenceType::Cpmg { pulses } => (cpmg_edges(pulses), 0.0),
    };
    let a = u_squared_direct(&edges, x_lo, 16);
    let b = u_squared_direct(&edges, x_lo, 24);
    Ok(checked(a, b, &seq.to_string())?.sqrt())
}

/// ∫₀^x (1 − sinc²(s/2))/s ds for small x.
fn ramsey_series(x: f64) -> f64 {
    let x2 = x * x;
    x2 / 24.0 - x2 * x2 / 1440.0 + x2 * x2 * x2 / 120_960.0
}

/// u values precomputed for repeated evaluation inside fits.
///
/// CPMG coefficients are constants. For Ramsey,
/// u²(x_c) = K − ln x_c + ∫₀^{x_c} (1 − sinc²(s/2))/s ds with the constant K
/// computed once by quadrature, so the t dependence is exact at every t.
#[derive(Debug, Clone, Default)]
pub struct FilterCoefficients {
    cpmg: BTreeMap<u32, f64>,
    ramsey_constant: Option<f64>,
}

impl FilterCoefficients {
    pub fn new(sequences: &[SequenceType]) -> Result<Self> {
        let mut out = Self::default();
        for seq in sequences {
            seq.validate()?;
            match *seq {
                SequenceType::Cpmg { pulses } => {
                    if let Entry::Vacant(slot) = out.cpmg.entry(pulses) {
                        slot.insert(filter_u_coefficient(*seq, None)?);
                    }
                }
                SequenceType::Ramsey { .. } => {
                    if out.ramsey_constant.is_none() {
                        out.ramsey_constant = Some(ramsey_constant()?);
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn u(&self, seq: SequenceType, t_us: f64) -> Result<f64> {
        match seq {
            SequenceType::Cpmg { pulses } => self
                .cpmg
                .get(&pulses)
                .copied()
                .ok_or_else(|| Error::invalid("sequence", format!("{seq} was not precomputed"))),
            SequenceType::Ramsey { cutoff_hz } => {
                let k = self
                    .ramsey_constant
                    .ok_or_else(|| Error::invalid("sequence", "ramsey was not precomputed"))?;
                let t = require_time(Some(t_us))?;
                let xc = ramsey_x_cut(cutoff_hz, t);
                if xc <= SERIES_LIMIT {
                    Ok((k - xc.ln() + ramsey_series(xc)).sqrt())
                } else {
                    filter_u_coefficient(seq, Some(t))
                }
            }
        }
    }
}

/// K = ∫₁^∞ 4sin²(x/2)/x³ dx − ∫₀¹ (1 − sinc²(x/2))/x dx.
fn ramsey_constant() -> Result<f64> {
    let edges = [0.0, 1.0];
    let compute = |order: usize| {
        let gl = GaussLegendre::new(order);
        let upper = u_squared_direct(&edges, 1.0, order);
        let lower = gl.integrate(0.0, 1.0, |x| {
            let y = 0.5 * x;
            let s = y.sin() / y;
            (1.0 - s * s) / x
        });
        upper - lower
    };
    checked(compute(16), compute(24), "ramsey")
}

/// Exponent of the 1/f Gaussian factor, (t·D·A_Φ·u)², with t in μs, D in
/// rad·GHz/Φ0 and A_Φ in μΦ0/√Hz.
pub fn gaussian_exponent(t_us: f64, d: f64, a_phi: f64, u: f64) -> f64 {
    let arg = 1e-3 * t_us * d * a_phi * u;
    arg * arg
}

/// White flux-noise dephasing rate Γ_w = D² S_white / 2 in 1/μs, with
/// S_white = a_white² (μΦ0)²/Hz.
pub fn white_rate(d: f64, a_white: f64) -> f64 {
    0.5 * d * d * a_white * a_white
}

/// χ(t) = exp(−t/2T1) · exp(−Γ_w t) · exp(−(t D A_Φ u)²) for a known u.
pub fn envelope_from_u(u: f64, d: f64, a_phi: f64, a_white: f64, t_us: f64, t1_us: f64) -> f64 {
    let relax = if t1_us.is_infinite() { 0.0 } else { 0.5 * t_us / t1_us };
    (-relax - white_rate(d, a_white) * t_us - gaussian_exponent(t_us, d, a_phi, u)).exp()
}

/// Dephasing envelope without the overall amplitude.
pub fn dephasing_envelope(seq: SequenceType, d: f64, env: &NoiseEnvironment, t_us: f64, t1_us: f64) -> Result<f64> {
    if !(t_us >= 0.0 && t_us.is_finite()) {
        return Err(Error::invalid("t", format!("must be nonnegative, got {t_us}")));
    }
    if !(t1_us > 0.0) {
        return Err(Error::invalid("t1", "must be positive"));
    }
    env.validate()?;
    if t_us == 0.0 {
        return Ok(1.0);
    }
    let u = if env.a_phi == 0.0 || d == 0.0 {
        0.0
    } else {
        filter_u_coefficient(seq, Some(t_us))?
    };
    Ok(envelope_from_u(u, d, env.a_phi, env.a_white, t_us, t1_us))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn echo_is_sqrt_ln2() {
        let u = filter_u_coefficient(SequenceType::echo(), None).unwrap();
        assert!((u - 2f64.ln().sqrt()).abs() < 1e-7, "{u}");
    }

    #[test]
    fn ramsey_needs_time() {
        assert!(filter_u_coefficient(SequenceType::ramsey(), None).is_err());
        assert!(filter_u_coefficient(SequenceType::ramsey(), Some(0.0)).is_err());
    }

    #[test]
    fn fast_ramsey_matches_direct() {
        let table = FilterCoefficients::new(&[SequenceType::ramsey()]).unwrap();
        for t in [0.5, 10.0, 100.0, 5000.0] {
            let fast = table.u(SequenceType::ramsey(), t).unwrap();
            let direct = filter_u_coefficient(SequenceType::ramsey(), Some(t)).unwrap();
            assert!((fast - direct).abs() < 1e-9, "t={t}: {fast} vs {direct}");
        }
        // large cutoff takes the quadrature branch
        let seq = SequenceType::ramsey_with_cutoff(1e3).unwrap();
        let table = FilterCoefficients::new(&[seq]).unwrap();
        let fast = table.u(seq, 100.0).unwrap();
        assert!((fast - filter_u_coefficient(seq, Some(100.0)).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn response_of_single_segment() {
        // Ramsey: |Ŷ|² = 4 sin²(x/2)/x²
        for x in [1e-9, 0.3, 7.0] {
            let exact = if x < 1e-6 {
                1.0
            } else {
                4.0 * (0.5f64 * x).sin().powi(2) / (x * x)
            };
            assert!((response_sq(&[0.0, 1.0], x) - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn envelope_limits() {
        let env = NoiseEnvironment::default();
        let chi = dephasing_envelope(SequenceType::echo(), 3.0, &env, 50.0, 100.0).unwrap();
        assert!((chi - (-0.25f64).exp()).abs() < 1e-15);
        let env = NoiseEnvironment {
            a_phi: 2.43,
            a_white: 0.5,
            ..Default::default()
        };
        let chi = dephasing_envelope(SequenceType::echo(), 0.0, &env, 50.0, f64::INFINITY).unwrap();
        assert_eq!(chi, 1.0);
        assert!(dephasing_envelope(SequenceType::echo(), 0.0, &env, -1.0, 1.0).is_err());
    }
}
