//! Operators of the linear (harmonic) part of the fluxonium in its number basis.

use nalgebra::DMatrix;

use crate::numeric::ln_factorials;

use super::FluxoniumParams;

/// Truncated oscillator basis with the operators needed for the fluxonium
/// Hamiltonian and its matrix elements. θ = φ_zp (a + a†) is the phase
/// variable measured from the minimum of the inductive well.
#[derive(Debug, Clone)]
pub struct OscillatorBasis {
    pub(crate) size: usize,
    pub(crate) phi_zp: f64,
    pub(crate) omega: f64,
    pub(crate) cos_theta: DMatrix<f64>,
    pub(crate) sin_theta: DMatrix<f64>,
    pub(crate) cos_half: DMatrix<f64>,
    pub(crate) sin_half: DMatrix<f64>,
}

impl OscillatorBasis {
    pub fn new(params: &FluxoniumParams, size: usize) -> Self {
        let phi_zp = params.phi_zp();
        let (cos_theta, sin_theta) = displacement_parts(size, phi_zp);
        let (cos_half, sin_half) = displacement_parts(size, 0.5 * phi_zp);
        Self {
            size,
            phi_zp,
            omega: params.plasma_frequency(),
            cos_theta,
            sin_theta,
            cos_half,
            sin_half,
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// ⟨m|θ|n⟩ for the tridiagonal position operator.
    pub(crate) fn theta_element(&self, m: usize, n: usize) -> f64 {
        if m + 1 == n {
            self.phi_zp * (n as f64).sqrt()
        } else if n + 1 == m {
            self.phi_zp * (m as f64).sqrt()
        } else {
            0.0
        }
    }
}

/// Real and imaginary parts of the displacement ⟨m|exp(iβ(a+a†))|n⟩, i.e. the
/// matrices of cos(βx̂) and sin(βx̂) with x̂ = a + a†.
///
/// For m = n + k the element is i^k √(n!/m!) β^k e^{−β²/2} L_n^{(k)}(β²); the
/// normalized Laguerre values are generated by the three-term recurrence in n
/// with a running log scale so that β^k/√k! underflow cannot zero out a
/// diagonal that later grows.
pub fn displacement_parts(size: usize, beta: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let mut cos_m = DMatrix::zeros(size, size);
    let mut sin_m = DMatrix::zeros(size, size);
    if size == 0 {
        return (cos_m, sin_m);
    }
    let x = beta * beta;
    let ln_fact = ln_factorials(size);
    let ln_beta = beta.abs().ln();
    const BIG: f64 = 1e150;
    for k in 0..size {
        let kf = k as f64;
        let log_h0 = if k == 0 {
            -0.5 * x
        } else if beta == 0.0 {
            f64::NEG_INFINITY
        } else {
            kf * ln_beta - 0.5 * ln_fact[k] - 0.5 * x
        };
        // sign of β^k for negative β
        let beta_sign = if beta < 0.0 && k % 2 == 1 { -1.0 } else { 1.0 };
        let phase_sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        let sign = beta_sign * phase_sign;
        let mut log_scale = log_h0;
        let (mut prev, mut cur) = (0.0f64, 1.0f64);
        for n in 0..size - k {
            let value = sign * cur * log_scale.exp();
            let m = n + k;
            if k % 2 == 0 {
                cos_m[(m, n)] = value;
                cos_m[(n, m)] = value;
            } else {
                sin_m[(m, n)] = value;
                sin_m[(n, m)] = value;
            }
            let nf = n as f64;
            let next = ((2.0 * nf + 1.0 + kf - x) * cur - (nf * (nf + kf)).sqrt() * prev)
                / ((nf + 1.0) * (nf + kf + 1.0)).sqrt();
            prev = cur;
            cur = next;
            if cur.abs() > BIG || prev.abs() > BIG {
                cur /= BIG;
                prev /= BIG;
                log_scale += BIG.ln();
            }
        }
    }
    (cos_m, sin_m)
}
