use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Longest internal FFT accepted.
const MAX_PADDED_LEN: usize = 1 << 25;

/// Band and sampling of a synthesized 1/f flux trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseTrajectorySpec {
    /// μΦ0/√Hz.
    pub a_phi: f64,
    pub f_low_hz: f64,
    pub f_high_hz: f64,
    pub duration_us: f64,
    pub dt_us: f64,
    pub seed: u64,
}

impl NoiseTrajectorySpec {
    /// Band from 1/(10·duration) to the Nyquist frequency 1/(2·dt).
    pub fn with_default_band(a_phi: f64, duration_us: f64, dt_us: f64, seed: u64) -> Self {
        Self {
            a_phi,
            f_low_hz: 1e6 / (10.0 * duration_us),
            f_high_hz: 1e6 / (2.0 * dt_us),
            duration_us,
            dt_us,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a_phi.is_finite() && self.a_phi >= 0.0) {
            return Err(Error::invalid("a_phi", "must be nonnegative"));
        }
        if !(self.dt_us.is_finite() && self.dt_us > 0.0) {
            return Err(Error::invalid("dt_us", "must be positive"));
        }
        if !(self.duration_us.is_finite() && self.duration_us >= self.dt_us) {
            return Err(Error::invalid("duration_us", "must be at least one time step"));
        }
        if !(self.f_low_hz > 0.0 && self.f_low_hz < self.f_high_hz) {
            return Err(Error::invalid("f_low_hz", "band requires 0 < f_low < f_high"));
        }
        let nyquist = 1e6 / (2.0 * self.dt_us);
        if self.f_high_hz > nyquist * (1.0 + 1e-12) {
            return Err(Error::invalid(
                "f_high_hz",
                format!("{} Hz exceeds the Nyquist frequency {nyquist} Hz", self.f_high_hz),
            ));
        }
        Ok(())
    }

    /// Number of output samples.
    pub fn samples(&self) -> usize {
        (self.duration_us / self.dt_us).round() as usize
    }
}

/// Reusable synthesizer: one FFT plan and amplitude table for many streams.
///
/// The trajectory is the real part of an inverse DFT of length L whose
/// fundamental 1/(L·dt) does not exceed f_low, so the lowest in-band
/// frequency is represented. Bin j carries independent Gaussian cosine and
/// sine amplitudes of variance 2·S(f_j)·Δf, S being two-sided.
pub struct OneOverFSynth {
    spec: NoiseTrajectorySpec,
    len: usize,
    bins: Vec<(usize, f64)>,
    fft: Arc<dyn Fft<f64>>,
}

impl OneOverFSynth {
    pub fn new(spec: &NoiseTrajectorySpec) -> Result<Self> {
        spec.validate()?;
        let dt = spec.dt_us * 1e-6;
        let m = spec.samples();
        let padded = (1.0 / (spec.f_low_hz * dt)).ceil();
        if !(padded.is_finite() && padded <= MAX_PADDED_LEN as f64) {
            return Err(Error::invalid(
                "f_low_hz",
                format!("band/grid inconsistency: f_low needs {padded} samples"),
            ));
        }
        let len = (padded as usize).max(m);
        let df = 1.0 / (len as f64 * dt);
        let amp = spec.a_phi * 1e-6;
        let j_lo = ((spec.f_low_hz / df) - 1e-9).ceil().max(1.0) as usize;
        let j_hi = ((spec.f_high_hz / df) + 1e-9).floor() as usize;
        let j_hi = j_hi.min(len / 2);
        if j_lo > j_hi {
            return Err(Error::invalid("f_high_hz", "band contains no grid frequency"));
        }
        let bins = (j_lo..=j_hi)
            .map(|j| {
                let f = j as f64 * df;
                (j, (2.0 * amp * amp / f * df).sqrt())
            })
            .collect();
        let fft = FftPlanner::new().plan_fft_inverse(len);
        Ok(Self {
            spec: spec.clone(),
            len,
            bins,
            fft,
        })
    }

    pub fn spec(&self) -> &NoiseTrajectorySpec {
        &self.spec
    }

    /// Trajectory in Φ0 for one random stream of the spec's seed.
    pub fn trajectory(&self, stream: u64) -> Vec<f64> {
        self.trajectory_with_seed(self.spec.seed, stream)
    }

    pub(crate) fn trajectory_with_seed(&self, seed: u64, stream: u64) -> Vec<f64> {
        let m = self.spec.samples();
        if self.spec.a_phi == 0.0 {
            return vec![0.0; m];
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let mut buf = vec![Complex64::new(0.0, 0.0); self.len];
        for &(j, sigma) in &self.bins {
            let a: f64 = rng.sample(StandardNormal);
            let b: f64 = rng.sample(StandardNormal);
            buf[j] = Complex64::new(sigma * a, -sigma * b);
        }
        self.fft.process(&mut buf);
        buf.truncate(m);
        buf.into_iter().map(|c| c.re).collect()
    }
}

/// One 1/f trajectory (Φ0 per sample) for the spec's seed.
pub fn synth_1f_noise(spec: &NoiseTrajectorySpec) -> Result<Vec<f64>> {
    Ok(OneOverFSynth::new(spec)?.trajectory(0))
}
