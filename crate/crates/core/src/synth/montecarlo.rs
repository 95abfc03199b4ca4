use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::SequenceType;
use crate::numeric::CompensatedSum;

use super::noise1f::{NoiseTrajectorySpec, OneOverFSynth};

/// Minimum ensemble size.
pub const MIN_TRAJECTORIES: usize = 100;
/// Trajectories per parallel work unit; fixed so reduction order never
/// depends on the thread pool.
const CHUNK: usize = 64;

/// Ensemble-averaged coherence |⟨e^{iφ}⟩| per delay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub delays: Vec<f64>,
    pub envelope: Vec<f64>,
    pub std_error: Vec<f64>,
    pub n_trajectories: usize,
}

/// Segment boundaries (in samples) of the toggling function for `steps`
/// samples; pulse times are snapped to the grid.
fn boundaries(seq: SequenceType, steps: usize) -> Vec<usize> {
    match seq {
        SequenceType::Ramsey { .. } => vec![0, steps],
        SequenceType::Cpmg { pulses } => {
            let mut b = vec![0];
            for j in 1..=pulses {
                let pos = (j as f64 - 0.5) / pulses as f64 * steps as f64;
                b.push(pos.round() as usize);
            }
            b.push(steps);
            b
        }
    }
}

#[derive(Clone, Default)]
struct Accum {
    cos: Vec<CompensatedSum>,
    sin: Vec<CompensatedSum>,
    cos_sq: Vec<CompensatedSum>,
}

impl Accum {
    fn new(n: usize) -> Self {
        Self {
            cos: vec![CompensatedSum::default(); n],
            sin: vec![CompensatedSum::default(); n],
            cos_sq: vec![CompensatedSum::default(); n],
        }
    }
}

/// Monte Carlo coherence under 1/f flux noise.
///
/// Each trajectory uses the random stream keyed by (`seed`, trajectory
/// index); `seed` takes precedence over `spec.seed`. The accumulated phase is
/// D·∫δΦ(t)s(t)dt evaluated by exact summation over the sample bins.
pub fn simulate_dephasing(
    spec: &NoiseTrajectorySpec,
    d: f64,
    seq: SequenceType,
    delays: &[f64],
    n_traj: usize,
    seed: u64,
) -> Result<EnsembleResult> {
    if n_traj < MIN_TRAJECTORIES {
        return Err(Error::invalid(
            "n_traj",
            format!("{n_traj} trajectories is below the minimum of {MIN_TRAJECTORIES}"),
        ));
    }
    seq.validate()?;
    if !d.is_finite() {
        return Err(Error::invalid("d", "must be finite"));
    }
    let synth = OneOverFSynth::new(spec)?;
    let m = spec.samples();
    let steps: Vec<usize> = delays
        .iter()
        .map(|&t| {
            if !(t >= 0.0) {
                return Err(Error::invalid("delays", format!("negative delay {t}")));
            }
            let s = (t / spec.dt_us).round() as usize;
            if s > m {
                return Err(Error::invalid(
                    "delays",
                    format!("delay {t} μs exceeds the trajectory duration {} μs", spec.duration_us),
                ));
            }
            Ok(s)
        })
        .collect::<Result<_>>()?;
    let bounds: Vec<Vec<usize>> = steps.iter().map(|&s| boundaries(seq, s)).collect();
    let dt = spec.dt_us * 1e-6;
    let omega_per_phi0 = d * 1e9;

    let n_chunks = n_traj.div_ceil(CHUNK);
    let partial: Vec<Accum> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = Accum::new(delays.len());
            let mut prefix = vec![0.0; m + 1];
            for k in (c * CHUNK)..((c + 1) * CHUNK).min(n_traj) {
                let x = synth.trajectory_with_seed(seed, k as u64);
                for (i, v) in x.iter().enumerate() {
                    prefix[i + 1] = prefix[i] + v * dt;
                }
                for (slot, b) in bounds.iter().enumerate() {
                    let mut integral = 0.0;
                    let mut sign = 1.0;
                    for w in b.windows(2) {
                        integral += sign * (prefix[w[1]] - prefix[w[0]]);
                        sign = -sign;
                    }
                    let phase = omega_per_phi0 * integral;
                    let (s, co) = phase.sin_cos();
                    acc.cos[slot].add(co);
                    acc.sin[slot].add(s);
                    acc.cos_sq[slot].add(co * co);
                }
            }
            acc
        })
        .collect();

    let n = n_traj as f64;
    let mut envelope = Vec::with_capacity(delays.len());
    let mut std_error = Vec::with_capacity(delays.len());
    for slot in 0..delays.len() {
        let (mut c, mut s, mut c2) = (
            CompensatedSum::default(),
            CompensatedSum::default(),
            CompensatedSum::default(),
        );
        for p in &partial {
            c.add(p.cos[slot].value());
            s.add(p.sin[slot].value());
            c2.add(p.cos_sq[slot].value());
        }
        let (mc, ms) = (c.value() / n, s.value() / n);
        envelope.push(mc.hypot(ms));
        let var = (c2.value() / n - mc * mc).max(0.0);
        std_error.push((var / (n - 1.0)).sqrt());
    }
    Ok(EnsembleResult {
        delays: delays.to_vec(),
        envelope,
        std_error,
        n_trajectories: n_traj,
    })
}
