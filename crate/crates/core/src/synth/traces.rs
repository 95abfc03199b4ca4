use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{nonexponential_model, DecayTrace, InitLabel};
use crate::noise::{envelope_from_u, FilterCoefficients, SequenceType};

/// Exact curves that [`synth_decay_trace`] can sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum TraceModel {
    /// a·exp(−t/T1) + b, prepared in |1⟩.
    Exponential { a: f64, t1: f64, b: f64 },
    /// Two traces sharing T1 and b, prepared in |1⟩ and |0⟩.
    JointPair { a1: f64, a2: f64, t1: f64, b: f64 },
    /// a·exp[n(exp(−t/T̃1) − 1)]·exp(−t/T1) + b.
    NonExponential {
        a: f64,
        n: f64,
        t1_tilde: f64,
        t1: f64,
        b: f64,
    },
    /// Tri-phase readout c + a·χ(t)·cos(θ − φ_k) at φ_k = 0, π/3, 2π/3, with
    /// χ the composite dephasing envelope.
    CompositeChi {
        a: f64,
        c: f64,
        theta: f64,
        t1: f64,
        /// rad·GHz/Φ0.
        d: f64,
        a_phi: f64,
        a_white: f64,
        sequence: SequenceType,
    },
}

impl TraceModel {
    /// Exact probability curves, one per emitted trace.
    pub fn curves(&self, delays: &[f64]) -> Result<Vec<(InitLabel, Vec<f64>)>> {
        let exp = |a: f64, t1: f64, b: f64| -> Vec<f64> { delays.iter().map(|t| a * (-t / t1).exp() + b).collect() };
        let positive = |name: &str, v: f64| -> Result<()> {
            if v > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(name, "must be positive"))
            }
        };
        Ok(match *self {
            TraceModel::Exponential { a, t1, b } => {
                positive("t1", t1)?;
                vec![(InitLabel::From1, exp(a, t1, b))]
            }
            TraceModel::JointPair { a1, a2, t1, b } => {
                positive("t1", t1)?;
                vec![(InitLabel::From1, exp(a1, t1, b)), (InitLabel::From0, exp(a2, t1, b))]
            }
            TraceModel::NonExponential { a, n, t1_tilde, t1, b } => {
                positive("t1", t1)?;
                positive("t1_tilde", t1_tilde)?;
                let p = [a, n, t1_tilde, t1, b];
                vec![(
                    InitLabel::From1,
                    delays.iter().map(|t| nonexponential_model(&p, *t)).collect(),
                )]
            }
            TraceModel::CompositeChi {
                a,
                c,
                theta,
                t1,
                d,
                a_phi,
                a_white,
                sequence,
            } => {
                positive("t1", t1)?;
                let table = FilterCoefficients::new(&[sequence])?;
                let chi: Vec<f64> = delays
                    .iter()
                    .map(|&t| {
                        let u = if t > 0.0 { table.u(sequence, t)? } else { 0.0 };
                        Ok(envelope_from_u(u, d, a_phi, a_white, t, t1))
                    })
                    .collect::<Result<_>>()?;
                [0.0, PI / 3.0, 2.0 * PI / 3.0]
                    .iter()
                    .map(|phi| {
                        let p = chi.iter().map(|x| c + a * x * (theta - phi).cos()).collect();
                        (InitLabel::None, p)
                    })
                    .collect()
            }
        })
    }
}

/// Samples each model curve binomially with `shots` per delay (0 means the
/// exact curve). Trace k uses random stream k of `seed`.
pub fn synth_decay_trace(model: &TraceModel, delays: &[f64], shots: u64, seed: u64) -> Result<Vec<DecayTrace>> {
    let curves = model.curves(delays)?;
    let mut out = Vec::with_capacity(curves.len());
    for (k, (init, p)) in curves.into_iter().enumerate() {
        if let Some(bad) = p.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::invalid(
                "model",
                format!("parameters give probability {bad} outside [0, 1]"),
            ));
        }
        let trace = if shots == 0 {
            DecayTrace::new(delays.to_vec(), p, None, init)?
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let sampled = p
                .iter()
                .map(|&pi| {
                    let dist = Binomial::new(shots, pi).map_err(|e| Error::invalid("model", e.to_string()))?;
                    Ok(dist.sample(&mut rng) as f64 / shots as f64)
                })
                .collect::<Result<Vec<f64>>>()?;
            DecayTrace::new(delays.to_vec(), sampled, Some(vec![shots; delays.len()]), init)?
        };
        out.push(trace);
    }
    Ok(out)
}
