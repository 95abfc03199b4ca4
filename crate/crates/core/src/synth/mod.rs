//! Synthetic data generators and the Monte Carlo dephasing oracle.
//!
//! Every generator is a pure function of its inputs and seed. Random numbers
//! come from ChaCha8 streams keyed by (seed, stream index), so parallel and
//! serial evaluation agree bit for bit.

mod montecarlo;
mod noise1f;
mod scan;
mod traces;
mod wafer;

pub use montecarlo::{simulate_dephasing, EnsembleResult, MIN_TRAJECTORIES};
pub use noise1f::{synth_1f_noise, NoiseTrajectorySpec, OneOverFSynth};
pub use scan::{synth_flux_scan, TlsDip};
pub use traces::{synth_decay_trace, TraceModel};
pub use wafer::{synth_wafer, WaferGroupSpec};
