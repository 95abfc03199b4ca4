//! Fits of time-domain decay traces.
//!
//! Every fitter runs a bounded Levenberg–Marquardt solver from eight
//! deterministic starts (a regression seed plus seven log-spaced time
//! constants, with linear amplitudes solved exactly at each start) and keeps
//! the best converged optimum. Shot counts, when present, switch on binomial
//! weights. Standard errors come from s²(JᵀJ)⁻¹ at the optimum.

mod dephasing;
pub(crate) mod engine;
mod relaxation;
mod trace;

pub use dephasing::{bloch_envelope, fit_gaussian_dephasing, DephasingMode};
pub use engine::{FitResult, FittedParam};
pub use relaxation::{fit_exponential, fit_joint_t1, fit_nonexponential, nonexponential_model, JointOptions};
pub use trace::{DecayTrace, DephasingTriple, InitLabel, TRIPLE_PHASES_DEG};
