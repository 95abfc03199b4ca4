//! Fluxonium spectrum, matrix elements and flux dispersion.
//!
//! The Hamiltonian is H/h = 4E_C n² − E_J cos φ + (E_L/2)(φ + 2πφ_ext)², with
//! the external flux in the inductive term so that φ is the phase across the
//! small junction. It is diagonalized in the oscillator basis of its linear
//! part, where θ = φ + 2πφ_ext = φ_zp (a + a†) and φ_zp = (2E_C/E_L)^(1/4).

mod basis;
mod params;
mod spectrum;

pub use basis::{displacement_parts, OscillatorBasis};
pub(crate) use params::parse_error;
pub use params::{FluxBias, FluxoniumParams, PublishedMetrics, QubitFile};
pub use spectrum::{
    converged_spectrum, converged_spectrum_from, flux_dispersion, matrix_elements, solution_dispersion, solve_spectrum,
    spectrum_sweep, EigenSolution, MatrixElements, SweepRow, CONVERGENCE_CAP, CONVERGENCE_START, DEFAULT_BASIS,
    DEFAULT_REL_TOL, DISPERSION_STEP, MIN_LEVELS,
};
