//! Fluxonium coherence modeling.
//!
//! The crate is organized around the analysis chain for a fluxonium device:
//!
//! - [`qubit`] diagonalizes the fluxonium Hamiltonian and exposes spectra,
//!   matrix elements and flux dispersion.
//! - [`noise`] evaluates every decoherence channel (dielectric loss,
//!   quasiparticles, 1/f and white flux noise, photon shot noise).
//! - [`fit`] fits raw decay traces.
//! - [`extract`] solves the inverse problem over flux scans.
//! - [`synth`] generates synthetic data and Monte Carlo references.
//! - [`wafer`] computes junction-resistance uniformity statistics.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod extract;
pub mod fit;
pub mod noise;
pub mod qubit;
pub mod synth;
pub mod units;
pub mod wafer;

mod numeric;

pub use error::{Error, Result};
pub use extract::{ExtractionReport, FluxScanDataset, ScanRecord};
pub use fit::{DecayTrace, DephasingTriple, FitResult, InitLabel};
pub use noise::{CavityParams, NoiseEnvironment, SequenceType};
pub use qubit::{EigenSolution, FluxBias, FluxoniumParams, MatrixElements};
pub use wafer::{StatsSummary, WaferMap};
