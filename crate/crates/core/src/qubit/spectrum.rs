use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::TWO_PI;

use super::basis::OscillatorBasis;
use super::{FluxBias, FluxoniumParams};

/// Minimum number of levels kept in every solution.
pub const MIN_LEVELS: usize = 4;
/// Default basis size for fixed-size solves.
pub const DEFAULT_BASIS: usize = 120;
/// Starting basis size for [`converged_spectrum`].
pub const CONVERGENCE_START: usize = 60;
/// Basis cap for [`converged_spectrum`].
pub const CONVERGENCE_CAP: usize = 2000;
/// Tolerance used by sweeps and derived quantities.
pub const DEFAULT_REL_TOL: f64 = 1e-10;
/// Weight an eigenvector may carry in the top tenth of the basis before the
/// truncation is declared too small.
const TAIL_WEIGHT_LIMIT: f64 = 1e-8;

/// Lowest eigenpairs of the fluxonium Hamiltonian at one flux.
#[derive(Debug, Clone)]
pub struct EigenSolution {
    pub params: FluxoniumParams,
    pub phi_ext: FluxBias,
    pub basis_size: usize,
    /// Ascending, GHz.
    pub energies: Vec<f64>,
    /// Column k holds level k in the oscillator basis.
    pub eigenvectors: DMatrix<Complex64>,
    pub phi_zp: f64,
    basis: Arc<OscillatorBasis>,
}

impl EigenSolution {
    pub fn n_levels(&self) -> usize {
        self.energies.len()
    }

    /// E_j − E_i in GHz.
    pub fn transition(&self, i: usize, j: usize) -> f64 {
        self.energies[j] - self.energies[i]
    }

    pub fn f01(&self) -> f64 {
        self.transition(0, 1)
    }

    /// Largest deviation of the eigenvector Gram matrix from the identity.
    pub fn orthonormality_error(&self) -> f64 {
        let v = &self.eigenvectors;
        let gram = v.adjoint() * v;
        let n = gram.nrows();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((gram[(i, j)] - Complex64::new(target, 0.0)).norm());
            }
        }
        worst
    }
}

/// ⟨i|φ̂|j⟩ and ⟨i|sin(φ̂/2)|j⟩ between two eigenstates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatrixElements {
    pub phi: Complex64,
    pub sin_half_phi: Complex64,
}

impl MatrixElements {
    pub fn phi_abs(&self) -> f64 {
        self.phi.norm()
    }

    pub fn sin_half_phi_abs(&self) -> f64 {
        self.sin_half_phi.norm()
    }
}

/// Diagonalizes H/h = 4E_C n² − E_J cos φ + (E_L/2)(φ + 2πφ_ext)² in the
/// oscillator basis of the linear part.
pub fn solve_spectrum(
    params: &FluxoniumParams,
    flux: FluxBias,
    basis_size: usize,
    n_levels: usize,
) -> Result<EigenSolution> {
    params.validate()?;
    check_sizes(basis_size, n_levels)?;
    let basis = Arc::new(OscillatorBasis::new(params, basis_size));
    solve_in_basis(params, &basis, flux, n_levels)
}

fn check_sizes(basis_size: usize, n_levels: usize) -> Result<()> {
    if n_levels == 0 {
        return Err(Error::invalid("n_levels", "must be at least 1"));
    }
    let kept = n_levels.max(MIN_LEVELS);
    if basis_size < 4 * kept {
        return Err(Error::invalid(
            "basis_size",
            format!("{basis_size} is below 4 × {kept} retained levels"),
        ));
    }
    Ok(())
}

pub(crate) fn solve_in_basis(
    params: &FluxoniumParams,
    basis: &Arc<OscillatorBasis>,
    flux: FluxBias,
    n_levels: usize,
) -> Result<EigenSolution> {
    let n = basis.size;
    let kept = n_levels.max(MIN_LEVELS);
    check_sizes(n, n_levels)?;
    // In θ = φ + 2πφ_ext: cos φ = cos θ cos(2πφ_ext) + sin θ sin(2πφ_ext).
    let shift = TWO_PI * flux.value();
    let (cs, sn) = (shift.cos(), shift.sin());
    let mut h = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            h[(i, j)] = -params.e_j * (cs * basis.cos_theta[(i, j)] + sn * basis.sin_theta[(i, j)]);
        }
        h[(j, j)] += basis.omega * (j as f64 + 0.5);
    }
    let eig = h
        .try_symmetric_eigen(f64::EPSILON, 100_000)
        .ok_or_else(|| Error::Solver(format!("symmetric eigensolver did not converge at basis size {n}")))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let tail_start = n - (n / 10).max(4);
    let mut vectors = DMatrix::zeros(n, kept);
    let mut energies = Vec::with_capacity(kept);
    for (col, &idx) in order.iter().take(kept).enumerate() {
        let v = eig.eigenvectors.column(idx);
        let tail: f64 = v.rows(tail_start, n - tail_start).norm_squared();
        if tail > TAIL_WEIGHT_LIMIT {
            return Err(Error::Unconverged(format!(
                "level {col} carries weight {tail:.2e} in the top of a {n}-state basis"
            )));
        }
        // deterministic sign: first significant component positive
        let pivot = v.iter().find(|c| c.abs() > 1e-8).copied().unwrap_or(1.0);
        let s = pivot.signum();
        for r in 0..n {
            vectors[(r, col)] = Complex64::new(s * v[r], 0.0);
        }
        energies.push(eig.eigenvalues[idx]);
    }
    Ok(EigenSolution {
        params: params.clone(),
        phi_ext: flux,
        basis_size: n,
        energies,
        eigenvectors: vectors,
        phi_zp: basis.phi_zp,
        basis: Arc::clone(basis),
    })
}

/// Doubles the basis from 60 until every transition E_k − E_0 changes by less
/// than `rel_tol` relative between iterations.
pub fn converged_spectrum(
    params: &FluxoniumParams,
    flux: FluxBias,
    n_levels: usize,
    rel_tol: f64,
) -> Result<EigenSolution> {
    converged_spectrum_from(params, flux, n_levels, rel_tol, CONVERGENCE_START, CONVERGENCE_CAP)
}

pub fn converged_spectrum_from(
    params: &FluxoniumParams,
    flux: FluxBias,
    n_levels: usize,
    rel_tol: f64,
    start: usize,
    cap: usize,
) -> Result<EigenSolution> {
    if !(rel_tol > 0.0) {
        return Err(Error::invalid("rel_tol", "must be positive"));
    }
    params.validate()?;
    let n_levels = n_levels.max(2);
    let mut size = start.max(4 * n_levels.max(MIN_LEVELS));
    let mut previous: Option<EigenSolution> = None;
    while size <= cap {
        let basis = Arc::new(OscillatorBasis::new(params, size));
        match solve_in_basis(params, &basis, flux, n_levels) {
            Ok(sol) => {
                if let Some(prev) = &previous {
                    let stable = (1..n_levels).all(|k| {
                        let (a, b) = (prev.transition(0, k), sol.transition(0, k));
                        (a - b).abs() <= rel_tol * b.abs().max(f64::MIN_POSITIVE)
                    });
                    if stable {
                        return Ok(sol);
                    }
                }
                previous = Some(sol);
            }
            Err(Error::Unconverged(_)) => previous = None,
            Err(e) => return Err(e),
        }
        size *= 2;
    }
    Err(Error::Unconverged(format!(
        "transitions not stable to {rel_tol:e} below the basis cap {cap}"
    )))
}

/// ⟨i|φ̂|j⟩ and ⟨i|sin(φ̂/2)|j⟩ with φ = θ − 2πφ_ext.
pub fn matrix_elements(sol: &EigenSolution, i: usize, j: usize) -> Result<MatrixElements> {
    let kept = sol.n_levels();
    for (name, v) in [("i", i), ("j", j)] {
        if v >= kept {
            return Err(Error::invalid(name, format!("level {v} out of range (< {kept})")));
        }
    }
    let b = &sol.basis;
    let n = sol.basis_size;
    let vi = sol.eigenvectors.column(i);
    let vj = sol.eigenvectors.column(j);

    let mut theta = Complex64::new(0.0, 0.0);
    for m in 0..n {
        let ci = vi[m].conj();
        if m + 1 < n {
            theta += ci * vj[m + 1] * b.theta_element(m, m + 1);
        }
        if m > 0 {
            theta += ci * vj[m - 1] * b.theta_element(m, m - 1);
        }
    }
    let overlap: Complex64 = (0..n).map(|m| vi[m].conj() * vj[m]).sum();
    let phi = theta - overlap * (TWO_PI * sol.phi_ext.value());

    // sin((θ − 2πφ_ext)/2) = sin(θ/2) cos(πφ_ext) − cos(θ/2) sin(πφ_ext)
    let half = PI * sol.phi_ext.value();
    let (ch, sh) = (half.cos(), half.sin());
    let mut acc = Complex64::new(0.0, 0.0);
    for q in 0..n {
        let vq = vj[q];
        if vq == Complex64::new(0.0, 0.0) {
            continue;
        }
        let mut row = Complex64::new(0.0, 0.0);
        for p in 0..n {
            let op = ch * b.sin_half[(p, q)] - sh * b.cos_half[(p, q)];
            row += vi[p].conj() * op;
        }
        acc += row * vq;
    }
    Ok(MatrixElements { phi, sin_half_phi: acc })
}

/// Finite-difference step in Φ0 for the dispersion.
pub const DISPERSION_STEP: f64 = 1e-5;

/// D = 2π ∂f01/∂φ_ext in rad·GHz per Φ0.
///
/// The basis is fixed at the size that converges f01 at the requested flux,
/// then a central difference with step h is refined by Richardson
/// extrapolation against step h/2.
pub fn flux_dispersion(params: &FluxoniumParams, flux: FluxBias) -> Result<f64> {
    let center = converged_spectrum(params, flux, 2, DEFAULT_REL_TOL)?;
    let basis = Arc::clone(&center.basis);
    dispersion_in_basis(params, &basis, flux)
}

/// D at the flux of an existing solution, on that solution's basis.
pub fn solution_dispersion(sol: &EigenSolution) -> Result<f64> {
    dispersion_in_basis(&sol.params, &sol.basis, sol.phi_ext)
}

pub(crate) fn dispersion_in_basis(
    params: &FluxoniumParams,
    basis: &Arc<OscillatorBasis>,
    flux: FluxBias,
) -> Result<f64> {
    let phi = flux.value();
    let f = |x: f64| -> Result<f64> { Ok(solve_in_basis(params, basis, FluxBias::new(x)?, 2)?.f01()) };
    let h = DISPERSION_STEP;
    let d1 = (f(phi + h)? - f(phi - h)?) / (2.0 * h);
    let d2 = (f(phi + h / 2.0)? - f(phi - h / 2.0)?) / h;
    Ok(TWO_PI * (4.0 * d2 - d1) / 3.0)
}

/// One row of a flux sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub phi_ext: f64,
    /// E_k − E_0 for k = 1.. in GHz.
    pub transitions: Vec<f64>,
    pub phi01_abs: f64,
    pub sin_half_phi01_abs: f64,
    /// rad·GHz per Φ0.
    pub dispersion: f64,
    pub basis_size: usize,
}

impl SweepRow {
    pub fn f01(&self) -> f64 {
        self.transitions[0]
    }
}

/// Converged spectrum, sweet-spot matrix elements and dispersion at every
/// grid point, computed in parallel and returned in grid order.
pub fn spectrum_sweep(params: &FluxoniumParams, flux_grid: &[FluxBias], n_levels: usize) -> Result<Vec<SweepRow>> {
    if flux_grid.is_empty() {
        return Err(Error::invalid("flux_grid", "must not be empty"));
    }
    params.validate()?;
    let n_levels = n_levels.max(2);
    flux_grid
        .par_iter()
        .enumerate()
        .map(|(row, &flux)| {
            sweep_row(params, flux, n_levels).map_err(|e| Error::Row {
                row,
                source: Box::new(e),
            })
        })
        .collect()
}

fn sweep_row(params: &FluxoniumParams, flux: FluxBias, n_levels: usize) -> Result<SweepRow> {
    let sol = converged_spectrum(params, flux, n_levels, DEFAULT_REL_TOL)?;
    let elems = matrix_elements(&sol, 0, 1)?;
    let dispersion = dispersion_in_basis(params, &sol.basis, flux)?;
    Ok(SweepRow {
        phi_ext: flux.value(),
        transitions: (1..n_levels).map(|k| sol.transition(0, k)).collect(),
        phi01_abs: elems.phi_abs(),
        sin_half_phi01_abs: elems.sin_half_phi_abs(),
        dispersion,
        basis_size: sol.basis_size,
    })
}
