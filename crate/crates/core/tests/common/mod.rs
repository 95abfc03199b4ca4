//! Independent reference solvers shared by integration tests.
#![allow(dead_code)]

pub mod fixtures;

use std::f64::consts::PI;

/// Where the external flux enters the potential.
#[derive(Clone, Copy, Debug)]
pub enum Gauge {
    /// (E_L/2)(φ + 2πφ_ext)² − E_J cos φ
    Inductive,
    /// (E_L/2)φ² − E_J cos(φ − 2πφ_ext)
    Cosine,
}

pub struct GridResult {
    pub energies: Vec<f64>,
    pub phi01: f64,
}

/// Finite-difference Schrödinger solve on a uniform φ grid with a
/// second-order stencil and Dirichlet walls at ±`half_width` around the
/// inductive minimum. `intervals` sets the spacing h = 2·half_width/intervals.
pub fn phase_grid_solve(
    e_c: f64,
    e_j: f64,
    e_l: f64,
    phi_ext: f64,
    gauge: Gauge,
    half_width: f64,
    intervals: usize,
    n_levels: usize,
) -> GridResult {
    let center = match gauge {
        Gauge::Inductive => -2.0 * PI * phi_ext,
        Gauge::Cosine => 0.0,
    };
    let h = 2.0 * half_width / intervals as f64;
    let n = intervals - 1;
    let kin = 4.0 * e_c / (h * h);
    let xs: Vec<f64> = (1..=n).map(|i| center - half_width + h * i as f64).collect();
    let diag: Vec<f64> = xs
        .iter()
        .map(|&x| {
            let v = match gauge {
                Gauge::Inductive => 0.5 * e_l * (x + 2.0 * PI * phi_ext).powi(2) - e_j * x.cos(),
                Gauge::Cosine => 0.5 * e_l * x * x - e_j * (x - 2.0 * PI * phi_ext).cos(),
            };
            2.0 * kin + v
        })
        .collect();
    let off = -kin;

    let energies: Vec<f64> = (0..n_levels).map(|k| sturm_eigenvalue(&diag, off, k)).collect();
    let psi0 = inverse_iteration(&diag, off, energies[0]);
    let psi1 = inverse_iteration(&diag, off, energies[1]);
    // position relative to the junction phase φ
    let phase = |x: f64| match gauge {
        Gauge::Inductive => x,
        Gauge::Cosine => x - 2.0 * PI * phi_ext,
    };
    let phi01: f64 = (0..n).map(|i| psi0[i] * phase(xs[i]) * psi1[i]).sum::<f64>();
    GridResult {
        energies,
        phi01: phi01.abs(),
    }
}

/// Number of eigenvalues below `x` of the symmetric tridiagonal matrix.
fn sturm_count(diag: &[f64], off: f64, x: f64) -> usize {
    let mut count = 0;
    let mut d = 1.0;
    for (i, &a) in diag.iter().enumerate() {
        d = if i == 0 { a - x } else { a - x - off * off / d };
        if d == 0.0 {
            d = -1e-300;
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

fn sturm_eigenvalue(diag: &[f64], off: f64, k: usize) -> f64 {
    let lo0 = diag.iter().cloned().fold(f64::INFINITY, f64::min) - 2.0 * off.abs();
    let hi0 = diag.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 2.0 * off.abs();
    let (mut lo, mut hi) = (lo0, hi0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if sturm_count(diag, off, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Normalized eigenvector (unit Euclidean norm) by shifted inverse iteration.
fn inverse_iteration(diag: &[f64], off: f64, lambda: f64) -> Vec<f64> {
    let n = diag.len();
    let shift = lambda + 1e-10 * lambda.abs().max(1.0);
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    for _ in 0..4 {
        // Thomas algorithm for (T − shift) y = v
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let b0 = diag[0] - shift;
        c[0] = off / b0;
        d[0] = v[0] / b0;
        for i in 1..n {
            let m = diag[i] - shift - off * c[i - 1];
            c[i] = off / m;
            d[i] = (v[i] - off * d[i - 1]) / m;
        }
        let mut y = vec![0.0; n];
        y[n - 1] = d[n - 1];
        for i in (0..n - 1).rev() {
            y[i] = d[i] - c[i] * y[i + 1];
        }
        let norm = y.iter().map(|a| a * a).sum::<f64>().sqrt();
        v = y.into_iter().map(|a| a / norm).collect();
    }
    let s = v
        .iter()
        .cloned()
        .fold(0.0f64, |acc, a| if a.abs() > acc.abs() { a } else { acc });
    v.into_iter().map(|a| a * s.signum()).collect()
}

/// Three-grid Richardson extrapolation removing the h² and h⁴ terms.
pub fn richardson3(coarse: f64, mid: f64, fine: f64) -> f64 {
    (64.0 * fine - 20.0 * mid + coarse) / 45.0
}

/// Extrapolated (f01, f12, |⟨0|φ|1⟩|) from grids of 4096, 8192 and 16384
/// intervals spanning ±8π.
pub fn oracle_transitions(e_c: f64, e_j: f64, e_l: f64, phi_ext: f64, gauge: Gauge) -> (f64, f64, f64) {
    let runs: Vec<GridResult> = [4096usize, 8192, 16384]
        .iter()
        .map(|&m| phase_grid_solve(e_c, e_j, e_l, phi_ext, gauge, 8.0 * PI, m, 3))
        .collect();
    let f01: Vec<f64> = runs.iter().map(|r| r.energies[1] - r.energies[0]).collect();
    let f12: Vec<f64> = runs.iter().map(|r| r.energies[2] - r.energies[1]).collect();
    let p: Vec<f64> = runs.iter().map(|r| r.phi01).collect();
    (
        richardson3(f01[0], f01[1], f01[2]),
        richardson3(f12[0], f12[1], f12[2]),
        richardson3(p[0], p[1], p[2]),
    )
}
