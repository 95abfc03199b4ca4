mod common;

use common::{oracle_transitions, Gauge};
use fluxcoh_core::qubit::{
    converged_spectrum, converged_spectrum_from, flux_dispersion, matrix_elements, solve_spectrum, spectrum_sweep,
    FluxBias, FluxoniumParams,
};
use num_complex::Complex64;
use proptest::prelude::*;

fn g() -> FluxoniumParams {
    FluxoniumParams::new("G", 1.212, 5.315, 0.547).unwrap()
}

fn flux(x: f64) -> FluxBias {
    FluxBias::new(x).unwrap()
}

/// Parameter sets spread over the usual fluxonium range.
const RANDOM_SETS: [(f64, f64, f64, f64); 5] = [
    (1.05, 3.40, 0.92, 0.500),
    (1.48, 6.70, 0.44, 0.470),
    (0.91, 2.25, 1.31, 0.535),
    (1.27, 7.90, 0.63, 0.412),
    (1.36, 4.60, 1.08, 0.588),
];

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn oscillator_basis_matches_phase_grid_oracle() {
    for &(ec, ej, el, phi) in &RANDOM_SETS {
        let p = FluxoniumParams::new("r", ec, ej, el).unwrap();
        let sol = converged_spectrum(&p, flux(phi), 3, 1e-12).unwrap();
        let m = matrix_elements(&sol, 0, 1).unwrap();
        let (f01, f12, phi01) = oracle_transitions(ec, ej, el, phi, Gauge::Inductive);
        assert!(rel(sol.transition(0, 1), f01) < 1e-6, "f01 {} vs {}", sol.f01(), f01);
        assert!(rel(sol.transition(1, 2), f12) < 1e-6, "f12");
        assert!(rel(m.phi_abs(), phi01) < 1e-6, "phi01 {} vs {}", m.phi_abs(), phi01);
    }
}

#[test]
fn qubit_g_phi01_matches_oracle() {
    let sol = converged_spectrum(&g(), FluxBias::half(), 3, 1e-12).unwrap();
    let m = matrix_elements(&sol, 0, 1).unwrap();
    let (_, _, phi01) = oracle_transitions(1.212, 5.315, 0.547, 0.5, Gauge::Inductive);
    assert!(rel(m.phi_abs(), phi01) < 1e-6);
}

#[test]
fn flux_in_cosine_gives_the_same_spectrum() {
    let (ec, ej, el, phi) = RANDOM_SETS[1];
    let a = oracle_transitions(ec, ej, el, phi, Gauge::Inductive);
    let b = oracle_transitions(ec, ej, el, phi, Gauge::Cosine);
    assert!(rel(a.0, b.0) < 1e-7 && rel(a.1, b.1) < 1e-7 && rel(a.2, b.2) < 1e-7);
    let p = FluxoniumParams::new("r", ec, ej, el).unwrap();
    let sol = converged_spectrum(&p, flux(phi), 3, 1e-12).unwrap();
    assert!(rel(sol.f01(), b.0) < 1e-6);
}

#[test]
fn qubit_h_sweet_spot_frequency() {
    let p = FluxoniumParams::new("H", 1.441, 7.072, 0.535).unwrap();
    let sol = converged_spectrum(&p, FluxBias::half(), 3, 1e-9).unwrap();
    assert!(rel(sol.f01(), 0.153) < 0.02, "{}", sol.f01());
}

#[test]
fn converged_matches_fixed_basis() {
    let fixed = solve_spectrum(&g(), FluxBias::half(), 240, 3).unwrap();
    let conv = converged_spectrum(&g(), FluxBias::half(), 3, 1e-6).unwrap();
    assert!(rel(conv.f01(), fixed.f01()) < 1e-6);
    let from80 = converged_spectrum_from(&g(), FluxBias::half(), 3, 1e-6, 80, 2000).unwrap();
    assert!(rel(from80.f01(), conv.f01()) < 1e-6);
}

#[test]
fn dispersion_is_antisymmetric_and_matches_stencil() {
    let p = g();
    let up = flux_dispersion(&p, flux(0.51)).unwrap();
    let down = flux_dispersion(&p, flux(0.49)).unwrap();
    assert!((up + down).abs() < 1e-6 * up.abs());

    let d = flux_dispersion(&p, flux(0.505)).unwrap();
    assert!(d > 0.0);
    // five-point stencil on converged sweep values with a wider step
    let h = 1e-4;
    let f = |x: f64| converged_spectrum(&p, flux(x), 2, 1e-13).unwrap().f01();
    let five = (-f(0.505 + 2.0 * h) + 8.0 * f(0.505 + h) - 8.0 * f(0.505 - h) + f(0.505 - 2.0 * h)) / (12.0 * h);
    let oracle = 2.0 * std::f64::consts::PI * five;
    assert!(rel(d, oracle) < 1e-4, "{d} vs {oracle}");
}

#[test]
fn sweep_minimum_at_frustration_point() {
    let grid: Vec<FluxBias> = (0..=20).map(|i| flux(0.49 + 0.001 * i as f64)).collect();
    let rows = spectrum_sweep(&g(), &grid, 3).unwrap();
    let (imin, min) = rows
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.f01().total_cmp(&b.1.f01()))
        .unwrap();
    assert_eq!(imin, 10);
    // published minimum 197 MHz; this convention gives 206.6 MHz
    assert!((min.f01() - 0.2066).abs() < 1e-3);
    for k in 0..=10 {
        let (a, b) = (rows[10 - k].f01(), rows[10 + k].f01());
        assert!((a - b).abs() < 1e-9 * a);
    }
}

#[test]
fn sweep_is_periodic_in_flux() {
    let grid: Vec<FluxBias> = [0.45, 0.5, 0.53].iter().map(|&x| flux(x)).collect();
    let shifted: Vec<FluxBias> = [1.45, 1.5, 1.53].iter().map(|&x| flux(x)).collect();
    let a = spectrum_sweep(&g(), &grid, 3).unwrap();
    let b = spectrum_sweep(&g(), &shifted, 3).unwrap();
    for (ra, rb) in a.iter().zip(&b) {
        for (x, y) in ra.transitions.iter().zip(&rb.transitions) {
            assert!(rel(*x, *y) < 1e-9);
        }
        assert!(rel(ra.phi01_abs, rb.phi01_abs) < 1e-9);
        // zero by parity at the sweet spot, hence the absolute floor
        assert!((ra.sin_half_phi01_abs - rb.sin_half_phi01_abs).abs() < 1e-9 * ra.sin_half_phi01_abs + 1e-12);
        assert!(
            (ra.dispersion - rb.dispersion).abs() < 1e-6 * ra.dispersion.abs().max(1.0),
            "{} {}",
            ra.dispersion,
            rb.dispersion
        );
    }
}

fn params_strategy() -> impl Strategy<Value = FluxoniumParams> {
    (0.8f64..1.6, 2.0f64..8.0, 0.4f64..1.5).prop_map(|(ec, ej, el)| FluxoniumParams::new("p", ec, ej, el).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn eigenvectors_orthonormal(p in params_strategy(), phi in 0.0f64..1.0) {
        let sol = solve_spectrum(&p, flux(phi), 160, 6).unwrap();
        prop_assert!(sol.orthonormality_error() < 1e-10);
        prop_assert!(sol.energies.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn f01_symmetric_about_half(p in params_strategy(), delta in 0.0f64..0.05) {
        let a = solve_spectrum(&p, flux(0.5 + delta), 200, 4).unwrap().f01();
        let b = solve_spectrum(&p, flux(0.5 - delta), 200, 4).unwrap().f01();
        prop_assert!((a - b).abs() < 1e-9 * a);
    }

    #[test]
    fn f01_periodic(p in params_strategy(), phi in 0.0f64..1.0) {
        let a = solve_spectrum(&p, flux(phi), 200, 4).unwrap().f01();
        let b = solve_spectrum(&p, flux(phi + 1.0), 200, 4).unwrap().f01();
        prop_assert!((a - b).abs() < 1e-9 * a);
    }

    #[test]
    fn matrix_elements_gauge_invariant(p in params_strategy(), phi in 0.0f64..1.0,
                                       t0 in 0.0f64..std::f64::consts::TAU, t1 in 0.0f64..std::f64::consts::TAU) {
        let sol = solve_spectrum(&p, flux(phi), 160, 4).unwrap();
        let before = matrix_elements(&sol, 0, 1).unwrap();
        let mut rotated = sol.clone();
        for (col, t) in [(0usize, t0), (1, t1)] {
            let ph = Complex64::from_polar(1.0, t);
            for r in 0..rotated.basis_size {
                rotated.eigenvectors[(r, col)] *= ph;
            }
        }
        let after = matrix_elements(&rotated, 0, 1).unwrap();
        prop_assert!((before.phi_abs() - after.phi_abs()).abs() < 1e-12);
        prop_assert!((before.sin_half_phi_abs() - after.sin_half_phi_abs()).abs() < 1e-12);
    }
}
