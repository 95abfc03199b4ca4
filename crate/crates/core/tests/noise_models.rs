use fluxcoh_core::noise::{
    coth_factor, dephasing_envelope, dielectric_rate, filter_u_coefficient, quasiparticle_rate, t1_dielectric,
    t1_quasiparticle, zeta, FilterCoefficients, NoiseEnvironment, QpChannel, SequenceType,
};
use fluxcoh_core::qubit::{converged_spectrum, matrix_elements, FluxBias, FluxoniumParams};
use proptest::prelude::*;

/// u² from the jumps c_k of the toggling function at times τ_k:
/// Σ_{k≠l} c_k c_l (Δ²/2) ln|Δ|, valid when Σc = Σcτ = 0.
fn cpmg_u_closed_form(n: u32) -> f64 {
    let mut taus = vec![0.0];
    let mut jumps = vec![1.0];
    let mut sign = 1.0;
    for j in 1..=n {
        taus.push((j as f64 - 0.5) / n as f64);
        sign = -sign;
        jumps.push(2.0 * sign);
    }
    taus.push(1.0);
    jumps.push(-sign);
    let mut acc = 0.0;
    for k in 0..taus.len() {
        for l in 0..taus.len() {
            let d = (taus[k] - taus[l]).abs();
            if d > 0.0 {
                acc += jumps[k] * jumps[l] * 0.5 * d * d * d.ln();
            }
        }
    }
    acc.sqrt()
}

/// Ramsey u² = (1 − cos x)/x² + sin x/x − Ci(x) at x = 2π·1 Hz·t.
fn ramsey_u_closed_form(t_us: f64) -> f64 {
    let x = 2.0 * std::f64::consts::PI * t_us * 1e-6;
    let euler = 0.577_215_664_901_532_9;
    let mut ci = euler + x.ln();
    let mut term = 1.0;
    for k in 1..20 {
        let kf = k as f64;
        term *= -x * x / ((2.0 * kf - 1.0) * (2.0 * kf));
        ci += term / (2.0 * kf);
    }
    ((1.0 - x.cos()) / (x * x) + x.sin() / x - ci).sqrt()
}

#[test]
fn cpmg_coefficients_match_closed_form() {
    let mut last = f64::INFINITY;
    for n in [1u32, 2, 4, 8, 16] {
        let u = filter_u_coefficient(SequenceType::cpmg(n).unwrap(), None).unwrap();
        let oracle = cpmg_u_closed_form(n);
        assert!((u - oracle).abs() < 1e-8, "N={n}: {u} vs {oracle}");
        assert!(u < last && u > 0.0);
        last = u;
    }
    assert!((cpmg_u_closed_form(1) - 2f64.ln().sqrt()).abs() < 1e-14);
    // frozen values
    for (n, v) in [(2u32, 0.62645), (4, 0.45211), (8, 0.32305), (16, 0.22963)] {
        assert!((cpmg_u_closed_form(n) - v).abs() < 1e-5);
    }
}

#[test]
fn ramsey_coefficient_matches_closed_form() {
    let echo = filter_u_coefficient(SequenceType::echo(), None).unwrap();
    let u10 = filter_u_coefficient(SequenceType::ramsey(), Some(10.0)).unwrap();
    let u100 = filter_u_coefficient(SequenceType::ramsey(), Some(100.0)).unwrap();
    assert!((u10 - ramsey_u_closed_form(10.0)).abs() < 1e-8);
    assert!((u100 - ramsey_u_closed_form(100.0)).abs() < 1e-8);
    assert!((u10 - 3.2554).abs() < 1e-4 && (u100 - 2.8801).abs() < 1e-4);
    assert!(u100 < u10 && u100 > echo);
    let table = FilterCoefficients::new(&[SequenceType::ramsey()]).unwrap();
    for t in [1.0, 37.0, 400.0] {
        assert!((table.u(SequenceType::ramsey(), t).unwrap() - ramsey_u_closed_form(t)).abs() < 1e-8);
    }
}

fn qubit_g() -> FluxoniumParams {
    FluxoniumParams::new("G", 1.212, 5.315, 0.547).unwrap()
}

#[test]
fn qubit_g_dielectric_t1() {
    let sol = converged_spectrum(&qubit_g(), FluxBias::half(), 3, 1e-10).unwrap();
    let m = matrix_elements(&sol, 0, 1).unwrap();
    let env = NoiseEnvironment {
        tan_delta_c: 2.64e-6,
        ..Default::default()
    };
    let t1 = t1_dielectric(&sol, &m, &env).unwrap();
    assert!(t1 / 1070.0 < 1.5 && 1070.0 / t1 < 1.5, "{t1}");
    let warm = NoiseEnvironment { temp: 0.0187, ..env };
    assert!(t1_dielectric(&sol, &m, &warm).unwrap() < t1);
}

#[test]
fn qubit_g_quasiparticle_rate_matches_hand_formula() {
    let p = qubit_g();
    let sol = converged_spectrum(&p, FluxBias::new(0.45).unwrap(), 3, 1e-10).unwrap();
    let m = matrix_elements(&sol, 0, 1).unwrap();
    let env = NoiseEnvironment {
        x_qp: 1e-8,
        temp: 0.0187,
        ..Default::default()
    };
    let f = sol.f01();
    let occ = 1.0 + (-f / (20.836619 * 0.0187)).exp();
    let hand_jj = 16.0 * 5.315e9 * m.sin_half_phi_abs().powi(2) * 1e-8 * (88.0 / f).sqrt() * occ * 1e-6;
    let hand_jja = 16.0 * 0.547e9 * (m.phi_abs() / 2.0).powi(2) * 1e-8 * (88.0 / f).sqrt() * occ * 1e-6;
    let jj = t1_quasiparticle(&sol, &m, &env, QpChannel::Jj).unwrap();
    let jja = t1_quasiparticle(&sol, &m, &env, QpChannel::Jja).unwrap();
    assert!((jj / hand_jj - 1.0).abs() < 1e-12);
    assert!((jja / hand_jja - 1.0).abs() < 1e-12);
    let none = NoiseEnvironment { x_qp: 0.0, ..env };
    assert_eq!(t1_quasiparticle(&sol, &m, &none, QpChannel::Jj).unwrap(), 0.0);
}

#[test]
fn zeta_times_f_squared_constant_at_zero_temperature() {
    let env = NoiseEnvironment {
        tan_delta_c: 2.0e-6,
        ..Default::default()
    };
    let (e_c, phi_sq) = (1.3, 7.0);
    let reference = {
        let t1 = 1.0 / dielectric_rate(0.15, e_c, phi_sq, &env).unwrap();
        t1 * phi_sq / e_c * 0.15 * 0.15
    };
    for i in 0..=80 {
        let f = 0.15 + 0.01 * i as f64;
        let t1 = 1.0 / dielectric_rate(f, e_c, phi_sq, &env).unwrap();
        let z = t1 * phi_sq / e_c;
        assert!((z * f * f / reference - 1.0).abs() < 1e-9);
        let doubled = NoiseEnvironment {
            tan_delta_c: 4.0e-6,
            ..env.clone()
        };
        let z2 = phi_sq / e_c / dielectric_rate(f, e_c, phi_sq, &doubled).unwrap();
        assert!((z2 / z - 0.5).abs() < 1e-12);
    }
}

#[test]
fn zeta_for_qubit_g() {
    let p = qubit_g();
    let sol = converged_spectrum(&p, FluxBias::half(), 3, 1e-10).unwrap();
    let m = matrix_elements(&sol, 0, 1).unwrap();
    let z = zeta(1070.0, &m, &p).unwrap();
    assert!((z - 1070.0 * m.phi_abs().powi(2) / 1.212).abs() < 1e-9);
    assert!(zeta(0.0, &m, &p).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dielectric_t1_decreasing(f in 0.1f64..1.0, tand in 1e-7f64..1e-5, temp in 0.0f64..0.05,
                                phi_sq in 0.5f64..10.0) {
        let env = NoiseEnvironment { tan_delta_c: tand, temp, ..Default::default() };
        let base = dielectric_rate(f, 1.2, phi_sq, &env).unwrap();
        let more_loss = NoiseEnvironment { tan_delta_c: tand * 1.1, ..env.clone() };
        let hotter = NoiseEnvironment { temp: temp + 0.001, ..env.clone() };
        prop_assert!(dielectric_rate(f, 1.2, phi_sq, &more_loss).unwrap() > base);
        prop_assert!(dielectric_rate(f, 1.2, phi_sq, &hotter).unwrap() > base);
        prop_assert!(dielectric_rate(f, 1.2, phi_sq * 1.1, &env).unwrap() > base);
        // finite temperature never lengthens T1
        let cold = NoiseEnvironment { temp: 0.0, ..env.clone() };
        prop_assert!(dielectric_rate(f, 1.2, phi_sq, &cold).unwrap() <= base);
        prop_assert!(coth_factor(f, temp) >= 1.0);
    }

    #[test]
    fn quasiparticle_scaling(x in 1e-10f64..1e-6, f in 0.1f64..2.0, k in 1.1f64..5.0) {
        let p = FluxoniumParams::new("p", 1.2, 5.0, 0.5).unwrap();
        let env = NoiseEnvironment { x_qp: x, ..Default::default() };
        let r = quasiparticle_rate(QpChannel::Jj, f, &p, 0.04, &env).unwrap();
        let scaled = NoiseEnvironment { x_qp: k * x, ..env.clone() };
        let r2 = quasiparticle_rate(QpChannel::Jj, f, &p, 0.04, &scaled).unwrap();
        prop_assert!((r2 / r - k).abs() < 1e-12 * k);
        let r4 = quasiparticle_rate(QpChannel::Jj, 4.0 * f, &p, 0.04, &env);
        if let Ok(r4) = r4 {
            prop_assert!((r4 / r - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn all_channels_off_is_unity(t in 0.0f64..1e4, d in -50.0f64..50.0) {
        let env = NoiseEnvironment::default();
        let chi = dephasing_envelope(SequenceType::cpmg(2).unwrap(), d, &env, t, f64::INFINITY).unwrap();
        prop_assert_eq!(chi, 1.0);
    }
}
