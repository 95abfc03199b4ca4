use std::path::Path;

use fluxcoh_core::synth::{synth_wafer, WaferGroupSpec};
use fluxcoh_core::wafer::{
    ej_to_rn, hard_failure_yield, load_wafer_csv, rn_to_ej, rsd_by_area, yield_report, ExclusionPolicy, GroupTarget,
    JunctionKind, WaferRecord,
};
use fluxcoh_core::WaferMap;
use proptest::prelude::*;

fn record(die: &str, kind: JunctionKind, area: f64, n: u32, rn: f64) -> WaferRecord {
    WaferRecord {
        die_id: die.into(),
        x_mm: 0.0,
        y_mm: 0.0,
        kind,
        area_um2: area,
        n_junctions: n,
        rn_ohm: rn,
    }
}

fn group(values: &[f64]) -> WaferMap {
    let records = values
        .iter()
        .enumerate()
        .map(|(i, v)| record(&format!("D{i}"), JunctionKind::Jj, 0.04, 1, *v))
        .collect();
    WaferMap::new("test", records).unwrap()
}

fn jj(area: f64, rn: f64, rsd: f64) -> WaferGroupSpec {
    WaferGroupSpec {
        kind: JunctionKind::Jj,
        area_um2: area,
        n_junctions: 1,
        rn_mean_ohm: rn,
        rsd,
    }
}

#[test]
fn three_point_group() {
    let s = rsd_by_area(&group(&[9.0e3, 10.0e3, 11.0e3]), &ExclusionPolicy::default());
    let g = &s.groups[0];
    assert!((g.mean_ohm - 1e4).abs() < 1e-9);
    assert!((g.std_ohm - 1e3).abs() < 1e-9);
    assert!((g.rsd_percent - 10.0).abs() < 1e-12);
}

#[test]
fn constant_group_has_zero_rsd() {
    let s = rsd_by_area(&group(&[5e3; 7]), &ExclusionPolicy::default());
    assert_eq!(s.groups[0].rsd_percent, 0.0);
}

#[test]
fn small_groups_are_omitted_with_a_notice() {
    let s = rsd_by_area(&group(&[5e3, 6e3]), &ExclusionPolicy::default());
    assert!(s.groups.is_empty());
    assert_eq!(s.notices.len(), 1);
}

/// Fraction of 200 synthetic wafers (64 dies, σ/μ = 5%) whose RSD lands in
/// (3.5, 6.5)%. The sample std of 64 normal draws has relative spread about
/// 1/√126 ≈ 8.9%, so the window is ±3.4σ wide.
#[test]
fn synthetic_rsd_within_sampling_bounds() {
    let seeds = 200;
    let mut inside = 0;
    let mut mean_var = 0.0;
    for seed in 0..seeds {
        let map = synth_wafer(&[jj(0.04, 8000.0, 0.05)], 64, seed).unwrap();
        let g = &rsd_by_area(&map, &ExclusionPolicy::default()).groups[0];
        assert_eq!(g.count, 64);
        if g.rsd_percent > 3.5 && g.rsd_percent < 6.5 {
            inside += 1;
        }
        mean_var += (g.std_ohm / 8000.0).powi(2) / seeds as f64;
    }
    assert!(inside as f64 >= 0.95 * seeds as f64, "{inside}/{seeds}");
    // sample variance is unbiased: E[s²] = σ², with spread σ²·√(2/63)/√200
    assert!((mean_var / 0.0025 - 1.0).abs() < 0.05, "{mean_var}");
}

#[test]
fn grid_wafer_round_trips_through_csv() {
    let groups = [jj(0.01, 20000.0, 0.08), jj(0.42, 600.0, 0.03)];
    let map = synth_wafer(&groups, 128, 3).unwrap();
    assert_eq!(map.records.len(), 256);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("grid.csv");
    map.write_csv(std::fs::File::create(&path).unwrap(), &["seed 3".into()])
        .unwrap();
    let back = load_wafer_csv(&path).unwrap();
    assert_eq!(back.label, "grid");
    assert_eq!(back.records, map.records);
    let s = rsd_by_area(&back, &ExclusionPolicy::default());
    assert_eq!(s.groups.len(), 2);
    assert_eq!(s.n_parsed, 256);
}

#[test]
fn header_only_file_gives_empty_map() {
    let text = "die_id,x_mm,y_mm,kind,area_um2,n_junctions,rn_ohm\n";
    let map = WaferMap::from_reader(text.as_bytes(), Path::new("empty.csv")).unwrap();
    assert!(map.records.is_empty());
    let s = rsd_by_area(&map, &ExclusionPolicy::default());
    assert!(s.groups.is_empty());
    assert_eq!(s.yield_percent, 100.0);
}

#[test]
fn bad_rows_report_line_numbers() {
    let text = "die_id,x_mm,y_mm,kind,area_um2,n_junctions,rn_ohm\nD0,0,0,JJ,0.04,1,100\nD1,0,0,JJ,0.04,2,100\n";
    let err = WaferMap::from_reader(text.as_bytes(), Path::new("w.csv")).unwrap_err();
    assert!(err.to_string().contains('3'), "{err}");
}

#[test]
fn one_open_in_256() {
    let mut map = synth_wafer(&[jj(0.04, 8000.0, 0.05)], 256, 1).unwrap();
    map.records[17].rn_ohm = f64::INFINITY;
    let y = hard_failure_yield(&map, &[]);
    assert!((y - 100.0 * 255.0 / 256.0).abs() < 1e-12);
    let s = rsd_by_area(&map, &ExclusionPolicy::default());
    assert_eq!(s.n_excluded, 1);
    assert_eq!(s.n_included + s.n_excluded, s.n_parsed);
    assert_eq!(s.groups[0].excluded[0].reason, "open");
}

/// Almost every structure shows its expected R_n; the few hard failures sit
/// on edge dies.
#[test]
fn yield_above_99_percent_with_edge_dies_excluded() {
    let groups = [
        jj(0.04, 8000.0, 0.04),
        WaferGroupSpec {
            kind: JunctionKind::Jja,
            area_um2: 0.4,
            n_junctions: 100,
            rn_mean_ohm: 90000.0,
            rsd: 0.03,
        },
    ];
    let mut map = synth_wafer(&groups, 100, 21).unwrap();
    let edge: Vec<String> = ["D00", "D09", "D90", "D99"].map(String::from).to_vec();
    for r in map.records.iter_mut() {
        if r.die_id == "D00" {
            r.rn_ohm = f64::INFINITY;
        }
        if r.die_id == "D99" {
            r.rn_ohm = 1.0;
        }
    }
    // one interior short
    map.records[2 * 45].rn_ohm = 2.0;
    let targets = [
        GroupTarget {
            kind: JunctionKind::Jj,
            area_um2: 0.04,
            rn_ohm: 8000.0,
        },
        GroupTarget {
            kind: JunctionKind::Jja,
            area_um2: 0.4,
            rn_ohm: 90000.0,
        },
    ];
    let with_edges = yield_report(&map, &targets, 0.25, &[]).unwrap();
    let without = yield_report(&map, &targets, 0.25, &edge).unwrap();
    assert_eq!(without.total, 192);
    assert!(without.yield_percent > 99.0, "{}", without.yield_percent);
    assert!(with_edges.yield_percent < without.yield_percent);
    assert_eq!(without.failures.len(), 1);
    assert_eq!(without.failures[0].reason, "short");
    assert!(yield_report(&map, &targets[..1], 0.25, &edge).is_err());
}

#[test]
fn out_of_tolerance_records_fail() {
    let map = group(&[10e3, 10.5e3, 13e3]);
    let t = [GroupTarget {
        kind: JunctionKind::Jj,
        area_um2: 0.04,
        rn_ohm: 10e3,
    }];
    let r = yield_report(&map, &t, 0.1, &[]).unwrap();
    assert_eq!(r.passed, 2);
    assert_eq!(r.failures[0].die_id, "D2");
}

#[test]
fn ambegaokar_baratoff_example() {
    // 44 GHz · 25812.807 Ω / (8 · 28390 Ω)
    let ej = rn_to_ej(28390.0, 44.0).unwrap();
    assert!((ej - 5.000_724).abs() < 1e-5, "{ej}");
    assert!((ej - 5.0).abs() < 0.01);
    assert!(rn_to_ej(1e30, 44.0).unwrap() < 1e-20);
    assert!(rn_to_ej(0.0, 44.0).is_err());
}

proptest! {
    #[test]
    fn conversion_round_trips(rn in 10.0f64..1e7, gap in 1.0f64..100.0) {
        let back = ej_to_rn(rn_to_ej(rn, gap).unwrap(), gap).unwrap();
        prop_assert!((back / rn - 1.0).abs() < 1e-12);
    }

    #[test]
    fn conversion_is_monotone_and_linear(rn in 10.0f64..1e7, gap in 1.0f64..100.0, k in 1.01f64..10.0) {
        prop_assert!(rn_to_ej(rn * k, gap).unwrap() < rn_to_ej(rn, gap).unwrap());
        let scaled = rn_to_ej(rn, gap * k).unwrap() / rn_to_ej(rn, gap).unwrap();
        prop_assert!((scaled / k - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rsd_is_scale_invariant(values in prop::collection::vec(100.0f64..1e5, 3..40), k in 0.01f64..100.0) {
        let a = rsd_by_area(&group(&values), &ExclusionPolicy::default());
        let scaled: Vec<f64> = values.iter().map(|v| v * k).collect();
        let b = rsd_by_area(&group(&scaled), &ExclusionPolicy::default());
        let (ra, rb) = (a.groups[0].rsd_percent, b.groups[0].rsd_percent);
        prop_assert!((ra - rb).abs() <= 1e-9 * ra.max(1e-9));
        prop_assert!(a.yield_percent <= 100.0);
    }
}
