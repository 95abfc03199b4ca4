use fluxcoh_core::wafer::{load_wafer_csv, rn_to_ej, rsd_by_area, yield_report, ExclusionPolicy, YieldReport};
use fluxcoh_core::StatsSummary;
use serde::Serialize;

use crate::config::LoadedConfig;
use crate::error::Result;
use crate::output::OutputDir;

#[derive(Serialize)]
struct Summary<'a> {
    #[serde(flatten)]
    stats: &'a StatsSummary,
    yield_report: Option<YieldReport>,
}

pub fn run(cfg: &LoadedConfig, out: &mut OutputDir) -> Result<()> {
    let sec = cfg.section("wafer", &cfg.config.wafer)?;
    let mut map = load_wafer_csv(cfg.input("wafer.map", &sec.map)?)?;
    if let Some(t) = sec.short_threshold_ohm {
        if !(t.is_finite() && t >= 0.0) {
            return Err(cfg.invalid("`wafer.short_threshold_ohm` must be nonnegative"));
        }
        map.short_threshold_ohm = t;
    }
    let policy = ExclusionPolicy {
        edge_dies: sec.edge_dies.clone(),
        drop_open_short: sec.drop_open_short,
    };
    let stats = rsd_by_area(&map, &policy);
    let yield_report = if sec.targets.is_empty() {
        None
    } else {
        Some(yield_report(&map, &sec.targets, sec.tolerance, &sec.edge_dies)?)
    };
    out.write_json(
        "wafer_summary.json",
        &Summary {
            stats: &stats,
            yield_report,
        },
    )?;

    let rows = stats
        .groups
        .iter()
        .map(|g| {
            // E_J of one junction; array resistance is split evenly
            let n_junctions = map
                .records
                .iter()
                .find(|r| r.kind == g.kind && r.area_um2 == g.area_um2)
                .map_or(1, |r| r.n_junctions);
            let ej = match sec.delta_gap_ghz {
                Some(gap) => Some(rn_to_ej(g.mean_ohm / n_junctions as f64, gap)?),
                None => None,
            };
            Ok(format!(
                "{},{},{},{},{},{},{}",
                g.kind,
                g.area_um2,
                g.count,
                g.mean_ohm,
                g.std_ohm,
                g.rsd_percent,
                crate::output::cell(ej)
            ))
        })
        .collect::<fluxcoh_core::Result<Vec<String>>>()?;
    out.write_csv(
        "rsd_by_area.csv",
        "kind,area_um2,count,mean_ohm,std_ohm,rsd_percent,ej_ghz",
        &rows,
    )?;
    Ok(())
}
