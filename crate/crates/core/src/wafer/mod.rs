//! Junction-resistance wafer maps: uniformity, yield and R_n to E_J.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use log::info;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::RESISTANCE_QUANTUM_OHM;

/// Resistances at or below this are shorts, Ω.
pub const DEFAULT_SHORT_THRESHOLD_OHM: f64 = 10.0;
/// Smallest group for which statistics are reported.
pub const MIN_GROUP_SIZE: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum JunctionKind {
    #[serde(rename = "JJ")]
    Jj,
    #[serde(rename = "JJA")]
    Jja,
}

impl fmt::Display for JunctionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            JunctionKind::Jj => "JJ",
            JunctionKind::Jja => "JJA",
        })
    }
}

impl FromStr for JunctionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "JJ" => Ok(JunctionKind::Jj),
            "JJA" => Ok(JunctionKind::Jja),
            _ => Err(Error::invalid("kind", format!("expected JJ or JJA, got `{s}`"))),
        }
    }
}

/// One test structure. An open reads as `rn_ohm = inf`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaferRecord {
    pub die_id: String,
    pub x_mm: f64,
    pub y_mm: f64,
    pub kind: JunctionKind,
    /// Area of each junction, μm².
    pub area_um2: f64,
    pub n_junctions: u32,
    /// Total measured resistance, Ω.
    pub rn_ohm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordStatus {
    Ok,
    Open,
    Short,
}

impl WaferRecord {
    pub fn validate(&self) -> Result<()> {
        if self.die_id.trim().is_empty() {
            return Err(Error::invalid("die_id", "must not be empty"));
        }
        if !(self.area_um2.is_finite() && self.area_um2 > 0.0) {
            return Err(Error::invalid("area_um2", "must be positive"));
        }
        if self.n_junctions == 0 {
            return Err(Error::invalid("n_junctions", "must be at least 1"));
        }
        if self.kind == JunctionKind::Jj && self.n_junctions != 1 {
            return Err(Error::invalid("n_junctions", "a single JJ has exactly one junction"));
        }
        if self.rn_ohm.is_nan() || self.rn_ohm < 0.0 {
            return Err(Error::invalid("rn_ohm", "must be nonnegative or `open`"));
        }
        if !(self.x_mm.is_finite() && self.y_mm.is_finite()) {
            return Err(Error::invalid("x_mm/y_mm", "must be finite"));
        }
        Ok(())
    }
}

/// Structure grouping key: kind and junction area.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupKey {
    pub kind: JunctionKind,
    pub area_um2: f64,
}

impl GroupKey {
    fn of(r: &WaferRecord) -> Self {
        Self {
            kind: r.kind,
            area_um2: r.area_um2,
        }
    }
}

impl Eq for GroupKey {}

impl Ord for GroupKey {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.kind
            .cmp(&other.kind)
            .then(self.area_um2.total_cmp(&other.area_um2))
    }
}

impl PartialOrd for GroupKey {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaferMap {
    pub label: String,
    pub records: Vec<WaferRecord>,
    pub short_threshold_ohm: f64,
}

#[derive(Deserialize)]
struct CsvRow {
    die_id: String,
    x_mm: f64,
    y_mm: f64,
    kind: String,
    area_um2: f64,
    n_junctions: u32,
    rn_ohm: String,
}

const COLUMNS: [&str; 7] = ["die_id", "x_mm", "y_mm", "kind", "area_um2", "n_junctions", "rn_ohm"];

impl WaferMap {
    pub fn new(label: impl Into<String>, records: Vec<WaferRecord>) -> Result<Self> {
        for (i, r) in records.iter().enumerate() {
            r.validate().map_err(|e| Error::Row {
                row: i + 1,
                source: Box::new(e),
            })?;
        }
        Ok(Self {
            label: label.into(),
            records,
            short_threshold_ohm: DEFAULT_SHORT_THRESHOLD_OHM,
        })
    }

    pub fn status(&self, r: &WaferRecord) -> RecordStatus {
        if r.rn_ohm.is_infinite() {
            RecordStatus::Open
        } else if r.rn_ohm <= self.short_threshold_ohm {
            RecordStatus::Short
        } else {
            RecordStatus::Ok
        }
    }

    pub fn groups(&self) -> BTreeSet<GroupKey> {
        self.records.iter().map(GroupKey::of).collect()
    }

    pub fn from_reader(reader: impl Read, path: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);
        let parse_err = |line: u64, reason: String| Error::Parse {
            path: path.to_owned(),
            line,
            reason,
        };
        let headers = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
        for col in COLUMNS {
            if !headers.iter().any(|h| h == col) {
                return Err(parse_err(1, format!("missing column `{col}`")));
            }
        }
        let mut records = Vec::new();
        for row in rdr.records() {
            let row = row.map_err(|e| parse_err(e.position().map_or(0, |p| p.line()), e.to_string()))?;
            let line = row.position().map_or(0, |p| p.line());
            let raw: CsvRow = row
                .deserialize(Some(&headers))
                .map_err(|e| parse_err(line, e.to_string()))?;
            let rn_ohm = if raw.rn_ohm.eq_ignore_ascii_case("open") {
                f64::INFINITY
            } else {
                raw.rn_ohm
                    .parse()
                    .map_err(|_| parse_err(line, format!("rn_ohm `{}` is not a number or `open`", raw.rn_ohm)))?
            };
            let rec = WaferRecord {
                die_id: raw.die_id,
                x_mm: raw.x_mm,
                y_mm: raw.y_mm,
                kind: raw.kind.parse().map_err(|e: Error| parse_err(line, e.to_string()))?,
                area_um2: raw.area_um2,
                n_junctions: raw.n_junctions,
                rn_ohm,
            };
            rec.validate().map_err(|e| parse_err(line, e.to_string()))?;
            records.push(rec);
        }
        let label = path
            .file_stem()
            .map_or_else(String::new, |s| s.to_string_lossy().into_owned());
        Self::new(label, records)
    }

    pub fn write_csv(&self, out: impl Write, comments: &[String]) -> std::io::Result<()> {
        let mut out = out;
        for c in comments {
            writeln!(out, "# {c}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(COLUMNS)?;
        for r in &self.records {
            let rn = if r.rn_ohm.is_infinite() {
                "open".to_string()
            } else {
                r.rn_ohm.to_string()
            };
            w.write_record([
                r.die_id.clone(),
                r.x_mm.to_string(),
                r.y_mm.to_string(),
                r.kind.to_string(),
                r.area_um2.to_string(),
                r.n_junctions.to_string(),
                rn,
            ])?;
        }
        w.flush()
    }
}

/// Parses a wafer CSV with columns die_id,x_mm,y_mm,kind,area_um2,n_junctions,rn_ohm.
pub fn load_wafer_csv(path: impl AsRef<Path>) -> Result<WaferMap> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    WaferMap::from_reader(file, path)
}

/// Which records to leave out of the statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExclusionPolicy {
    /// Dies excluded for known processing problems.
    pub edge_dies: Vec<String>,
    pub drop_open_short: bool,
}

impl Default for ExclusionPolicy {
    fn default() -> Self {
        Self {
            edge_dies: Vec::new(),
            drop_open_short: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exclusion {
    pub die_id: String,
    pub rn_ohm: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub kind: JunctionKind,
    pub area_um2: f64,
    pub count: usize,
    pub mean_ohm: f64,
    /// Sample (n − 1) standard deviation.
    pub std_ohm: f64,
    pub rsd_percent: f64,
    pub excluded: Vec<Exclusion>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsSummary {
    pub wafer_label: String,
    pub groups: Vec<GroupStats>,
    /// Groups left out for having fewer than [`MIN_GROUP_SIZE`] records.
    pub notices: Vec<String>,
    pub n_parsed: usize,
    pub n_included: usize,
    pub n_excluded: usize,
    /// Share of non-edge records without an open or short.
    pub yield_percent: f64,
}

fn exclusion_reason(map: &WaferMap, r: &WaferRecord, policy: &ExclusionPolicy) -> Option<String> {
    if policy.edge_dies.iter().any(|d| d == &r.die_id) {
        return Some("edge die".into());
    }
    match map.status(r) {
        RecordStatus::Open if policy.drop_open_short => Some("open".into()),
        RecordStatus::Short if policy.drop_open_short => Some("short".into()),
        _ => None,
    }
}

/// Mean, sample standard deviation and RSD% of each (kind, area) group.
pub fn rsd_by_area(map: &WaferMap, policy: &ExclusionPolicy) -> StatsSummary {
    let mut included: BTreeMap<GroupKey, Vec<f64>> = BTreeMap::new();
    let mut excluded: BTreeMap<GroupKey, Vec<Exclusion>> = BTreeMap::new();
    for r in &map.records {
        let key = GroupKey::of(r);
        match exclusion_reason(map, r, policy) {
            Some(reason) => {
                info!("excluding {} {} {} μm²: {reason}", r.die_id, r.kind, r.area_um2);
                excluded.entry(key).or_default().push(Exclusion {
                    die_id: r.die_id.clone(),
                    rn_ohm: r.rn_ohm,
                    reason,
                });
            }
            None => included.entry(key).or_default().push(r.rn_ohm),
        }
    }
    let n_included: usize = included.values().map(Vec::len).sum();
    let n_excluded: usize = excluded.values().map(Vec::len).sum();
    let mut groups = Vec::new();
    let mut notices = Vec::new();
    for key in map.groups() {
        let values = included.remove(&key).unwrap_or_default();
        let excl = excluded.remove(&key).unwrap_or_default();
        if values.len() < MIN_GROUP_SIZE {
            let msg = format!(
                "{} {} μm²: {} usable record(s), need {MIN_GROUP_SIZE}; group omitted",
                key.kind,
                key.area_um2,
                values.len()
            );
            info!("{msg}");
            notices.push(msg);
            continue;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let std = var.sqrt();
        groups.push(GroupStats {
            kind: key.kind,
            area_um2: key.area_um2,
            count: values.len(),
            mean_ohm: mean,
            std_ohm: std,
            rsd_percent: 100.0 * std / mean,
            excluded: excl,
        });
    }
    StatsSummary {
        wafer_label: map.label.clone(),
        groups,
        notices,
        n_parsed: map.records.len(),
        n_included,
        n_excluded,
        yield_percent: hard_failure_yield(map, &policy.edge_dies),
    }
}

/// Percentage of records outside `edge_dies` that are neither open nor short.
pub fn hard_failure_yield(map: &WaferMap, edge_dies: &[String]) -> f64 {
    let considered: Vec<_> = map.records.iter().filter(|r| !edge_dies.contains(&r.die_id)).collect();
    if considered.is_empty() {
        return 100.0;
    }
    let ok = considered.iter().filter(|r| map.status(r) == RecordStatus::Ok).count();
    100.0 * ok as f64 / considered.len() as f64
}

/// Expected resistance of one group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupTarget {
    pub kind: JunctionKind,
    pub area_um2: f64,
    pub rn_ohm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YieldFailure {
    pub die_id: String,
    pub kind: JunctionKind,
    pub area_um2: f64,
    pub rn_ohm: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YieldReport {
    pub total: usize,
    pub passed: usize,
    pub yield_percent: f64,
    pub failures: Vec<YieldFailure>,
}

/// A record passes when it is neither open nor short and lies within
/// `tolerance` (fractional) of its group target. Edge dies are left out of
/// the total.
pub fn yield_report(
    map: &WaferMap,
    targets: &[GroupTarget],
    tolerance: f64,
    edge_dies: &[String],
) -> Result<YieldReport> {
    if !(tolerance.is_finite() && tolerance >= 0.0) {
        return Err(Error::invalid("tolerance", "must be nonnegative"));
    }
    let lookup: BTreeMap<GroupKey, f64> = targets
        .iter()
        .map(|t| {
            (
                GroupKey {
                    kind: t.kind,
                    area_um2: t.area_um2,
                },
                t.rn_ohm,
            )
        })
        .collect();
    for key in map.groups() {
        if !lookup.contains_key(&key) {
            return Err(Error::invalid(
                "targets",
                format!("no target for {} {} μm²", key.kind, key.area_um2),
            ));
        }
    }
    let mut total = 0;
    let mut failures = Vec::new();
    for r in map.records.iter().filter(|r| !edge_dies.contains(&r.die_id)) {
        total += 1;
        let target = lookup[&GroupKey::of(r)];
        let reason = match map.status(r) {
            RecordStatus::Open => Some("open".to_string()),
            RecordStatus::Short => Some("short".to_string()),
            RecordStatus::Ok if (r.rn_ohm - target).abs() > tolerance * target => Some(format!(
                "{:.1} Ω deviates {:.1}% from target {target} Ω",
                r.rn_ohm,
                100.0 * (r.rn_ohm / target - 1.0)
            )),
            RecordStatus::Ok => None,
        };
        if let Some(reason) = reason {
            failures.push(YieldFailure {
                die_id: r.die_id.clone(),
                kind: r.kind,
                area_um2: r.area_um2,
                rn_ohm: r.rn_ohm,
                reason,
            });
        }
    }
    let passed = total - failures.len();
    Ok(YieldReport {
        total,
        passed,
        yield_percent: if total == 0 {
            100.0
        } else {
            100.0 * passed as f64 / total as f64
        },
        failures,
    })
}

/// Ambegaokar–Baratoff: E_J/h = (Δ/h)·R_K / (8 R_n), GHz.
pub fn rn_to_ej(rn_ohm: f64, delta_gap_ghz: f64) -> Result<f64> {
    if !(rn_ohm > 0.0) {
        return Err(Error::invalid("rn_ohm", "must be positive"));
    }
    Ok(delta_gap_ghz * RESISTANCE_QUANTUM_OHM / (8.0 * rn_ohm))
}

/// Inverse of [`rn_to_ej`], Ω.
pub fn ej_to_rn(ej_ghz: f64, delta_gap_ghz: f64) -> Result<f64> {
    if !(ej_ghz > 0.0) {
        return Err(Error::invalid("e_j", "must be positive"));
    }
    Ok(delta_gap_ghz * RESISTANCE_QUANTUM_OHM / (8.0 * ej_ghz))
}
