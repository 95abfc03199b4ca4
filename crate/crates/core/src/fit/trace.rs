use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which state a relaxation trace was prepared in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum InitLabel {
    #[serde(rename = "from_0")]
    From0,
    #[serde(rename = "from_1")]
    From1,
    #[default]
    #[serde(rename = "none")]
    None,
}

/// Excited-state probability (or envelope amplitude) versus delay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayTrace {
    /// μs, strictly ascending.
    pub delays: Vec<f64>,
    pub p1: Vec<f64>,
    pub shots: Option<Vec<u64>>,
    pub init: InitLabel,
}

fn check_delays(delays: &[f64]) -> Result<()> {
    if delays.is_empty() {
        return Err(Error::invalid("delays", "trace is empty"));
    }
    if delays.iter().any(|d| !d.is_finite()) {
        return Err(Error::invalid("delays", "must be finite"));
    }
    if let Some(i) = delays.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::invalid(
            "delays",
            format!("not strictly ascending at index {}", i + 1),
        ));
    }
    Ok(())
}

impl DecayTrace {
    /// A measured population trace; probabilities must lie in [0, 1].
    pub fn new(delays: Vec<f64>, p1: Vec<f64>, shots: Option<Vec<u64>>, init: InitLabel) -> Result<Self> {
        check_delays(&delays)?;
        if p1.len() != delays.len() {
            return Err(Error::invalid("p1", "length differs from delays"));
        }
        if let Some(i) = p1.iter().position(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::invalid(
                "p1",
                format!("value {} at index {i} outside [0, 1]", p1[i]),
            ));
        }
        if let Some(s) = &shots {
            if s.len() != delays.len() {
                return Err(Error::invalid("shots", "length differs from delays"));
            }
            if s.contains(&0) {
                return Err(Error::invalid("shots", "shot counts must be positive"));
            }
        }
        Ok(Self {
            delays,
            p1,
            shots,
            init,
        })
    }

    /// A derived amplitude trace such as a Bloch-vector envelope. Values are
    /// nonnegative but not bounded by 1.
    pub fn envelope(delays: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        check_delays(&delays)?;
        if values.len() != delays.len() {
            return Err(Error::invalid("p1", "length differs from delays"));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::invalid("p1", "envelope values must be finite and nonnegative"));
        }
        Ok(Self {
            delays,
            p1: values,
            shots: None,
            init: InitLabel::None,
        })
    }

    pub fn len(&self) -> usize {
        self.delays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delays.is_empty()
    }

    /// Binomial standard deviation per point, or `None` without shot counts.
    pub(crate) fn sigmas(&self) -> Option<Vec<f64>> {
        self.shots.as_ref().map(|shots| {
            self.p1
                .iter()
                .zip(shots)
                .map(|(&p, &n)| {
                    let n = n as f64;
                    ((p * (1.0 - p)).max(1.0 / n) / n).sqrt()
                })
                .collect()
        })
    }

    pub fn read_csv(path: impl AsRef<Path>, init: InitLabel) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_reader(file, path, init)
    }

    pub fn from_reader(reader: impl Read, path: &Path, init: InitLabel) -> Result<Self> {
        let rows = read_rows(reader, path, false)?;
        let has_shots = rows.iter().any(|r| r.shots.is_some());
        if has_shots && rows.iter().any(|r| r.shots.is_none()) {
            return Err(parse(path, 0, "shots column partially filled"));
        }
        let shots = has_shots.then(|| rows.iter().map(|r| r.shots.unwrap()).collect());
        Self::new(
            rows.iter().map(|r| r.delay).collect(),
            rows.iter().map(|r| r.p1).collect(),
            shots,
            init,
        )
    }

    pub fn write_csv(&self, mut out: impl Write, comments: &[String]) -> std::io::Result<()> {
        for c in comments {
            writeln!(out, "# {c}")?;
        }
        match &self.shots {
            Some(shots) => {
                writeln!(out, "delay_us,p1,shots")?;
                for ((d, p), s) in self.delays.iter().zip(&self.p1).zip(shots) {
                    writeln!(out, "{d},{p},{s}")?;
                }
            }
            None => {
                writeln!(out, "delay_us,p1")?;
                for (d, p) in self.delays.iter().zip(&self.p1) {
                    writeln!(out, "{d},{p}")?;
                }
            }
        }
        Ok(())
    }
}

/// Three traces read out at analysis phases 0, π/3 and 2π/3.
#[derive(Debug, Clone, PartialEq)]
pub struct DephasingTriple {
    traces: [DecayTrace; 3],
}

/// Analysis phases of the tri-phase protocol in degrees.
pub const TRIPLE_PHASES_DEG: [u32; 3] = [0, 60, 120];

impl DephasingTriple {
    pub fn new(traces: [DecayTrace; 3]) -> Result<Self> {
        if traces[1].delays != traces[0].delays || traces[2].delays != traces[0].delays {
            return Err(Error::invalid("delays", "the three traces use different delay grids"));
        }
        Ok(Self { traces })
    }

    pub fn traces(&self) -> &[DecayTrace; 3] {
        &self.traces
    }

    pub fn delays(&self) -> &[f64] {
        &self.traces[0].delays
    }

    /// One CSV with columns delay_us, phase_deg, p1[, shots].
    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_reader(file, path)
    }

    pub fn from_reader(reader: impl Read, path: &Path) -> Result<Self> {
        let rows = read_rows(reader, path, true)?;
        let mut split: [Vec<&Row>; 3] = Default::default();
        for r in &rows {
            let idx = TRIPLE_PHASES_DEG
                .iter()
                .position(|&p| (r.phase - p as f64).abs() < 1e-9)
                .ok_or_else(|| parse(path, r.line, "phase_deg must be one of 0, 60, 120"))?;
            split[idx].push(r);
        }
        let build = |rows: &Vec<&Row>| -> Result<DecayTrace> {
            let has_shots = rows.iter().all(|r| r.shots.is_some()) && !rows.is_empty();
            DecayTrace::new(
                rows.iter().map(|r| r.delay).collect(),
                rows.iter().map(|r| r.p1).collect(),
                has_shots.then(|| rows.iter().map(|r| r.shots.unwrap()).collect()),
                InitLabel::None,
            )
        };
        Self::new([build(&split[0])?, build(&split[1])?, build(&split[2])?])
    }

    pub fn write_csv(&self, mut out: impl Write, comments: &[String]) -> std::io::Result<()> {
        for c in comments {
            writeln!(out, "# {c}")?;
        }
        let with_shots = self.traces.iter().all(|t| t.shots.is_some());
        writeln!(out, "delay_us,phase_deg,p1{}", if with_shots { ",shots" } else { "" })?;
        for (trace, phase) in self.traces.iter().zip(TRIPLE_PHASES_DEG) {
            for i in 0..trace.len() {
                write!(out, "{},{phase},{}", trace.delays[i], trace.p1[i])?;
                if with_shots {
                    write!(out, ",{}", trace.shots.as_ref().unwrap()[i])?;
                }
                writeln!(out)?;
            }
        }
        Ok(())
    }
}

struct Row {
    line: u64,
    delay: f64,
    phase: f64,
    p1: f64,
    shots: Option<u64>,
}

fn parse(path: &Path, line: u64, reason: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_owned(),
        line,
        reason: reason.into(),
    }
}

fn read_rows(reader: impl Read, path: &Path, with_phase: bool) -> Result<Vec<Row>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers().map_err(|e| parse(path, 1, e.to_string()))?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let missing = |name: &str| Error::invalid(name, format!("column missing in {}", path.display()));
    let delay_col = col("delay_us").ok_or_else(|| missing("delay_us"))?;
    let p1_col = col("p1").ok_or_else(|| missing("p1"))?;
    let phase_col = if with_phase {
        Some(col("phase_deg").ok_or_else(|| missing("phase_deg"))?)
    } else {
        None
    };
    let shots_col = col("shots");
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            parse(path, line, e.to_string())
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let num = |idx: usize, name: &str| -> Result<f64> {
            let field = rec.get(idx).unwrap_or("");
            field
                .parse::<f64>()
                .map_err(|_| parse(path, line, format!("{name}: cannot parse `{field}`")))
        };
        let shots = match shots_col.and_then(|i| rec.get(i)).filter(|s| !s.is_empty()) {
            Some(s) => Some(
                s.parse::<u64>()
                    .map_err(|_| parse(path, line, format!("shots: cannot parse `{s}`")))?,
            ),
            None => None,
        };
        rows.push(Row {
            line,
            delay: num(delay_col, "delay_us")?,
            phase: match phase_col {
                Some(i) => num(i, "phase_deg")?,
                None => 0.0,
            },
            p1: num(p1_col, "p1")?,
            shots,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_trace() {
        assert!(DecayTrace::new(vec![0.0, 1.0], vec![0.5, 1.2], None, InitLabel::None).is_err());
        assert!(DecayTrace::new(vec![1.0, 1.0], vec![0.5, 0.2], None, InitLabel::None).is_err());
        assert!(DecayTrace::new(vec![], vec![], None, InitLabel::None).is_err());
        assert!(DecayTrace::envelope(vec![0.0, 1.0], vec![1.3, 0.9]).is_ok());
    }

    #[test]
    fn csv_round_trip() {
        let t = DecayTrace::new(vec![0.0, 2.5], vec![0.9, 0.4], Some(vec![100, 100]), InitLabel::From1).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf, &["seed 3".into()]).unwrap();
        let back = DecayTrace::from_reader(buf.as_slice(), Path::new("t.csv"), InitLabel::From1).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn bad_row_reports_line() {
        let text = "delay_us,p1\n0,0.5\n1,abc\n";
        match DecayTrace::from_reader(text.as_bytes(), Path::new("t.csv"), InitLabel::None) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_column_is_named() {
        let err = DecayTrace::from_reader("delay_us,x\n0,1\n".as_bytes(), Path::new("t"), InitLabel::None).unwrap_err();
        assert!(err.to_string().contains("p1"));
    }

    #[test]
    fn triple_round_trip() {
        let mk = |p: f64| DecayTrace::new(vec![0.0, 1.0], vec![p, p], None, InitLabel::None).unwrap();
        let tr = DephasingTriple::new([mk(0.1), mk(0.2), mk(0.3)]).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf, &[]).unwrap();
        assert_eq!(
            DephasingTriple::from_reader(buf.as_slice(), Path::new("x")).unwrap(),
            tr
        );
    }
}
