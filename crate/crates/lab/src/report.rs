use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::LabError;

/// How a metric's value is compared against its expectation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    /// `|value − expected| ≤ tol`.
    AbsDiff,
    /// `|value − expected| ≤ tol · |expected|`.
    RelDiff,
    /// `value ≥ expected − tol`.
    AtLeast,
    /// `value ≤ expected + tol`.
    AtMost,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub name: String,
    #[serde(with = "nullable_f64")]
    pub value: f64,
    #[serde(with = "nullable_f64")]
    pub expected: f64,
    pub tol: f64,
    pub provenance: String,
    pub check: Check,
}

impl Metric {
    pub fn new(name: &str, value: f64, expected: f64, tol: f64, check: Check, provenance: &str) -> Self {
        Self { name: name.into(), value, expected, tol, provenance: provenance.into(), check }
    }

    pub fn passes(&self) -> bool {
        if !self.value.is_finite() {
            return false;
        }
        match self.check {
            Check::AbsDiff => (self.value - self.expected).abs() <= self.tol,
            Check::RelDiff => (self.value - self.expected).abs() <= self.tol * self.expected.abs(),
            Check::AtLeast => self.value >= self.expected - self.tol,
            Check::AtMost => self.value <= self.expected + self.tol,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MeshStats {
    pub vertices: usize,
    pub faces: usize,
    /// Mean edge length of the primary mesh.
    pub h: f64,
}

/// Plot-ready numeric table, e.g. `(h, residual)` pairs of a refinement run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub scenario: String,
    pub status: Status,
    pub seed: u64,
    pub metrics: Vec<Metric>,
    pub mesh: MeshStats,
    pub wall_ms: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tables: Vec<Table>,
}

impl Report {
    pub fn new(scenario: &str, seed: u64, metrics: Vec<Metric>, mesh: MeshStats, tables: Vec<Table>) -> Self {
        let status = if metrics.iter().all(Metric::passes) { Status::Pass } else { Status::Fail };
        Self { scenario: scenario.into(), status, seed, metrics, mesh, wall_ms: 0, tables }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    pub fn metric(&self, name: &str) -> Option<&Metric> {
        self.metrics.iter().find(|m| m.name == name)
    }

    /// Canonical JSON of everything except the wall time.
    pub fn metric_block(&self) -> String {
        let mut r = self.clone();
        r.wall_ms = 0;
        serde_json::to_string(&r).expect("reports always serialize")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, LabError> {
        serde_json::from_str(text).map_err(|e| LabError::Report(e.to_string()))
    }

    /// One metric per row after a header line.
    pub fn metrics_csv(&self) -> Result<String, LabError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["name", "value", "expected", "tol", "check", "pass", "provenance"])?;
        for m in &self.metrics {
            w.write_record([
                m.name.clone(),
                format!("{:e}", m.value),
                format!("{:e}", m.expected),
                format!("{:e}", m.tol),
                serde_json::to_value(m.check).expect("check serializes").as_str().unwrap_or_default().to_string(),
                m.passes().to_string(),
                m.provenance.clone(),
            ])?;
        }
        csv_string(w)
    }
}

impl Table {
    pub fn to_csv(&self) -> Result<String, LabError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|x| format!("{x:e}")))?;
        }
        csv_string(w)
    }
}

fn csv_string(w: csv::Writer<Vec<u8>>) -> Result<String, LabError> {
    let bytes = w.into_inner().map_err(|e| LabError::Report(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| LabError::Report(e.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Both,
}

impl std::str::FromStr for Format {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "both" => Ok(Format::Both),
            other => Err(LabError::Usage(format!("unknown format {other:?} (json, csv, both)"))),
        }
    }
}

/// Writes the report under `dir/<scenario>/` and returns the written paths.
/// CSV output also writes one file per table.
pub fn emit_report(r: &Report, format: Format, dir: &Path) -> Result<Vec<PathBuf>, LabError> {
    let sub = dir.join(&r.scenario);
    fs::create_dir_all(&sub)?;
    let mut written = Vec::new();
    if matches!(format, Format::Json | Format::Both) {
        let p = sub.join("report.json");
        fs::write(&p, r.to_json())?;
        written.push(p);
    }
    if matches!(format, Format::Csv | Format::Both) {
        let p = sub.join("metrics.csv");
        fs::write(&p, r.metrics_csv()?)?;
        written.push(p);
        for t in &r.tables {
            let p = sub.join(format!("{}.csv", t.name));
            fs::write(&p, t.to_csv()?)?;
            written.push(p);
        }
    }
    Ok(written)
}

mod nullable_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Report {
        Report::new(
            "demo",
            7,
            vec![
                Metric::new("a", 1e-12, 0.0, 1e-9, Check::AbsDiff, "zero"),
                Metric::new("b", -1.99, -2.0, 0.02, Check::RelDiff, "relative"),
                Metric::new("c", 0.5, 1.0, 0.0, Check::AtMost, "upper"),
            ],
            MeshStats { vertices: 3, faces: 1, h: 0.5 },
            vec![Table { name: "t".into(), columns: vec!["h".into(), "e".into()], rows: vec![vec![0.1, 0.01]] }],
        )
    }

    #[test]
    fn checks() {
        assert!(sample().passed());
        assert!(!Metric::new("n", f64::NAN, 0.0, 1.0, Check::AtLeast, "").passes());
        assert!(!Metric::new("g", 0.5, 1.0, 0.25, Check::AtLeast, "").passes());
    }

    #[test]
    fn json_round_trip_and_csv_rows() {
        let mut r = sample();
        r.metrics.push(Metric::new("nan", f64::NAN, 0.0, 1.0, Check::AbsDiff, ""));
        let back = Report::from_json(&r.to_json()).unwrap();
        assert_eq!(back.metric_block(), r.metric_block());
        assert!(back.metric("nan").unwrap().value.is_nan());
        assert_eq!(r.metrics_csv().unwrap().lines().count(), r.metrics.len() + 1);
    }
}
