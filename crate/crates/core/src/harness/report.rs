use std::collections::BTreeMap;
use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use super::config::{ExperimentConfig, ExperimentKind};
use super::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `value ≤ bound`
    AtMost,
    /// `value < bound`
    Below,
    /// `value > bound`
    Above,
    /// `value ≥ bound`
    AtLeast,
}

/// One pass/fail decision together with the bound that defined it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub relation: Relation,
    pub bound: f64,
    pub passed: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, relation: Relation, bound: f64) -> Self {
        let passed = match relation {
            Relation::AtMost => value <= bound,
            Relation::Below => value < bound,
            Relation::Above => value > bound,
            Relation::AtLeast => value >= bound,
        };
        Self {
            name: name.into(),
            value,
            relation,
            bound,
            passed,
        }
    }

    pub fn line(&self) -> String {
        let op = match self.relation {
            Relation::AtMost => "<=",
            Relation::Below => "<",
            Relation::Above => ">",
            Relation::AtLeast => ">=",
        };
        format!(
            "[{}] {}: {:e} {} {:e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.value,
            op,
            self.bound
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(
            row.len(),
            self.columns.len(),
            "row width mismatch in {}",
            self.name
        );
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| format_number(*v)))?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub software_version: String,
    pub experiment: ExperimentKind,
    pub config: ExperimentConfig,
    pub tables: Vec<Table>,
    pub summary: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    pub checks: Vec<Check>,
    pub stages: Vec<StageRecord>,
    pub passed: bool,
    /// Wall-clock seconds per stage; exported separately so the report
    /// itself stays byte-stable.
    #[serde(skip)]
    pub timings: Vec<(String, f64)>,
}

/// Seventeen significant digits, the Rust float syntax otherwise.
pub(crate) fn format_number(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

struct DigitsFormatter(PrettyFormatter<'static>);

impl Formatter for DigitsFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(format_number(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

impl Report {
    pub fn new(experiment: ExperimentKind, config: ExperimentConfig) -> Self {
        Self {
            software_version: format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION")),
            experiment,
            config,
            tables: Vec::new(),
            summary: BTreeMap::new(),
            notes: Vec::new(),
            checks: Vec::new(),
            stages: Vec::new(),
            passed: true,
            timings: Vec::new(),
        }
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub(crate) fn finish(&mut self) {
        self.passed = self.checks.iter().all(|c| c.passed) && self.stages.iter().all(|s| s.ok);
    }

    pub fn to_json(&self) -> Result<String> {
        let mut buf = Vec::new();
        let mut ser = serde_json::Serializer::with_formatter(
            &mut buf,
            DigitsFormatter(PrettyFormatter::new()),
        );
        self.serialize(&mut ser)?;
        buf.push(b'\n');
        Ok(String::from_utf8(buf).expect("json is utf8"))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// `report.json` plus `timings.json`.
    pub fn write_json(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), self.to_json()?)?;
        let timings: BTreeMap<&str, f64> =
            self.timings.iter().map(|(k, v)| (k.as_str(), *v)).collect();
        std::fs::write(
            dir.join("timings.json"),
            serde_json::to_string_pretty(&timings)?,
        )?;
        Ok(())
    }

    /// One `<table>.csv` per record table.
    pub fn write_csv_bundle(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for t in &self.tables {
            t.write_csv(&dir.join(format!("{}.csv", t.name)))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Report {
        let cfg = ExperimentConfig::from_toml("experiment = \"mass\"\n[metric]\nkind = \"flat\"\n")
            .unwrap();
        let mut r = Report::new(ExperimentKind::Mass, cfg);
        let mut t = Table::new("mass", &["R", "mass_estimate"]);
        t.push(vec![100.0, 1.0 / 3.0]);
        t.push(vec![200.0, -2.5e-17]);
        r.tables.push(t);
        r.summary.insert("x".into(), std::f64::consts::PI);
        r.checks.push(Check::new("c", 1e-5, Relation::AtMost, 1e-4));
        r.finish();
        r
    }

    #[test]
    fn json_roundtrip_is_exact() {
        let r = sample();
        let text = r.to_json().unwrap();
        assert!(text.contains("3.1415926535897931e0"), "{text}");
        assert_eq!(Report::from_json(&text).unwrap(), r);
        assert_eq!(r.to_json().unwrap(), text);
    }

    #[test]
    fn csv_bundle_has_one_file_per_table() {
        let dir = tempfile::tempdir().unwrap();
        let mut r = sample();
        r.tables.push(Table::new("other", &["a"]));
        r.write_csv_bundle(dir.path()).unwrap();
        let mut names: Vec<_> = std::fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        names.sort();
        assert_eq!(names, ["mass.csv", "other.csv"]);
        let text = std::fs::read_to_string(dir.path().join("mass.csv")).unwrap();
        assert_eq!(text.lines().next(), Some("R,mass_estimate"));
        assert!(text.contains("3.3333333333333331e-1"));
    }

    #[test]
    fn checks_carry_their_bounds() {
        let c = Check::new("x", 2.0, Relation::Below, 1.0);
        assert!(!c.passed);
        assert!(c.line().starts_with("[FAIL] x"));
        assert!(Check::new("y", 1.0, Relation::AtLeast, 1.0).passed);
    }
}
