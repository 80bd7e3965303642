//! Report types and file emission.

use crate::config::{Config, ExperimentId};
use serde::Serialize;
use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

/// One CSV line.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Row {
    pub experiment: String,
    pub n: Option<usize>,
    pub s: String,
    pub t: String,
    pub quantity: String,
    pub numeric: f64,
    pub predicted: f64,
    pub abs_err: f64,
    pub rel_err: f64,
}

impl Row {
    pub fn new(experiment: ExperimentId, n: Option<usize>, s: &str, t: &str, quantity: impl Into<String>, numeric: f64, predicted: f64) -> Row {
        let abs_err = (numeric - predicted).abs();
        let rel_err = if predicted != 0.0 { abs_err / predicted.abs() } else { abs_err };
        Row {
            experiment: experiment.to_string(),
            n,
            s: s.to_string(),
            t: t.to_string(),
            quantity: quantity.into(),
            numeric,
            predicted,
            abs_err,
            rel_err,
        }
    }
}

pub const CSV_COLUMNS: [&str; 9] = ["experiment", "n", "s", "t", "quantity", "numeric", "predicted", "abs_err", "rel_err"];

/// Outcome of one acceptance criterion.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Criterion {
    pub id: String,
    pub pass: bool,
    pub measured: BTreeMap<String, f64>,
    pub checks: BTreeMap<String, bool>,
    pub detail: String,
}

impl Criterion {
    pub fn new(id: &str) -> Criterion {
        Criterion { id: id.into(), pass: true, measured: BTreeMap::new(), checks: BTreeMap::new(), detail: String::new() }
    }

    pub fn measure(&mut self, key: &str, v: f64) {
        self.measured.insert(key.into(), v);
    }

    /// Records a named sub-check; any failing sub-check fails the criterion.
    pub fn check(&mut self, key: &str, ok: bool) {
        self.checks.insert(key.into(), ok);
        self.pass &= ok;
    }

    pub fn line(&self) -> String {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        let nums: Vec<String> = self.measured.iter().map(|(k, v)| format!("{k}={v:.6e}")).collect();
        let failed: Vec<&str> = self.checks.iter().filter(|(_, ok)| !**ok).map(|(k, _)| k.as_str()).collect();
        let mut s = format!("{} {verdict} {}", self.id, nums.join(" "));
        if !failed.is_empty() {
            s.push_str(&format!(" failed: {}", failed.join(",")));
        }
        s
    }
}

/// Plot-ready two-column data.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DatFile {
    pub name: String,
    pub columns: (String, String),
    pub points: Vec<(f64, f64)>,
}

impl DatFile {
    pub fn render(&self) -> String {
        let mut body = format!("# {} {}\n", self.columns.0, self.columns.1);
        for (x, y) in &self.points {
            body.push_str(&format!("{x:.17e} {y:.17e}\n"));
        }
        body
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub experiment: ExperimentId,
    pub version: String,
    pub config: Config,
    pub criteria: Vec<Criterion>,
    pub rows: Vec<Row>,
    #[serde(skip)]
    pub dat: Vec<DatFile>,
    /// wall-clock seconds per stage, written to a sidecar file
    #[serde(skip)]
    pub runtimes: BTreeMap<String, f64>,
}

impl Report {
    pub fn pass(&self) -> bool {
        self.criteria.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    pub fn csv(&self) -> Result<String, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r)?;
        }
        if self.rows.is_empty() {
            w.write_record(CSV_COLUMNS)?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("csv is utf-8"))
    }

    /// Writes `<id>.json`, `<id>.csv`, `<id>.runtimes.json` and optionally `<id>_<name>.dat`.
    pub fn write(&self, dir: &Path, with_dat: bool) -> io::Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let id = self.experiment.to_string();
        let mut out = Vec::new();
        let mut put = |name: String, body: String| -> io::Result<()> {
            let p = dir.join(name);
            fs::write(&p, body)?;
            out.push(p);
            Ok(())
        };
        put(format!("{id}.json"), self.to_json().map_err(io::Error::other)?)?;
        put(format!("{id}.csv"), self.csv().map_err(io::Error::other)?)?;
        put(format!("{id}.runtimes.json"), serde_json::to_string_pretty(&self.runtimes).map_err(io::Error::other)?)?;
        if with_dat {
            for d in &self.dat {
                put(format!("{id}_{}.dat", d.name), d.render())?;
            }
        }
        Ok(out)
    }
}
