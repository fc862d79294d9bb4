use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{LabError, LabResult};

/// Plot-ready `(x, y)` data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub x_label: String,
    pub y_label: String,
    #[serde(with = "lrip_core::serde_ext::vec")]
    pub x: Vec<f64>,
    #[serde(with = "lrip_core::serde_ext::vec")]
    pub y: Vec<f64>,
}

impl Series {
    pub fn new(x_label: &str, y_label: &str) -> Self {
        Self {
            x_label: x_label.into(),
            y_label: y_label.into(),
            x: Vec::new(),
            y: Vec::new(),
        }
    }

    pub fn push(&mut self, x: f64, y: f64) {
        self.x.push(x);
        self.y.push(y);
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// Everything a run produces. `payload_json` is reproducible byte for byte;
/// only `wall_clock_seconds` varies between runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub version: String,
    pub experiment: String,
    pub config: ExperimentConfig,
    /// Label -> seed, in derivation order of the labels' names.
    pub seed_lineage: BTreeMap<String, u64>,
    pub results: serde_json::Value,
    pub series: BTreeMap<String, Series>,
    pub wall_clock_seconds: f64,
}

impl Report {
    pub fn payload_json(&self) -> String {
        let mut copy = self.clone();
        copy.wall_clock_seconds = 0.0;
        serde_json::to_string_pretty(&copy).expect("report serializes")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Writes `report.json` and the configured CSV series into `dir`.
    pub fn write(&self, dir: &Path) -> LabResult<Vec<std::path::PathBuf>> {
        let out = |e: std::io::Error, p: &Path| LabError::Output(format!("{}: {e}", p.display()));
        std::fs::create_dir_all(dir).map_err(|e| out(e, dir))?;
        let mut written = Vec::new();
        let path = dir.join("report.json");
        std::fs::write(&path, self.to_json() + "\n").map_err(|e| out(e, &path))?;
        written.push(path);
        for name in &self.config.output.csv {
            let csv = emit_plot_data(self, name)?;
            let path = dir.join(format!("{name}.csv"));
            std::fs::write(&path, csv).map_err(|e| out(e, &path))?;
            written.push(path);
        }
        Ok(written)
    }
}

fn fmt_value(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v}")
    }
}

/// Two-column CSV with a header row, in stored order.
pub fn emit_plot_data(report: &Report, series: &str) -> LabResult<String> {
    let s = report.series.get(series).ok_or_else(|| {
        let known: Vec<&str> = report.series.keys().map(String::as_str).collect();
        LabError::Config(format!("unknown series {series:?}; available: {}", known.join(", ")))
    })?;
    let mut out = format!("{},{}\n", s.x_label, s.y_label);
    for (x, y) in s.x.iter().zip(&s.y) {
        let _ = writeln!(out, "{},{}", fmt_value(*x), fmt_value(*y));
    }
    Ok(out)
}
