use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// A file written by a run, with the SHA-256 of its bytes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub name: String,
    pub sha256: String,
}

/// One acceptance check of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Observed value; absent when not finite.
    pub value: Option<f64>,
    pub threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

/// Record of a scenario run. Everything except `timestamp` is a function
/// of the effective configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub artifact_version: String,
    pub schema_version: u32,
    pub scenario: String,
    pub config_hash: String,
    pub seed: u64,
    pub timestamp: String,
    pub outputs: Vec<OutputRecord>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl RunManifest {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

/// A named (x, y) series for plotting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub x_label: String,
    pub y_label: String,
    pub points: Vec<(f64, f64)>,
    #[serde(default)]
    pub log_x: bool,
    #[serde(default)]
    pub log_y: bool,
}

impl Series {
    pub fn new(
        name: impl Into<String>,
        x_label: &str,
        y_label: &str,
        points: Vec<(f64, f64)>,
    ) -> Self {
        Self {
            name: name.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            points,
            log_x: false,
            log_y: false,
        }
    }

    pub fn log_x(mut self) -> Self {
        self.log_x = true;
        self
    }

    pub fn log_xy(mut self) -> Self {
        self.log_x = true;
        self.log_y = true;
        self
    }
}

/// Output directory, run seed and the manifest under construction.
#[derive(Debug)]
pub struct RunContext {
    pub out_dir: PathBuf,
    pub seed: u64,
    pub budget: u64,
    pub manifest: RunManifest,
    pub series: Vec<Series>,
}

impl RunContext {
    pub fn new(
        out_dir: &Path,
        scenario: &str,
        config_hash: String,
        seed: u64,
        budget: u64,
    ) -> Result<Self> {
        fs::create_dir_all(out_dir)?;
        Ok(Self {
            out_dir: out_dir.to_path_buf(),
            seed,
            budget,
            manifest: RunManifest {
                artifact_version: ARTIFACT_VERSION.into(),
                schema_version: super::SCHEMA_VERSION,
                scenario: scenario.into(),
                config_hash,
                seed,
                timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
                outputs: Vec::new(),
                checks: Vec::new(),
                passed: true,
            },
            series: Vec::new(),
        })
    }

    pub fn write_file(&mut self, name: &str, contents: &str) -> Result<()> {
        fs::write(self.out_dir.join(name), contents)?;
        self.manifest.outputs.push(OutputRecord {
            name: name.into(),
            sha256: sha256_hex(contents.as_bytes()),
        });
        Ok(())
    }

    /// Writes a CSV; cells are formatted by the caller.
    pub fn write_csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let mut s = header.join(",");
        s.push('\n');
        for r in rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        self.write_file(name, &s)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
        s.push('\n');
        self.write_file(name, &s)
    }

    pub fn check(
        &mut self,
        name: &str,
        passed: bool,
        value: f64,
        threshold: Option<f64>,
        detail: impl Into<String>,
    ) {
        self.manifest.passed &= passed;
        self.manifest.checks.push(Check {
            name: name.into(),
            passed,
            value: finite(value),
            threshold: threshold.and_then(finite),
            detail: detail.into(),
        });
    }

    pub fn add_series(&mut self, s: Series) {
        self.series.push(s);
    }

    /// Emits plot data and writes `manifest.json`.
    pub fn finish(mut self) -> Result<RunManifest> {
        let series = std::mem::take(&mut self.series);
        emit_plot_data(&self.out_dir, &mut self.manifest, &series)?;
        let mut s = self.manifest.to_json()?;
        s.push('\n');
        fs::write(self.out_dir.join("manifest.json"), s)?;
        Ok(self.manifest)
    }
}

fn slug(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Writes `plot_<series>.csv` (two columns) per series and a gnuplot script
/// `plot.gp` drawing each of them; all files are recorded in the manifest.
pub fn emit_plot_data(out_dir: &Path, manifest: &mut RunManifest, series: &[Series]) -> Result<()> {
    if series.is_empty() {
        return Ok(());
    }
    let mut gp = String::from("# gnuplot script; run from this directory with `gnuplot plot.gp`\n");
    gp.push_str("set datafile separator ','\nset key autotitle columnhead\nset terminal pngcairo size 800,600\n");
    for s in series {
        let file = format!("plot_{}.csv", slug(&s.name));
        let mut csv = format!("{},{}\n", s.x_label, s.y_label);
        for (x, y) in &s.points {
            let _ = writeln!(csv, "{x},{y}");
        }
        fs::write(out_dir.join(&file), &csv)?;
        manifest.outputs.push(OutputRecord {
            name: file.clone(),
            sha256: sha256_hex(csv.as_bytes()),
        });
        let _ = writeln!(gp, "\nset output '{}.png'", slug(&s.name));
        let _ = writeln!(gp, "set xlabel '{}'\nset ylabel '{}'", s.x_label, s.y_label);
        let _ = writeln!(gp, "{}set logscale x", if s.log_x { "" } else { "un" });
        let _ = writeln!(gp, "{}set logscale y", if s.log_y { "" } else { "un" });
        let _ = writeln!(
            gp,
            "plot '{file}' using 1:2 with linespoints title '{}'",
            s.name
        );
    }
    fs::write(out_dir.join("plot.gp"), &gp)?;
    manifest.outputs.push(OutputRecord {
        name: "plot.gp".into(),
        sha256: sha256_hex(gp.as_bytes()),
    });
    Ok(())
}
