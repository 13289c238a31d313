//! CSV and JSON emission. Numbers are written with Rust's shortest
//! round-trip formatting, so outputs parse back bit-exactly and identical
//! runs produce byte-identical files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;

use qcascade::observables::{CorrelationMap, FluxTrace};

use crate::config::ExperimentConfig;

/// Shortest round-trip decimal form (switches to e-notation where shorter).
pub fn fmt_f64(value: f64) -> String {
    ryu::Buffer::new().format(value).to_string()
}

pub fn write_trace_csv(path: &Path, value_header: &str, trace: &FluxTrace) -> anyhow::Result<()> {
    let mut w = writer(path)?;
    writeln!(w, "t_ps,{value_header}")?;
    for (t, v) in trace.times().iter().zip(trace.export_values()) {
        writeln!(w, "{},{}", fmt_f64(*t), fmt_f64(v))?;
    }
    Ok(w.flush()?)
}

/// Long-format map: one row per (t₁, t₂) pair, row-major.
pub fn write_map_csv(path: &Path, map: &CorrelationMap) -> anyhow::Result<()> {
    let mut w = writer(path)?;
    writeln!(w, "t1_ps,t2_ps,g2_per_ps2")?;
    let axis = map.axis();
    for (i, t1) in axis.iter().enumerate() {
        for (j, t2) in axis.iter().enumerate() {
            writeln!(w, "{},{},{}", fmt_f64(*t1), fmt_f64(*t2), fmt_f64(map.export_value(i, j)))?;
        }
    }
    Ok(w.flush()?)
}

pub fn write_rows_csv(path: &Path, header: &str, rows: &[Vec<f64>]) -> anyhow::Result<()> {
    let mut w = writer(path)?;
    writeln!(w, "{header}")?;
    for row in rows {
        let line: Vec<String> = row.iter().map(|v| fmt_f64(*v)).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(w.flush()?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut w = writer(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    Ok(w.flush()?)
}

fn writer(path: &Path) -> anyhow::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| {
        format!("creating {}", path.display())
    })?))
}

/// Run record written next to every command's outputs.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub files: Vec<String>,
    pub config: ExperimentConfig,
}

impl Manifest {
    pub fn new(command: &str, config: &ExperimentConfig) -> Self {
        Manifest {
            command: command.to_string(),
            files: Vec::new(),
            config: config.clone(),
        }
    }

    /// Register a produced file and return its full path.
    pub fn file(&mut self, dir: &Path, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        dir.join(name)
    }

    pub fn write(&self, dir: &Path) -> anyhow::Result<PathBuf> {
        let path = dir.join("manifest.json");
        write_json(&path, self)?;
        Ok(path)
    }
}
