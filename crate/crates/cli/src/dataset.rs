//! Dataset files: `samples.csv`, `rejections.csv` and `manifest.json`.

use std::fmt::Write as _;
use std::path::Path;

use lmpc_hr::samplers::{ChainConfig, RunReport};
use lmpc_hr::{Method, QueryCounter, SampleRecord, Tolerances};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SAMPLES_FILE: &str = "samples.csv";
pub const REJECTIONS_FILE: &str = "rejections.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Everything needed to rerun a sampling command and get the same samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub problem_hash: String,
    pub method: Method,
    pub seed: u64,
    pub n_samples: usize,
    pub burn_in: usize,
    pub thinning: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub epsilon: Option<f64>,
    pub boundary_margin: f64,
    pub x_init: Vec<f64>,
    pub tolerances: Tolerances,
    pub tool_version: String,
    pub wall_time: f64,
    pub sampling_queries: u64,
    pub labeling_queries: u64,
    pub rejections: u64,
    pub queries: QueryCounter,
}

impl RunManifest {
    pub fn new(problem_hash: &str, cfg: &ChainConfig, epsilon: f64, report: &RunReport) -> Self {
        Self {
            problem_hash: problem_hash.to_string(),
            method: report.method,
            seed: cfg.seed,
            n_samples: cfg.n_samples,
            burn_in: cfg.burn_in,
            thinning: cfg.thinning,
            epsilon: (report.method == Method::BsHr).then_some(epsilon),
            boundary_margin: cfg.boundary_margin,
            x_init: cfg.x_init.clone(),
            tolerances: cfg.tolerances,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time: report.wall_time,
            sampling_queries: report.sampling_queries,
            labeling_queries: report.labeling_queries,
            rejections: report.rejections,
            queries: report.counter,
        }
    }
}

pub fn number(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn samples_csv(samples: &[SampleRecord], nx: usize, nu: usize) -> String {
    let mut out = String::new();
    let mut header: Vec<String> = (0..nx).map(|i| format!("x{i}")).collect();
    header.extend((0..nu).map(|i| format!("u{i}")));
    header.extend(["value".to_string(), "chain_index".to_string()]);
    out.push_str(&header.join(","));
    out.push('\n');
    for s in samples {
        let mut row: Vec<String> = s.x.iter().chain(s.u0.iter()).map(|&v| number(v)).collect();
        row.push(number(s.value));
        row.push(s.chain_index.to_string());
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn rejections_csv(draws: &[(usize, DVector<f64>)], nx: usize) -> String {
    let mut out = (0..nx).map(|i| format!("x{i}")).collect::<Vec<_>>().join(",");
    out.push_str(",chain_index\n");
    for (index, x) in draws {
        let row: Vec<String> = x.iter().map(|&v| number(v)).collect();
        let _ = writeln!(out, "{},{index}", row.join(","));
    }
    out
}

/// Reads the state columns (`x0, x1, …`) of a samples or rejections file.
pub fn read_states(path: &Path) -> Result<Vec<DVector<f64>>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| CliError::Input(format!("{}: empty file", path.display())))?;
    let state_cols: Vec<usize> = header
        .split(',')
        .enumerate()
        .filter(|(_, h)| h.starts_with('x') && h[1..].parse::<usize>().is_ok())
        .map(|(i, _)| i)
        .collect();
    if state_cols.is_empty() {
        return Err(CliError::Input(format!("{}: no x columns", path.display())));
    }
    let mut out = Vec::new();
    for (n, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let x = state_cols
            .iter()
            .map(|&c| {
                fields
                    .get(c)
                    .and_then(|f| f.parse::<f64>().ok())
                    .ok_or_else(|| CliError::Input(format!("{}: bad value on line {}", path.display(), n + 2)))
            })
            .collect::<Result<Vec<_>, _>>()?;
        out.push(DVector::from_vec(x));
    }
    Ok(out)
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn read_manifest(path: &Path) -> Result<RunManifest, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_full_precision_and_reads_back() {
        let rec = SampleRecord {
            x: DVector::from_vec(vec![0.1, -1.0 / 3.0]),
            u0: DVector::from_vec(vec![2.0]),
            value: 1.5,
            chain_index: 4,
            method: Method::LmpcHr,
        };
        let text = samples_csv(std::slice::from_ref(&rec), 2, 1);
        assert!(text.starts_with("x0,x1,u0,value,chain_index\n"));
        assert!(text.contains("-3.3333333333333331e-1"));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        write_file(&path, &text).unwrap();
        assert_eq!(read_states(&path).unwrap(), vec![rec.x]);
    }
}
