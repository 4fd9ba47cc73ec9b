//! Problem JSON: row-major nested arrays under the keys
//! `A, B, N, Q, R, P, Hx, hx, Hu, hu, Hf, hf`.

use std::path::Path;

use lmpc_hr::{MpcProblem, ProblemData};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    #[serde(rename = "N")]
    pub horizon: usize,
    #[serde(rename = "Q")]
    pub q: Vec<Vec<f64>>,
    #[serde(rename = "R")]
    pub r: Vec<Vec<f64>>,
    #[serde(rename = "P")]
    pub p: Vec<Vec<f64>>,
    #[serde(rename = "Hx")]
    pub state_h: Vec<Vec<f64>>,
    pub hx: Vec<f64>,
    #[serde(rename = "Hu")]
    pub input_h: Vec<Vec<f64>>,
    pub hu: Vec<f64>,
    #[serde(rename = "Hf")]
    pub terminal_h: Vec<Vec<f64>>,
    pub hf: Vec<f64>,
}

fn matrix(name: &str, rows: &[Vec<f64>], empty_cols: usize) -> Result<DMatrix<f64>, CliError> {
    let Some(first) = rows.first() else {
        return Ok(DMatrix::zeros(0, empty_cols));
    };
    let cols = first.len();
    if rows.iter().any(|r| r.len() != cols) {
        return Err(CliError::Input(format!("{name}: rows have different lengths")));
    }
    Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

impl ProblemFile {
    pub fn to_data(&self) -> Result<ProblemData, CliError> {
        let nx = self.a.len();
        let nu = self.b.first().map_or(0, Vec::len);
        Ok(ProblemData {
            a: matrix("A", &self.a, nx)?,
            b: matrix("B", &self.b, nu)?,
            horizon: self.horizon,
            q: matrix("Q", &self.q, nx)?,
            r: matrix("R", &self.r, nu)?,
            p: matrix("P", &self.p, nx)?,
            state_h: matrix("Hx", &self.state_h, nx)?,
            state_rhs: DVector::from_column_slice(&self.hx),
            input_h: matrix("Hu", &self.input_h, nu)?,
            input_rhs: DVector::from_column_slice(&self.hu),
            terminal_h: matrix("Hf", &self.terminal_h, nx)?,
            terminal_rhs: DVector::from_column_slice(&self.hf),
        })
    }

    pub fn to_problem(&self) -> Result<MpcProblem, CliError> {
        MpcProblem::new(self.to_data()?).map_err(CliError::Invalid)
    }

    pub fn from_problem(p: &MpcProblem) -> Self {
        let d = p.to_data();
        Self {
            a: rows_of(&d.a),
            b: rows_of(&d.b),
            horizon: d.horizon,
            q: rows_of(&d.q),
            r: rows_of(&d.r),
            p: rows_of(&d.p),
            state_h: rows_of(&d.state_h),
            hx: d.state_rhs.iter().copied().collect(),
            input_h: rows_of(&d.input_h),
            hu: d.input_rhs.iter().copied().collect(),
            terminal_h: rows_of(&d.terminal_h),
            hf: d.terminal_rhs.iter().copied().collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem serializes")
    }
}

/// A problem read from disk together with the hash of its bytes.
#[derive(Debug, Clone)]
pub struct LoadedProblem {
    pub problem: MpcProblem,
    pub sha256: String,
}

pub fn parse_problem(text: &str) -> Result<MpcProblem, CliError> {
    let file: ProblemFile =
        serde_json::from_str(text).map_err(|e| CliError::Input(format!("problem JSON: {e}")))?;
    file.to_problem()
}

pub fn load_problem(path: &Path) -> Result<LoadedProblem, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let text = std::str::from_utf8(&bytes).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    Ok(LoadedProblem {
        problem: parse_problem(text)?,
        sha256: hex::encode(Sha256::digest(&bytes)),
    })
}
