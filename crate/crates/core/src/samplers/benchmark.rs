use std::fmt::Write as _;

use super::{run_method, ChainConfig, RunReport};
use crate::error::Result;
use crate::model::{Method, MpcProblem};

/// Reports of all four methods on one problem, in table order.
#[derive(Debug, Clone, PartialEq)]
pub struct Benchmark {
    pub reports: Vec<RunReport>,
    pub epsilon: f64,
}

impl Benchmark {
    pub fn report(&self, method: Method) -> Option<&RunReport> {
        self.reports.iter().find(|r| r.method == method)
    }

    /// Aligned text table: Method | Time (s) | Solver Queries | Cost/Sample.
    pub fn render(&self) -> String {
        let header = ["Method", "Time (s)", "Solver Queries", "Cost/Sample"];
        let rows: Vec<[String; 4]> = self
            .reports
            .iter()
            .map(|r| {
                [
                    r.method.label().to_string(),
                    format!("{:.2}", r.wall_time),
                    r.sampling_queries.to_string(),
                    format!("{:.1}", r.cost_per_sample()),
                ]
            })
            .collect();
        let mut width = header.map(str::len);
        for row in &rows {
            for (w, cell) in width.iter_mut().zip(row) {
                *w = (*w).max(cell.len());
            }
        }
        let mut out = String::new();
        let line = |out: &mut String, cells: [&str; 4]| {
            let _ = writeln!(
                out,
                "{:<w0$} | {:>w1$} | {:>w2$} | {:>w3$}",
                cells[0],
                cells[1],
                cells[2],
                cells[3],
                w0 = width[0],
                w1 = width[1],
                w2 = width[2],
                w3 = width[3]
            );
        };
        line(&mut out, header);
        let _ = writeln!(
            out,
            "{}-+-{}-+-{}-+-{}",
            "-".repeat(width[0]),
            "-".repeat(width[1]),
            "-".repeat(width[2]),
            "-".repeat(width[3])
        );
        for row in &rows {
            line(&mut out, [&row[0], &row[1], &row[2], &row[3]]);
        }
        out
    }
}

/// Runs UVRS, DRS-HR, BS-HR and LMPC-HR with the same configuration. Each
/// method draws from its own stream of `cfg.seed`.
pub fn run_benchmark(p: &MpcProblem, cfg: &ChainConfig, epsilon: f64) -> Result<Benchmark> {
    let reports = Method::ALL
        .into_iter()
        .map(|m| run_method(p, cfg, m, epsilon))
        .collect::<Result<Vec<_>>>()?;
    Ok(Benchmark { reports, epsilon })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::make_pendulum_problem;

    #[test]
    fn single_sample_benchmark() {
        let mut cfg = ChainConfig::new(vec![0.0, 0.0]);
        cfg.n_samples = 1;
        cfg.burn_in = 0;
        let b = run_benchmark(&make_pendulum_problem(), &cfg, 1e-3).unwrap();
        assert_eq!(b.reports.len(), 4);
        assert!(b.reports.iter().all(|r| r.samples.len() == 1));
        assert_eq!(b.report(Method::LmpcHr).unwrap().sampling_queries, 2);
        let table = b.render();
        assert_eq!(table.lines().count(), 6);
        assert!(table.contains("LMPC-HR"));
    }
}
