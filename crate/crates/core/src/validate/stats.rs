use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma_ur;

use super::GridOracle;
use crate::error::{Error, Result};

/// Upper tail `P(χ²_dof ≥ stat)`.
pub fn chi2_sf(stat: f64, dof: usize) -> f64 {
    if dof == 0 {
        return if stat > 0.0 { 0.0 } else { 1.0 };
    }
    if stat <= 0.0 {
        return 1.0;
    }
    gamma_ur(dof as f64 / 2.0, stat / 2.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellCount {
    pub id: usize,
    pub probability: f64,
    pub observed: u64,
}

/// Pearson goodness-of-fit of samples against the uniform law on the
/// feasible grid cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformityReport {
    pub cells: Vec<CellCount>,
    pub chi2_statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub n_effective: usize,
}

/// Aggregates the feasible grid cells, in lexicographic order, into
/// `n_cells` groups of (near) equal cell count, i.e. equal probability under
/// the uniform law, and runs Pearson's test on the sample counts.
///
/// A sample whose cell center is infeasible (boundary cells) is assigned to
/// the nearest feasible cell, preferring the same column.
pub fn uniformity_test(samples: &[DVector<f64>], oracle: &GridOracle, n_cells: usize) -> Result<UniformityReport> {
    if n_cells < 10 {
        return Err(Error::InvalidArgument("at least 10 cells are required".into()));
    }
    let feasible: Vec<usize> = (0..oracle.n_cells()).filter(|&c| oracle.membership[c]).collect();
    if feasible.len() < n_cells {
        return Err(Error::InvalidArgument(format!(
            "grid has {} feasible cells, fewer than {n_cells}",
            feasible.len()
        )));
    }
    let mut group_of = vec![usize::MAX; oracle.n_cells()];
    let mut size = vec![0usize; n_cells];
    for (k, &c) in feasible.iter().enumerate() {
        let g = k * n_cells / feasible.len();
        group_of[c] = g;
        size[g] += 1;
    }

    let mut observed = vec![0u64; n_cells];
    for x in samples {
        let c = oracle
            .cell_of(x)
            .ok_or_else(|| Error::InvalidArgument("sample outside the grid box".into()))?;
        let c = if oracle.membership[c] { c } else { nearest_feasible(oracle, &feasible, c) };
        observed[group_of[c]] += 1;
    }

    let n = samples.len() as f64;
    let total = feasible.len() as f64;
    let mut chi2 = 0.0;
    let mut cells = Vec::with_capacity(n_cells);
    for g in 0..n_cells {
        let prob = size[g] as f64 / total;
        let expected = n * prob;
        if expected < 5.0 {
            return Err(Error::InsufficientSamples { cell: g, expected });
        }
        chi2 += (observed[g] as f64 - expected).powi(2) / expected;
        cells.push(CellCount {
            id: g,
            probability: prob,
            observed: observed[g],
        });
    }
    let dof = n_cells - 1;
    Ok(UniformityReport {
        cells,
        chi2_statistic: chi2,
        dof,
        p_value: chi2_sf(chi2, dof),
        n_effective: samples.len(),
    })
}

fn nearest_feasible(oracle: &GridOracle, feasible: &[usize], cell: usize) -> usize {
    let idx = oracle.multi_index(cell);
    let last = idx.len() - 1;
    let same_column = feasible
        .iter()
        .copied()
        .filter(|&f| oracle.multi_index(f)[..last] == idx[..last])
        .min_by_key(|&f| oracle.multi_index(f)[last].abs_diff(idx[last]));
    same_column.unwrap_or_else(|| {
        let center = oracle.center(cell);
        feasible
            .iter()
            .copied()
            .min_by(|&a, &b| {
                let da = (oracle.center(a) - &center).norm_squared();
                let db = (oracle.center(b) - &center).norm_squared();
                da.total_cmp(&db)
            })
            .expect("at least one feasible cell")
    })
}

/// Counts of samples on a `k^n` grid over `[lower, upper]`, lexicographic
/// cell order. Points outside the box are ignored.
pub fn grid_counts(samples: &[DVector<f64>], lower: &DVector<f64>, upper: &DVector<f64>, k: usize) -> Vec<u64> {
    let grid = GridOracle {
        lower: lower.clone(),
        upper: upper.clone(),
        resolution: k,
        membership: vec![true; k.pow(lower.len() as u32)],
    };
    let mut counts = vec![0; grid.n_cells()];
    for x in samples {
        if let Some(c) = grid.cell_of(x) {
            counts[c] += 1;
        }
    }
    counts
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomogeneityReport {
    pub chi2_statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Columns after merging sparse cells.
    pub bins: usize,
}

/// Two-sample chi-square homogeneity test on cell counts. Cells are scanned
/// in order and merged until each bin holds at least `MIN_POOLED` pooled
/// counts; a short remainder joins the last bin.
pub fn homogeneity_test(a: &[u64], b: &[u64]) -> Result<HomogeneityReport> {
    const MIN_POOLED: u64 = 10;
    if a.len() != b.len() {
        return Err(Error::InvalidArgument("count vectors differ in length".into()));
    }
    let mut bins: Vec<(u64, u64)> = Vec::new();
    let mut acc = (0, 0);
    for (&x, &y) in a.iter().zip(b) {
        acc = (acc.0 + x, acc.1 + y);
        if acc.0 + acc.1 >= MIN_POOLED {
            bins.push(acc);
            acc = (0, 0);
        }
    }
    if acc.0 + acc.1 > 0 {
        match bins.last_mut() {
            Some(last) => *last = (last.0 + acc.0, last.1 + acc.1),
            None => bins.push(acc),
        }
    }
    let (na, nb) = (a.iter().sum::<u64>() as f64, b.iter().sum::<u64>() as f64);
    if na == 0.0 || nb == 0.0 {
        return Err(Error::InvalidArgument("both samples must be non-empty".into()));
    }
    let n = na + nb;
    let mut chi2 = 0.0;
    for &(x, y) in &bins {
        let col = (x + y) as f64;
        for (obs, row) in [(x as f64, na), (y as f64, nb)] {
            let e = row * col / n;
            chi2 += (obs - e).powi(2) / e;
        }
    }
    let dof = bins.len().saturating_sub(1);
    Ok(HomogeneityReport {
        chi2_statistic: chi2,
        dof,
        p_value: chi2_sf(chi2, dof),
        bins: bins.len(),
    })
}
