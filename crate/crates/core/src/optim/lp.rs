//! Dense two-phase simplex for small inequality-form LPs.
//!
//! Solves `max cᵀz  s.t.  A z ≤ b`, with a per-variable non-negativity mask.
//! The tableau is kept in compact (exchange) form: one row per constraint and
//! one column per nonbasic variable, so a pivot costs `O(m·n)` regardless of
//! how many slacks the problem has. Free variables enter the basis with either
//! sign and never leave it.
//!
//! Phase 1 adds a single shared artificial `s ≥ 0` to every row
//! (`A z - s ≤ b`) and minimizes it; the problem is feasible iff the optimum is
//! zero. Pricing is Dantzig's rule, switching to Bland's rule once the
//! iteration count passes `5·(rows + cols)`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// `cᵀz` at the returned vertex (0 unless `Optimal`).
    pub objective: f64,
    pub primal: DVector<f64>,
    /// Row multipliers `y ≥ 0` with `Aᵀy = c` on free columns.
    pub duals: DVector<f64>,
    /// Constraints whose slack is within `tol_feas` of zero.
    pub active_rows: Vec<usize>,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    /// Phase-1 optimum below this counts as feasible.
    pub tol_feas: f64,
    /// Smallest pivot magnitude accepted in the ratio test.
    pub pivot_tol: f64,
    /// Reduced costs smaller than this are treated as zero.
    pub cost_tol: f64,
    /// Dantzig pricing runs for `bland_factor · (rows + cols)` iterations.
    pub bland_factor: usize,
    /// Hard cap `cap_factor · (rows + cols) + 100`.
    pub cap_factor: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            tol_feas: 1e-8,
            pivot_tol: 1e-9,
            cost_tol: 1e-11,
            bland_factor: 5,
            cap_factor: 50,
        }
    }
}

/// Result of the phase-1 problem `min s  s.t.  A z - s·1 ≤ b, s ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseOne {
    /// Optimal shared slack.
    pub min_slack: f64,
    /// Minimizing `z`.
    pub witness: DVector<f64>,
    pub iterations: usize,
}

impl PhaseOne {
    pub fn is_feasible(&self, tol_feas: f64) -> bool {
        self.min_slack <= tol_feas
    }
}

/// `max cᵀz  s.t.  A z ≤ b,  z_i ≥ 0 where nonneg[i]`, with default options.
pub fn lp_solve(
    c: &DVector<f64>,
    a_ub: &DMatrix<f64>,
    b_ub: &DVector<f64>,
    nonneg: &[bool],
) -> Result<LpSolution> {
    lp_solve_with(c, a_ub, b_ub, nonneg, &SimplexOptions::default())
}

pub fn lp_solve_with(
    c: &DVector<f64>,
    a_ub: &DMatrix<f64>,
    b_ub: &DVector<f64>,
    nonneg: &[bool],
    opts: &SimplexOptions,
) -> Result<LpSolution> {
    check_dims(a_ub, b_ub, nonneg)?;
    if c.len() != a_ub.ncols() {
        return Err(Error::InvalidArgument(format!(
            "objective has {} entries for {} variables",
            c.len(),
            a_ub.ncols()
        )));
    }
    let mut tab = Tableau::new(a_ub, b_ub, nonneg, opts);
    solve_max(&mut tab, c, a_ub.nrows(), opts)
}

/// Maximizes `cᵀz`, then minimizes it from the same basis.
///
/// Returns the maximizing solution and, when the maximum is finite, the
/// smallest attainable `cᵀz` (`None` if unbounded below).
pub fn lp_objective_range(
    c: &DVector<f64>,
    a_ub: &DMatrix<f64>,
    b_ub: &DVector<f64>,
    nonneg: &[bool],
    opts: &SimplexOptions,
) -> Result<(LpSolution, Option<f64>)> {
    check_dims(a_ub, b_ub, nonneg)?;
    if c.len() != a_ub.ncols() {
        return Err(Error::InvalidArgument(format!(
            "objective has {} entries for {} variables",
            c.len(),
            a_ub.ncols()
        )));
    }
    let mut tab = Tableau::new(a_ub, b_ub, nonneg, opts);
    let max = solve_max(&mut tab, c, a_ub.nrows(), opts)?;
    if max.status != LpStatus::Optimal {
        return Ok((max, None));
    }
    let neg = -c;
    tab.set_objective(&neg);
    let min = match tab.optimize(false)? {
        LpStatus::Optimal => Some(c.dot(&tab.structural_values())),
        _ => None,
    };
    Ok((max, min))
}

fn solve_max(tab: &mut Tableau, c: &DVector<f64>, m: usize, opts: &SimplexOptions) -> Result<LpSolution> {
    let slack = tab.phase_one()?;
    if slack > opts.tol_feas {
        return Ok(LpSolution {
            status: LpStatus::Infeasible,
            objective: 0.0,
            primal: tab.structural_values(),
            duals: DVector::zeros(m),
            active_rows: Vec::new(),
            iterations: tab.iterations,
        });
    }
    tab.drop_artificial();
    tab.set_objective(c);
    let status = tab.optimize(false)?;
    let primal = tab.structural_values();
    let objective = if status == LpStatus::Optimal {
        c.dot(&primal)
    } else {
        0.0
    };
    Ok(LpSolution {
        status,
        objective,
        duals: tab.row_duals(),
        active_rows: tab.active_rows(),
        primal,
        iterations: tab.iterations,
    })
}

/// Phase 1 only: the smallest uniform relaxation `s` making `A z ≤ b + s` solvable.
pub fn phase_one(
    a_ub: &DMatrix<f64>,
    b_ub: &DVector<f64>,
    nonneg: &[bool],
    opts: &SimplexOptions,
) -> Result<PhaseOne> {
    check_dims(a_ub, b_ub, nonneg)?;
    let mut tab = Tableau::new(a_ub, b_ub, nonneg, opts);
    let min_slack = tab.phase_one()?;
    Ok(PhaseOne {
        min_slack,
        witness: tab.structural_values(),
        iterations: tab.iterations,
    })
}

fn check_dims(a: &DMatrix<f64>, b: &DVector<f64>, nonneg: &[bool]) -> Result<()> {
    if a.nrows() != b.len() || a.ncols() != nonneg.len() {
        return Err(Error::InvalidArgument(format!(
            "LP dimensions: A is {}x{}, b has {}, mask has {}",
            a.nrows(),
            a.ncols(),
            b.len(),
            nonneg.len()
        )));
    }
    Ok(())
}

/// Compact simplex tableau.
///
/// Row `i < rows` reads `x_basic[i] = rhs_i - Σ_j T_ij x_nonbasic[j]`; row
/// `rows` is the objective in the same form, so an entering column has a
/// negative objective entry. Column `cols` holds the right-hand side.
struct Tableau {
    rows: usize,
    cols: usize,
    t: Vec<f64>,
    basic: Vec<usize>,
    nonbasic: Vec<usize>,
    free: Vec<bool>,
    flipped: Vec<bool>,
    n_struct: usize,
    artificial: usize,
    has_artificial: bool,
    iterations: usize,
    bland_after: usize,
    cap: usize,
    opts: SimplexOptions,
    scratch: Vec<f64>,
}

impl Tableau {
    fn new(a: &DMatrix<f64>, b: &DVector<f64>, nonneg: &[bool], opts: &SimplexOptions) -> Self {
        let (m, n) = a.shape();
        let cols = n + 1;
        let stride = cols + 1;
        let mut t = vec![0.0; (m + 1) * stride];
        for i in 0..m {
            let row = &mut t[i * stride..(i + 1) * stride];
            for j in 0..n {
                row[j] = a[(i, j)];
            }
            row[n] = -1.0;
            row[cols] = b[i];
        }
        let artificial = n + m;
        let mut free = vec![false; n + m + 1];
        for (j, nn) in nonneg.iter().enumerate() {
            free[j] = !nn;
        }
        let size = m + n;
        Self {
            rows: m,
            cols,
            t,
            basic: (n..n + m).collect(),
            nonbasic: (0..n).chain(std::iter::once(artificial)).collect(),
            free,
            flipped: vec![false; n + m + 1],
            n_struct: n,
            artificial,
            has_artificial: true,
            iterations: 0,
            bland_after: opts.bland_factor * size,
            cap: opts.cap_factor * size + 100,
            opts: *opts,
            scratch: vec![0.0; stride],
        }
    }

    #[inline]
    fn stride(&self) -> usize {
        self.cols + 1
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.stride() + j]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let s = self.stride();
        let inv = 1.0 / self.t[r * s + c];
        {
            let prow = &mut self.t[r * s..(r + 1) * s];
            for v in prow.iter_mut() {
                *v *= inv;
            }
            prow[c] = inv;
            self.scratch.copy_from_slice(prow);
        }
        for i in 0..=self.rows {
            if i == r {
                continue;
            }
            let row = &mut self.t[i * s..(i + 1) * s];
            let f = row[c];
            if f == 0.0 {
                continue;
            }
            for (v, p) in row.iter_mut().zip(self.scratch.iter()) {
                *v -= f * p;
            }
            row[c] = -f * inv;
        }
        std::mem::swap(&mut self.basic[r], &mut self.nonbasic[c]);
        self.iterations += 1;
    }

    fn flip_column(&mut self, c: usize) {
        let s = self.stride();
        for i in 0..=self.rows {
            self.t[i * s + c] = -self.t[i * s + c];
        }
        let v = self.nonbasic[c];
        self.flipped[v] = !self.flipped[v];
    }

    /// Runs phase 1 and returns the optimal shared slack.
    fn phase_one(&mut self) -> Result<f64> {
        let rhs_col = self.cols;
        let worst = (0..self.rows)
            .min_by(|&a, &b| self.at(a, rhs_col).total_cmp(&self.at(b, rhs_col)));
        let Some(r) = worst else { return Ok(0.0) };
        if self.at(r, rhs_col) >= 0.0 {
            return Ok(0.0);
        }
        let art_col = self.cols - 1;
        debug_assert_eq!(self.nonbasic[art_col], self.artificial);
        self.pivot(r, art_col);
        // objective: maximize -s, with s basic in row r
        let s = self.stride();
        let obj = self.rows * s;
        for j in 0..s {
            self.t[obj + j] = -self.t[r * s + j];
        }
        self.optimize(true)?;
        Ok(self.artificial_value())
    }

    fn artificial_value(&self) -> f64 {
        self.basic
            .iter()
            .position(|&v| v == self.artificial)
            .map_or(0.0, |r| self.at(r, self.cols).max(0.0))
    }

    /// Removes the artificial column, pivoting it out of the basis first when
    /// phase 1 ended degenerate.
    fn drop_artificial(&mut self) {
        if !self.has_artificial {
            return;
        }
        if let Some(r) = self.basic.iter().position(|&v| v == self.artificial) {
            let best = (0..self.cols)
                .map(|j| (j, self.at(r, j).abs()))
                .filter(|&(_, a)| a > self.opts.pivot_tol)
                .max_by(|a, b| a.1.total_cmp(&b.1));
            match best {
                Some((j, _)) => self.pivot(r, j),
                None => self.remove_row(r),
            }
        }
        if let Some(c) = self.nonbasic.iter().position(|&v| v == self.artificial) {
            self.remove_column(c);
        }
        self.has_artificial = false;
    }

    fn remove_row(&mut self, r: usize) {
        let s = self.stride();
        self.t.drain(r * s..(r + 1) * s);
        self.basic.remove(r);
        self.rows -= 1;
    }

    fn remove_column(&mut self, c: usize) {
        let s = self.stride();
        let mut out = Vec::with_capacity((self.rows + 1) * (s - 1));
        for i in 0..=self.rows {
            for j in 0..s {
                if j != c {
                    out.push(self.t[i * s + j]);
                }
            }
        }
        self.t = out;
        self.nonbasic.remove(c);
        self.cols -= 1;
        self.scratch.truncate(self.cols + 1);
    }

    /// Installs `max cᵀz` as the objective row, expressed in the current basis.
    fn set_objective(&mut self, c: &DVector<f64>) {
        let s = self.stride();
        let obj = self.rows * s;
        self.t[obj..obj + s].fill(0.0);
        for (j, &v) in self.nonbasic.iter().enumerate() {
            if v < self.n_struct {
                let coef = if self.flipped[v] { -c[v] } else { c[v] };
                self.t[obj + j] -= coef;
            }
        }
        for i in 0..self.rows {
            let v = self.basic[i];
            if v < self.n_struct {
                let coef = if self.flipped[v] { -c[v] } else { c[v] };
                if coef != 0.0 {
                    for j in 0..s {
                        self.t[obj + j] += coef * self.t[i * s + j];
                    }
                }
            }
        }
    }

    fn optimize(&mut self, phase_one: bool) -> Result<LpStatus> {
        let s = self.stride();
        let obj = self.rows * s;
        loop {
            if phase_one && !self.basic.contains(&self.artificial) {
                return Ok(LpStatus::Optimal);
            }
            if self.iterations >= self.cap {
                return Err(Error::CyclingGuardExceeded {
                    iterations: self.iterations,
                });
            }
            let bland = self.iterations >= self.bland_after;

            let mut enter: Option<(usize, f64)> = None;
            for j in 0..self.cols {
                let v = self.nonbasic[j];
                let d = self.t[obj + j];
                let gain = if d < -self.opts.cost_tol {
                    -d
                } else if self.free[v] && d > self.opts.cost_tol {
                    d
                } else {
                    continue;
                };
                let better = match enter {
                    None => true,
                    Some((bj, bg)) => {
                        if bland {
                            v < self.nonbasic[bj]
                        } else {
                            gain > bg
                        }
                    }
                };
                if better {
                    enter = Some((j, gain));
                }
            }
            let Some((c, _)) = enter else {
                return Ok(LpStatus::Optimal);
            };
            if self.t[obj + c] > 0.0 {
                self.flip_column(c);
            }

            let mut leave: Option<(usize, f64, f64)> = None;
            for i in 0..self.rows {
                if self.free[self.basic[i]] {
                    continue;
                }
                let a = self.t[i * s + c];
                if a <= self.opts.pivot_tol {
                    continue;
                }
                let ratio = self.t[i * s + self.cols].max(0.0) / a;
                let better = match leave {
                    None => true,
                    Some((bi, br, ba)) => {
                        let tie = (ratio - br).abs() <= 1e-12 * (1.0 + br);
                        if tie {
                            if bland {
                                self.basic[i] < self.basic[bi]
                            } else {
                                a > ba
                            }
                        } else {
                            ratio < br
                        }
                    }
                };
                if better {
                    leave = Some((i, ratio, a));
                }
            }
            let Some((r, _, _)) = leave else {
                return Ok(LpStatus::Unbounded);
            };
            self.pivot(r, c);
        }
    }

    fn value_of(&self, v: usize) -> f64 {
        match self.basic.iter().position(|&b| b == v) {
            Some(i) => {
                let x = self.at(i, self.cols);
                if self.flipped[v] {
                    -x
                } else {
                    x
                }
            }
            None => 0.0,
        }
    }

    fn structural_values(&self) -> DVector<f64> {
        let mut z = DVector::zeros(self.n_struct);
        for (i, &v) in self.basic.iter().enumerate() {
            if v < self.n_struct {
                let x = self.at(i, self.cols);
                z[v] = if self.flipped[v] { -x } else { x };
            }
        }
        z
    }

    fn n_rows_original(&self) -> usize {
        self.artificial - self.n_struct
    }

    fn row_duals(&self) -> DVector<f64> {
        let m = self.n_rows_original();
        let mut y = DVector::zeros(m);
        for (j, &v) in self.nonbasic.iter().enumerate() {
            if v >= self.n_struct && v < self.artificial {
                y[v - self.n_struct] = self.at(self.rows, j).max(0.0);
            }
        }
        y
    }

    fn active_rows(&self) -> Vec<usize> {
        (0..self.n_rows_original())
            .filter(|&i| self.value_of(self.n_struct + i) <= self.opts.tol_feas)
            .collect()
    }
}
