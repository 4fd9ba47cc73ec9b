//! MPC labeling: primal active-set QP on the condensed problem.
//!
//! The cost `Σ xᵢᵀQxᵢ + uᵢᵀRuᵢ + x_NᵀPx_N` becomes
//! `½ zᵀ Ĥ z + (L x)ᵀ z + xᵀ C x` with `Ĥ = 2(ΓᵀQ̄Γ + R̄)`, `L = 2ΓᵀQ̄Ω`,
//! `C = Q + ΩᵀQ̄Ω` and `Q̄ = diag(Q, …, Q, P)`. `R ≻ 0` makes `Ĥ` positive
//! definite, so every equality-constrained subproblem has a unique solution.

use nalgebra::{DMatrix, DVector};

use crate::condense::CondensedProblem;
use crate::error::{Error, Result};
use crate::model::MpcProblem;

use super::lp::phase_one;
use super::{QueryCounter, Tolerances};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QpStatus {
    Optimal,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub status: QpStatus,
    /// Stacked optimal inputs `[u_0; …; u_{N-1}]`.
    pub u_sequence: DVector<f64>,
    /// Optimal MPC cost.
    pub value: f64,
    pub kkt_residual: f64,
    /// Multipliers of the condensed rows.
    pub multipliers: DVector<f64>,
    pub active_set: Vec<usize>,
    pub iterations: usize,
}

impl QpSolution {
    /// First input of the optimal sequence, the MPC feedback `π(x)`.
    pub fn first_input(&self, nu: usize) -> DVector<f64> {
        self.u_sequence.rows(0, nu).into_owned()
    }
}

/// Condensed cost for one problem; reusable across states.
#[derive(Debug, Clone)]
pub struct MpcLabeler {
    hessian: DMatrix<f64>,
    linear: DMatrix<f64>,
    constant: DMatrix<f64>,
    problem: MpcProblem,
}

impl MpcLabeler {
    pub fn new(p: &MpcProblem, cp: &CondensedProblem) -> Self {
        let (nx, horizon) = (p.nx(), p.horizon());
        let nu = p.nu();
        let mut qbar = DMatrix::zeros(horizon * nx, horizon * nx);
        for i in 0..horizon {
            let blk = if i + 1 == horizon { p.p() } else { p.q() };
            qbar.view_mut((i * nx, i * nx), (nx, nx)).copy_from(blk);
        }
        let mut rbar = DMatrix::zeros(horizon * nu, horizon * nu);
        for i in 0..horizon {
            rbar.view_mut((i * nu, i * nu), (nu, nu)).copy_from(p.r());
        }
        let gamma = &cp.prediction.gamma;
        let omega = &cp.prediction.omega;
        let gq = gamma.transpose() * &qbar;
        let mut hessian = (&gq * gamma + rbar) * 2.0;
        hessian = (&hessian + hessian.transpose()) * 0.5;
        let linear = &gq * omega * 2.0;
        let constant = p.q() + omega.transpose() * &qbar * omega;
        Self {
            hessian,
            linear,
            constant,
            problem: p.clone(),
        }
    }

    pub fn hessian(&self) -> &DMatrix<f64> {
        &self.hessian
    }

    /// Condensed objective `½ zᵀĤz + (Lx)ᵀz + xᵀCx`.
    pub fn objective(&self, x: &DVector<f64>, z: &DVector<f64>) -> f64 {
        0.5 * z.dot(&(&self.hessian * z)) + (&self.linear * x).dot(z) + x.dot(&(&self.constant * x))
    }

    /// MPC cost obtained by simulating the dynamics under `z`.
    pub fn trajectory_cost(&self, x: &DVector<f64>, z: &DVector<f64>) -> f64 {
        let p = &self.problem;
        let nu = p.nu();
        let mut xi = x.clone();
        let mut cost = 0.0;
        for i in 0..p.horizon() {
            let u = z.rows(i * nu, nu).into_owned();
            cost += xi.dot(&(p.q() * &xi)) + u.dot(&(p.r() * &u));
            xi = p.system().step(&xi, &u);
        }
        cost + xi.dot(&(p.p() * &xi))
    }

    /// Solves the MPC for `x`. A feasible `warm_start` is used as the initial
    /// iterate; otherwise a phase-1 LP provides one. Counts one MPC query.
    pub fn solve(
        &self,
        cp: &CondensedProblem,
        x: &DVector<f64>,
        warm_start: Option<&DVector<f64>>,
        tol: &Tolerances,
        counter: &mut QueryCounter,
    ) -> Result<QpSolution> {
        if x.len() != cp.nx() {
            return Err(Error::InvalidArgument(format!(
                "state has {} entries, expected {}",
                x.len(),
                cp.nx()
            )));
        }
        counter.mpc += 1;
        let nz = cp.n_inputs();
        let m = cp.n_constraints();
        let rhs = cp.rhs(x);
        let g = &cp.g;

        let warm = warm_start
            .filter(|z| z.len() == nz)
            .filter(|z| (g * *z - &rhs).max() <= tol.feas)
            .cloned();
        let mut z = match warm {
            Some(z) => z,
            None => {
                let p1 = phase_one(g, &rhs, &vec![false; nz], &tol.simplex())?;
                if !p1.is_feasible(tol.feas) {
                    return Ok(QpSolution {
                        status: QpStatus::Infeasible,
                        u_sequence: p1.witness,
                        value: f64::NAN,
                        kkt_residual: f64::INFINITY,
                        multipliers: DVector::zeros(m),
                        active_set: Vec::new(),
                        iterations: 0,
                    });
                }
                p1.witness
            }
        };

        let lin = &self.linear * x;
        let max_iter = 10 * (m + nz) + 100;
        let mut working: Vec<usize> = Vec::new();
        let lambda_w: DVector<f64>;
        let mut iterations = 0;
        loop {
            if iterations >= max_iter {
                return Err(Error::MaxIterations { iterations });
            }
            iterations += 1;
            let grad = &self.hessian * &z + &lin;
            let Some((step, lam)) = self.eqp_step(g, &working, &grad) else {
                // numerically dependent working set: drop the newest row
                working.pop();
                continue;
            };
            let scale = 1.0 + z.amax();
            if step.amax() <= 1e-12 * scale {
                let most_negative = lam
                    .iter()
                    .enumerate()
                    .min_by(|a, b| a.1.total_cmp(b.1))
                    .filter(|(_, &v)| v < -1e-10 * (1.0 + grad.amax()));
                match most_negative {
                    Some((k, _)) => {
                        working.remove(k);
                    }
                    None => {
                        lambda_w = lam;
                        break;
                    }
                }
                continue;
            }
            let mut t = 1.0;
            let mut blocking = None;
            for i in 0..m {
                if working.contains(&i) {
                    continue;
                }
                let gp = g.row(i).dot(&step.transpose());
                if gp > 1e-14 * scale {
                    let slack = (rhs[i] - g.row(i).dot(&z.transpose())).max(0.0);
                    let ti = slack / gp;
                    if ti < t {
                        t = ti;
                        blocking = Some(i);
                    }
                }
            }
            z += step * t;
            if let Some(i) = blocking {
                working.push(i);
            }
        }

        let mut multipliers = DVector::zeros(m);
        for (k, &i) in working.iter().enumerate() {
            multipliers[i] = lambda_w[k].max(0.0);
        }
        let kkt_residual = self.kkt_residual(cp, x, &z, &multipliers);
        let value = self.trajectory_cost(x, &z).max(0.0);
        working.sort_unstable();
        Ok(QpSolution {
            status: QpStatus::Optimal,
            u_sequence: z,
            value,
            kkt_residual,
            multipliers,
            active_set: working,
            iterations,
        })
    }

    /// Solves `[Ĥ A_Wᵀ; A_W 0] [p; λ] = [-grad; 0]`.
    fn eqp_step(
        &self,
        g: &DMatrix<f64>,
        working: &[usize],
        grad: &DVector<f64>,
    ) -> Option<(DVector<f64>, DVector<f64>)> {
        let n = self.hessian.nrows();
        let k = working.len();
        let mut kkt = DMatrix::zeros(n + k, n + k);
        kkt.view_mut((0, 0), (n, n)).copy_from(&self.hessian);
        for (r, &i) in working.iter().enumerate() {
            for j in 0..n {
                kkt[(n + r, j)] = g[(i, j)];
                kkt[(j, n + r)] = g[(i, j)];
            }
        }
        let mut rhs = DVector::zeros(n + k);
        rhs.rows_mut(0, n).copy_from(&(-grad));
        let sol = kkt.full_piv_lu().solve(&rhs)?;
        if !sol.iter().all(|v| v.is_finite()) {
            return None;
        }
        Some((sol.rows(0, n).into_owned(), sol.rows(n, k).into_owned()))
    }

    /// Max of stationarity, primal feasibility, dual feasibility and
    /// complementarity violations.
    pub fn kkt_residual(
        &self,
        cp: &CondensedProblem,
        x: &DVector<f64>,
        z: &DVector<f64>,
        multipliers: &DVector<f64>,
    ) -> f64 {
        let rhs = cp.rhs(x);
        let slack = &rhs - &cp.g * z;
        let stationarity = (&self.hessian * z + &self.linear * x + cp.g.transpose() * multipliers).amax();
        let primal = (-slack.min()).max(0.0);
        let dual = (-multipliers.min()).max(0.0);
        let comp = multipliers
            .iter()
            .zip(slack.iter())
            .map(|(l, s)| (l * s).abs())
            .fold(0.0, f64::max);
        stationarity.max(primal).max(dual).max(comp)
    }
}

/// One-shot labeling solve; builds the condensed cost on every call.
pub fn solve_mpc(
    p: &MpcProblem,
    cp: &CondensedProblem,
    x: &DVector<f64>,
    warm_start: Option<&DVector<f64>>,
    tol: &Tolerances,
    counter: &mut QueryCounter,
) -> Result<QpSolution> {
    MpcLabeler::new(p, cp).solve(cp, x, warm_start, tol, counter)
}
