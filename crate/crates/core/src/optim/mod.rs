//! LP and QP kernels: the exact boundary oracle, the phase-1 feasibility
//! check and the MPC labeling solve.

pub mod lp;
pub mod qp;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::condense::CondensedProblem;
use crate::error::{Error, Result};
use crate::model::Polyhedron;

pub use lp::{lp_objective_range, lp_solve, lp_solve_with, phase_one, LpSolution, LpStatus, PhaseOne, SimplexOptions};
pub use qp::{solve_mpc, MpcLabeler, QpSolution, QpStatus};

/// Solver tolerances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Constraint satisfaction / phase-1 slack threshold.
    pub feas: f64,
    /// Bound on the KKT residual of an optimal labeling solve.
    pub kkt: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            feas: 1e-8,
            kkt: 1e-7,
        }
    }
}

impl Tolerances {
    pub fn simplex(&self) -> SimplexOptions {
        SimplexOptions {
            tol_feas: self.feas,
            ..SimplexOptions::default()
        }
    }
}

/// Per-run solver call counts. Each sampler run owns one.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryCounter {
    /// Boundary-oracle LPs.
    pub boundary: u64,
    /// Phase-1 feasibility LPs.
    pub feasibility: u64,
    /// MPC labeling QPs.
    pub mpc: u64,
}

/// Output of the boundary oracle for one direction.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryResult {
    /// Largest feasible step along the (normalized) direction.
    pub alpha_star: f64,
    /// Input sequence certifying feasibility of `x + alpha_star·d`.
    pub z_u_witness: DVector<f64>,
    /// Condensed row with the largest multiplier at the optimum.
    pub limiting_row: usize,
}

/// Is there an input sequence with `G z_u ≤ w + F x`? Solved as the phase-1
/// LP with one shared slack; feasible iff the optimal slack is within
/// `tol.feas`. Counts one feasibility query.
pub fn feasibility_check(
    cp: &CondensedProblem,
    x: &DVector<f64>,
    tol: &Tolerances,
    counter: &mut QueryCounter,
) -> Result<bool> {
    check_state_dim(cp, x)?;
    counter.feasibility += 1;
    let rhs = cp.rhs(x);
    let free = vec![false; cp.n_inputs()];
    let p1 = phase_one(&cp.g, &rhs, &free, &tol.simplex())?;
    Ok(p1.is_feasible(tol.feas))
}

/// Exact boundary distance `Φ(x, d)`: the largest `α ≥ 0` such that some
/// `z_u` satisfies `G z_u ≤ w + F (x + α d)`. The direction is normalized
/// first. Counts one boundary query.
pub fn boundary_oracle(
    cp: &CondensedProblem,
    x: &DVector<f64>,
    d: &DVector<f64>,
    tol: &Tolerances,
    counter: &mut QueryCounter,
) -> Result<BoundaryResult> {
    check_state_dim(cp, x)?;
    let norm = d.norm();
    if d.len() != x.len() || norm.is_nan() || norm <= 1e-12 || !norm.is_finite() {
        return Err(Error::InvalidArgument("direction must be a nonzero finite n_x-vector".into()));
    }
    counter.boundary += 1;
    boundary_lp(cp, x, &(d / norm), tol)
}

/// The boundary LP without normalizing `d`:
/// `max α  s.t.  G z_u - α F d ≤ w + F x,  α ≥ 0`, in `N·n_u + 1` variables.
///
/// The same tableau is then driven to the smallest feasible `α`; if that is
/// not zero, a phase-1 solve decides whether the anchor itself is infeasible.
pub fn boundary_lp(
    cp: &CondensedProblem,
    x: &DVector<f64>,
    d: &DVector<f64>,
    tol: &Tolerances,
) -> Result<BoundaryResult> {
    let nz = cp.n_inputs();
    let m = cp.n_constraints();
    let mut a = DMatrix::zeros(m, nz + 1);
    a.view_mut((0, 0), (m, nz)).copy_from(&cp.g);
    a.set_column(nz, &(-(&cp.f * d)));
    let mut c = DVector::zeros(nz + 1);
    c[nz] = 1.0;
    let mut mask = vec![false; nz + 1];
    mask[nz] = true;
    let rhs = cp.rhs(x);
    let (sol, min_alpha) = lp_objective_range(&c, &a, &rhs, &mask, &tol.simplex())?;
    // the ray may enter the set further out even though x is outside; a
    // positive smallest step is confirmed in constraint space, where the
    // feasibility tolerance applies
    let outside = || -> Result<bool> {
        Ok(!phase_one(&cp.g, &rhs, &mask[..nz], &tol.simplex())?.is_feasible(tol.feas))
    };
    match sol.status {
        LpStatus::Unbounded => Err(Error::UnboundedSet),
        LpStatus::Infeasible => Err(Error::InfeasibleAnchor),
        LpStatus::Optimal if min_alpha.is_none_or(|a| a > 0.0) && outside()? => Err(Error::InfeasibleAnchor),
        LpStatus::Optimal => {
            let limiting_row = sol
                .duals
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .map_or(0, |(i, _)| i);
            Ok(BoundaryResult {
                alpha_star: sol.primal[nz].max(0.0),
                z_u_witness: sol.primal.rows(0, nz).into_owned(),
                limiting_row,
            })
        }
    }
}

/// Axis-aligned bounding box of a polyhedron from `2·n` support LPs.
pub fn bounding_box(set: &Polyhedron, tol: &Tolerances) -> Result<(DVector<f64>, DVector<f64>)> {
    let n = set.dim();
    let mut lower = DVector::zeros(n);
    let mut upper = DVector::zeros(n);
    let free = vec![false; n];
    for k in 0..n {
        for sign in [1.0, -1.0] {
            let mut c = DVector::zeros(n);
            c[k] = sign;
            let sol = lp_solve_with(&c, set.h(), set.rhs(), &free, &tol.simplex())?;
            match sol.status {
                LpStatus::Optimal => {
                    if sign > 0.0 {
                        upper[k] = sol.objective;
                    } else {
                        lower[k] = -sol.objective;
                    }
                }
                LpStatus::Unbounded => return Err(Error::UnboundedStateSet),
                LpStatus::Infeasible => {
                    return Err(Error::InvalidArgument("state constraint set is empty".into()))
                }
            }
        }
    }
    Ok((lower, upper))
}

fn check_state_dim(cp: &CondensedProblem, x: &DVector<f64>) -> Result<()> {
    if x.len() != cp.nx() {
        return Err(Error::InvalidArgument(format!(
            "state has {} entries, expected {}",
            x.len(),
            cp.nx()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::condense::condense;
    use crate::model::{make_pendulum_problem, MpcProblem, ProblemData};

    fn static_box() -> MpcProblem {
        crate::model::make_static_box_problem()
    }

    #[test]
    fn static_box_boundary_is_unit() {
        let cp = condense(&static_box());
        let mut qc = QueryCounter::default();
        let r = boundary_oracle(
            &cp,
            &DVector::zeros(2),
            &DVector::from_vec(vec![1.0, 0.0]),
            &Tolerances::default(),
            &mut qc,
        )
        .unwrap();
        assert!((r.alpha_star - 1.0).abs() < 1e-12);
        assert_eq!(qc.boundary, 1);
        assert_eq!(cp.row_labels[r.limiting_row], crate::condense::RowLabel::State(0));
    }

    #[test]
    fn scale_property_of_kernel() {
        let cp = condense(&make_pendulum_problem());
        let tol = Tolerances::default();
        let x = DVector::from_vec(vec![0.05, -0.3]);
        let d = DVector::from_vec(vec![0.6, 0.8]);
        let one = boundary_lp(&cp, &x, &d, &tol).unwrap().alpha_star;
        let two = boundary_lp(&cp, &x, &(&d * 2.0), &tol).unwrap().alpha_star;
        assert!((one - 2.0 * two).abs() <= 1e-12 * one.max(1.0), "{one} vs {two}");
    }

    #[test]
    fn pendulum_feasibility_points() {
        let cp = condense(&make_pendulum_problem());
        let tol = Tolerances::default();
        let mut qc = QueryCounter::default();
        assert!(feasibility_check(&cp, &DVector::zeros(2), &tol, &mut qc).unwrap());
        assert!(!feasibility_check(&cp, &DVector::from_vec(vec![2.5, 3.5]), &tol, &mut qc).unwrap());
        assert!(!feasibility_check(&cp, &DVector::from_vec(vec![0.0, 3.6]), &tol, &mut qc).unwrap());
        assert_eq!(qc.feasibility, 3);
        assert!(feasibility_check(&cp, &DVector::zeros(3), &tol, &mut qc).is_err());
    }

    #[test]
    fn infeasible_anchor_is_reported() {
        let cp = condense(&make_pendulum_problem());
        let mut qc = QueryCounter::default();
        let r = boundary_oracle(
            &cp,
            &DVector::from_vec(vec![2.5, 3.5]),
            &DVector::from_vec(vec![1.0, 0.0]),
            &Tolerances::default(),
            &mut qc,
        );
        assert_eq!(r, Err(Error::InfeasibleAnchor));
    }

    #[test]
    fn unbounded_set_is_reported() {
        // x unconstrained, static dynamics: the feasible set is all of R^1.
        let free = Polyhedron::new(DMatrix::zeros(1, 1), DVector::zeros(1)).unwrap();
        let u = Polyhedron::from_box(&[-1.0], &[1.0]).unwrap();
        let p = MpcProblem::new(ProblemData {
            a: DMatrix::zeros(1, 1),
            b: DMatrix::from_element(1, 1, 1.0),
            horizon: 2,
            q: DMatrix::identity(1, 1),
            r: DMatrix::identity(1, 1),
            p: DMatrix::zeros(1, 1),
            state_h: free.h().clone(),
            state_rhs: free.rhs().clone(),
            input_h: u.h().clone(),
            input_rhs: u.rhs().clone(),
            terminal_h: free.h().clone(),
            terminal_rhs: free.rhs().clone(),
        })
        .unwrap();
        let cp = condense(&p);
        let mut qc = QueryCounter::default();
        let r = boundary_oracle(&cp, &DVector::zeros(1), &DVector::from_element(1, 1.0), &Tolerances::default(), &mut qc);
        assert_eq!(r, Err(Error::UnboundedSet));
        assert_eq!(bounding_box(p.state_set(), &Tolerances::default()), Err(Error::UnboundedStateSet));
    }

    #[test]
    fn pendulum_state_box() {
        let p = make_pendulum_problem();
        let (lo, hi) = bounding_box(p.state_set(), &Tolerances::default()).unwrap();
        assert_eq!(lo.as_slice(), &[-2.5, -3.5]);
        assert_eq!(hi.as_slice(), &[2.5, 3.5]);
    }
}
