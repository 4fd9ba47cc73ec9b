//! Brute-force references and test statistics: grid membership of the
//! feasible set, chi-square uniformity and homogeneity tests, and a bisection
//! reference for chord lengths.

mod grid;
mod stats;

use nalgebra::DVector;

use crate::condense::{CondensedProblem, RowLabel};
use crate::error::{Error, Result};
use crate::optim::{feasibility_check, QueryCounter, Tolerances};

pub use grid::{build_grid_oracle, GridOracle};
pub use stats::{
    chi2_sf, grid_counts, homogeneity_test, uniformity_test, CellCount, HomogeneityReport, UniformityReport,
};

/// Output of [`bisection_reference`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BisectionReference {
    /// Feasible end of the final bracket.
    pub alpha: f64,
    /// Exit of the ray from the state constraints on `x_0`.
    pub exit: f64,
    pub iterations: u64,
}

/// Chord length along `d` by bisection on the feasibility check, starting
/// from the bracket `[0, exit]` where `exit` leaves the `x_0` state rows of
/// the condensed system. `x` must be feasible.
pub fn bisection_reference(
    cp: &CondensedProblem,
    x: &DVector<f64>,
    d: &DVector<f64>,
    epsilon: f64,
) -> Result<BisectionReference> {
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::InvalidArgument("epsilon must be positive".into()));
    }
    // x_0 rows read  -F x ≤ w  with G = 0
    let mut exit = f64::INFINITY;
    for (r, label) in cp.row_labels.iter().enumerate() {
        if *label != RowLabel::State(0) {
            continue;
        }
        let rate = -cp.f.row(r).dot(&d.transpose());
        if rate > 0.0 {
            let slack = cp.w[r] + cp.f.row(r).dot(&x.transpose());
            exit = exit.min(slack.max(0.0) / rate);
        }
    }
    if !exit.is_finite() {
        return Err(Error::UnboundedStateSet);
    }
    let tol = Tolerances::default();
    let mut counter = QueryCounter::default();
    let (mut inside, mut outside) = (0.0, exit);
    let mut iterations = 0;
    while outside - inside > epsilon {
        let mid = inside + 0.5 * (outside - inside);
        iterations += 1;
        if feasibility_check(cp, &(x + d * mid), &tol, &mut counter)? {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    Ok(BisectionReference {
        alpha: inside,
        exit,
        iterations,
    })
}
