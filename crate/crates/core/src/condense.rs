//! Condensing: eliminate the predicted states so that every MPC constraint
//! reads `G z_u ≤ w + F x` in the stacked input sequence `z_u` and the
//! initial state `x`.

use nalgebra::{DMatrix, DVector};

use crate::model::{LinearSystem, MpcProblem};

/// `z_x = Ω x + Γ z_u` with `z_x = [x_1; …; x_N]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionMatrices {
    pub omega: DMatrix<f64>,
    pub gamma: DMatrix<f64>,
}

impl PredictionMatrices {
    /// Rows of block `i` (the prediction of `x_{i+1}`).
    fn block_rows(&self, nx: usize, i: usize) -> std::ops::Range<usize> {
        i * nx..(i + 1) * nx
    }
}

/// Builds `Ω` (block `i` is `A^{i+1}`) and the block lower-triangular `Γ`
/// (block `(i, j)` is `A^{i-j} B`), using repeated multiplication.
pub fn build_prediction_matrices(sys: &LinearSystem, horizon: usize) -> PredictionMatrices {
    assert!(horizon >= 1, "horizon must be at least 1");
    let (nx, nu) = (sys.nx(), sys.nu());
    let mut omega = DMatrix::zeros(horizon * nx, nx);
    let mut gamma = DMatrix::zeros(horizon * nx, horizon * nu);

    // powers[k] = A^k B
    let mut powers_b = Vec::with_capacity(horizon);
    let mut ab = sys.b().clone();
    let mut a_pow = sys.a().clone();
    for i in 0..horizon {
        omega.view_mut((i * nx, 0), (nx, nx)).copy_from(&a_pow);
        powers_b.push(ab.clone());
        a_pow = sys.a() * &a_pow;
        ab = sys.a() * &ab;
    }
    for i in 0..horizon {
        for j in 0..=i {
            gamma
                .view_mut((i * nx, j * nu), (nx, nu))
                .copy_from(&powers_b[i - j]);
        }
    }
    PredictionMatrices { omega, gamma }
}

/// Which MPC constraint a condensed row came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RowLabel {
    /// `H_u u_i ≤ h_u`
    Input(usize),
    /// `H_x x_i ≤ h_x`
    State(usize),
    /// `H_f x_N ≤ h_f`
    Terminal,
}

/// Condensed constraint system `G z_u ≤ w + F x`.
///
/// Row order is fixed: for `i = 0, …, N-1` the input rows of `u_i` followed by
/// the state rows of `x_i`, then the terminal rows. `x_0` rows have a zero `G`
/// block and `F = -H_x`.
#[derive(Debug, Clone, PartialEq)]
pub struct CondensedProblem {
    pub g: DMatrix<f64>,
    pub f: DMatrix<f64>,
    pub w: DVector<f64>,
    pub row_labels: Vec<RowLabel>,
    pub prediction: PredictionMatrices,
    nx: usize,
    nu: usize,
    horizon: usize,
}

impl CondensedProblem {
    pub fn n_constraints(&self) -> usize {
        self.w.len()
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn nu(&self) -> usize {
        self.nu
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Number of decision variables `N · n_u`.
    pub fn n_inputs(&self) -> usize {
        self.horizon * self.nu
    }

    /// Right-hand side `w + F x` for a given initial state.
    pub fn rhs(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.w + &self.f * x
    }

    /// Indices of the rows constraining `x_0` alone.
    pub fn initial_state_rows(&self) -> impl Iterator<Item = usize> + '_ {
        self.row_labels
            .iter()
            .enumerate()
            .filter(|(_, l)| **l == RowLabel::State(0))
            .map(|(i, _)| i)
    }

    /// Largest violation of `G z_u ≤ w + F x` (non-positive when satisfied).
    pub fn max_violation(&self, x: &DVector<f64>, z_u: &DVector<f64>) -> f64 {
        (&self.g * z_u - self.rhs(x)).max()
    }
}

/// Condenses a validated problem.
pub fn condense(p: &MpcProblem) -> CondensedProblem {
    let (nx, nu, horizon) = (p.nx(), p.nu(), p.horizon());
    let pred = build_prediction_matrices(p.system(), horizon);
    let (hu, hx, hf) = (p.input_set(), p.state_set(), p.terminal_set());
    let n_c = horizon * (hu.n_facets() + hx.n_facets()) + hf.n_facets();
    let nz = horizon * nu;

    let mut g = DMatrix::zeros(n_c, nz);
    let mut f = DMatrix::zeros(n_c, nx);
    let mut w = DVector::zeros(n_c);
    let mut labels = Vec::with_capacity(n_c);
    let mut row = 0;

    for i in 0..horizon {
        let m = hu.n_facets();
        g.view_mut((row, i * nu), (m, nu)).copy_from(hu.h());
        w.rows_mut(row, m).copy_from(hu.rhs());
        labels.extend(std::iter::repeat_n(RowLabel::Input(i), m));
        row += m;

        let m = hx.n_facets();
        if i == 0 {
            f.view_mut((row, 0), (m, nx)).copy_from(&(-hx.h()));
        } else {
            let rows = pred.block_rows(nx, i - 1);
            let gam = pred.gamma.rows(rows.start, nx);
            let om = pred.omega.rows(rows.start, nx);
            g.view_mut((row, 0), (m, nz)).copy_from(&(hx.h() * gam));
            f.view_mut((row, 0), (m, nx)).copy_from(&(-(hx.h() * om)));
        }
        w.rows_mut(row, m).copy_from(hx.rhs());
        labels.extend(std::iter::repeat_n(RowLabel::State(i), m));
        row += m;
    }

    let m = hf.n_facets();
    let rows = pred.block_rows(nx, horizon - 1);
    let gam = pred.gamma.rows(rows.start, nx);
    let om = pred.omega.rows(rows.start, nx);
    g.view_mut((row, 0), (m, nz)).copy_from(&(hf.h() * gam));
    f.view_mut((row, 0), (m, nx)).copy_from(&(-(hf.h() * om)));
    w.rows_mut(row, m).copy_from(hf.rhs());
    labels.extend(std::iter::repeat_n(RowLabel::Terminal, m));
    row += m;
    debug_assert_eq!(row, n_c);

    CondensedProblem {
        g,
        f,
        w,
        row_labels: labels,
        prediction: pred,
        nx,
        nu,
        horizon,
    }
}
