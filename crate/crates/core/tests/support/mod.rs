//! Brute-force references shared by the integration and acceptance tests.
#![allow(dead_code)]

use lmpc_hr::{MpcProblem, Polyhedron, ProblemData};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// All `k`-subsets of `0..n`.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    if n < k {
        return vec![];
    }
    let mut out = subsets(n - 1, k);
    for mut s in subsets(n - 1, k - 1) {
        s.push(n - 1);
        out.push(s);
    }
    out
}

/// Best vertex of a bounded polyhedron `{A z ≤ b}`, or `None` when empty.
pub fn vertex_enumeration(c: &DVector<f64>, a: &DMatrix<f64>, b: &DVector<f64>) -> Option<f64> {
    let n = a.ncols();
    let mut best: Option<f64> = None;
    for rows in subsets(a.nrows(), n) {
        let sub = DMatrix::from_fn(n, n, |i, j| a[(rows[i], j)]);
        let rhs = DVector::from_fn(n, |i, _| b[rows[i]]);
        let lu = sub.clone().lu();
        if sub.determinant().abs() < 1e-9 {
            continue;
        }
        let Some(z) = lu.solve(&rhs) else { continue };
        if (a * &z - b).max() <= 1e-9 {
            let v = c.dot(&z);
            best = Some(best.map_or(v, |bv: f64| bv.max(v)));
        }
    }
    best
}

/// `x⁺ = x + u`, `|x| ≤ 10`, `|u| ≤ 1`, horizon 2, `Q = R = 1`, `P = 0`.
pub fn scalar_problem() -> MpcProblem {
    let x = Polyhedron::from_box(&[-10.0], &[10.0]).unwrap();
    let u = Polyhedron::from_box(&[-1.0], &[1.0]).unwrap();
    MpcProblem::new(ProblemData {
        a: DMatrix::from_element(1, 1, 1.0),
        b: DMatrix::from_element(1, 1, 1.0),
        horizon: 2,
        q: DMatrix::from_element(1, 1, 1.0),
        r: DMatrix::from_element(1, 1, 1.0),
        p: DMatrix::zeros(1, 1),
        state_h: x.h().clone(),
        state_rhs: x.rhs().clone(),
        input_h: u.h().clone(),
        input_rhs: u.rhs().clone(),
        terminal_h: x.h().clone(),
        terminal_rhs: x.rhs().clone(),
    })
    .unwrap()
}

/// Cost `x0² + u0² + x1² + u1²` minimized over a 1e-3 grid of `[-1, 1]²`.
pub fn scalar_grid_search(x0: f64) -> f64 {
    let steps = 2000;
    let mut best = f64::INFINITY;
    for i in 0..=steps {
        let u0 = -1.0 + 2.0 * i as f64 / steps as f64;
        let x1 = x0 + u0;
        for j in 0..=steps {
            let u1 = -1.0 + 2.0 * j as f64 / steps as f64;
            best = best.min(x0 * x0 + u0 * u0 + x1 * x1 + u1 * u1);
        }
    }
    best
}

/// Largest violation of the original constraints along the simulated
/// trajectory (state rows of x_0..x_{N-1}, input rows, terminal rows).
pub fn simulated_violation(p: &MpcProblem, x: &DVector<f64>, z: &DVector<f64>) -> f64 {
    let nu = p.nu();
    let viol = |set: &Polyhedron, v: &DVector<f64>| {
        if set.n_facets() == 0 {
            f64::NEG_INFINITY
        } else {
            (set.h() * v - set.rhs()).max()
        }
    };
    let mut worst = f64::NEG_INFINITY;
    let mut xi = x.clone();
    for i in 0..p.horizon() {
        let u = z.rows(i * nu, nu).into_owned();
        worst = worst.max(viol(p.state_set(), &xi)).max(viol(p.input_set(), &u));
        xi = p.system().a() * &xi + p.system().b() * &u;
    }
    worst.max(viol(p.terminal_set(), &xi))
}

pub fn random_problem(nx: usize, nu: usize, horizon: usize, entries: &[f64]) -> MpcProblem {
    let mut it = entries.iter().copied().cycle();
    let mut take = |r: usize, c: usize, scale: f64| DMatrix::from_fn(r, c, |_, _| scale * it.next().unwrap());
    let a = take(nx, nx, 0.7);
    let b = take(nx, nu, 1.0);
    let state_h = take(2 * nx, nx, 1.0);
    let input_h = take(2 * nu, nu, 1.0);
    let terminal_h = take(nx + 1, nx, 1.0);
    let data = ProblemData {
        a,
        b,
        horizon,
        q: DMatrix::identity(nx, nx),
        r: DMatrix::identity(nu, nu),
        p: DMatrix::identity(nx, nx),
        state_rhs: DVector::from_element(state_h.nrows(), 1.0),
        state_h,
        input_rhs: DVector::from_element(input_h.nrows(), 1.0),
        input_h,
        terminal_rhs: DVector::from_element(terminal_h.nrows(), 1.0),
        terminal_h,
    };
    MpcProblem::new(data).expect("random problem is valid")
}

/// `max cᵀz s.t. A z ≤ b` with a random sign mask, and the same LP with the
/// sign restrictions written out as rows for [`vertex_enumeration`].
pub struct RandomLp {
    pub c: DVector<f64>,
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub nonneg: Vec<bool>,
    pub a_ref: DMatrix<f64>,
    pub b_ref: DVector<f64>,
}

pub fn random_lp(rng: &mut impl Rng) -> RandomLp {
    let n = rng.random_range(2..=3);
    let extra = rng.random_range(1..=5);
    let nonneg: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
    // random rows plus a box |z_i| ≤ 5 so that the LP is bounded
    let m = extra + 2 * n;
    let mut a = DMatrix::zeros(m, n);
    let mut b = DVector::zeros(m);
    for i in 0..extra {
        for j in 0..n {
            a[(i, j)] = rng.random_range(-1.0..1.0);
        }
        b[i] = rng.random_range(-1.0..2.0);
    }
    for j in 0..n {
        a[(extra + 2 * j, j)] = 1.0;
        a[(extra + 2 * j + 1, j)] = -1.0;
        b[extra + 2 * j] = 5.0;
        b[extra + 2 * j + 1] = 5.0;
    }
    let c = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));

    // the reference sees the sign restrictions as explicit rows
    let signs = nonneg.iter().filter(|&&s| s).count();
    let mut a_ref = a.clone().insert_rows(m, signs, 0.0);
    let b_ref = b.clone().insert_rows(m, signs, 0.0);
    for (k, j) in (0..n).filter(|&j| nonneg[j]).enumerate() {
        a_ref[(m + k, j)] = -1.0;
    }
    RandomLp { c, a, b, nonneg, a_ref, b_ref }
}
