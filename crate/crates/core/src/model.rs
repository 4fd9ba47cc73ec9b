//! Problem description types: linear dynamics, polyhedral constraint sets and
//! the quadratic-cost MPC problem built from them.
//!
//! Every type validates on construction, so a value that exists satisfies its
//! invariants. [`validate_problem`] exposes the same checks as data for callers
//! that want every violation at once.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative eigenvalue threshold for the PSD / PD checks on cost matrices.
pub const DEFINITENESS_TOL: f64 = 1e-9;

/// One broken invariant of a problem description.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    DimensionMismatch {
        what: String,
        expected: String,
        found: String,
    },
    EmptyDimension(&'static str),
    NonFinite(&'static str),
    InfeasibleZeroRow { set: &'static str, row: usize },
    NotSymmetric(&'static str),
    NotPositiveSemidefinite(&'static str),
    NotPositiveDefinite(&'static str),
    ZeroHorizon,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DimensionMismatch {
                what,
                expected,
                found,
            } => write!(f, "dimension mismatch: {what} expected {expected}, found {found}"),
            Violation::EmptyDimension(what) => write!(f, "dimension mismatch: {what} must be at least 1"),
            Violation::NonFinite(what) => write!(f, "{what} has non-finite entries"),
            Violation::InfeasibleZeroRow { set, row } => {
                write!(f, "{set} row {row} is all-zero with a negative right-hand side")
            }
            Violation::NotSymmetric(name) => write!(f, "{name} not symmetric"),
            Violation::NotPositiveSemidefinite(name) => write!(f, "{name} not positive semidefinite"),
            Violation::NotPositiveDefinite(name) => write!(f, "{name} not positive definite"),
            Violation::ZeroHorizon => write!(f, "horizon must be at least 1"),
        }
    }
}

/// Discrete-time dynamics `x⁺ = A x + B u`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
}

impl LinearSystem {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>) -> Result<Self> {
        let mut violations = Vec::new();
        check_system(&a, &b, &mut violations);
        if violations.is_empty() {
            Ok(Self { a, b })
        } else {
            Err(Error::InvalidProblem(violations))
        }
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn nx(&self) -> usize {
        self.a.nrows()
    }

    pub fn nu(&self) -> usize {
        self.b.ncols()
    }

    pub fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        &self.a * x + &self.b * u
    }
}

fn check_system(a: &DMatrix<f64>, b: &DMatrix<f64>, out: &mut Vec<Violation>) {
    if a.nrows() == 0 {
        out.push(Violation::EmptyDimension("state dimension"));
    }
    if b.ncols() == 0 {
        out.push(Violation::EmptyDimension("input dimension"));
    }
    if a.nrows() != a.ncols() {
        out.push(Violation::DimensionMismatch {
            what: "A".into(),
            expected: "square".into(),
            found: format!("{}x{}", a.nrows(), a.ncols()),
        });
    }
    if b.nrows() != a.nrows() {
        out.push(Violation::DimensionMismatch {
            what: "B rows".into(),
            expected: a.nrows().to_string(),
            found: b.nrows().to_string(),
        });
    }
    if !all_finite(a.as_slice()) {
        out.push(Violation::NonFinite("A"));
    }
    if !all_finite(b.as_slice()) {
        out.push(Violation::NonFinite("B"));
    }
}

/// Inequality description `{z | H z ≤ h}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyhedron {
    h: DMatrix<f64>,
    rhs: DVector<f64>,
}

impl Polyhedron {
    pub fn new(h: DMatrix<f64>, rhs: DVector<f64>) -> Result<Self> {
        let mut violations = Vec::new();
        check_polyhedron("polyhedron", &h, &rhs, None, &mut violations);
        if violations.is_empty() {
            Ok(Self { h, rhs })
        } else {
            Err(Error::InvalidProblem(violations))
        }
    }

    /// Axis-aligned box `lower ≤ z ≤ upper`, encoded as `[I; -I] z ≤ [upper; -lower]`.
    pub fn from_box(lower: &[f64], upper: &[f64]) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::InvalidArgument("box bounds differ in length".into()));
        }
        let n = lower.len();
        let mut h = DMatrix::zeros(2 * n, n);
        let mut rhs = DVector::zeros(2 * n);
        for i in 0..n {
            h[(i, i)] = 1.0;
            h[(n + i, i)] = -1.0;
            rhs[i] = upper[i];
            rhs[n + i] = -lower[i];
        }
        Self::new(h, rhs)
    }

    pub fn h(&self) -> &DMatrix<f64> {
        &self.h
    }

    pub fn rhs(&self) -> &DVector<f64> {
        &self.rhs
    }

    pub fn n_facets(&self) -> usize {
        self.h.nrows()
    }

    pub fn dim(&self) -> usize {
        self.h.ncols()
    }

    pub fn contains(&self, z: &DVector<f64>, tol: f64) -> bool {
        (&self.h * z - &self.rhs).iter().all(|&v| v <= tol)
    }

    /// Largest `t ≥ 0` with `z + t d` inside the polyhedron, assuming `z` is
    /// inside. `None` when the ray never leaves.
    pub fn ray_exit(&self, z: &DVector<f64>, d: &DVector<f64>) -> Option<f64> {
        let hd = &self.h * d;
        let slack = &self.rhs - &self.h * z;
        let mut best: Option<f64> = None;
        for (s, rate) in slack.iter().zip(hd.iter()) {
            if *rate > 0.0 {
                let t = (s / rate).max(0.0);
                best = Some(best.map_or(t, |b: f64| b.min(t)));
            }
        }
        best
    }
}

fn check_polyhedron(
    set: &'static str,
    h: &DMatrix<f64>,
    rhs: &DVector<f64>,
    dim: Option<usize>,
    out: &mut Vec<Violation>,
) {
    if h.nrows() != rhs.len() {
        out.push(Violation::DimensionMismatch {
            what: format!("{set} rows"),
            expected: h.nrows().to_string(),
            found: rhs.len().to_string(),
        });
        return;
    }
    if let Some(n) = dim {
        if h.ncols() != n {
            out.push(Violation::DimensionMismatch {
                what: format!("{set} columns"),
                expected: n.to_string(),
                found: h.ncols().to_string(),
            });
        }
    }
    if !all_finite(h.as_slice()) || !all_finite(rhs.as_slice()) {
        out.push(Violation::NonFinite(set));
    }
    for (i, (row, hv)) in h.row_iter().zip(rhs.iter()).enumerate() {
        if row.iter().all(|&v| v == 0.0) && *hv < 0.0 {
            out.push(Violation::InfeasibleZeroRow { set, row: i });
        }
    }
}

/// Raw, unvalidated problem matrices as read from a problem file.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemData {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub horizon: usize,
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub p: DMatrix<f64>,
    pub state_h: DMatrix<f64>,
    pub state_rhs: DVector<f64>,
    pub input_h: DMatrix<f64>,
    pub input_rhs: DVector<f64>,
    pub terminal_h: DMatrix<f64>,
    pub terminal_rhs: DVector<f64>,
}

/// Linear MPC problem with quadratic stage cost `xᵀQx + uᵀRu`, terminal cost
/// `xᵀPx`, state constraints on `x_0 … x_{N-1}` and a terminal set on `x_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct MpcProblem {
    system: LinearSystem,
    horizon: usize,
    state_set: Polyhedron,
    input_set: Polyhedron,
    terminal_set: Polyhedron,
    q: DMatrix<f64>,
    r: DMatrix<f64>,
    p: DMatrix<f64>,
}

impl MpcProblem {
    pub fn new(data: ProblemData) -> Result<Self> {
        let violations = validate_problem(&data);
        if !violations.is_empty() {
            return Err(Error::InvalidProblem(violations));
        }
        Ok(Self {
            system: LinearSystem {
                a: data.a,
                b: data.b,
            },
            horizon: data.horizon,
            state_set: Polyhedron {
                h: data.state_h,
                rhs: data.state_rhs,
            },
            input_set: Polyhedron {
                h: data.input_h,
                rhs: data.input_rhs,
            },
            terminal_set: Polyhedron {
                h: data.terminal_h,
                rhs: data.terminal_rhs,
            },
            q: data.q,
            r: data.r,
            p: data.p,
        })
    }

    /// Copies the matrices back out, e.g. for serialization.
    pub fn to_data(&self) -> ProblemData {
        ProblemData {
            a: self.system.a.clone(),
            b: self.system.b.clone(),
            horizon: self.horizon,
            q: self.q.clone(),
            r: self.r.clone(),
            p: self.p.clone(),
            state_h: self.state_set.h.clone(),
            state_rhs: self.state_set.rhs.clone(),
            input_h: self.input_set.h.clone(),
            input_rhs: self.input_set.rhs.clone(),
            terminal_h: self.terminal_set.h.clone(),
            terminal_rhs: self.terminal_set.rhs.clone(),
        }
    }

    pub fn system(&self) -> &LinearSystem {
        &self.system
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn state_set(&self) -> &Polyhedron {
        &self.state_set
    }

    pub fn input_set(&self) -> &Polyhedron {
        &self.input_set
    }

    pub fn terminal_set(&self) -> &Polyhedron {
        &self.terminal_set
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn r(&self) -> &DMatrix<f64> {
        &self.r
    }

    pub fn p(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn nx(&self) -> usize {
        self.system.nx()
    }

    pub fn nu(&self) -> usize {
        self.system.nu()
    }
}

/// Collects every invariant violation of `data`; an empty list means
/// [`MpcProblem::new`] will succeed.
pub fn validate_problem(data: &ProblemData) -> Vec<Violation> {
    let mut out = Vec::new();
    check_system(&data.a, &data.b, &mut out);
    let nx = data.a.nrows();
    let nu = data.b.ncols();
    if data.horizon == 0 {
        out.push(Violation::ZeroHorizon);
    }
    check_polyhedron("state set", &data.state_h, &data.state_rhs, Some(nx), &mut out);
    check_polyhedron("input set", &data.input_h, &data.input_rhs, Some(nu), &mut out);
    check_polyhedron(
        "terminal set",
        &data.terminal_h,
        &data.terminal_rhs,
        Some(nx),
        &mut out,
    );
    check_cost("Q", &data.q, nx, false, &mut out);
    check_cost("R", &data.r, nu, true, &mut out);
    check_cost("P", &data.p, nx, false, &mut out);
    out
}

fn check_cost(
    name: &'static str,
    m: &DMatrix<f64>,
    n: usize,
    strict: bool,
    out: &mut Vec<Violation>,
) {
    if m.nrows() != n || m.ncols() != n {
        out.push(Violation::DimensionMismatch {
            what: name.to_string(),
            expected: format!("{n}x{n}"),
            found: format!("{}x{}", m.nrows(), m.ncols()),
        });
        return;
    }
    if !all_finite(m.as_slice()) {
        out.push(Violation::NonFinite(name));
        return;
    }
    let scale = m.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
    if (m - m.transpose()).iter().any(|v| v.abs() > DEFINITENESS_TOL * scale) {
        out.push(Violation::NotSymmetric(name));
        return;
    }
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigenvalues();
    let largest = eig.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let smallest = eig.iter().copied().fold(f64::INFINITY, f64::min);
    if strict {
        if !(smallest > DEFINITENESS_TOL * largest && smallest > 0.0) {
            out.push(Violation::NotPositiveDefinite(name));
        }
    } else if smallest < -DEFINITENESS_TOL * largest {
        out.push(Violation::NotPositiveSemidefinite(name));
    }
}

fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// The inverted-pendulum benchmark: `N = 15`, `Q = I`, `R = 1`, `P = 0`,
/// `|θ| ≤ 2.5`, `|θ̇| ≤ 3.5`, `|u| ≤ 2` and terminal set `{0}`.
pub fn make_pendulum_problem() -> MpcProblem {
    let data = pendulum_data();
    MpcProblem::new(data).expect("pendulum benchmark is valid")
}

pub(crate) fn pendulum_data() -> ProblemData {
    let zero_terminal = Polyhedron::from_box(&[0.0, 0.0], &[0.0, 0.0]).unwrap();
    let state = Polyhedron::from_box(&[-2.5, -3.5], &[2.5, 3.5]).unwrap();
    let input = Polyhedron::from_box(&[-2.0], &[2.0]).unwrap();
    ProblemData {
        a: DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.981, 0.1]),
        b: DMatrix::from_row_slice(2, 1, &[0.0, 0.1]),
        horizon: 15,
        q: DMatrix::identity(2, 2),
        r: DMatrix::from_element(1, 1, 1.0),
        p: DMatrix::zeros(2, 2),
        state_h: state.h,
        state_rhs: state.rhs,
        input_h: input.h,
        input_rhs: input.rhs,
        terminal_h: zero_terminal.h,
        terminal_rhs: zero_terminal.rhs,
    }
}

/// A static system (`A = 0`, `B = 0`) on the box `[-1, 1]²` with terminal set
/// equal to the box, so the feasible set is exactly the box. Used as a
/// reference where cell probabilities are known in closed form.
pub fn make_static_box_problem() -> MpcProblem {
    let x = Polyhedron::from_box(&[-1.0, -1.0], &[1.0, 1.0]).unwrap();
    let u = Polyhedron::from_box(&[-1.0], &[1.0]).unwrap();
    MpcProblem::new(ProblemData {
        a: DMatrix::zeros(2, 2),
        b: DMatrix::zeros(2, 1),
        horizon: 3,
        q: DMatrix::identity(2, 2),
        r: DMatrix::identity(1, 1),
        p: DMatrix::zeros(2, 2),
        state_h: x.h.clone(),
        state_rhs: x.rhs.clone(),
        input_h: u.h,
        input_rhs: u.rhs,
        terminal_h: x.h,
        terminal_rhs: x.rhs,
    })
    .expect("static box problem is valid")
}

/// Sampling method that produced a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Method {
    LmpcHr,
    Uvrs,
    DrsHr,
    BsHr,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Uvrs, Method::DrsHr, Method::BsHr, Method::LmpcHr];

    /// Upper-case tag, e.g. `LMPC_HR`.
    pub fn tag(self) -> &'static str {
        match self {
            Method::LmpcHr => "LMPC_HR",
            Method::Uvrs => "UVRS",
            Method::DrsHr => "DRS_HR",
            Method::BsHr => "BS_HR",
        }
    }

    /// Display name used in tables, e.g. `LMPC-HR`.
    pub fn label(self) -> &'static str {
        match self {
            Method::LmpcHr => "LMPC-HR",
            Method::Uvrs => "UVRS",
            Method::DrsHr => "DRS-HR",
            Method::BsHr => "BS-HR",
        }
    }

    /// Lower-case CLI spelling, e.g. `lmpc-hr`.
    pub fn cli_name(self) -> &'static str {
        match self {
            Method::LmpcHr => "lmpc-hr",
            Method::Uvrs => "uvrs",
            Method::DrsHr => "drs-hr",
            Method::BsHr => "bs-hr",
        }
    }

    /// RNG stream id; each method draws from its own ChaCha stream of the
    /// master seed.
    pub fn stream_id(self) -> u64 {
        match self {
            Method::LmpcHr => 1,
            Method::Uvrs => 2,
            Method::DrsHr => 3,
            Method::BsHr => 4,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.to_ascii_lowercase().replace('_', "-");
        Method::ALL
            .into_iter()
            .find(|m| m.cli_name() == norm)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown method `{s}`")))
    }
}

/// A labeled dataset entry `(x, π(x))` plus its optimal value.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub x: DVector<f64>,
    pub u0: DVector<f64>,
    pub value: f64,
    pub chain_index: usize,
    pub method: Method,
}
