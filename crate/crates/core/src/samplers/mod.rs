//! Feasible-set samplers: LMPC-HR and the three baselines (UVRS, DRS-HR,
//! BS-HR), each producing feasible states plus query instrumentation.
//!
//! Every sampler is split in two: a `*_chain` function that only walks the
//! feasible set and returns the visited states, and a `*_run` wrapper that
//! additionally labels the emitted states with the MPC solution.

mod baselines;
mod benchmark;
mod lmpc;

use std::time::Instant;

use nalgebra::DVector;
use rand::Rng;
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::condense::{condense, CondensedProblem};
use crate::error::{Error, Result};
use crate::model::{Method, MpcProblem, SampleRecord};
use crate::optim::{feasibility_check, MpcLabeler, QpStatus, QueryCounter, Tolerances};

pub use baselines::{bisect_chord, bs_hr_chain, bs_hr_run, drs_hr_chain, drs_hr_run, uvrs_chain, uvrs_run, RESAMPLE_CAP};
pub use benchmark::{run_benchmark, Benchmark};
pub use lmpc::{chord_ends, lmpc_hr_chain, lmpc_hr_run};

/// Bracket width used by BS-HR when none is given.
pub const DEFAULT_EPSILON: f64 = 1e-3;

/// Chain parameters shared by all samplers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub seed: u64,
    /// Number of emitted samples.
    pub n_samples: usize,
    /// Leading chain steps that are not recorded.
    pub burn_in: usize,
    /// Record every `thinning`-th step after burn-in.
    pub thinning: usize,
    /// Relative shrink of each exact chord so the next anchor stays interior.
    pub boundary_margin: f64,
    /// Starting state; must be feasible for the hit-and-run variants.
    pub x_init: Vec<f64>,
    pub tolerances: Tolerances,
}

impl ChainConfig {
    pub fn new(x_init: Vec<f64>) -> Self {
        Self {
            seed: 0,
            n_samples: 1000,
            burn_in: 100,
            thinning: 1,
            boundary_margin: 1e-9,
            x_init,
            tolerances: Tolerances::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 1 {
            return Err(Error::InvalidArgument("n_samples must be at least 1".into()));
        }
        if self.thinning < 1 {
            return Err(Error::InvalidArgument("thinning must be at least 1".into()));
        }
        if !(0.0..1e-3).contains(&self.boundary_margin) {
            return Err(Error::InvalidArgument("boundary_margin must lie in [0, 1e-3)".into()));
        }
        if self.x_init.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("x_init must be finite".into()));
        }
        Ok(())
    }

    /// Total number of chain steps: `burn_in + thinning · n_samples`.
    pub fn chain_steps(&self) -> usize {
        self.burn_in + self.thinning * self.n_samples
    }

    /// Whether chain step `i` is recorded.
    pub fn records(&self, i: usize) -> bool {
        i >= self.burn_in && (i - self.burn_in).is_multiple_of(self.thinning)
    }

    /// RNG for one method: ChaCha20 seeded from `seed`, on the method's stream.
    pub fn rng(&self, method: Method) -> ChaCha20Rng {
        use rand::SeedableRng;
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream(method.stream_id());
        rng
    }

    fn x_init(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.x_init)
    }
}

/// One BS-HR bisection: the analytic box exit and the number of midpoint
/// feasibility queries spent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BisectionStep {
    pub alpha_box: f64,
    pub queries: u64,
}

/// States visited by a sampler before labeling.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ChainOutput {
    /// `(chain_index, x)` of every emitted state, in order.
    pub states: Vec<(usize, DVector<f64>)>,
    /// Oracle calls on the sampling path (initial check excluded).
    pub sampling_queries: u64,
    pub rejections: u64,
    /// `(chain_index, x)` of infeasible proposals, for the rejection-based
    /// methods.
    pub rejected_draws: Vec<(usize, DVector<f64>)>,
    pub bisections: Vec<BisectionStep>,
    pub counter: QueryCounter,
}

/// Result of one sampler run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub method: Method,
    pub samples: Vec<SampleRecord>,
    pub sampling_queries: u64,
    pub labeling_queries: u64,
    /// Seconds, sampling and labeling together.
    pub wall_time: f64,
    pub rejections: u64,
    pub rejected_draws: Vec<(usize, DVector<f64>)>,
    pub bisections: Vec<BisectionStep>,
    pub counter: QueryCounter,
}

impl RunReport {
    pub fn cost_per_sample(&self) -> f64 {
        self.sampling_queries as f64 / self.samples.len() as f64
    }

    /// Fraction of sampling queries that were rejected proposals.
    pub fn rejection_rate(&self) -> f64 {
        if self.sampling_queries == 0 {
            0.0
        } else {
            self.rejections as f64 / self.sampling_queries as f64
        }
    }
}

/// Uniform direction on the unit sphere in `R^n` (normalized Gaussian).
pub fn sample_unit_direction<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DVector<f64> {
    loop {
        let d = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let norm = d.norm();
        if norm >= 1e-12 {
            return d / norm;
        }
    }
}

/// Uniform draw on `[lo, hi]` as `lo + (hi - lo) u`, `u ∈ [0, 1)`.
pub(crate) fn uniform_in<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

pub(crate) fn check_init(
    cp: &CondensedProblem,
    cfg: &ChainConfig,
    counter: &mut QueryCounter,
) -> Result<DVector<f64>> {
    cfg.validate()?;
    let x = cfg.x_init();
    if x.len() != cp.nx() {
        return Err(Error::InvalidArgument(format!(
            "x_init has {} entries, expected {}",
            x.len(),
            cp.nx()
        )));
    }
    if !feasibility_check(cp, &x, &cfg.tolerances, counter)? {
        return Err(Error::InfeasibleInit);
    }
    Ok(x)
}

/// Solves the MPC at every emitted state, warm-starting from the previous
/// solution.
pub fn label_states(
    p: &MpcProblem,
    cp: &CondensedProblem,
    method: Method,
    states: &[(usize, DVector<f64>)],
    tol: &Tolerances,
    counter: &mut QueryCounter,
) -> Result<Vec<SampleRecord>> {
    let labeler = MpcLabeler::new(p, cp);
    let mut warm: Option<DVector<f64>> = None;
    let mut out = Vec::with_capacity(states.len());
    for (index, x) in states {
        let sol = labeler.solve(cp, x, warm.as_ref(), tol, counter)?;
        if sol.status != QpStatus::Optimal {
            return Err(Error::LabelingFailed);
        }
        out.push(SampleRecord {
            x: x.clone(),
            u0: sol.first_input(p.nu()),
            value: sol.value,
            chain_index: *index,
            method,
        });
        warm = Some(sol.u_sequence);
    }
    Ok(out)
}

pub(crate) fn finish_run(
    p: &MpcProblem,
    cp: &CondensedProblem,
    method: Method,
    cfg: &ChainConfig,
    chain: ChainOutput,
    started: Instant,
) -> Result<RunReport> {
    let mut counter = chain.counter;
    let before = counter.mpc;
    let samples = label_states(p, cp, method, &chain.states, &cfg.tolerances, &mut counter)?;
    Ok(RunReport {
        method,
        samples,
        sampling_queries: chain.sampling_queries,
        labeling_queries: counter.mpc - before,
        wall_time: started.elapsed().as_secs_f64(),
        rejections: chain.rejections,
        rejected_draws: chain.rejected_draws,
        bisections: chain.bisections,
        counter,
    })
}

/// Runs `method` with its default settings (`epsilon` only affects BS-HR).
pub fn run_method(p: &MpcProblem, cfg: &ChainConfig, method: Method, epsilon: f64) -> Result<RunReport> {
    match method {
        Method::LmpcHr => lmpc_hr_run(p, cfg),
        Method::Uvrs => uvrs_run(p, cfg),
        Method::DrsHr => drs_hr_run(p, cfg),
        Method::BsHr => bs_hr_run(p, cfg, epsilon),
    }
}

/// Chain-only counterpart of [`run_method`].
pub fn run_chain(p: &MpcProblem, cfg: &ChainConfig, method: Method, epsilon: f64) -> Result<ChainOutput> {
    let cp = condense(p);
    match method {
        Method::LmpcHr => lmpc_hr_chain(&cp, cfg),
        Method::Uvrs => uvrs_chain(p, &cp, cfg),
        Method::DrsHr => drs_hr_chain(p, &cp, cfg),
        Method::BsHr => bs_hr_chain(p, &cp, cfg, epsilon),
    }
}
