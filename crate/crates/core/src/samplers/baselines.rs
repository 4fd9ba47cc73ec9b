//! Baseline samplers that only use a yes/no feasibility oracle.

use std::time::Instant;

use nalgebra::DVector;

use super::{
    check_init, finish_run, sample_unit_direction, uniform_in, BisectionStep, ChainConfig, ChainOutput, RunReport,
};
use crate::condense::{condense, CondensedProblem};
use crate::error::{Error, Result};
use crate::model::{Method, MpcProblem, Polyhedron};
use crate::optim::{bounding_box, feasibility_check, QueryCounter, Tolerances};

/// Consecutive rejections tolerated before a rejection sampler gives up.
pub const RESAMPLE_CAP: usize = 100_000;

/// Uniform rejection sampling over the bounding box of the state set.
/// Burn-in and thinning do not apply; `chain_index` is the raw draw index.
pub fn uvrs_chain(p: &MpcProblem, cp: &CondensedProblem, cfg: &ChainConfig) -> Result<ChainOutput> {
    cfg.validate()?;
    let (lower, upper) = bounding_box(p.state_set(), &cfg.tolerances)?;
    let mut rng = cfg.rng(Method::Uvrs);
    let mut out = ChainOutput::default();
    let mut streak = 0;
    let mut draw = 0;
    while out.states.len() < cfg.n_samples {
        let x = DVector::from_fn(cp.nx(), |k, _| uniform_in(&mut rng, lower[k], upper[k]));
        out.sampling_queries += 1;
        if feasibility_check(cp, &x, &cfg.tolerances, &mut out.counter)? {
            out.states.push((draw, x));
            streak = 0;
        } else {
            out.rejections += 1;
            out.rejected_draws.push((draw, x));
            streak += 1;
            if streak >= RESAMPLE_CAP {
                return Err(Error::ResampleCapExceeded { cap: RESAMPLE_CAP });
            }
        }
        draw += 1;
    }
    Ok(out)
}

pub fn uvrs_run(p: &MpcProblem, cfg: &ChainConfig) -> Result<RunReport> {
    let started = Instant::now();
    let cp = condense(p);
    let chain = uvrs_chain(p, &cp, cfg)?;
    finish_run(p, &cp, Method::Uvrs, cfg, chain, started)
}

/// Chord of the line `x + t d` with the state set, `(backward, forward)`.
fn box_chord(set: &Polyhedron, x: &DVector<f64>, d: &DVector<f64>) -> Result<(f64, f64)> {
    let forward = set.ray_exit(x, d).ok_or(Error::UnboundedStateSet)?;
    let backward = set.ray_exit(x, &(-d)).ok_or(Error::UnboundedStateSet)?;
    Ok((backward, forward))
}

/// Hit-and-run with directional rejection: proposals are drawn uniformly on
/// the chord through the state set and redrawn on the same segment until one
/// is feasible.
pub fn drs_hr_chain(p: &MpcProblem, cp: &CondensedProblem, cfg: &ChainConfig) -> Result<ChainOutput> {
    let mut out = ChainOutput::default();
    let mut x = check_init(cp, cfg, &mut out.counter)?;
    let mut rng = cfg.rng(Method::DrsHr);
    let set = p.state_set();
    for i in 0..cfg.chain_steps() {
        if cfg.records(i) {
            out.states.push((i, x.clone()));
        }
        let d = sample_unit_direction(&mut rng, cp.nx());
        let (backward, forward) = box_chord(set, &x, &d)?;
        let mut streak = 0;
        loop {
            let y = &x + &d * uniform_in(&mut rng, -backward, forward);
            out.sampling_queries += 1;
            if feasibility_check(cp, &y, &cfg.tolerances, &mut out.counter)? {
                x = y;
                break;
            }
            out.rejections += 1;
            out.rejected_draws.push((i, y));
            streak += 1;
            if streak >= RESAMPLE_CAP {
                return Err(Error::ResampleCapExceeded { cap: RESAMPLE_CAP });
            }
        }
    }
    Ok(out)
}

pub fn drs_hr_run(p: &MpcProblem, cfg: &ChainConfig) -> Result<RunReport> {
    let started = Instant::now();
    let cp = condense(p);
    let chain = drs_hr_chain(p, &cp, cfg)?;
    finish_run(p, &cp, Method::DrsHr, cfg, chain, started)
}

/// Bisects `[0, alpha_box]` on feasibility until the bracket is at most
/// `epsilon` wide and returns the feasible end with the number of queries.
/// `x` must be feasible.
pub fn bisect_chord(
    cp: &CondensedProblem,
    x: &DVector<f64>,
    d: &DVector<f64>,
    alpha_box: f64,
    epsilon: f64,
    tol: &Tolerances,
    counter: &mut QueryCounter,
) -> Result<(f64, u64)> {
    let (mut lo, mut hi) = (0.0, alpha_box);
    let mut queries = 0;
    while hi - lo > epsilon {
        let mid = 0.5 * (lo + hi);
        queries += 1;
        if feasibility_check(cp, &(x + d * mid), tol, counter)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo, queries))
}

/// Hit-and-run whose chord ends are located by bisection on the feasibility
/// oracle, starting from the analytic chord with the state set.
pub fn bs_hr_chain(p: &MpcProblem, cp: &CondensedProblem, cfg: &ChainConfig, epsilon: f64) -> Result<ChainOutput> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidArgument("epsilon must be positive".into()));
    }
    let mut out = ChainOutput::default();
    let mut x = check_init(cp, cfg, &mut out.counter)?;
    let mut rng = cfg.rng(Method::BsHr);
    let set = p.state_set();
    let tol = &cfg.tolerances;
    for i in 0..cfg.chain_steps() {
        if cfg.records(i) {
            out.states.push((i, x.clone()));
        }
        let d = sample_unit_direction(&mut rng, cp.nx());
        let (box_back, box_fwd) = box_chord(set, &x, &d)?;
        let mut ends = [0.0; 2];
        for (end, (dir, alpha_box)) in ends.iter_mut().zip([(d.clone(), box_fwd), (-&d, box_back)]) {
            let (limit, queries) = bisect_chord(cp, &x, &dir, alpha_box, epsilon, tol, &mut out.counter)?;
            out.sampling_queries += queries;
            out.bisections.push(BisectionStep { alpha_box, queries });
            *end = limit;
        }
        x += &d * uniform_in(&mut rng, -ends[1], ends[0]);
    }
    Ok(out)
}

pub fn bs_hr_run(p: &MpcProblem, cfg: &ChainConfig, epsilon: f64) -> Result<RunReport> {
    let started = Instant::now();
    let cp = condense(p);
    let chain = bs_hr_chain(p, &cp, cfg, epsilon)?;
    finish_run(p, &cp, Method::BsHr, cfg, chain, started)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_pendulum_problem, make_static_box_problem};

    fn cfg(n: usize) -> ChainConfig {
        let mut c = ChainConfig::new(vec![0.0, 0.0]);
        c.n_samples = n;
        c.burn_in = 0;
        c.seed = 9;
        c
    }

    #[test]
    fn static_box_never_rejects() {
        let p = make_static_box_problem();
        let cp = condense(&p);
        let u = uvrs_chain(&p, &cp, &cfg(100)).unwrap();
        assert_eq!((u.rejections, u.sampling_queries), (0, 100));
        let d = drs_hr_chain(&p, &cp, &cfg(100)).unwrap();
        assert_eq!((d.rejections, d.sampling_queries), (0, 100));
    }

    #[test]
    fn bisection_on_unit_box() {
        let cp = condense(&make_static_box_problem());
        let mut qc = QueryCounter::default();
        let d = DVector::from_vec(vec![1.0, 0.0]);
        let (a, q) = bisect_chord(&cp, &DVector::zeros(2), &d, 2.5, 1e-3, &Tolerances::default(), &mut qc).unwrap();
        assert_eq!(q, 12);
        assert!(a <= 1.0 && 1.0 - a <= 1e-3);
    }

    #[test]
    fn bs_hr_query_count_matches_formula() {
        let p = make_pendulum_problem();
        let out = bs_hr_chain(&p, &condense(&p), &cfg(30), 1e-3).unwrap();
        assert_eq!(out.bisections.len(), 60);
        for b in &out.bisections {
            let expect = if b.alpha_box <= 1e-3 { 0 } else { (b.alpha_box / 1e-3).log2().ceil() as u64 };
            assert_eq!(b.queries, expect);
        }
        assert_eq!(out.sampling_queries, out.bisections.iter().map(|b| b.queries).sum::<u64>());
    }

    #[test]
    fn drs_samples_stay_feasible_and_on_line() {
        let p = make_pendulum_problem();
        let cp = condense(&p);
        let out = drs_hr_chain(&p, &cp, &cfg(40)).unwrap();
        assert_eq!(out.states.len(), 40);
        assert_eq!(out.sampling_queries, 40 + out.rejections);
        let mut qc = QueryCounter::default();
        for (_, x) in &out.states {
            assert!(feasibility_check(&cp, x, &Tolerances::default(), &mut qc).unwrap());
        }
    }
}
