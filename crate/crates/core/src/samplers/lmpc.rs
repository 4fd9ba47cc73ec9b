use std::time::Instant;

use nalgebra::DVector;

use super::{check_init, finish_run, sample_unit_direction, uniform_in, ChainConfig, ChainOutput, RunReport};
use crate::condense::{condense, CondensedProblem};
use crate::error::Result;
use crate::model::{Method, MpcProblem};
use crate::optim::{boundary_oracle, QueryCounter};

/// Hit-and-run with exact chords: two boundary LPs per step, then a uniform
/// step on the (margin-shrunk) chord. No proposal is ever rejected.
pub fn lmpc_hr_chain(cp: &CondensedProblem, cfg: &ChainConfig) -> Result<ChainOutput> {
    let mut counter = QueryCounter::default();
    let mut x = check_init(cp, cfg, &mut counter)?;
    let mut rng = cfg.rng(Method::LmpcHr);
    let tol = &cfg.tolerances;
    let shrink = 1.0 - cfg.boundary_margin;
    let before = counter.boundary;
    let mut states = Vec::with_capacity(cfg.n_samples);

    for i in 0..cfg.chain_steps() {
        if cfg.records(i) {
            states.push((i, x.clone()));
        }
        let d = sample_unit_direction(&mut rng, cp.nx());
        let forward = boundary_oracle(cp, &x, &d, tol, &mut counter)?.alpha_star;
        let backward = boundary_oracle(cp, &x, &(-&d), tol, &mut counter)?.alpha_star;
        let beta = uniform_in(&mut rng, -backward * shrink, forward * shrink);
        x += &d * beta;
    }

    Ok(ChainOutput {
        states,
        sampling_queries: counter.boundary - before,
        counter,
        ..ChainOutput::default()
    })
}

/// [`lmpc_hr_chain`] followed by MPC labeling of the emitted states.
pub fn lmpc_hr_run(p: &MpcProblem, cfg: &ChainConfig) -> Result<RunReport> {
    let started = Instant::now();
    let cp = condense(p);
    let chain = lmpc_hr_chain(&cp, cfg)?;
    finish_run(p, &cp, Method::LmpcHr, cfg, chain, started)
}

/// Chord end points `x ± α (1 - margin) d` for the step taken from `x`
/// along `d`; exposed for the chord-correctness tests.
pub fn chord_ends(
    cp: &CondensedProblem,
    x: &DVector<f64>,
    d: &DVector<f64>,
    cfg: &ChainConfig,
    counter: &mut QueryCounter,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let tol = &cfg.tolerances;
    let shrink = 1.0 - cfg.boundary_margin;
    let d = d / d.norm();
    let forward = boundary_oracle(cp, x, &d, tol, counter)?.alpha_star;
    let backward = boundary_oracle(cp, x, &(-&d), tol, counter)?.alpha_star;
    Ok((x + &d * (forward * shrink), x - &d * (backward * shrink)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::model::{make_pendulum_problem, make_static_box_problem};
    use crate::optim::{feasibility_check, Tolerances};

    fn small_cfg(n: usize) -> ChainConfig {
        let mut cfg = ChainConfig::new(vec![0.0, 0.0]);
        cfg.n_samples = n;
        cfg.burn_in = 0;
        cfg.seed = 5;
        cfg
    }

    #[test]
    fn two_queries_per_step() {
        let cp = condense(&make_pendulum_problem());
        let mut cfg = small_cfg(20);
        cfg.burn_in = 7;
        cfg.thinning = 3;
        let out = lmpc_hr_chain(&cp, &cfg).unwrap();
        assert_eq!(out.states.len(), 20);
        assert_eq!(out.sampling_queries, 2 * (7 + 3 * 20));
        assert_eq!(out.counter.feasibility, 1);
        assert_eq!(out.rejections, 0);
    }

    #[test]
    fn emitted_states_are_feasible() {
        let cp = condense(&make_pendulum_problem());
        let out = lmpc_hr_chain(&cp, &small_cfg(200)).unwrap();
        let mut qc = QueryCounter::default();
        for (_, x) in &out.states {
            assert!(feasibility_check(&cp, x, &Tolerances::default(), &mut qc).unwrap());
        }
    }

    #[test]
    fn infeasible_start_is_rejected() {
        let cp = condense(&make_pendulum_problem());
        let mut cfg = small_cfg(5);
        cfg.x_init = vec![2.4, 3.4];
        assert_eq!(lmpc_hr_chain(&cp, &cfg), Err(Error::InfeasibleInit));
    }

    #[test]
    fn same_seed_same_chain() {
        let cp = condense(&make_static_box_problem());
        let a = lmpc_hr_chain(&cp, &small_cfg(50)).unwrap();
        let b = lmpc_hr_chain(&cp, &small_cfg(50)).unwrap();
        assert_eq!(a.states, b.states);
    }

    #[test]
    fn run_labels_every_sample() {
        let p = make_pendulum_problem();
        let r = lmpc_hr_run(&p, &small_cfg(10)).unwrap();
        assert_eq!(r.samples.len(), 10);
        assert_eq!(r.labeling_queries, 10);
        assert_eq!(r.cost_per_sample(), 2.0);
        assert!(r.samples.iter().all(|s| s.value.is_finite() && s.u0.len() == 1));
    }
}
