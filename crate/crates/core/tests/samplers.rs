//! Sampler invariants: feasibility closure, determinism, query accounting,
//! chord correctness and distributional checks on known bodies.

use lmpc_hr::samplers::{
    chord_ends, lmpc_hr_chain, run_chain, run_method, sample_unit_direction, ChainConfig,
};
use lmpc_hr::validate::{chi2_sf, grid_counts};
use lmpc_hr::{
    condense, feasibility_check, make_pendulum_problem, make_static_box_problem, Method, MpcProblem, Polyhedron,
    ProblemData, QueryCounter, Tolerances,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn cfg(seed: u64, n: usize) -> ChainConfig {
    let mut c = ChainConfig::new(vec![0.0, 0.0]);
    c.seed = seed;
    c.n_samples = n;
    c.burn_in = 10;
    c
}

/// Pearson statistic of counts against equal cell probabilities.
fn equal_cell_p_value(counts: &[u64]) -> f64 {
    let n: u64 = counts.iter().sum();
    let e = n as f64 / counts.len() as f64;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
    chi2_sf(chi2, counts.len() - 1)
}

#[test]
fn every_method_emits_feasible_samples() {
    let p = make_pendulum_problem();
    let cp = condense(&p);
    let tol = Tolerances::default();
    let mut qc = QueryCounter::default();
    for m in Method::ALL {
        let r = run_method(&p, &cfg(3, 150), m, 1e-3).unwrap();
        assert_eq!(r.samples.len(), 150);
        assert_eq!(r.labeling_queries, 150);
        for s in &r.samples {
            assert!(feasibility_check(&cp, &s.x, &tol, &mut qc).unwrap(), "{m} emitted {:?}", s.x);
            assert!(s.value >= 0.0 && s.u0[0].abs() <= 2.0 + 1e-9);
        }
        if matches!(m, Method::LmpcHr | Method::BsHr) {
            assert_eq!(r.rejections, 0);
        }
    }
}

#[test]
fn runs_are_deterministic() {
    let p = make_pendulum_problem();
    for m in Method::ALL {
        let a = run_chain(&p, &cfg(11, 60), m, 1e-3).unwrap();
        let b = run_chain(&p, &cfg(11, 60), m, 1e-3).unwrap();
        assert_eq!(a.states, b.states, "{m}");
        let c = run_chain(&p, &cfg(12, 60), m, 1e-3).unwrap();
        assert_ne!(a.states, c.states, "{m}");
    }
}

#[test]
fn lmpc_chord_ends_are_feasible() {
    let p = make_pendulum_problem();
    let cp = condense(&p);
    let c = cfg(4, 200);
    let anchors = lmpc_hr_chain(&cp, &c).unwrap().states;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut qc = QueryCounter::default();
    for (_, x) in &anchors {
        let d = sample_unit_direction(&mut rng, 2);
        let (fwd, back) = chord_ends(&cp, x, &d, &c, &mut qc).unwrap();
        assert!(feasibility_check(&cp, &fwd, &c.tolerances, &mut qc).unwrap());
        assert!(feasibility_check(&cp, &back, &c.tolerances, &mut qc).unwrap());
    }
}

#[test]
fn degenerate_chord_does_not_move() {
    // the only feasible state is the origin
    let zero = Polyhedron::from_box(&[0.0, 0.0], &[0.0, 0.0]).unwrap();
    let u = Polyhedron::from_box(&[-1.0], &[1.0]).unwrap();
    let p = MpcProblem::new(ProblemData {
        a: DMatrix::identity(2, 2),
        b: DMatrix::from_row_slice(2, 1, &[0.0, 1.0]),
        horizon: 2,
        q: DMatrix::identity(2, 2),
        r: DMatrix::identity(1, 1),
        p: DMatrix::zeros(2, 2),
        state_h: zero.h().clone(),
        state_rhs: zero.rhs().clone(),
        input_h: u.h().clone(),
        input_rhs: u.rhs().clone(),
        terminal_h: zero.h().clone(),
        terminal_rhs: zero.rhs().clone(),
    })
    .unwrap();
    let out = lmpc_hr_chain(&condense(&p), &cfg(1, 20)).unwrap();
    assert!(out.states.iter().all(|(_, x)| x.iter().all(|&v| v == 0.0)));
    assert_eq!(out.sampling_queries, 2 * (10 + 20));
}

#[test]
fn direction_angles_are_uniform() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut bins = [0u64; 16];
    let n = 100_000;
    for _ in 0..n {
        let d = sample_unit_direction(&mut rng, 2);
        let angle = d[1].atan2(d[0]) + std::f64::consts::PI;
        let k = ((angle / (2.0 * std::f64::consts::PI) * 16.0) as usize).min(15);
        bins[k] += 1;
    }
    for &b in &bins {
        let f = b as f64 / n as f64;
        assert!((f - 1.0 / 16.0).abs() <= 0.15 / 16.0, "{f}");
    }
}

#[test]
fn lmpc_hr_is_uniform_on_static_box() {
    let p = make_static_box_problem();
    let mut c = ChainConfig::new(vec![0.0, 0.0]);
    c.seed = 13;
    c.n_samples = 20_000;
    c.burn_in = 100;
    c.thinning = 5;
    let out = lmpc_hr_chain(&condense(&p), &c).unwrap();
    let xs: Vec<_> = out.states.into_iter().map(|(_, x)| x).collect();
    let lo = DVector::from_vec(vec![-1.0, -1.0]);
    let hi = DVector::from_vec(vec![1.0, 1.0]);
    let counts = grid_counts(&xs, &lo, &hi, 4);
    assert_eq!(counts.iter().sum::<u64>(), 20_000);
    let p_value = equal_cell_p_value(&counts);
    assert!(p_value > 0.01, "p = {p_value}, counts {counts:?}");
}

#[test]
fn uvrs_is_uniform_on_static_box() {
    let p = make_static_box_problem();
    let mut c = ChainConfig::new(vec![0.0, 0.0]);
    c.seed = 2;
    c.n_samples = 20_000;
    let out = run_chain(&p, &c, Method::Uvrs, 1e-3).unwrap();
    assert_eq!(out.rejections, 0);
    let xs: Vec<_> = out.states.into_iter().map(|(_, x)| x).collect();
    let lo = DVector::from_vec(vec![-1.0, -1.0]);
    let hi = DVector::from_vec(vec![1.0, 1.0]);
    assert!(equal_cell_p_value(&grid_counts(&xs, &lo, &hi, 4)) > 0.01);
}

#[test]
fn drs_proposals_lie_on_their_lines() {
    let p = make_pendulum_problem();
    let cp = condense(&p);
    let mut c = cfg(6, 60);
    c.burn_in = 0;
    let out = run_chain(&p, &c, Method::DrsHr, 1e-3).unwrap();
    assert!(!out.rejected_draws.is_empty());
    let mut qc = QueryCounter::default();
    for (step, r) in &out.rejected_draws {
        assert!(!feasibility_check(&cp, r, &c.tolerances, &mut qc).unwrap());
        let (Some(from), Some(to)) = (out.states.get(*step), out.states.get(step + 1)) else {
            continue;
        };
        // step j moves along one line; its rejected proposals are on it too
        let (a, b) = (&to.1 - &from.1, r - &from.1);
        let cross = a[0] * b[1] - a[1] * b[0];
        assert!(cross.abs() <= 1e-10 * (1.0 + a.norm() * b.norm()), "{cross}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn lmpc_query_count_is_exact(burn_in in 0usize..20, thinning in 1usize..4, n in 1usize..30, seed in any::<u64>()) {
        let cp = condense(&make_pendulum_problem());
        let mut c = ChainConfig::new(vec![0.0, 0.0]);
        c.seed = seed;
        c.burn_in = burn_in;
        c.thinning = thinning;
        c.n_samples = n;
        let out = lmpc_hr_chain(&cp, &c).unwrap();
        prop_assert_eq!(out.states.len(), n);
        prop_assert_eq!(out.sampling_queries, 2 * (burn_in + thinning * n) as u64);
        prop_assert_eq!(out.counter.boundary, out.sampling_queries);
        prop_assert_eq!(out.states[0].0, burn_in);
    }

    #[test]
    fn bs_hr_queries_follow_formula(seed in any::<u64>(), eps_exp in 2i32..6) {
        let p = make_pendulum_problem();
        let eps = 10f64.powi(-eps_exp);
        let mut c = ChainConfig::new(vec![0.0, 0.0]);
        c.seed = seed;
        c.burn_in = 0;
        c.n_samples = 10;
        let out = run_chain(&p, &c, Method::BsHr, eps).unwrap();
        for b in &out.bisections {
            let expected = if b.alpha_box <= eps { 0 } else { (b.alpha_box / eps).log2().ceil() as u64 };
            prop_assert_eq!(b.queries, expected);
        }
    }
}
