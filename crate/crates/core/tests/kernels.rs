//! LP and QP kernels against brute-force references.

use lmpc_hr::optim::{lp_solve, LpStatus, MpcLabeler, QpStatus};
use lmpc_hr::samplers::{lmpc_hr_chain, ChainConfig};
use lmpc_hr::{condense, make_pendulum_problem, solve_mpc, QueryCounter, Tolerances};
use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use support::{random_lp, scalar_grid_search, scalar_problem, vertex_enumeration};

mod support;

#[test]
fn lp_matches_vertex_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut optimal, mut infeasible) = (0, 0);
    for _ in 0..500 {
        let lp = random_lp(&mut rng);
        let sol = lp_solve(&lp.c, &lp.a, &lp.b, &lp.nonneg).unwrap();
        match vertex_enumeration(&lp.c, &lp.a_ref, &lp.b_ref) {
            Some(best) => {
                assert_eq!(sol.status, LpStatus::Optimal);
                assert!((sol.objective - best).abs() <= 1e-8, "{} vs {best}", sol.objective);
                optimal += 1;
            }
            None => {
                assert_eq!(sol.status, LpStatus::Infeasible);
                infeasible += 1;
            }
        }
    }
    assert!(optimal > 100 && infeasible > 10, "{optimal} optimal, {infeasible} infeasible");
}

#[test]
fn qp_matches_grid_search_on_scalar_instance() {
    let p = scalar_problem();
    let cp = condense(&p);
    let mut qc = QueryCounter::default();
    for x0 in [0.5, -3.0, 9.5] {
        let sol = solve_mpc(&p, &cp, &DVector::from_element(1, x0), None, &Tolerances::default(), &mut qc).unwrap();
        assert_eq!(sol.status, QpStatus::Optimal);
        let reference = scalar_grid_search(x0);
        assert!((sol.value - reference).abs() <= 1e-4, "x0 = {x0}: {} vs {reference}", sol.value);
    }
}

#[test]
fn kkt_residual_on_feasible_states() {
    let p = make_pendulum_problem();
    let cp = condense(&p);
    let mut cfg = ChainConfig::new(vec![0.0, 0.0]);
    cfg.n_samples = 500;
    cfg.thinning = 2;
    cfg.seed = 17;
    let chain = lmpc_hr_chain(&cp, &cfg).unwrap();
    let labeler = MpcLabeler::new(&p, &cp);
    let tol = Tolerances::default();
    let mut qc = QueryCounter::default();
    let mut worst: f64 = 0.0;
    for (_, x) in &chain.states {
        let sol = labeler.solve(&cp, x, None, &tol, &mut qc).unwrap();
        assert_eq!(sol.status, QpStatus::Optimal);
        worst = worst.max(sol.kkt_residual);
    }
    assert!(worst <= tol.kkt, "worst KKT residual {worst:e}");
}
