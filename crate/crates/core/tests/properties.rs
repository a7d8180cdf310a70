use proptest::prelude::*;

use broadcast_backoff::network::{lambda_max_fair, lambda_max_greedy, saturation_residual, solve_u_complement, solve_z};
use broadcast_backoff::{BusyProb, FairSolution, GreedySolution, SystemParams, WaitTransform};

/// Greedy station parameters scaled to a fraction of the stability limit.
fn ergodic_greedy() -> impl Strategy<Value = (SystemParams, BusyProb)> {
    (0.01f64..0.5, 1u32..=32, 0.0f64..0.9, 0.05f64..0.9).prop_map(|(sigma, w, r, load)| {
        let base = SystemParams::new(1.0, 1.0, sigma, w).unwrap();
        let busy = BusyProb::new(r).unwrap();
        let limit = GreedySolution::new(&base, busy).unwrap().lambda_threshold();
        (base.with_lambda(load * limit).unwrap(), busy)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn transform_is_a_decreasing_probability((params, busy) in ergodic_greedy(), s in 0.01f64..5.0) {
        let wait = WaitTransform::new(GreedySolution::new(&params, busy).unwrap()).unwrap();
        let lo = wait.psi(s).unwrap();
        let hi = wait.psi(s * 2.0).unwrap();
        prop_assert!(lo > 0.0 && lo <= 1.0);
        prop_assert!(hi <= lo + 1e-12);
    }

    #[test]
    fn idle_probability_is_a_probability((params, busy) in ergodic_greedy()) {
        let p00 = GreedySolution::new(&params, busy).unwrap().p00().unwrap();
        prop_assert!(p00 > 0.0 && p00 < 1.0);
    }

    #[test]
    fn fair_idle_probability_below_threshold(sigma in 0.01f64..0.5, w in 1u32..=32, r in 0.0f64..0.9, load in 0.05f64..0.9) {
        let base = SystemParams::new(1.0, 1.0, sigma, w).unwrap();
        let busy = BusyProb::new(r).unwrap();
        let limit = FairSolution::new(&base, busy).unwrap().lambda_threshold();
        let q00 = FairSolution::new(&base.with_lambda(load * limit).unwrap(), busy).unwrap().q00().unwrap();
        prop_assert!(q00 > 0.0 && q00 < 1.0);
    }

    #[test]
    fn saturation_root_lies_inside_the_unit_interval(w in 1u32..=1024, m in 0u32..=100) {
        let v = solve_u_complement(w, m);
        prop_assert!(v > 0.0 && v < 1.0);
        prop_assert!(saturation_residual(w, m, v).abs() <= 1e-12);
    }

    #[test]
    fn fixed_point_lies_inside_the_unit_interval(lambda in 1e-4f64..0.5, sigma in 0.001f64..0.9, w in 1u32..=256, m in 0u32..=100) {
        let params = SystemParams::new(lambda, 1.0, sigma, w).unwrap();
        let z = solve_z(&params, m).unwrap();
        prop_assert!(z > 0.0 && z <= 1.0);
    }

    #[test]
    fn fair_limit_is_below_greedy_limit(sigma in 0.001f64..0.99, w in 1u32..=1024, m in 1u32..=100) {
        let g = lambda_max_greedy(1.0, sigma, w, m).unwrap().value;
        let f = lambda_max_fair(1.0, sigma, w, m).unwrap().value;
        prop_assert!(f < g);
    }
}
