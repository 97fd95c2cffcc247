//! Randomized invariants of the resolvent and the evolution at level 0.

use multifsi_core::checks::check_resolvent;
use multifsi_core::datum::random_datum;
use multifsi_core::fem::{h_norm, FemOperators, HProjector, MaterialParams, StateVector};
use multifsi_core::geometry::GeometryConfig;
use multifsi_core::resolvent::ResolventSolver;
use multifsi_core::semigroup::{check_trajectory, Evolution};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::OnceLock;

fn ops() -> &'static FemOperators<f64> {
    static OPS: OnceLock<FemOperators<f64>> = OnceLock::new();
    OPS.get_or_init(|| FemOperators::build(&GeometryConfig::default(), MaterialParams::default()).unwrap())
}

fn datum(seed: u64) -> StateVector<f64> {
    let o = ops();
    random_datum(o, &HProjector::new(o).unwrap(), &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn resolvent_is_dissipative_and_contractive(seed in any::<u64>(), log_lambda in -2.0f64..3.0) {
        let lambda = 10f64.powf(log_lambda);
        let solver = ResolventSolver::new(ops(), lambda).unwrap();
        let (_, c) = check_resolvent(&solver, &datum(seed)).unwrap();
        prop_assert!(c.dissipation <= 1e-7, "{c:?}");
        prop_assert!(c.contraction <= 1.0 + 1e-9, "{c:?}");
        prop_assert!(c.flux_ratio <= 1e-10, "{c:?}");
        prop_assert_eq!((c.fluid_trace_gap, c.structure_trace_gap), (0.0, 0.0));
    }

    #[test]
    fn resolvent_is_linear(s1 in any::<u64>(), s2 in any::<u64>(), a in -3.0f64..3.0) {
        let o = ops();
        let solver = ResolventSolver::new(o, 1.5).unwrap();
        let (x, y) = (datum(s1), datum(s2));
        let combo = StateVector::lin_comb(a, &x, 1.0, &y);
        let rx = solver.apply(&x).unwrap().state;
        let ry = solver.apply(&y).unwrap().state;
        let rc = solver.apply(&combo).unwrap().state;
        let diff = StateVector::lin_comb(1.0, &rc, -1.0, &StateVector::lin_comb(a, &rx, 1.0, &ry));
        prop_assert!(h_norm(&diff, o).unwrap() <= 1e-10 * (1.0 + h_norm(&combo, o).unwrap()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn random_trajectories_never_gain_energy(seed in any::<u64>(), dt in 0.005f64..0.2) {
        let ev = Evolution::new(ops(), dt).unwrap();
        let (_, reports) = ev.evolve(&datum(seed), 8, |_, _| Ok(())).unwrap();
        let c = check_trajectory(&reports, dt);
        prop_assert!(c.passes(), "{c:?}");
    }
}
