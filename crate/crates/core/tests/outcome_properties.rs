mod common;

use common::finite_bounds;
use mams::chars::{evaluate_config_in, Quadrature};
use mams::outcomes::{
    cardinality_xi, cardinality_xi_prime, enumerate_xi, enumerate_xi_prime, is_member, ArmBlocks,
    TauKind,
};
use mams::{make_delta_config, Boundaries, EffectConfig};
use proptest::prelude::*;

fn delta_ck(k: usize, c: usize) -> EffectConfig {
    EffectConfig::new((0..k).map(|i| if i < c { 0.5 } else { 0.1 }).collect())
}

#[test]
fn degeneracy_sums_equal_full_cardinality() {
    for k in 1..=4 {
        for j in 1..=4 {
            let bounds = finite_bounds(j);
            for d in 1..=k {
                let full = cardinality_xi(d, j, k);
                assert_eq!(enumerate_xi(&bounds, d, j, k).unwrap().len() as u64, full);
                let mut cases = vec![(EffectConfig::null(k), TauKind::Null, 0)];
                cases.extend((1..=k).map(|c| (delta_ck(k, c), TauKind::DeltaCK, c)));
                for (tau, kind, c) in cases {
                    let reduced = enumerate_xi_prime(&bounds, &tau, d, j, k).unwrap();
                    assert_eq!(reduced.total_degeneracy(), full, "K={k} J={j} d={d} c={c}");
                    assert_eq!(reduced.outcomes.len() as u64, cardinality_xi_prime(d, j, k, kind, c));
                    assert!(reduced.outcomes.iter().all(|w| w.degeneracy >= 1));
                }
            }
        }
    }
}

#[test]
fn infinite_interim_bounds_shrink_the_space() {
    let finite = finite_bounds(3);
    let mut f = finite.f.clone();
    let mut e = finite.e.clone();
    f[0] = f64::NEG_INFINITY;
    e[1] = f64::INFINITY;
    let bounds = Boundaries::new(f, e);
    let all = enumerate_xi(&finite, 2, 3, 3).unwrap();
    let some = enumerate_xi(&bounds, 2, 3, 3).unwrap();
    assert!(some.len() < all.len());
    for o in &some {
        assert!(is_member(o, &bounds, 2, 3));
        // no acceptance at stage 1 unless the trial ended there, no
        // rejection at stage 2
        for arm in 0..3 {
            assert!(!(o.omega[arm] == 1 && !o.psi[arm] && o.stop_stage() > 1));
            assert!(!(o.omega[arm] == 2 && o.psi[arm]));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn outcome_probabilities_sum_to_one((params, bounds, n) in common::arb_design()) {
        let quad = Quadrature::new(1e-7, 1);
        let blocks = ArmBlocks::singletons(params.k);
        for tau in [EffectConfig::null(params.k), make_delta_config(&params, params.c).unwrap()] {
            let chars = evaluate_config_in(&params, &bounds, n, &tau, &blocks, &quad).unwrap();
            prop_assert!((chars.total_probability - 1.0).abs() <= 1e-5, "{}", chars.total_probability);
        }
    }

    #[test]
    fn reduced_sums_match_full_sums(((mut params, bounds, n), c) in (common::arb_design(), 1usize..=3)) {
        // Reduction needs interchangeable arms within each effect block.
        let k = params.k;
        let r = params.ratios[1].clone();
        for arm in 1..=k {
            params.ratios[arm] = r.clone();
            params.sigma_sq[arm] = params.sigma_sq[1];
        }
        let quad = Quadrature::new(1e-7, 2);
        let tau = make_delta_config(&params, c.min(k)).unwrap();
        for tau in [EffectConfig::null(k), tau] {
            let reduced = evaluate_config_in(&params, &bounds, n, &tau, &ArmBlocks::by_effect(&tau), &quad).unwrap();
            let full = evaluate_config_in(&params, &bounds, n, &tau, &ArmBlocks::singletons(k), &quad).unwrap();
            for (x, y) in reduced.fwer.iter().zip(&full.fwer) {
                prop_assert!((x - y).abs() <= 2e-5);
            }
            for (rx, fx) in reduced.fwp.iter().zip(&full.fwp) {
                for (x, y) in rx.iter().zip(fx) {
                    prop_assert!((x - y).abs() <= 2e-5);
                }
            }
            let max_n = n * params.total_ratio(params.j);
            prop_assert!((reduced.ess - full.ess).abs() <= 2e-5 * max_n);
        }
    }

    #[test]
    fn enumerated_outcomes_are_members((params, bounds, _n) in common::arb_design(), drop in proptest::collection::vec((any::<bool>(), any::<bool>()), 2)) {
        let j = params.j;
        let mut f = bounds.f.clone();
        let mut e = bounds.e.clone();
        for (s, &(nf, ne)) in drop.iter().enumerate().take(j - 1) {
            if nf { f[s] = f64::NEG_INFINITY; }
            if ne { e[s] = f64::INFINITY; }
        }
        let bounds = Boundaries::new(f, e);
        let outcomes = enumerate_xi(&bounds, params.d, j, params.k).unwrap();
        prop_assert!(!outcomes.is_empty());
        prop_assert!(outcomes.len() as u64 <= cardinality_xi(params.d, j, params.k));
        for o in &outcomes {
            prop_assert!(is_member(o, &bounds, params.d, j));
        }
    }
}
