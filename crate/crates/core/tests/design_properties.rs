mod common;

use common::Tables;
use mams::{make_delta_config, validate, DesignParams};
use proptest::prelude::*;

#[test]
fn published_designs_are_valid() {
    for design in Tables::load().designs {
        let verdict = validate(&design.params(), &design.bounds());
        assert!(verdict.is_finite_valid(), "{}: {:?}", design.label(), verdict);
    }
}

proptest! {
    #[test]
    fn delta_config_has_c_interesting_arms(k in 1usize..=6, c_raw in 1usize..=6) {
        let c = c_raw.min(k);
        let mut params = DesignParams::tailor(2, 1, 1, 1, 1);
        params.k = k;
        params.sigma_sq = vec![1.0; k + 1];
        params.ratios = mams::design::equal_cumulative(k, 2);
        let tau = make_delta_config(&params, c).unwrap();
        prop_assert_eq!(tau.tau.len(), k);
        prop_assert_eq!(tau.tau.iter().filter(|&&t| t == params.delta).count(), c);
    }

    #[test]
    fn random_designs_are_valid((params, bounds, _n) in common::arb_design()) {
        prop_assert!(validate(&params, &bounds).is_finite_valid());
    }
}
