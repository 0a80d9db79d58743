use mams::{mvn_probability, Rectangle};
use proptest::prelude::*;

const TOL: f64 = 1e-5;

/// Random covariance `A A^T + 0.1 I` with its mean and a rectangle.
fn arb_problem() -> impl Strategy<Value = (Rectangle, Vec<f64>, Vec<f64>)> {
    (1usize..=4).prop_flat_map(|m| {
        (
            proptest::collection::vec(-1.0f64..1.0, m * m),
            proptest::collection::vec(-1.0f64..1.0, m),
            proptest::collection::vec((-2.5f64..1.0, 0.2f64..3.0, any::<bool>(), any::<bool>()), m),
        )
            .prop_map(move |(a, mean, sides)| {
                let mut cov = vec![0.0; m * m];
                for i in 0..m {
                    for j in 0..m {
                        cov[i * m + j] = (0..m).map(|t| a[i * m + t] * a[j * m + t]).sum::<f64>();
                    }
                    cov[i * m + i] += 0.1;
                }
                let lower = sides
                    .iter()
                    .map(|s| if s.2 { f64::NEG_INFINITY } else { s.0 })
                    .collect();
                let upper = sides
                    .iter()
                    .map(|s| if s.3 { f64::INFINITY } else { s.0 + s.1 })
                    .collect();
                (Rectangle::new(lower, upper), mean, cov)
            })
    })
}

fn permute(rect: &Rectangle, mean: &[f64], cov: &[f64], order: &[usize]) -> (Rectangle, Vec<f64>, Vec<f64>) {
    let m = order.len();
    let lower = order.iter().map(|&i| rect.lower[i]).collect();
    let upper = order.iter().map(|&i| rect.upper[i]).collect();
    let mean = order.iter().map(|&i| mean[i]).collect();
    let mut out = vec![0.0; m * m];
    for (a, &i) in order.iter().enumerate() {
        for (b, &j) in order.iter().enumerate() {
            out[a * m + b] = cov[i * m + j];
        }
    }
    (Rectangle::new(lower, upper), mean, out)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn one_dimensional_complement(l in -4.0f64..2.0, w in 0.01f64..4.0, mu in -1.0f64..1.0, var in 0.2f64..3.0) {
        let u = l + w;
        let p = |lo: f64, hi: f64| {
            mvn_probability(&Rectangle::new(vec![lo], vec![hi]), &[mu], &[var], TOL, 1).unwrap().value
        };
        let total = p(l, u) + p(f64::NEG_INFINITY, l) + p(u, f64::INFINITY);
        prop_assert!((total - 1.0).abs() < 1e-10, "{}", total);
    }

    #[test]
    fn value_is_a_probability((rect, mean, cov) in arb_problem()) {
        let r = mvn_probability(&rect, &mean, &cov, TOL, 3).unwrap();
        prop_assert!((0.0..=1.0).contains(&r.value));
        prop_assert!(r.error_estimate.is_finite());
    }

    #[test]
    fn permutation_invariance((rect, mean, cov) in arb_problem(), seed in 0u64..1000) {
        let m = rect.dim();
        let mut order: Vec<usize> = (0..m).collect();
        order.rotate_left((seed as usize) % m);
        if m > 2 {
            order.swap(0, 1);
        }
        let base = mvn_probability(&rect, &mean, &cov, TOL, seed).unwrap().value;
        let (r2, m2, c2) = permute(&rect, &mean, &cov, &order);
        let moved = mvn_probability(&r2, &m2, &c2, TOL, seed).unwrap().value;
        prop_assert!((base - moved).abs() <= TOL, "{} vs {}", base, moved);
    }

    #[test]
    fn enlarging_never_decreases((rect, mean, cov) in arb_problem(), grow in proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0), 4)) {
        let lower: Vec<f64> = rect.lower.iter().zip(&grow).map(|(l, g)| l - g.0).collect();
        let upper: Vec<f64> = rect.upper.iter().zip(&grow).map(|(u, g)| u + g.1).collect();
        let inner = mvn_probability(&rect, &mean, &cov, TOL, 5).unwrap().value;
        let outer = mvn_probability(&Rectangle::new(lower, upper), &mean, &cov, TOL, 5).unwrap().value;
        prop_assert!(outer >= inner - 2.0 * TOL, "{} < {}", outer, inner);
    }

    #[test]
    fn reproducible_for_equal_inputs((rect, mean, cov) in arb_problem(), seed in any::<u64>()) {
        let a = mvn_probability(&rect, &mean, &cov, TOL, seed).unwrap();
        let b = mvn_probability(&rect, &mean, &cov, TOL, seed).unwrap();
        prop_assert_eq!(a.value.to_bits(), b.value.to_bits());
        prop_assert_eq!(a.error_estimate.to_bits(), b.error_estimate.to_bits());
    }
}
