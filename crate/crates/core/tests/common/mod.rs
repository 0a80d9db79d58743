//! Shared fixtures for the integration tests.
#![allow(dead_code)]

use mams::{make_delta_config, Boundaries, DesignParams, EffectConfig};
use serde::Deserialize;

#[derive(Debug, Clone, Deserialize)]
pub struct Cardinality {
    pub d: usize,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "J")]
    pub j: usize,
    pub xi: u64,
    pub xi_prime_null: u64,
}

/// A published design with its rounded operating characteristics.
#[derive(Debug, Clone, Deserialize)]
pub struct ReferenceDesign {
    pub a: usize,
    pub b: usize,
    pub c: usize,
    pub d: usize,
    pub n: u64,
    pub f: Vec<f64>,
    pub e: Vec<f64>,
    /// FWER_I(1..=3) under the global null.
    pub fwer: Vec<f64>,
    /// ESS under the null, then under delta_{1,K}, delta_{2,K}, delta_{3,K}.
    pub ess: Vec<f64>,
    /// FWP in the order of `Tables::fwp_columns`.
    pub fwp: Vec<f64>,
}

impl ReferenceDesign {
    pub fn params(&self) -> DesignParams {
        DesignParams::tailor(2, self.a, self.b, self.c, self.d)
    }

    pub fn bounds(&self) -> Boundaries {
        Boundaries::new(self.f.clone(), self.e.clone())
    }

    pub fn label(&self) -> String {
        format!("a={} b={} c={} d={}", self.a, self.b, self.c, self.d)
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct Tables {
    pub cardinalities: Vec<Cardinality>,
    /// `(p, q, r)`: at least `p` rejections among the first `q` arms under
    /// `delta_{r,K}`.
    pub fwp_columns: Vec<(usize, usize, usize)>,
    pub designs: Vec<ReferenceDesign>,
}

impl Tables {
    pub fn load() -> Self {
        let text = include_str!("../data/reference_tables.json");
        serde_json::from_str(text).expect("reference tables parse")
    }

    pub fn designs_for(&self, a: usize) -> Vec<ReferenceDesign> {
        self.designs.iter().filter(|d| d.a == a).cloned().collect()
    }
}

/// Null plus `delta_{r,K}` for every `r`.
pub fn reference_configs(params: &DesignParams) -> Vec<EffectConfig> {
    let mut out = vec![EffectConfig::null(params.k)];
    out.extend((1..=params.k).map(|r| make_delta_config(params, r).unwrap()));
    out
}

/// Finite boundaries with a common final critical value.
pub fn finite_bounds(j: usize) -> Boundaries {
    let mut f: Vec<f64> = (0..j).map(|s| -0.5 + 0.4 * s as f64).collect();
    let mut e: Vec<f64> = (0..j).map(|s| 2.6 - 0.3 * s as f64).collect();
    f[j - 1] = 1.9;
    e[j - 1] = 1.9;
    Boundaries::new(f, e)
}

/// Random valid design with `K, J <= 3`: integer cumulative allocation,
/// unequal variances and admissible finite boundaries.
pub fn arb_design() -> impl proptest::strategy::Strategy<Value = (DesignParams, Boundaries, f64)> {
    use proptest::prelude::*;
    (1usize..=3, 1usize..=3)
        .prop_flat_map(|(k, j)| {
            (
                Just((k, j)),
                (1..=k, 1..=k, 1..=k, 1..=k),
                proptest::collection::vec(proptest::collection::vec(1u64..=3, j), k + 1),
                proptest::collection::vec(0.5f64..2.0, k + 1),
                (0.2f64..0.8, 0.0f64..0.2),
                proptest::collection::vec((-2.0f64..1.5, 0.2f64..2.5), j - 1),
                1.0f64..3.0,
                5.0f64..60.0,
            )
        })
        .prop_map(|((k, j), (a, c, b_raw, d), mut steps, sigma_sq, (delta, delta0), gaps, last, n)| {
            // the control's first-stage ratio is the unit
            steps[0][0] = 1;
            let ratios = steps
                .iter()
                .map(|s| {
                    let mut total = 0;
                    s.iter()
                        .map(|x| {
                            total += x;
                            mams::Ratio::integer(total).unwrap()
                        })
                        .collect()
                })
                .collect();
            let params = DesignParams {
                k,
                j,
                a,
                b: b_raw.min(c),
                c,
                d,
                alpha: 0.05,
                beta: 0.1,
                delta,
                delta0,
                sigma_sq,
                ratios,
            };
            let mut f: Vec<f64> = gaps.iter().map(|g| g.0).collect();
            let mut e: Vec<f64> = gaps.iter().map(|g| g.0 + g.1).collect();
            f.push(last);
            e.push(last);
            (params, Boundaries::new(f, e), n)
        })
}
