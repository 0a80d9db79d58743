//! Generalised familywise error, familywise power and expected sample size.
//!
//! Sums run over the order-reduced outcome space, with each representative
//! weighted by its degeneracy. Blocks are maximal sets of arms sharing
//! effect, variance and allocation, so every member of a class has the same
//! probability. Power over the first `q` arms is not invariant under
//! rearrangement inside a block that straddles arm `q`; for those the
//! class-average indicator is computed exactly from the hypergeometric
//! split of each block's rejections.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::{delta_config, Boundaries, DesignParams, EffectConfig};
use crate::distribution::{build_z_distribution, ZDistribution};
use crate::error::{Error, Result};
use crate::mvn::{mvn_probability, QuadratureResult};
use crate::outcomes::{enumerate_reduced, ArmBlocks, Outcome, WeightedOutcome};

/// Default absolute quadrature tolerance per outcome.
pub const DEFAULT_TOL: f64 = 1e-6;

/// Integration method for outcome probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    /// Control conditioning when supported (J <= 3), otherwise Genz.
    #[default]
    Auto,
    /// Deterministic quadrature conditional on the control arm.
    Conditional,
    /// Randomised quasi-Monte Carlo on each outcome rectangle.
    Genz,
}

impl std::str::FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Engine::Auto),
            "conditional" => Ok(Engine::Conditional),
            "genz" => Ok(Engine::Genz),
            other => Err(Error::Parameter(format!("unknown quadrature engine '{other}'"))),
        }
    }
}

/// Quadrature settings shared by every outcome of an evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quadrature {
    pub tol: f64,
    pub seed: u64,
    pub engine: Engine,
}

impl Quadrature {
    pub fn new(tol: f64, seed: u64) -> Self {
        Quadrature {
            tol,
            seed,
            engine: Engine::Auto,
        }
    }

    pub fn with_engine(self, engine: Engine) -> Self {
        Quadrature { engine, ..self }
    }

    fn conditional(&self, j: usize) -> bool {
        match self.engine {
            Engine::Auto => crate::control::supports(j),
            Engine::Conditional => true,
            Engine::Genz => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FwpEntry {
    pub p: usize,
    pub q: usize,
    pub r: usize,
    pub value: f64,
}

/// Characteristics under a single effect configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigChars {
    pub label: String,
    pub tau: Vec<f64>,
    /// `r` when `tau` is the standard configuration `delta_{r,K}`.
    pub delta_index: Option<usize>,
    pub ess: f64,
    /// Entry `p - 1`: probability of rejecting at least `p` true nulls.
    pub fwer: Vec<f64>,
    /// Entry `[p - 1][q - 1]`: probability of at least `p` rejections among
    /// the first `q` arms (zero when `p > q`).
    pub fwp: Vec<Vec<f64>>,
    pub total_probability: f64,
    /// Sum of the per-outcome quadrature error estimates, weighted.
    pub error_bound: f64,
    pub outcomes_evaluated: usize,
}

impl ConfigChars {
    pub fn fwer(&self, p: usize) -> f64 {
        self.fwer[p - 1]
    }

    pub fn fwp(&self, p: usize, q: usize) -> f64 {
        self.fwp[p - 1][q - 1]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatingChars {
    pub n: f64,
    /// Entry `p - 1` is FWER_I(p) under the global null.
    pub fwer: Vec<f64>,
    pub fwp: Vec<FwpEntry>,
    pub ess: BTreeMap<String, f64>,
    pub max_n: f64,
    pub configs: Vec<ConfigChars>,
}

impl OperatingChars {
    pub fn fwer(&self, p: usize) -> f64 {
        self.fwer[p - 1]
    }

    pub fn fwp(&self, p: usize, q: usize, r: usize) -> Option<f64> {
        self.fwp
            .iter()
            .find(|x| x.p == p && x.q == q && x.r == r)
            .map(|x| x.value)
    }

    pub fn ess(&self, label: &str) -> Option<f64> {
        self.ess.get(label).copied()
    }
}

/// Probability of one outcome, using the coordinates it retains.
pub fn outcome_probability(
    w: &WeightedOutcome,
    dist: &ZDistribution,
    tol: f64,
    seed: u64,
) -> Result<QuadratureResult> {
    let positions: Vec<usize> = w
        .active_index
        .iter()
        .map(|&(arm, stage)| dist.index(arm, stage))
        .collect();
    let (mean, cov) = dist.marginal(&positions);
    mvn_probability(&w.rect, &mean, &cov, tol, seed)
}

/// Per-outcome seed derived from the caller's seed.
pub(crate) fn derive_seed(seed: u64, a: u64, b: u64) -> u64 {
    let mut z = seed
        .wrapping_add(a.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(b.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Participants randomised by the time the trial ends with `outcome`.
pub fn sample_size(params: &DesignParams, outcome: &Outcome, n: f64) -> f64 {
    let control = params.ratio(0, outcome.stop_stage()).value();
    let arms: f64 = outcome
        .omega
        .iter()
        .enumerate()
        .map(|(k, &w)| params.ratio(k + 1, w).value())
        .sum();
    n * (control + arms)
}

/// One representative with its evaluated probability.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutcomeRecord {
    pub outcome: Outcome,
    pub degeneracy: u64,
    pub probability: f64,
    pub error_estimate: f64,
    pub sample_size: f64,
}

fn check(params: &DesignParams, bounds: &Boundaries, n: f64, tau: &EffectConfig) -> Result<()> {
    params.ensure_valid()?;
    bounds.ensure_admissible(params.j)?;
    if !(n.is_finite() && n > 0.0) {
        return Err(Error::Parameter(format!("group size n = {n} must be a positive real")));
    }
    if tau.tau.len() != params.k || tau.tau.iter().any(|t| !t.is_finite()) {
        return Err(Error::Consistency(format!(
            "effect configuration {:?} does not fit K = {}",
            tau.tau, params.k
        )));
    }
    Ok(())
}

/// Probabilities of every representative of the reduced space for `blocks`.
pub fn outcome_table_in(
    params: &DesignParams,
    bounds: &Boundaries,
    n: f64,
    tau: &EffectConfig,
    blocks: &ArmBlocks,
    quad: &Quadrature,
) -> Result<Vec<OutcomeRecord>> {
    check(params, bounds, n, tau)?;
    let space = enumerate_reduced(bounds, params.d, params.j, blocks)?;
    let probs: Vec<QuadratureResult> = if quad.conditional(params.j) {
        let outcomes: Vec<Outcome> = space.iter().map(|w| w.outcome.clone()).collect();
        crate::control::outcome_probabilities(params, bounds, n, tau, &outcomes, quad.tol)?
    } else {
        let dist = build_z_distribution(params, n, tau)?;
        space
            .par_iter()
            .enumerate()
            .map(|(i, w)| outcome_probability(w, &dist, quad.tol, derive_seed(quad.seed, 0, i as u64)))
            .collect::<Result<_>>()?
    };
    Ok(space
        .iter()
        .zip(probs)
        .map(|(w, q)| OutcomeRecord {
            outcome: w.outcome.clone(),
            degeneracy: w.degeneracy,
            probability: q.value,
            error_estimate: q.error_estimate,
            sample_size: sample_size(params, &w.outcome, n),
        })
        .collect())
}

/// Outcome table over the maximal interchangeable blocks.
pub fn outcome_table(
    params: &DesignParams,
    bounds: &Boundaries,
    n: f64,
    tau: &EffectConfig,
    quad: &Quadrature,
) -> Result<Vec<OutcomeRecord>> {
    check(params, bounds, n, tau)?;
    let blocks = ArmBlocks::interchangeable(params, tau);
    outcome_table_in(params, bounds, n, tau, &blocks, quad)
}

/// Distribution of the number of rejections among the first `q` arms over
/// the within-block rearrangements of `outcome`.
fn rejections_in_prefix(outcome: &Outcome, members: &[Vec<usize>], q: usize) -> Vec<f64> {
    let mut dist = vec![1.0];
    for m in members {
        let size = m.len();
        let rejected = m.iter().filter(|&&a| outcome.psi[a]).count();
        let inside = m.iter().filter(|&&a| a < q).count();
        // hypergeometric: x of the `rejected` land among the `inside` slots
        let total = binom(size, rejected);
        let mut block = vec![0.0; inside.min(rejected) + 1];
        for (x, slot) in block.iter_mut().enumerate() {
            if rejected - x <= size - inside {
                *slot = binom(inside, x) * binom(size - inside, rejected - x) / total;
            }
        }
        let mut next = vec![0.0; dist.len() + block.len() - 1];
        for (i, a) in dist.iter().enumerate() {
            for (j, b) in block.iter().enumerate() {
                next[i + j] += a * b;
            }
        }
        dist = next;
    }
    dist
}

fn binom(n: usize, r: usize) -> f64 {
    if r > n {
        return 0.0;
    }
    (0..r).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Aggregate an outcome table into characteristics.
pub fn summarise(
    params: &DesignParams,
    tau: &EffectConfig,
    blocks: &ArmBlocks,
    records: &[OutcomeRecord],
) -> ConfigChars {
    let k = params.k;
    let members = blocks.members();
    let straddled: Vec<bool> = (0..=k)
        .map(|q| members.iter().any(|m| m.iter().any(|&a| a < q) && m.iter().any(|&a| a >= q)))
        .collect();
    let true_null: Vec<bool> = tau.tau.iter().map(|&t| t <= 0.0).collect();

    let mut fwer = vec![0.0; k];
    let mut fwp = vec![vec![0.0; k]; k];
    let (mut ess, mut total, mut err) = (0.0, 0.0, 0.0);
    for rec in records {
        let mass = rec.degeneracy as f64 * rec.probability;
        total += mass;
        ess += mass * rec.sample_size;
        err += rec.degeneracy as f64 * rec.error_estimate;
        let false_rejections = (0..k).filter(|&a| rec.outcome.psi[a] && true_null[a]).count();
        for p in 1..=false_rejections {
            fwer[p - 1] += mass;
        }
        for q in 1..=k {
            if straddled[q] {
                let dist = rejections_in_prefix(&rec.outcome, &members, q);
                for p in 1..=q {
                    let tail: f64 = dist.iter().skip(p).sum();
                    fwp[p - 1][q - 1] += mass * tail;
                }
            } else {
                let hits = (0..q).filter(|&a| rec.outcome.psi[a]).count();
                for p in 1..=hits {
                    fwp[p - 1][q - 1] += mass;
                }
            }
        }
    }
    ConfigChars {
        label: label_for(params, tau),
        tau: tau.tau.clone(),
        delta_index: delta_index(params, tau),
        ess,
        fwer,
        fwp,
        total_probability: total,
        error_bound: err,
        outcomes_evaluated: records.len(),
    }
}

/// Characteristics under `tau` using the given block partition.
pub fn evaluate_config_in(
    params: &DesignParams,
    bounds: &Boundaries,
    n: f64,
    tau: &EffectConfig,
    blocks: &ArmBlocks,
    quad: &Quadrature,
) -> Result<ConfigChars> {
    let records = outcome_table_in(params, bounds, n, tau, blocks, quad)?;
    Ok(summarise(params, tau, blocks, &records))
}

/// Characteristics under `tau` using maximal interchangeable blocks.
pub fn evaluate_config(
    params: &DesignParams,
    bounds: &Boundaries,
    n: f64,
    tau: &EffectConfig,
    quad: &Quadrature,
) -> Result<ConfigChars> {
    check(params, bounds, n, tau)?;
    let blocks = ArmBlocks::interchangeable(params, tau);
    evaluate_config_in(params, bounds, n, tau, &blocks, quad)
}

fn delta_index(params: &DesignParams, tau: &EffectConfig) -> Option<usize> {
    (0..=params.k).find(|&r| delta_config(params, r).tau == tau.tau)
}

/// `"null"` for the global null, `"delta_r"` for `delta_{r,K}` (r >= 1),
/// otherwise a rendering of the effects.
pub fn label_for(params: &DesignParams, tau: &EffectConfig) -> String {
    if tau.is_null() {
        return "null".into();
    }
    match delta_index(params, tau) {
        Some(r) => format!("delta_{r}"),
        None => {
            let parts: Vec<String> = tau.tau.iter().map(|t| format!("{t}")).collect();
            format!("tau({})", parts.join(","))
        }
    }
}

/// The global null followed by `delta_{r,K}` for r = 1..K, plus
/// `delta_{0,K}` when it differs from the null.
pub fn standard_configs(params: &DesignParams) -> Vec<EffectConfig> {
    let mut out = vec![EffectConfig::null(params.k)];
    if params.delta0 != 0.0 {
        out.push(delta_config(params, 0));
    }
    out.extend((1..=params.k).map(|r| delta_config(params, r)));
    out
}

/// Characteristics over `configs` (the standard set when empty). The global
/// null is always evaluated since it defines FWER_I.
pub fn evaluate(
    params: &DesignParams,
    bounds: &Boundaries,
    n: f64,
    configs: &[EffectConfig],
    tol: f64,
    seed: u64,
) -> Result<OperatingChars> {
    evaluate_with(params, bounds, n, configs, &Quadrature::new(tol, seed))
}

pub fn evaluate_with(
    params: &DesignParams,
    bounds: &Boundaries,
    n: f64,
    configs: &[EffectConfig],
    quad: &Quadrature,
) -> Result<OperatingChars> {
    let mut list: Vec<EffectConfig> = if configs.is_empty() {
        standard_configs(params)
    } else {
        configs.to_vec()
    };
    if !list.iter().any(EffectConfig::is_null) {
        list.insert(0, EffectConfig::null(params.k));
    }
    let mut chars = Vec::with_capacity(list.len());
    for (i, tau) in list.iter().enumerate() {
        let q = Quadrature {
            seed: derive_seed(quad.seed, 1, i as u64),
            ..*quad
        };
        chars.push(evaluate_config(params, bounds, n, tau, &q)?);
    }
    let null = chars.iter().find(|c| c.label == "null").expect("null evaluated");
    let fwer = null.fwer.clone();
    let mut fwp = Vec::new();
    let mut ess = BTreeMap::new();
    for c in &chars {
        ess.insert(c.label.clone(), c.ess);
        if let Some(r) = c.delta_index {
            for q in 1..=params.k {
                for p in 1..=q {
                    fwp.push(FwpEntry {
                        p,
                        q,
                        r,
                        value: c.fwp(p, q),
                    });
                }
            }
        }
    }
    fwp.sort_by_key(|e| (e.r, e.q, e.p));
    fwp.dedup_by_key(|e| (e.r, e.q, e.p));
    Ok(OperatingChars {
        n,
        fwer,
        fwp,
        ess,
        max_n: n * params.total_ratio(params.j),
        configs: chars,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::make_delta_config;
    use crate::normal::cdf;

    fn single(k: usize, j: usize, d: usize) -> DesignParams {
        let mut p = DesignParams::tailor(j, 1, 1, 1, d);
        p.k = k;
        p.sigma_sq = vec![1.0; k + 1];
        p.ratios = crate::design::equal_cumulative(k, j);
        p
    }

    #[test]
    fn single_look_rejection() {
        let p = single(1, 1, 1);
        let b = Boundaries::new(vec![1.6449], vec![1.6449]);
        let q = Quadrature::new(DEFAULT_TOL, 1);
        let c = evaluate_config(&p, &b, 10.0, &EffectConfig::null(1), &q).unwrap();
        assert!((c.fwer(1) - (1.0 - cdf(1.6449))).abs() < 1e-9);
        assert!((c.fwer(1) - 0.05).abs() < 1e-4);
        let g = evaluate_config(&p, &b, 10.0, &EffectConfig::null(1), &q.with_engine(Engine::Genz)).unwrap();
        assert!((g.fwer(1) - (1.0 - cdf(1.6449))).abs() < 1e-12);
    }

    #[test]
    fn early_acceptance_probability() {
        let p = single(1, 2, 1);
        let b = Boundaries::new(vec![0.0, 1.96], vec![1.96, 1.96]);
        let q = Quadrature::new(DEFAULT_TOL, 1);
        let t = outcome_table(&p, &b, 10.0, &EffectConfig::null(1), &q).unwrap();
        let early = t
            .iter()
            .find(|r| r.outcome == Outcome::new(vec![false], vec![1]))
            .unwrap();
        assert!((early.probability - 0.5).abs() < 1e-12);
        let total: f64 = t.iter().map(|r| r.probability).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sample_size_accounting() {
        let p = DesignParams::tailor(2, 1, 1, 1, 1);
        let o = Outcome::new(vec![false, true, false], vec![1, 2, 2]);
        assert_eq!(sample_size(&p, &o, 10.0), 10.0 * (2.0 + 1.0 + 2.0 + 2.0));
    }

    #[test]
    fn prefix_split_is_hypergeometric() {
        let o = Outcome::new(vec![true, true, false], vec![2, 2, 1]);
        let members = vec![vec![0, 1, 2]];
        let d = rejections_in_prefix(&o, &members, 1);
        assert!((d[0] - 1.0 / 3.0).abs() < 1e-15 && (d[1] - 2.0 / 3.0).abs() < 1e-15);
        let d = rejections_in_prefix(&o, &members, 2);
        assert!((d[1] - 2.0 / 3.0).abs() < 1e-15 && (d[2] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn labels() {
        let p = DesignParams::tailor(2, 1, 1, 1, 1);
        assert_eq!(label_for(&p, &EffectConfig::null(3)), "null");
        assert_eq!(label_for(&p, &make_delta_config(&p, 2).unwrap()), "delta_2");
        let cfgs = standard_configs(&p);
        assert_eq!(cfgs.len(), 5);
        assert_eq!(label_for(&p, &cfgs[1]), "delta_0");
    }

    #[test]
    fn reduced_and_full_sums_agree() {
        let p = DesignParams::tailor(2, 2, 1, 2, 2);
        let b = Boundaries::new(vec![0.3, 1.8], vec![2.4, 1.8]);
        let tau = make_delta_config(&p, 2).unwrap();
        for engine in [Engine::Conditional, Engine::Genz] {
            let q = Quadrature::new(if engine == Engine::Genz { 2e-6 } else { 1e-8 }, 3).with_engine(engine);
            let full = evaluate_config_in(&p, &b, 30.0, &tau, &ArmBlocks::singletons(3), &q).unwrap();
            let red = evaluate_config(&p, &b, 30.0, &tau, &q).unwrap();
            assert_agree(&full, &red);
        }
    }

    fn assert_agree(full: &ConfigChars, red: &ConfigChars) {
        assert!(red.outcomes_evaluated < full.outcomes_evaluated);
        assert!((full.ess - red.ess).abs() < 2e-5 * full.ess.max(1.0));
        for p in 1..=3 {
            assert!((full.fwer(p) - red.fwer(p)).abs() < 2e-5);
            for q in p..=3 {
                assert!((full.fwp(p, q) - red.fwp(p, q)).abs() < 2e-5, "p={p} q={q}");
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = DesignParams::tailor(2, 1, 1, 1, 1);
        let b = Boundaries::new(vec![0.3, 1.8], vec![2.4, 1.8]);
        assert!(evaluate(&p, &b, -1.0, &[], DEFAULT_TOL, 0).is_err());
        assert!(evaluate(&p, &b, 10.0, &[EffectConfig::null(2)], DEFAULT_TOL, 0).is_err());
        let bad = Boundaries::new(vec![0.3, 1.8], vec![2.4, 1.9]);
        assert!(evaluate(&p, &bad, 10.0, &[], DEFAULT_TOL, 0).is_err());
    }
}
