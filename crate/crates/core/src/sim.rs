//! Monte Carlo simulation of the trial-conduct procedure.
//!
//! Each arm contributes one normal draw per stage: the sum of responses of
//! the participants added at that stage. Draw `(rep, arm, stage)` always
//! comes from the same position of the same random stream, so results do
//! not depend on how replications are split across threads.

use std::collections::{BTreeMap, HashMap};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chars::{derive_seed, label_for, sample_size, standard_configs};
use crate::design::{delta_config, Boundaries, DesignParams, EffectConfig};
use crate::error::{Error, Result};
use crate::normal::quantile;
use crate::outcomes::Outcome;

/// Random stream of one replication.
pub fn trial_rng(seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

/// Standard normal draw at a fixed position of the stream.
fn draw(rng: &mut ChaCha8Rng, slot: usize) -> f64 {
    rng.set_word_pos(2 * slot as u128);
    let u = ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64);
    quantile(u)
}

/// Per-stage constants shared by every replication.
struct Conduct<'a> {
    bounds: &'a Boundaries,
    k: usize,
    j: usize,
    d: usize,
    /// `[arm][stage]`: participants randomised by the end of the stage.
    size: Vec<Vec<f64>>,
    /// `[arm][stage]`: standard deviation of the stage's response sum.
    inc_sd: Vec<Vec<f64>>,
    /// `[arm][stage]`: mean of the stage's response sum.
    inc_mean: Vec<Vec<f64>>,
    /// `[arm][stage]`: square root of the information for arm `k + 1`.
    sqrt_info: Vec<Vec<f64>>,
}

impl<'a> Conduct<'a> {
    fn new(params: &DesignParams, bounds: &'a Boundaries, n: f64, tau: &EffectConfig) -> Self {
        let (k, j) = (params.k, params.j);
        let mut size = vec![vec![0.0; j]; k + 1];
        let mut inc_sd = vec![vec![0.0; j]; k + 1];
        let mut inc_mean = vec![vec![0.0; j]; k + 1];
        for arm in 0..=k {
            let mu = if arm == 0 { 0.0 } else { tau.tau[arm - 1] };
            let mut prev = 0.0;
            for s in 0..j {
                let m = n * params.ratio(arm, s + 1).value();
                size[arm][s] = m;
                inc_sd[arm][s] = ((m - prev) * params.sigma_sq[arm]).sqrt();
                inc_mean[arm][s] = (m - prev) * mu;
                prev = m;
            }
        }
        let sqrt_info = (1..=k)
            .map(|arm| {
                (0..j)
                    .map(|s| {
                        let v = params.sigma_sq[arm] / size[arm][s] + params.sigma_sq[0] / size[0][s];
                        (1.0 / v).sqrt()
                    })
                    .collect()
            })
            .collect();
        Conduct {
            bounds,
            k,
            j,
            d: params.d,
            size,
            inc_sd,
            inc_mean,
            sqrt_info,
        }
    }

    fn run(&self, rng: &mut ChaCha8Rng) -> Outcome {
        let (k, j) = (self.k, self.j);
        let mut sums = vec![0.0; k + 1];
        let mut psi = vec![false; k];
        let mut omega = vec![0usize; k];
        let mut rejections = 0;
        for s in 0..j {
            for arm in 0..=k {
                if arm > 0 && omega[arm - 1] != 0 {
                    continue;
                }
                let z = draw(rng, arm * j + s);
                sums[arm] += self.inc_mean[arm][s] + self.inc_sd[arm][s] * z;
            }
            let control = sums[0] / self.size[0][s];
            let (f, e) = (self.bounds.f[s], self.bounds.e[s]);
            for arm in 1..=k {
                if omega[arm - 1] != 0 {
                    continue;
                }
                let z = (sums[arm] / self.size[arm][s] - control) * self.sqrt_info[arm - 1][s];
                if z > e {
                    psi[arm - 1] = true;
                    omega[arm - 1] = s + 1;
                    rejections += 1;
                } else if z <= f {
                    omega[arm - 1] = s + 1;
                }
            }
            let pending = omega.contains(&0);
            if rejections >= self.d || !pending {
                for w in omega.iter_mut().filter(|w| **w == 0) {
                    *w = s + 1;
                }
                break;
            }
        }
        Outcome::new(psi, omega)
    }
}

/// One simulated trial under effects `tau`, drawing from `rng`'s stream.
pub fn simulate_trial(
    params: &DesignParams,
    bounds: &Boundaries,
    n: f64,
    tau: &EffectConfig,
    rng: &mut ChaCha8Rng,
) -> Outcome {
    Conduct::new(params, bounds, n, tau).run(rng)
}

/// Proportion or mean with its Monte Carlo standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

impl Estimate {
    fn proportion(hits: u64, total: u64) -> Self {
        let p = hits as f64 / total as f64;
        Estimate {
            value: p,
            se: (p * (1.0 - p) / total as f64).sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FwpEstimate {
    pub p: usize,
    pub q: usize,
    pub r: usize,
    pub value: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeCount {
    pub psi: Vec<bool>,
    pub omega: Vec<usize>,
    pub count: u64,
}

/// Simulated characteristics under one effect configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigSimulation {
    pub label: String,
    pub tau: Vec<f64>,
    pub ess: Estimate,
    /// Entry `p - 1`: at least `p` true nulls rejected.
    pub fwer: Vec<Estimate>,
    /// Entry `[p - 1][q - 1]`: at least `p` rejections among the first `q` arms.
    pub fwp: Vec<Vec<Estimate>>,
    pub outcome_frequencies: Vec<OutcomeCount>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub replications: u64,
    pub seed: u64,
    pub n: f64,
    /// FWER_I(p) under the global null, `p = 1..K`.
    pub fwer_hat: Vec<Estimate>,
    pub fwp_hat: Vec<FwpEstimate>,
    pub ess_hat: BTreeMap<String, Estimate>,
    pub configs: Vec<ConfigSimulation>,
}

impl SimulationReport {
    pub fn config(&self, label: &str) -> Option<&ConfigSimulation> {
        self.configs.iter().find(|c| c.label == label)
    }
}

/// Counts of each outcome over `replications` trials.
pub fn outcome_counts(
    params: &DesignParams,
    bounds: &Boundaries,
    n: f64,
    tau: &EffectConfig,
    replications: u64,
    seed: u64,
) -> BTreeMap<Outcome, u64> {
    const CHUNK: u64 = 4096;
    let conduct = Conduct::new(params, bounds, n, tau);
    let partial: Vec<HashMap<Outcome, u64>> = (0..replications.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut counts = HashMap::new();
            for rep in c * CHUNK..((c + 1) * CHUNK).min(replications) {
                let mut rng = trial_rng(seed, rep);
                *counts.entry(conduct.run(&mut rng)).or_insert(0) += 1;
            }
            counts
        })
        .collect();
    let mut total = BTreeMap::new();
    for counts in partial {
        for (o, c) in counts {
            *total.entry(o).or_insert(0) += c;
        }
    }
    total
}

fn summarise_counts(
    params: &DesignParams,
    n: f64,
    tau: &EffectConfig,
    counts: &BTreeMap<Outcome, u64>,
    replications: u64,
) -> ConfigSimulation {
    let k = params.k;
    let mut fwer = vec![0u64; k];
    let mut fwp = vec![vec![0u64; k]; k];
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for (o, &c) in counts {
        let size = sample_size(params, o, n);
        sum += size * c as f64;
        sum_sq += size * size * c as f64;
        let false_rej = (0..k).filter(|&a| o.psi[a] && tau.tau[a] <= 0.0).count();
        for slot in fwer.iter_mut().take(false_rej) {
            *slot += c;
        }
        for q in 1..=k {
            let hits = (0..q).filter(|&a| o.psi[a]).count();
            for p in 1..=hits {
                fwp[p - 1][q - 1] += c;
            }
        }
    }
    let r = replications as f64;
    let mean = sum / r;
    let var = (sum_sq / r - mean * mean).max(0.0) * r / (r - 1.0).max(1.0);
    ConfigSimulation {
        label: label_for(params, tau),
        tau: tau.tau.clone(),
        ess: Estimate {
            value: mean,
            se: (var / r).sqrt(),
        },
        fwer: fwer.iter().map(|&h| Estimate::proportion(h, replications)).collect(),
        fwp: fwp
            .iter()
            .map(|row| row.iter().map(|&h| Estimate::proportion(h, replications)).collect())
            .collect(),
        outcome_frequencies: counts
            .iter()
            .map(|(o, &count)| OutcomeCount {
                psi: o.psi.clone(),
                omega: o.omega.clone(),
                count,
            })
            .collect(),
    }
}

/// Simulates every configuration in `configs` (the standard set when
/// empty; the global null is always included).
pub fn simulate_report(
    params: &DesignParams,
    bounds: &Boundaries,
    n: f64,
    configs: &[EffectConfig],
    replications: u64,
    seed: u64,
) -> Result<SimulationReport> {
    params.ensure_valid()?;
    bounds.ensure_admissible(params.j)?;
    if !(n.is_finite() && n > 0.0) {
        return Err(Error::Parameter(format!("group size n = {n} must be a positive real")));
    }
    if replications == 0 {
        return Err(Error::Parameter("replications must be at least 1".into()));
    }
    let mut list: Vec<EffectConfig> = if configs.is_empty() {
        standard_configs(params)
    } else {
        configs.to_vec()
    };
    if let Some(bad) = list.iter().find(|t| t.tau.len() != params.k || t.tau.iter().any(|v| !v.is_finite())) {
        return Err(Error::Consistency(format!(
            "effect configuration {:?} does not fit K = {}",
            bad.tau, params.k
        )));
    }
    if !list.iter().any(EffectConfig::is_null) {
        list.insert(0, EffectConfig::null(params.k));
    }
    let sims: Vec<ConfigSimulation> = list
        .iter()
        .enumerate()
        .map(|(i, tau)| {
            let counts = outcome_counts(params, bounds, n, tau, replications, derive_seed(seed, 2, i as u64));
            summarise_counts(params, n, tau, &counts, replications)
        })
        .collect();
    let null = sims.iter().find(|c| c.label == "null").expect("null simulated");
    let mut fwp_hat = Vec::new();
    for (tau, sim) in list.iter().zip(&sims) {
        if let Some(r) = (0..=params.k).find(|&r| delta_config(params, r).tau == tau.tau) {
            for q in 1..=params.k {
                for p in 1..=q {
                    let e = sim.fwp[p - 1][q - 1];
                    fwp_hat.push(FwpEstimate {
                        p,
                        q,
                        r,
                        value: e.value,
                        se: e.se,
                    });
                }
            }
        }
    }
    fwp_hat.sort_by_key(|e| (e.r, e.q, e.p));
    fwp_hat.dedup_by_key(|e| (e.r, e.q, e.p));
    Ok(SimulationReport {
        replications,
        seed,
        n,
        fwer_hat: null.fwer.clone(),
        fwp_hat,
        ess_hat: sims.iter().map(|c| (c.label.clone(), c.ess)).collect(),
        configs: sims,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::Ratio;
    use crate::normal::cdf;
    use crate::outcomes::{enumerate_xi, is_member};

    fn tailor_row1() -> (DesignParams, Boundaries) {
        (
            DesignParams::tailor(2, 2, 1, 1, 1),
            Boundaries::new(vec![0.08, 1.31], vec![1.70, 1.31]),
        )
    }

    #[test]
    fn separate_stopping_reaches_every_decision() {
        let mut p = DesignParams::tailor(3, 1, 1, 1, 3);
        p.d = 3;
        let b = Boundaries::new(vec![-0.5, 0.3, 1.9], vec![1.5, 1.7, 1.9]);
        let tau = EffectConfig::new(vec![0.6, 0.6, 0.6]);
        let conduct = Conduct::new(&p, &b, 30.0, &tau);
        // a rule that never stops on rejections
        let unlimited = Conduct {
            d: usize::MAX,
            ..Conduct::new(&p, &b, 30.0, &tau)
        };
        for rep in 0..2000 {
            let o = conduct.run(&mut trial_rng(5, rep));
            assert_eq!(o, unlimited.run(&mut trial_rng(5, rep)));
            assert!(is_member(&o, &b, 3, 3));
        }
    }

    #[test]
    fn first_rejection_stops_everything() {
        let (p, b) = tailor_row1();
        let tau = EffectConfig::new(vec![1.5, 0.0, 0.0]);
        let conduct = Conduct::new(&p, &b, 27.0, &tau);
        let mut seen = 0;
        for rep in 0..3000 {
            let o = conduct.run(&mut trial_rng(9, rep));
            if o.psi[0] && o.omega[0] == 1 {
                seen += 1;
                assert_eq!(o.omega, vec![1, 1, 1]);
            }
        }
        assert!(seen > 100);
    }

    #[test]
    fn simulated_outcomes_are_members() {
        let designs = [
            (DesignParams::tailor(2, 1, 1, 1, 1), Boundaries::new(vec![0.5, 2.0], vec![2.8, 2.0])),
            (DesignParams::tailor(2, 2, 1, 2, 2), Boundaries::new(vec![-1.0, 1.1], vec![1.4, 1.1])),
            (DesignParams::tailor(3, 1, 1, 1, 3), Boundaries::new(vec![0.0, 0.9, 2.0], vec![2.7, 2.3, 2.0])),
            (DesignParams::tailor(3, 3, 2, 3, 2), Boundaries::new(vec![-0.2, 0.2, 0.6], vec![1.2, 0.9, 0.6])),
            (DesignParams::tailor(1, 2, 1, 1, 1), Boundaries::new(vec![1.5], vec![1.5])),
        ];
        for (p, b) in designs {
            let xi = enumerate_xi(&b, p.d, p.j, p.k).unwrap();
            let counts = outcome_counts(&p, &b, 25.0, &delta_config(&p, 1), 20_000, 11);
            for o in counts.keys() {
                assert!(xi.contains(o), "{o:?} not in Xi");
            }
            assert_eq!(counts.values().sum::<u64>(), 20_000);
        }
    }

    #[test]
    fn single_look_rejection_rate() {
        let p = DesignParams {
            k: 1,
            j: 1,
            a: 1,
            b: 1,
            c: 1,
            d: 1,
            alpha: 0.05,
            beta: 0.1,
            delta: 0.5,
            delta0: 0.0,
            sigma_sq: vec![1.0, 2.0],
            ratios: vec![vec![Ratio::integer(1).unwrap()]; 2],
        };
        let e = 1.3;
        let b = Boundaries::new(vec![e], vec![e]);
        let rep = simulate_report(&p, &b, 40.0, &[], 200_000, 4).unwrap();
        let est = rep.fwer_hat[0];
        let exact = 1.0 - cdf(e);
        assert!((est.value - exact).abs() < 4.0 * est.se, "{} vs {exact}", est.value);
        // power with the effect at delta: mean delta sqrt(I), I = 40 / 3
        let power = rep.fwp_hat.iter().find(|f| f.r == 1).unwrap();
        let exact = 1.0 - cdf(e - 0.5 * (40.0f64 / 3.0).sqrt());
        assert!((power.value - exact).abs() < 4.0 * power.se, "{} vs {exact}", power.value);
    }

    #[test]
    fn partition_independent_and_reproducible() {
        let (p, b) = tailor_row1();
        let tau = EffectConfig::null(3);
        let all = outcome_counts(&p, &b, 27.0, &tau, 10_000, 3);
        // replaying single streams gives the same outcomes
        let conduct = Conduct::new(&p, &b, 27.0, &tau);
        let mut replay: BTreeMap<Outcome, u64> = BTreeMap::new();
        for rep in (0..10_000).rev() {
            *replay.entry(conduct.run(&mut trial_rng(3, rep))).or_insert(0) += 1;
        }
        assert_eq!(all, replay);
        let a = simulate_report(&p, &b, 27.0, &[], 5_000, 8).unwrap();
        assert_eq!(a, simulate_report(&p, &b, 27.0, &[], 5_000, 8).unwrap());
    }

    #[test]
    fn report_invariants() {
        let (p, b) = tailor_row1();
        let rep = simulate_report(&p, &b, 27.0, &[], 20_000, 1).unwrap();
        assert_eq!(rep.configs.len(), 5);
        for c in &rep.configs {
            assert_eq!(c.outcome_frequencies.iter().map(|o| o.count).sum::<u64>(), 20_000);
            let all = c.fwer.iter().chain(c.fwp.iter().flatten());
            assert!(all.into_iter().all(|e| (0.0..=1.0).contains(&e.value)));
        }
        assert_eq!(rep.fwp_hat.len(), 6 * 4);
        assert!(rep.ess_hat.contains_key("null") && rep.ess_hat.contains_key("delta_3"));
        assert!(simulate_report(&p, &b, 27.0, &[], 0, 1).is_err());
    }
}
