//! Optimised group size and stopping boundaries.
//!
//! Candidates `(n, f_1..f_{J-1}, e_1..e_J)` are scored by a weighted sum of
//! expected sample sizes and the maximum sample size, plus relative
//! penalties for exceeding the error rate or missing the power target. A
//! real-coded genetic algorithm (tournament selection, blend crossover,
//! Gaussian mutation, elitism) is run from several random starts, and the
//! continuous group size is then resolved to an integer.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chars::{
    evaluate_config_in, evaluate_with, sample_size, summarise, ConfigChars, Engine, OperatingChars,
    OutcomeRecord, Quadrature,
};
use crate::control::{supports, Plan};
use crate::design::{delta_config, Boundaries, DesignParams, EffectConfig, Ratio};
use crate::error::{Error, Result};
use crate::outcomes::{enumerate_reduced, ArmBlocks, WeightedOutcome};

/// Form of the penalty for missing the power target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerPenalty {
    /// `((1 - FWP) - beta) / beta` when the type-II error exceeds `beta`,
    /// the same relative violation as the error-rate term.
    #[default]
    TypeII,
    /// `((1 - beta) - FWP) / (1 - beta)`: shortfall relative to the target.
    Shortfall,
}

impl PowerPenalty {
    fn term(self, fwp: f64, beta: f64) -> f64 {
        let miss = (1.0 - beta) - fwp;
        if miss <= 0.0 {
            return 0.0;
        }
        match self {
            PowerPenalty::TypeII => miss / beta,
            PowerPenalty::Shortfall => miss / (1.0 - beta),
        }
    }
}

/// How the continuous optimum `n_*` becomes a whole group size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegerPolicy {
    /// Re-optimise the boundaries at `n_l` and `n_u` and keep the better.
    #[default]
    Reoptimise,
    /// Take `n_u` with the continuous optimum's boundaries.
    Upper,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    /// Weights on ESS under the global null, ESS under `delta_{c,K}`, and
    /// the maximum sample size.
    pub weights: [f64; 3],
    /// Penalty multiplier; `None` means `N_fixed`.
    pub penalty: Option<f64>,
    pub power_penalty: PowerPenalty,
    pub population_size: usize,
    pub max_iterations: usize,
    pub replicates: usize,
    pub seed: u64,
    /// Range for every boundary coordinate.
    pub boundary_box: (f64, f64),
    /// Range for `n`; `None` means `[1, 4 N_fixed / (K + 1)]`.
    pub n_box: Option<(f64, f64)>,
    /// Quadrature tolerance inside the search loop.
    pub tol: f64,
    /// Tolerance for the reported design.
    pub final_tol: f64,
    /// Slack allowed when declaring the constraints met.
    pub feasibility_tol: f64,
    pub integer_policy: IntegerPolicy,
    pub engine: Engine,
    pub tournament_size: usize,
    pub crossover_rate: f64,
    /// BLX-alpha extension beyond the parents' interval.
    pub blend_alpha: f64,
    /// Per-gene mutation probability.
    pub mutation_rate: f64,
    /// Initial mutation standard deviation as a fraction of each
    /// coordinate's range; it shrinks linearly to a hundredth of this by the
    /// last generation.
    pub mutation_scale: f64,
    /// Individuals copied unchanged into the next generation.
    pub elitism: usize,
    /// Stop a replicate after this many generations without improvement.
    pub stall_generations: Option<usize>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            weights: [1.0 / 3.0; 3],
            penalty: None,
            power_penalty: PowerPenalty::TypeII,
            population_size: 100,
            max_iterations: 500,
            replicates: 10,
            seed: 1,
            boundary_box: (-6.0, 6.0),
            n_box: None,
            tol: 1e-5,
            final_tol: 1e-6,
            feasibility_tol: 1e-4,
            integer_policy: IntegerPolicy::Reoptimise,
            engine: Engine::Auto,
            tournament_size: 3,
            crossover_rate: 0.8,
            blend_alpha: 0.5,
            mutation_rate: 0.1,
            mutation_scale: 0.1,
            elitism: 5,
            stall_generations: None,
        }
    }
}

impl SearchConfig {
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let [w1, w2, w3] = self.weights;
        if [w1, w2, w3].iter().any(|w| !(w.is_finite() && *w >= 0.0)) || !(w1 + w2 > 0.0) {
            out.push(format!("weights {:?} must be nonnegative with w1 + w2 > 0", self.weights));
        }
        if let Some(p) = self.penalty {
            if !(p.is_finite() && p > 0.0) {
                out.push(format!("penalty {p} must be positive"));
            }
        }
        if self.population_size < 10 {
            out.push(format!("population_size {} must be at least 10", self.population_size));
        }
        if self.replicates == 0 {
            out.push("replicates must be at least 1".into());
        }
        if self.max_iterations == 0 {
            out.push("max_iterations must be at least 1".into());
        }
        let (lo, hi) = self.boundary_box;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            out.push(format!("boundary_box ({lo}, {hi}) must be a finite interval"));
        }
        if let Some((lo, hi)) = self.n_box {
            if !(lo.is_finite() && hi.is_finite() && 0.0 < lo && lo < hi) {
                out.push(format!("n_box ({lo}, {hi}) must be a positive interval"));
            }
        }
        for (name, t) in [("tol", self.tol), ("final_tol", self.final_tol)] {
            if !(t > 0.0) {
                out.push(format!("{name} {t} must be positive"));
            }
        }
        if !(self.feasibility_tol >= 0.0) {
            out.push("feasibility_tol must be nonnegative".into());
        }
        if self.tournament_size == 0 {
            out.push("tournament_size must be at least 1".into());
        }
        for (name, v) in [
            ("crossover_rate", self.crossover_rate),
            ("mutation_rate", self.mutation_rate),
        ] {
            if !(0.0..=1.0).contains(&v) {
                out.push(format!("{name} {v} not in [0, 1]"));
            }
        }
        if !(self.blend_alpha >= 0.0 && self.mutation_scale >= 0.0) {
            out.push("blend_alpha and mutation_scale must be nonnegative".into());
        }
        if self.elitism >= self.population_size {
            out.push("elitism must be smaller than population_size".into());
        }
        out
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Parameter(v.join("; ")))
        }
    }
}

/// Outcome of one genetic-algorithm run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateResult {
    pub seed: u64,
    pub n: f64,
    pub bounds: Boundaries,
    pub objective: f64,
    /// Best objective after each generation (generation 0 is the initial
    /// population).
    pub trace: Vec<f64>,
    /// Objectives of the last population.
    pub final_population: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    /// Continuous optimum group size.
    pub n_star: f64,
    pub n_integer: u64,
    /// `(n_l, n_u)`; `n_l` is absent when no admissible integer lies below.
    pub n_candidates: (Option<u64>, u64),
    pub bounds: Boundaries,
    /// Objective of the reported design at `final_tol`.
    pub objective: f64,
    /// Objective of the continuous optimum inside the loop.
    pub continuous_objective: f64,
    pub chars: OperatingChars,
    /// Best objective per generation of the winning replicate.
    pub trace: Vec<f64>,
    pub feasible: bool,
    pub n_fixed: u64,
    pub penalty: f64,
    pub config: SearchConfig,
    pub replicates: Vec<ReplicateResult>,
}

/// Operating characteristics that enter the objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Criteria {
    pub ess_null: f64,
    pub ess_alt: f64,
    pub fwer: f64,
    pub fwp: f64,
}

impl Criteria {
    fn from_chars(params: &DesignParams, null: &ConfigChars, alt: &ConfigChars) -> Self {
        Criteria {
            ess_null: null.ess,
            ess_alt: alt.ess,
            fwer: null.fwer(params.a),
            fwp: alt.fwp(params.b, params.c),
        }
    }

    pub fn feasible(&self, params: &DesignParams, slack: f64) -> bool {
        self.fwer <= params.alpha + slack && self.fwp >= 1.0 - params.beta - slack
    }
}

/// Penalised objective from already evaluated characteristics.
pub fn objective_value(
    params: &DesignParams,
    n: f64,
    crit: &Criteria,
    weights: [f64; 3],
    penalty: f64,
    power_penalty: PowerPenalty,
) -> f64 {
    let [w1, w2, w3] = weights;
    let max_n = n * params.total_ratio(params.j);
    let mut pen = power_penalty.term(crit.fwp, params.beta);
    if crit.fwer > params.alpha {
        pen += (crit.fwer - params.alpha) / params.alpha;
    }
    w1 * crit.ess_null + w2 * crit.ess_alt + w3 * max_n + penalty * pen
}

/// Objective of one design at `cfg.tol`. Uses `cfg.penalty`, or `N_fixed`
/// when that is unset.
pub fn objective(params: &DesignParams, bounds: &Boundaries, n: f64, cfg: &SearchConfig) -> Result<f64> {
    let penalty = match cfg.penalty {
        Some(p) => p,
        None => compute_n_fixed(params)? as f64,
    };
    let quad = Quadrature::new(cfg.tol, cfg.seed).with_engine(cfg.engine);
    let crit = criteria(params, bounds, n, &quad)?;
    Ok(objective_value(params, n, &crit, cfg.weights, penalty, cfg.power_penalty))
}

/// FWER_I(a) under the null, FWP(b, c) under `delta_{c,K}` and both ESSs.
pub fn criteria(params: &DesignParams, bounds: &Boundaries, n: f64, quad: &Quadrature) -> Result<Criteria> {
    let mut chars = Vec::with_capacity(2);
    for tau in [EffectConfig::null(params.k), delta_config(params, params.c)] {
        let blocks = ArmBlocks::interchangeable(params, &tau);
        chars.push(evaluate_config_in(params, bounds, n, &tau, &blocks, quad)?);
    }
    Ok(Criteria::from_chars(params, &chars[0], &chars[1]))
}

/// Single-stage design solving the J = 1 problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedDesign {
    /// Critical value giving FWER_I(a) = alpha.
    pub critical_value: f64,
    /// Smallest admissible group size reaching the power target.
    pub n: u64,
    /// Continuous group size at which power equals `1 - beta` exactly.
    pub n_continuous: f64,
    /// `n * sum_k r_{k,1}`.
    pub n_total: u64,
    pub fwer: f64,
    pub fwp: f64,
}

fn single_stage(params: &DesignParams) -> DesignParams {
    DesignParams {
        j: 1,
        ratios: params.ratios.iter().map(|row| vec![row[0]]).collect(),
        ..params.clone()
    }
}

/// Bisection for the root of a decreasing function on `[lo, hi]`.
fn bisect(mut lo: f64, mut hi: f64, width: f64, f: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    for _ in 0..200 {
        if hi - lo <= width {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if f(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Solves the single-stage problem behind the penalty weight.
pub fn fixed_design(params: &DesignParams) -> Result<FixedDesign> {
    params.ensure_valid()?;
    let p1 = single_stage(params);
    let quad = Quadrature::new(1e-10, 0);
    let null = EffectConfig::null(p1.k);
    let alt = delta_config(&p1, p1.c);
    let fwer = |e: f64| -> Result<f64> {
        let b = Boundaries::new(vec![e], vec![e]);
        Ok(crate::chars::evaluate_config(&p1, &b, 1.0, &null, &quad)?.fwer(p1.a))
    };
    let critical_value = bisect(-10.0, 10.0, 1e-10, |e| Ok(fwer(e)? - p1.alpha))?;
    let bounds = Boundaries::new(vec![critical_value], vec![critical_value]);
    let power = |n: f64| -> Result<f64> {
        Ok(crate::chars::evaluate_config(&p1, &bounds, n, &alt, &quad)?.fwp(p1.b, p1.c))
    };
    let target = 1.0 - p1.beta;
    let mut hi = 1.0;
    while power(hi)? < target {
        hi *= 2.0;
        if hi > 1e8 {
            return Err(Error::Infeasible(
                "no finite group size reaches the power target".into(),
            ));
        }
    }
    let n_continuous = bisect(0.0, hi, 1e-9 * hi, |n| Ok(target - power(n)?))?;
    let mut n = (n_continuous - 1e-9).ceil().max(1.0) as u64;
    loop {
        if admissible_n(&p1, n) && power(n as f64)? >= target {
            break;
        }
        n += 1;
    }
    let total: f64 = p1.total_ratio(1) * n as f64;
    Ok(FixedDesign {
        critical_value,
        n,
        n_continuous,
        n_total: total.round() as u64,
        fwer: fwer(critical_value)?,
        fwp: power(n as f64)?,
    })
}

/// Total sample size `N_fixed` of the single-stage design.
pub fn compute_n_fixed(params: &DesignParams) -> Result<u64> {
    Ok(fixed_design(params)?.n_total)
}

/// Whether every `r_{k,j} n` is a whole number.
fn admissible_n(params: &DesignParams, n: u64) -> bool {
    params
        .ratios
        .iter()
        .flatten()
        .all(|r: &Ratio| r.scales_to_integer(n))
}

/// `(n_l, n_u)` around `n_star`: the largest admissible integer not above
/// `floor(n_star)` and the smallest admissible integer above it.
pub fn integer_candidates(params: &DesignParams, n_star: f64) -> Result<(Option<u64>, u64)> {
    if !(n_star.is_finite() && n_star > 0.0) {
        return Err(Error::Parameter(format!("n_star = {n_star} must be positive")));
    }
    let floor = n_star.floor() as u64;
    let lower = (1..=floor).rev().find(|&m| admissible_n(params, m));
    // the lcm of the denominators is always admissible, so this terminates
    let upper = (floor + 1..).find(|&m| admissible_n(params, m)).expect("admissible n exists");
    Ok((lower, upper))
}

/// Scores candidate designs for one parameter set.
///
/// With the control-conditioning engine, outcome structures are built once
/// and every candidate is integrated with a fixed outer rule chosen so the
/// reference design meets the tolerance.
pub struct Evaluator {
    params: DesignParams,
    quad: Quadrature,
    configs: Vec<ConfigData>,
    nodes: usize,
}

struct ConfigData {
    tau: EffectConfig,
    blocks: ArmBlocks,
    space: Vec<WeightedOutcome>,
    plan: Option<Plan>,
}

impl Evaluator {
    pub fn new(params: &DesignParams, quad: Quadrature) -> Result<Self> {
        params.ensure_valid()?;
        let conditional = match quad.engine {
            Engine::Auto => supports(params.j),
            Engine::Conditional => true,
            Engine::Genz => false,
        };
        // any finite design reaches every outcome
        let reference = reference_design(params);
        let mut configs = Vec::new();
        for tau in [EffectConfig::null(params.k), delta_config(params, params.c)] {
            let blocks = ArmBlocks::interchangeable(params, &tau);
            let space = enumerate_reduced(&reference.1, params.d, params.j, &blocks)?;
            let plan = if conditional {
                let outcomes: Vec<_> = space.iter().map(|w| w.outcome.clone()).collect();
                Some(Plan::new(params, &tau, &outcomes)?)
            } else {
                None
            };
            configs.push(ConfigData { tau, blocks, space, plan });
        }
        let mut nodes = 0;
        for c in &configs {
            if let Some(plan) = &c.plan {
                nodes = nodes.max(plan.nodes_for(&reference.1, reference.0, quad.tol)?);
            }
        }
        Ok(Evaluator {
            params: params.clone(),
            quad,
            configs,
            nodes,
        })
    }

    /// Outer nodes per look used for every candidate (0 under Genz).
    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn criteria(&self, bounds: &Boundaries, n: f64) -> Result<Criteria> {
        bounds.ensure_admissible(self.params.j)?;
        let mut chars = Vec::with_capacity(2);
        for c in &self.configs {
            let summary = match &c.plan {
                Some(plan) => {
                    let probs = plan.probabilities_at(bounds, n, self.nodes)?;
                    let records: Vec<OutcomeRecord> = c
                        .space
                        .iter()
                        .zip(probs)
                        .map(|(w, p)| OutcomeRecord {
                            outcome: w.outcome.clone(),
                            degeneracy: w.degeneracy,
                            probability: p.clamp(0.0, 1.0),
                            error_estimate: 0.0,
                            sample_size: sample_size(&self.params, &w.outcome, n),
                        })
                        .collect();
                    summarise(&self.params, &c.tau, &c.blocks, &records)
                }
                None => evaluate_config_in(&self.params, bounds, n, &c.tau, &c.blocks, &self.quad)?,
            };
            chars.push(summary);
        }
        Ok(Criteria::from_chars(&self.params, &chars[0], &chars[1]))
    }
}

/// Moderate finite design used to size the quadrature rule.
fn reference_design(params: &DesignParams) -> (f64, Boundaries) {
    let j = params.j;
    let e: Vec<f64> = (1..=j).map(|s| 2.5 - 0.5 * (s as f64 - 1.0) / j as f64).collect();
    let mut f: Vec<f64> = (1..=j).map(|s| 0.5 * s as f64 / j as f64).collect();
    f[j - 1] = e[j - 1];
    let info_n = 4.0 * params.sigma_sq.iter().cloned().fold(0.0, f64::max)
        / ((params.delta - params.delta0).max(0.1)).powi(2);
    (info_n.clamp(5.0, 500.0), Boundaries::new(f, e))
}

/// Search space layout: optional `n`, then `f_1..f_{J-1}`, then `e_1..e_J`.
#[derive(Debug, Clone)]
struct Genome {
    j: usize,
    fixed_n: Option<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Genome {
    fn new(j: usize, fixed_n: Option<f64>, n_box: (f64, f64), boundary_box: (f64, f64)) -> Self {
        let mut lower = Vec::new();
        let mut upper = Vec::new();
        if fixed_n.is_none() {
            lower.push(n_box.0);
            upper.push(n_box.1);
        }
        for _ in 0..2 * j - 1 {
            lower.push(boundary_box.0);
            upper.push(boundary_box.1);
        }
        Genome { j, fixed_n, lower, upper }
    }

    fn len(&self) -> usize {
        self.lower.len()
    }

    fn offset(&self) -> usize {
        usize::from(self.fixed_n.is_none())
    }

    fn random(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let mut x: Vec<f64> = self
            .lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| rng.random_range(*lo..*hi))
            .collect();
        self.repair(&mut x);
        x
    }

    fn encode(&self, n: f64, bounds: &Boundaries) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.len());
        if self.fixed_n.is_none() {
            x.push(n);
        }
        x.extend_from_slice(&bounds.f[..self.j - 1]);
        x.extend_from_slice(&bounds.e);
        for (v, (lo, hi)) in x.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *v = v.clamp(*lo, *hi);
        }
        self.repair(&mut x);
        x
    }

    /// Clamp to the box and keep `f_j < e_j` at interim looks.
    fn repair(&self, x: &mut [f64]) {
        for (v, (lo, hi)) in x.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *v = v.clamp(*lo, *hi);
        }
        let o = self.offset();
        let (lo, hi) = (self.lower[o], self.upper[o]);
        for s in 0..self.j - 1 {
            let (fi, ei) = (o + s, o + self.j - 1 + s);
            if x[fi] > x[ei] {
                x.swap(fi, ei);
            }
            if x[fi] >= x[ei] {
                let gap = 1e-6 * (hi - lo);
                if x[ei] + gap <= hi {
                    x[ei] += gap;
                } else {
                    x[fi] -= gap;
                }
            }
        }
    }

    fn decode(&self, x: &[f64]) -> (f64, Boundaries) {
        let o = self.offset();
        let n = self.fixed_n.unwrap_or_else(|| x[0]);
        let e = x[o + self.j - 1..].to_vec();
        let mut f = x[o..o + self.j - 1].to_vec();
        f.push(e[self.j - 1]);
        (n, Boundaries::new(f, e))
    }
}

struct Problem<'a> {
    params: &'a DesignParams,
    evaluator: &'a Evaluator,
    cfg: &'a SearchConfig,
    penalty: f64,
}

impl Problem<'_> {
    fn score(&self, n: f64, bounds: &Boundaries) -> f64 {
        match self.evaluator.criteria(bounds, n) {
            Ok(c) => {
                let v = objective_value(self.params, n, &c, self.cfg.weights, self.penalty, self.cfg.power_penalty);
                if v.is_nan() {
                    f64::INFINITY
                } else {
                    v
                }
            }
            Err(_) => f64::INFINITY,
        }
    }

    fn score_all(&self, genome: &Genome, pop: &[Vec<f64>]) -> Vec<f64> {
        pop.par_iter()
            .map(|x| {
                let (n, b) = genome.decode(x);
                self.score(n, &b)
            })
            .collect()
    }
}

fn tournament(rng: &mut ChaCha8Rng, fitness: &[f64], size: usize) -> usize {
    let mut best = rng.random_range(0..fitness.len());
    for _ in 1..size {
        let c = rng.random_range(0..fitness.len());
        if fitness[c] < fitness[best] {
            best = c;
        }
    }
    best
}

fn ranked(fitness: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..fitness.len()).collect();
    order.sort_by(|&a, &b| fitness[a].total_cmp(&fitness[b]).then(a.cmp(&b)));
    order
}

fn run_ga(problem: &Problem, genome: &Genome, seed: u64, start: Option<&[f64]>) -> ReplicateResult {
    let cfg = problem.cfg;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pop: Vec<Vec<f64>> = (0..cfg.population_size).map(|_| genome.random(&mut rng)).collect();
    if let Some(x) = start {
        pop[0] = x.to_vec();
    }
    let mut fitness = problem.score_all(genome, &pop);
    let order = ranked(&fitness);
    let mut trace = vec![fitness[order[0]]];
    let mut stall = 0;
    let widths: Vec<f64> = genome.lower.iter().zip(&genome.upper).map(|(l, u)| u - l).collect();
    let unit = Normal::new(0.0, 1.0).expect("valid normal");
    for gen in 0..cfg.max_iterations {
        let shrink = 1.0 - 0.99 * gen as f64 / cfg.max_iterations as f64;
        let order = ranked(&fitness);
        let mut next: Vec<Vec<f64>> = order[..cfg.elitism].iter().map(|&i| pop[i].clone()).collect();
        let mut next_fit: Vec<f64> = order[..cfg.elitism].iter().map(|&i| fitness[i]).collect();
        let mut children = Vec::with_capacity(cfg.population_size);
        while next.len() + children.len() < cfg.population_size {
            let a = &pop[tournament(&mut rng, &fitness, cfg.tournament_size)];
            let b = &pop[tournament(&mut rng, &fitness, cfg.tournament_size)];
            let (mut c1, mut c2) = (a.clone(), b.clone());
            if rng.random::<f64>() < cfg.crossover_rate {
                for g in 0..genome.len() {
                    let (lo, hi) = (a[g].min(b[g]), a[g].max(b[g]));
                    let ext = cfg.blend_alpha * (hi - lo);
                    let (l, u) = (lo - ext, hi + ext);
                    c1[g] = if u > l { rng.random_range(l..=u) } else { l };
                    c2[g] = if u > l { rng.random_range(l..=u) } else { l };
                }
            }
            for child in [&mut c1, &mut c2] {
                for g in 0..genome.len() {
                    if rng.random::<f64>() < cfg.mutation_rate {
                        let z: f64 = unit.sample(&mut rng);
                        child[g] += z * cfg.mutation_scale * shrink * widths[g];
                    }
                }
                genome.repair(child);
            }
            children.push(c1);
            if next.len() + children.len() < cfg.population_size {
                children.push(c2);
            }
        }
        next_fit.extend(problem.score_all(genome, &children));
        next.extend(children);
        pop = next;
        fitness = next_fit;
        let best = fitness.iter().cloned().fold(f64::INFINITY, f64::min);
        let prev = *trace.last().expect("trace is never empty");
        stall = if best < prev { 0 } else { stall + 1 };
        trace.push(best.min(prev));
        if cfg.stall_generations.is_some_and(|s| stall >= s) {
            break;
        }
    }
    let order = ranked(&fitness);
    let (n, bounds) = genome.decode(&pop[order[0]]);
    ReplicateResult {
        seed,
        n,
        bounds,
        objective: fitness[order[0]],
        trace,
        final_population: fitness,
    }
}

fn pick_best(runs: &[ReplicateResult]) -> usize {
    (0..runs.len())
        .min_by(|&a, &b| runs[a].objective.total_cmp(&runs[b].objective).then(a.cmp(&b)))
        .expect("at least one replicate")
}

fn default_n_box(params: &DesignParams, n_fixed: u64) -> (f64, f64) {
    (1.0, (4.0 * n_fixed as f64 / (params.k as f64 + 1.0)).max(2.0))
}

/// Runs every replicate with `n` free and returns them in replicate order.
pub fn run_replicates(params: &DesignParams, cfg: &SearchConfig) -> Result<Vec<ReplicateResult>> {
    let ctx = Context::new(params, cfg)?;
    Ok(ctx.replicates())
}

struct Context<'a> {
    params: &'a DesignParams,
    cfg: &'a SearchConfig,
    evaluator: Evaluator,
    penalty: f64,
    n_fixed: u64,
    n_box: (f64, f64),
}

impl<'a> Context<'a> {
    fn new(params: &'a DesignParams, cfg: &'a SearchConfig) -> Result<Self> {
        params.ensure_valid()?;
        cfg.ensure_valid()?;
        let n_fixed = compute_n_fixed(params)?;
        let penalty = cfg.penalty.unwrap_or(n_fixed as f64);
        let n_box = cfg.n_box.unwrap_or_else(|| default_n_box(params, n_fixed));
        let quad = Quadrature::new(cfg.tol, cfg.seed).with_engine(cfg.engine);
        let evaluator = Evaluator::new(params, quad)?;
        log::info!(
            "search: N_fixed = {n_fixed}, n in [{}, {}], {} outer nodes per look",
            n_box.0,
            n_box.1,
            evaluator.nodes()
        );
        Ok(Context {
            params,
            cfg,
            evaluator,
            penalty,
            n_fixed,
            n_box,
        })
    }

    fn problem(&self) -> Problem<'_> {
        Problem {
            params: self.params,
            evaluator: &self.evaluator,
            cfg: self.cfg,
            penalty: self.penalty,
        }
    }

    fn replicates(&self) -> Vec<ReplicateResult> {
        let genome = Genome::new(self.params.j, None, self.n_box, self.cfg.boundary_box);
        let problem = self.problem();
        (0..self.cfg.replicates)
            .map(|r| {
                let run = run_ga(&problem, &genome, self.cfg.seed.wrapping_add(r as u64), None);
                log::info!("replicate {r}: objective {:.6} at n = {:.4}", run.objective, run.n);
                run
            })
            .collect()
    }

    /// Boundaries re-optimised with `n` held fixed, started from `bounds`.
    fn reoptimise(&self, n: u64, bounds: &Boundaries, seed: u64) -> ReplicateResult {
        let genome = Genome::new(self.params.j, Some(n as f64), self.n_box, self.cfg.boundary_box);
        let start = genome.encode(n as f64, bounds);
        run_ga(&self.problem(), &genome, seed, Some(&start))
    }
}

/// Integer group size and boundaries for the continuous optimum.
pub fn resolve_integer_n(
    params: &DesignParams,
    bounds: &Boundaries,
    n_star: f64,
    cfg: &SearchConfig,
) -> Result<(u64, Boundaries)> {
    let ctx = Context::new(params, cfg)?;
    let (n, b, _) = resolve_in(&ctx, bounds, n_star)?;
    Ok((n, b))
}

fn resolve_in(ctx: &Context, bounds: &Boundaries, n_star: f64) -> Result<(u64, Boundaries, (Option<u64>, u64))> {
    let (lower, upper) = integer_candidates(ctx.params, n_star)?;
    let n_max = ctx.n_box.1.max(n_star).ceil();
    let mut options: Vec<u64> = lower.into_iter().chain([upper]).filter(|&m| m as f64 <= n_max).collect();
    if options.is_empty() {
        return Err(Error::Infeasible(format!(
            "no admissible integer group size near n* = {n_star} inside the search box"
        )));
    }
    let chosen = match ctx.cfg.integer_policy {
        IntegerPolicy::Upper => {
            let m = if options.contains(&upper) { upper } else { options[0] };
            (m, bounds.clone())
        }
        IntegerPolicy::Reoptimise => {
            let mut best: Option<(f64, u64, Boundaries)> = None;
            for (i, m) in options.drain(..).enumerate() {
                let seed = ctx.cfg.seed.wrapping_add(ctx.cfg.replicates as u64 + i as u64);
                let run = ctx.reoptimise(m, bounds, seed);
                log::info!("n = {m}: re-optimised objective {:.6}", run.objective);
                if best.as_ref().is_none_or(|b| run.objective < b.0) {
                    best = Some((run.objective, m, run.bounds));
                }
            }
            let (_, m, b) = best.expect("at least one candidate");
            (m, b)
        }
    };
    Ok((chosen.0, chosen.1, (lower, upper)))
}

/// Searches for the optimal design and resolves its integer group size.
pub fn optimise(params: &DesignParams, cfg: &SearchConfig) -> Result<SearchResult> {
    let ctx = Context::new(params, cfg)?;
    let runs = ctx.replicates();
    let best = &runs[pick_best(&runs)];
    let (n_integer, bounds, n_candidates) = resolve_in(&ctx, &best.bounds, best.n)?;
    let quad = Quadrature::new(cfg.final_tol, cfg.seed).with_engine(cfg.engine);
    let chars = evaluate_with(params, &bounds, n_integer as f64, &[], &quad)?;
    let crit = final_criteria(params, &chars)?;
    let objective = objective_value(params, n_integer as f64, &crit, cfg.weights, ctx.penalty, cfg.power_penalty);
    let feasible = crit.feasible(params, cfg.feasibility_tol);
    if !feasible {
        log::warn!(
            "best design misses the constraints: FWER {:.5}, FWP {:.5}",
            crit.fwer,
            crit.fwp
        );
    }
    Ok(SearchResult {
        n_star: best.n,
        n_integer,
        n_candidates,
        bounds,
        objective,
        continuous_objective: best.objective,
        chars,
        trace: best.trace.clone(),
        feasible,
        n_fixed: ctx.n_fixed,
        penalty: ctx.penalty,
        config: cfg.clone(),
        replicates: runs,
    })
}

/// Objective inputs read back from a full evaluation.
pub fn final_criteria(params: &DesignParams, chars: &OperatingChars) -> Result<Criteria> {
    let alt_label = crate::chars::label_for(params, &delta_config(params, params.c));
    let alt = chars
        .configs
        .iter()
        .find(|c| c.label == alt_label)
        .ok_or_else(|| Error::Consistency(format!("configuration {alt_label} was not evaluated")))?;
    let null = chars
        .configs
        .iter()
        .find(|c| c.label == "null")
        .ok_or_else(|| Error::Consistency("global null was not evaluated".into()))?;
    Ok(Criteria::from_chars(params, null, alt))
}
