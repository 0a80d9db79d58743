//! Outcome probabilities by conditioning on the shared control arm.
//!
//! Given the control arm's cumulative means the experimental arms are
//! independent, and each arm's standardised statistics behave like a
//! Brownian motion read at its cumulative allocation. The outer integral
//! over the control path uses tensor Gauss-Hermite rules. An arm's path
//! probability is exact for up to two looks; longer paths integrate the
//! first look out with composite Gauss-Legendre panels.
//!
//! Accuracy is controlled by comparing two consecutive rule sizes and
//! moving up the ladder until every outcome agrees within `tol`.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::design::{Boundaries, DesignParams, EffectConfig};
use crate::distribution::build_information;
use crate::error::{Error, Result};
use crate::mvn::QuadratureResult;
use crate::normal::{bvn_rect, cdf, pdf};
use crate::outcomes::{ArmBlocks, Outcome};
use crate::rules::{gauss_hermite, gauss_legendre, Rule};

/// Outer rule sizes per control look.
const LADDER: [usize; 8] = [6, 8, 12, 16, 24, 32, 48, 64];
/// Largest tensor grid tried.
const MAX_NODES: usize = 300_000;
/// Tensor-product weights below this are skipped.
const NEGLIGIBLE: f64 = 1e-17;
const NODE_CHUNK: usize = 64;
/// Inner integrals ignore standardised values beyond this.
const TRUNCATE: f64 = 8.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Kind {
    Reject,
    Accept,
    /// Non-rejected arm at a stop caused by rejections elsewhere.
    Merged,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct ArmEvent {
    stage: usize,
    kind: Kind,
}

fn arm_event(outcome: &Outcome, arm: usize, d: usize) -> ArmEvent {
    let stage = outcome.omega[arm];
    let stop = outcome.stop_stage();
    let kind = if outcome.psi[arm] {
        Kind::Reject
    } else if stage == stop && outcome.rejections_by(stop) >= d {
        Kind::Merged
    } else {
        Kind::Accept
    };
    ArmEvent { stage, kind }
}

/// Per-block constants for one experimental arm.
struct ArmModel {
    tau: f64,
    sqrt_info: Vec<f64>,
    /// sd of `Z_j` given the control path
    sd: Vec<f64>,
    /// Brownian clock: cumulative allocation ratio
    clock: Vec<f64>,
}

/// `P(lo_i < w0 + B(t_i - t0) <= hi_i, i = 1..L)` for Brownian motion `B`.
fn bm_path(w0: f64, t0: f64, times: &[f64], lo: &[f64], hi: &[f64], inner: &Rule) -> f64 {
    match times.len() {
        0 => 1.0,
        1 => {
            let s = (times[0] - t0).sqrt();
            (cdf((hi[0] - w0) / s) - cdf((lo[0] - w0) / s)).max(0.0)
        }
        2 => {
            let s1 = (times[0] - t0).sqrt();
            let s2 = (times[1] - t0).sqrt();
            bvn_rect(
                (lo[0] - w0) / s1,
                (hi[0] - w0) / s1,
                (lo[1] - w0) / s2,
                (hi[1] - w0) / s2,
                s1 / s2,
            )
        }
        _ => {
            // composite rule over the standardised first look, truncated
            // where the normal density is negligible
            let s1 = (times[0] - t0).sqrt();
            let a = ((lo[0] - w0) / s1).max(-TRUNCATE);
            let b = ((hi[0] - w0) / s1).min(TRUNCATE);
            if b <= a {
                return 0.0;
            }
            let next = (times[1] - times[0]).sqrt() / s1;
            let panels = ((b - a) / next.min(1.0)).ceil().max(1.0) as usize;
            let h = (b - a) / panels as f64;
            let mut acc = 0.0;
            for panel in 0..panels {
                let mid = a + h * (panel as f64 + 0.5);
                for (x, w) in inner.nodes.iter().zip(&inner.weights) {
                    let y = mid + 0.5 * h * x;
                    let rest = bm_path(w0 + s1 * y, times[0], &times[1..], &lo[1..], &hi[1..], inner);
                    acc += w * pdf(y) * rest;
                }
            }
            acc * 0.5 * h
        }
    }
}

impl ArmModel {
    /// Path probabilities given the control noise path `c` (cumulative mean
    /// minus its expectation, one entry per stage): `reject[j - 1]` is the
    /// probability of continuing through `j - 1` and rejecting at `j`;
    /// `cont[j]` of continuing through stage `j` (`cont[0] = 1`).
    fn stage_probabilities(
        &self,
        c: &[f64],
        bounds: &Boundaries,
        inner: &Rule,
        reject: &mut [f64],
        cont: &mut [f64],
    ) {
        let j = reject.len();
        let mut lo = [0.0; 8];
        let mut hi = [0.0; 8];
        let mut up = [0.0; 8];
        for s in 1..=j {
            let mean = self.sqrt_info[s - 1] * (self.tau - c[s - 1]);
            let scale = self.clock[s - 1].sqrt() / self.sd[s - 1];
            lo[s - 1] = (bounds.futility(s) - mean) * scale;
            hi[s - 1] = (bounds.efficacy(s) - mean) * scale;
        }
        cont[0] = 1.0;
        for s in 1..=j {
            let mut upper = [f64::INFINITY; 8];
            upper[..s - 1].copy_from_slice(&hi[..s - 1]);
            up[..s].copy_from_slice(&lo[..s]);
            up[s - 1] = hi[s - 1];
            reject[s - 1] = bm_path(0.0, 0.0, &self.clock[..s], &up[..s], &upper[..s], inner);
            if s < j {
                cont[s] = bm_path(0.0, 0.0, &self.clock[..s], &lo[..s], &hi[..s], inner);
            }
        }
    }
}

fn event_probability(event: ArmEvent, reject: &[f64], cont: &[f64]) -> f64 {
    let s = event.stage;
    let merged = cont[s - 1] - reject[s - 1];
    let p = match event.kind {
        Kind::Reject => reject[s - 1],
        Kind::Merged => merged,
        Kind::Accept => merged - cont.get(s).copied().unwrap_or(0.0),
    };
    p.max(0.0)
}

struct Setup<'a> {
    bounds: &'a Boundaries,
    models: Vec<ArmModel>,
    plan: &'a Plan,
    control_clock: Vec<f64>,
    control_scale: f64,
}

impl Setup<'_> {
    fn evaluate(&self, g: usize) -> Vec<f64> {
        let plan = self.plan;
        let j = self.control_clock.len();
        let outer = gauss_hermite(g);
        let inner = gauss_legendre(if g < 16 { 6 } else { 10 });
        let total = g.pow(j as u32);
        let chunks: Vec<Vec<f64>> = (0..total.div_ceil(NODE_CHUNK))
            .into_par_iter()
            .map(|chunk| {
                let mut acc = vec![0.0; plan.outcome_events.len()];
                let mut probs = vec![vec![0.0; plan.events.len()]; self.models.len()];
                let mut c = vec![0.0; j];
                let mut xi = vec![0.0; j];
                let mut reject = vec![0.0; j];
                let mut cont = vec![0.0; j];
                let end = ((chunk + 1) * NODE_CHUNK).min(total);
                for node in chunk * NODE_CHUNK..end {
                    let mut rest = node;
                    let mut weight = 1.0;
                    for x in xi.iter_mut() {
                        let i = rest % g;
                        rest /= g;
                        *x = outer.nodes[i];
                        weight *= outer.weights[i];
                    }
                    if weight < NEGLIGIBLE {
                        continue;
                    }
                    let mut walk = 0.0;
                    let mut prev = 0.0;
                    for s in 0..j {
                        walk += (self.control_clock[s] - prev).sqrt() * xi[s];
                        prev = self.control_clock[s];
                        c[s] = self.control_scale * walk / self.control_clock[s];
                    }
                    for (b, model) in self.models.iter().enumerate() {
                        model.stage_probabilities(&c, self.bounds, &inner, &mut reject, &mut cont);
                        for &ev in &plan.block_events[b] {
                            probs[b][ev] = event_probability(plan.events[ev], &reject, &cont);
                        }
                    }
                    for (o, evs) in plan.outcome_events.iter().enumerate() {
                        let mut p = weight;
                        for (arm, &ev) in evs.iter().enumerate() {
                            p *= probs[plan.arm_block[arm]][ev];
                        }
                        acc[o] += p;
                    }
                }
                acc
            })
            .collect();
        let mut out = vec![0.0; plan.outcome_events.len()];
        for part in chunks {
            for (o, v) in out.iter_mut().zip(part) {
                *o += v;
            }
        }
        out
    }
}

/// Whether the conditional engine handles a design with `j` stages.
pub fn supports(j: usize) -> bool {
    (1..=3).contains(&j)
}

/// Outcome structure for one effect configuration, reusable across
/// boundaries and group sizes.
#[derive(Debug, Clone)]
pub struct Plan {
    params: DesignParams,
    tau: EffectConfig,
    blocks: ArmBlocks,
    events: Vec<ArmEvent>,
    /// per block, the events its arms need
    block_events: Vec<Vec<usize>>,
    /// per outcome, event index of each arm
    outcome_events: Vec<Vec<usize>>,
    arm_block: Vec<usize>,
}

impl Plan {
    pub fn new(params: &DesignParams, tau: &EffectConfig, outcomes: &[Outcome]) -> Result<Self> {
        let (k, j) = (params.k, params.j);
        if !supports(j) {
            return Err(Error::Parameter(format!(
                "control-conditioning quadrature supports J <= 3, got J = {j}"
            )));
        }
        if tau.tau.len() != k {
            return Err(Error::Consistency(format!(
                "effect configuration has {} entries, K = {k}",
                tau.tau.len()
            )));
        }
        let blocks = ArmBlocks::interchangeable(params, tau);
        let mut index: HashMap<ArmEvent, usize> = HashMap::new();
        let mut events = Vec::new();
        let mut block_events = vec![Vec::new(); blocks.count()];
        let mut outcome_events = Vec::with_capacity(outcomes.len());
        for o in outcomes {
            if o.arms() != k {
                return Err(Error::Consistency(format!("outcome has {} arms, K = {k}", o.arms())));
            }
            let evs: Vec<usize> = (0..k)
                .map(|arm| {
                    let ev = arm_event(o, arm, params.d);
                    let id = *index.entry(ev).or_insert_with(|| {
                        events.push(ev);
                        events.len() - 1
                    });
                    let b = blocks.block_of(arm);
                    if !block_events[b].contains(&id) {
                        block_events[b].push(id);
                    }
                    id
                })
                .collect();
            outcome_events.push(evs);
        }
        Ok(Plan {
            params: params.clone(),
            tau: tau.clone(),
            arm_block: (0..k).map(|a| blocks.block_of(a)).collect(),
            blocks,
            events,
            block_events,
            outcome_events,
        })
    }

    fn setup<'a>(&'a self, bounds: &'a Boundaries, n: f64) -> Result<Setup<'a>> {
        let params = &self.params;
        let j = params.j;
        let info = build_information(params, n)?;
        let models = self
            .blocks
            .members()
            .iter()
            .map(|m| {
                let arm = m[0] + 1;
                let ratio = |s: usize| params.ratio(arm, s).value();
                ArmModel {
                    tau: self.tau.tau[arm - 1],
                    sqrt_info: (1..=j).map(|s| info.get(arm, s).sqrt()).collect(),
                    sd: (1..=j)
                        .map(|s| (info.get(arm, s) * params.sigma_sq[arm] / (ratio(s) * n)).sqrt())
                        .collect(),
                    clock: (1..=j).map(ratio).collect(),
                }
            })
            .collect();
        Ok(Setup {
            bounds,
            models,
            plan: self,
            control_clock: (1..=j).map(|s| params.ratio(0, s).value()).collect(),
            control_scale: params.sigma_sq[0].sqrt() / n.sqrt(),
        })
    }

    /// Probabilities with a fixed outer rule of `g` nodes per look.
    pub fn probabilities_at(&self, bounds: &Boundaries, n: f64, g: usize) -> Result<Vec<f64>> {
        Ok(self.setup(bounds, n)?.evaluate(g))
    }

    /// Probabilities refined until consecutive rules agree within `tol`.
    pub fn probabilities(&self, bounds: &Boundaries, n: f64, tol: f64) -> Result<Vec<QuadratureResult>> {
        let (g, fine, coarse) = self.refine(bounds, n, tol)?;
        let points = g.pow(self.params.j as u32) as u64;
        Ok(fine
            .iter()
            .zip(&coarse)
            .map(|(&f, &c)| QuadratureResult {
                value: f.clamp(0.0, 1.0),
                error_estimate: (f - c).abs(),
                points_used: points,
            })
            .collect())
    }

    /// Smallest ladder rule meeting `tol` at this design.
    pub fn nodes_for(&self, bounds: &Boundaries, n: f64, tol: f64) -> Result<usize> {
        Ok(self.refine(bounds, n, tol)?.0)
    }

    fn refine(&self, bounds: &Boundaries, n: f64, tol: f64) -> Result<(usize, Vec<f64>, Vec<f64>)> {
        if !(tol > 0.0) {
            return Err(Error::Parameter(format!("tolerance {tol} must be positive")));
        }
        let j = self.params.j;
        let setup = self.setup(bounds, n)?;
        let mut rung = if tol >= 1e-5 {
            0
        } else if tol >= 1e-7 {
            1
        } else {
            2
        };
        let mut coarse = setup.evaluate(LADDER[rung]);
        loop {
            let g = LADDER[rung + 1];
            let fine = setup.evaluate(g);
            let diff = coarse
                .iter()
                .zip(&fine)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            let last = rung + 2 >= LADDER.len() || LADDER[rung + 2].pow(j as u32) > MAX_NODES;
            if diff <= tol || last {
                if diff > tol {
                    log::warn!("control-conditioning quadrature stopped at {g} nodes with change {diff:.2e}");
                }
                return Ok((g, fine, coarse));
            }
            coarse = fine;
            rung += 1;
        }
    }
}

/// Probabilities of `outcomes` under `tau` for group size `n`.
pub fn outcome_probabilities(
    params: &DesignParams,
    bounds: &Boundaries,
    n: f64,
    tau: &EffectConfig,
    outcomes: &[Outcome],
    tol: f64,
) -> Result<Vec<QuadratureResult>> {
    Plan::new(params, tau, outcomes)?.probabilities(bounds, n, tol)
}
