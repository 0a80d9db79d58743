//! Trial outcomes `(psi, omega)`, their enumeration, order reduction over
//! interchangeable arms, and the integration rectangle of each outcome.
//!
//! `psi[k]` is true when arm `k + 1` ends with its hypothesis rejected and
//! `omega[k]` is the (1-based) stage at which its decision was made.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::design::{Boundaries, DesignParams, EffectConfig};
use crate::error::{Error, Result};
use crate::mvn::Rectangle;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Outcome {
    pub psi: Vec<bool>,
    pub omega: Vec<usize>,
}

impl Outcome {
    pub fn new(psi: Vec<bool>, omega: Vec<usize>) -> Self {
        Outcome { psi, omega }
    }

    pub fn arms(&self) -> usize {
        self.psi.len()
    }

    /// Stage at which the trial ended.
    pub fn stop_stage(&self) -> usize {
        self.omega.iter().copied().max().unwrap_or(0)
    }

    pub fn rejections(&self) -> usize {
        self.psi.iter().filter(|&&p| p).count()
    }

    /// Rejections made at or before `stage`.
    pub fn rejections_by(&self, stage: usize) -> usize {
        self.psi
            .iter()
            .zip(&self.omega)
            .filter(|&(&p, &w)| p && w <= stage)
            .count()
    }

    /// Scalar code `2 omega - 1(psi = 0)` used to order arms inside a block.
    pub fn code(&self, arm: usize) -> usize {
        2 * self.omega[arm] - usize::from(!self.psi[arm])
    }

    fn order_key(&self) -> (usize, &[bool], &[usize]) {
        (self.stop_stage(), &self.psi, &self.omega)
    }
}

/// Representative outcome with the size of its class and its rectangle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightedOutcome {
    pub outcome: Outcome,
    pub degeneracy: u64,
    pub rect: Rectangle,
    /// `(arm, stage)` pairs (1-based) of the rectangle coordinates, in order.
    pub active_index: Vec<(usize, usize)>,
}

/// Partition of the experimental arms into blocks of interchangeable arms.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ArmBlocks {
    block_of: Vec<usize>,
}

impl ArmBlocks {
    /// Blocks from per-arm labels; arms with equal labels share a block.
    pub fn from_labels<T: PartialEq>(labels: &[T]) -> Self {
        let mut firsts: Vec<usize> = Vec::new();
        let mut block_of = Vec::with_capacity(labels.len());
        for (i, label) in labels.iter().enumerate() {
            match firsts.iter().position(|&f| labels[f] == *label) {
                Some(b) => block_of.push(b),
                None => {
                    block_of.push(firsts.len());
                    firsts.push(i);
                }
            }
        }
        ArmBlocks { block_of }
    }

    pub fn singletons(k: usize) -> Self {
        ArmBlocks {
            block_of: (0..k).collect(),
        }
    }

    /// Arms with identical effect.
    pub fn by_effect(tau: &EffectConfig) -> Self {
        let bits: Vec<u64> = tau.tau.iter().map(|t| t.to_bits()).collect();
        Self::from_labels(&bits)
    }

    /// Maximal blocks of arms sharing effect, variance and allocation row.
    pub fn interchangeable(params: &DesignParams, tau: &EffectConfig) -> Self {
        let labels: Vec<_> = (1..=params.k)
            .map(|arm| {
                (
                    tau.tau[arm - 1].to_bits(),
                    params.sigma_sq[arm].to_bits(),
                    params.ratios[arm].clone(),
                )
            })
            .collect();
        Self::from_labels(&labels)
    }

    pub fn arms(&self) -> usize {
        self.block_of.len()
    }

    pub fn block_of(&self, arm: usize) -> usize {
        self.block_of[arm]
    }

    pub fn count(&self) -> usize {
        self.block_of.iter().map(|b| b + 1).max().unwrap_or(0)
    }

    /// Arm indices (0-based) of each block, in arm order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.count()];
        for (arm, &b) in self.block_of.iter().enumerate() {
            out[b].push(arm);
        }
        out
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.members().iter().map(Vec::len).collect()
    }

    /// Whether every block is homogeneous in variance and allocation.
    pub fn respects(&self, params: &DesignParams) -> bool {
        self.members().iter().all(|m| {
            m.iter().all(|&a| {
                params.sigma_sq[a + 1] == params.sigma_sq[m[0] + 1]
                    && params.ratios[a + 1] == params.ratios[m[0] + 1]
            })
        })
    }
}

/// Result of an order reduction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReducedSpace {
    pub outcomes: Vec<WeightedOutcome>,
    pub blocks: ArmBlocks,
    /// Set when the requested blocks were not interchangeable and the full
    /// space was returned instead.
    pub fallback: bool,
}

impl ReducedSpace {
    pub fn total_degeneracy(&self) -> u64 {
        self.outcomes.iter().map(|w| w.degeneracy).sum()
    }
}

fn check_inputs(bounds: &Boundaries, d: usize, j: usize, k: usize) -> Result<()> {
    if k == 0 || j == 0 {
        return Err(Error::Parameter(format!("need K >= 1 and J >= 1, got K={k}, J={j}")));
    }
    if d == 0 || d > k {
        return Err(Error::Parameter(format!("d = {d} not in [1, K={k}]")));
    }
    bounds.ensure_admissible(j)
}

#[derive(Clone, Copy, PartialEq)]
enum Action {
    Reject,
    Accept,
    Continue,
}

/// All outcomes reachable under the conduct rules, ordered by
/// `(stop stage, psi, omega)`.
pub fn enumerate_xi(bounds: &Boundaries, d: usize, j: usize, k: usize) -> Result<Vec<Outcome>> {
    check_inputs(bounds, d, j, k)?;
    let mut found = BTreeSet::new();
    let start = Outcome::new(vec![false; k], vec![0; k]);
    let active: Vec<usize> = (0..k).collect();
    explore(bounds, d, j, 1, &active, 0, start, &mut found);
    let mut out: Vec<Outcome> = found.into_iter().collect();
    out.sort_by(|a, b| a.order_key().cmp(&b.order_key()));
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn explore(
    bounds: &Boundaries,
    d: usize,
    j: usize,
    stage: usize,
    active: &[usize],
    rejected: usize,
    partial: Outcome,
    found: &mut BTreeSet<Outcome>,
) {
    let (f, e) = (bounds.futility(stage), bounds.efficacy(stage));
    let mut allowed = Vec::with_capacity(3);
    if e < f64::INFINITY {
        allowed.push(Action::Reject);
    }
    if f > f64::NEG_INFINITY {
        allowed.push(Action::Accept);
    }
    if stage < j {
        allowed.push(Action::Continue);
    }
    let m = active.len();
    let combos = allowed.len().pow(m as u32);
    let mut choice = vec![0usize; m];
    for code in 0..combos {
        let mut c = code;
        for slot in choice.iter_mut() {
            *slot = c % allowed.len();
            c /= allowed.len();
        }
        let mut next = partial.clone();
        let mut continuing = Vec::new();
        let mut now_rejected = rejected;
        for (slot, &arm) in choice.iter().zip(active) {
            match allowed[*slot] {
                Action::Reject => {
                    next.psi[arm] = true;
                    next.omega[arm] = stage;
                    now_rejected += 1;
                }
                Action::Accept => next.omega[arm] = stage,
                Action::Continue => continuing.push(arm),
            }
        }
        if now_rejected >= d || continuing.is_empty() {
            for &arm in &continuing {
                next.omega[arm] = stage;
            }
            found.insert(next);
        } else {
            explore(bounds, d, j, stage + 1, &continuing, now_rejected, next, found);
        }
    }
}

/// Membership predicate of the sample space.
pub fn is_member(outcome: &Outcome, bounds: &Boundaries, d: usize, j: usize) -> bool {
    let k = outcome.arms();
    if k == 0 || outcome.omega.len() != k || bounds.stages() != j {
        return false;
    }
    if outcome.omega.iter().any(|&w| w == 0 || w > j) {
        return false;
    }
    let stop = outcome.stop_stage();
    if (1..stop).any(|s| outcome.rejections_by(s) >= d) {
        return false;
    }
    let stopped_on_rejections = outcome.rejections_by(stop) >= d;
    for arm in 0..k {
        let w = outcome.omega[arm];
        if outcome.psi[arm] {
            if bounds.efficacy(w) == f64::INFINITY {
                return false;
            }
        } else if w < j
            && bounds.futility(w) == f64::NEG_INFINITY
            && !(w == stop && stopped_on_rejections)
        {
            return false;
        }
    }
    true
}

/// Integration rectangle of `outcome` over the stacked statistics, with
/// unbounded coordinates removed.
pub fn build_rectangle(
    outcome: &Outcome,
    bounds: &Boundaries,
    d: usize,
) -> Result<(Rectangle, Vec<(usize, usize)>)> {
    let j = bounds.stages();
    if !is_member(outcome, bounds, d, j) {
        return Err(Error::Consistency(format!(
            "outcome psi={:?} omega={:?} is not in the sample space",
            outcome.psi, outcome.omega
        )));
    }
    let stop = outcome.stop_stage();
    let stopped_on_rejections = outcome.rejections_by(stop) >= d;
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    let mut index = Vec::new();
    for stage in 1..=stop {
        let (f, e) = (bounds.futility(stage), bounds.efficacy(stage));
        for arm in 0..outcome.arms() {
            let w = outcome.omega[arm];
            if stage > w {
                continue;
            }
            let (lo, hi) = if stage < w {
                (f, e)
            } else if outcome.psi[arm] {
                (e, f64::INFINITY)
            } else if stage == stop && stopped_on_rejections {
                (f64::NEG_INFINITY, e)
            } else {
                (f64::NEG_INFINITY, f)
            };
            if lo == f64::NEG_INFINITY && hi == f64::INFINITY {
                continue;
            }
            lower.push(lo);
            upper.push(hi);
            index.push((arm + 1, stage));
        }
    }
    Ok((Rectangle::new(lower, upper), index))
}

fn multinomial(counts: &[usize]) -> u64 {
    let mut total = 0u64;
    let mut out = 1u64;
    for &c in counts {
        for i in 1..=c as u64 {
            total += 1;
            out = out * total / i;
        }
    }
    out
}

/// Degeneracy of `outcome` as a representative: the number of distinct
/// within-block rearrangements of its arm outcomes.
pub fn degeneracy(outcome: &Outcome, blocks: &ArmBlocks) -> u64 {
    blocks
        .members()
        .iter()
        .map(|m| {
            let mut codes: Vec<usize> = m.iter().map(|&a| outcome.code(a)).collect();
            codes.sort_unstable();
            let mut mult = Vec::new();
            let mut run = 0;
            for (i, c) in codes.iter().enumerate() {
                run += 1;
                if i + 1 == codes.len() || codes[i + 1] != *c {
                    mult.push(run);
                    run = 0;
                }
            }
            multinomial(&mult)
        })
        .product()
}

/// Whether `outcome` is the ordered representative of its class.
pub fn is_representative(outcome: &Outcome, blocks: &ArmBlocks) -> bool {
    blocks
        .members()
        .iter()
        .all(|m| m.windows(2).all(|w| outcome.code(w[0]) >= outcome.code(w[1])))
}

/// Order-reduced space for an explicit block partition.
pub fn enumerate_reduced(
    bounds: &Boundaries,
    d: usize,
    j: usize,
    blocks: &ArmBlocks,
) -> Result<Vec<WeightedOutcome>> {
    let xi = enumerate_xi(bounds, d, j, blocks.arms())?;
    xi.into_iter()
        .filter(|o| is_representative(o, blocks))
        .map(|outcome| {
            let (rect, active_index) = build_rectangle(&outcome, bounds, d)?;
            Ok(WeightedOutcome {
                degeneracy: degeneracy(&outcome, blocks),
                outcome,
                rect,
                active_index,
            })
        })
        .collect()
}

/// Order-reduced space with blocks of equal effect.
///
/// Blocks are taken from `tau` alone, so arms are assumed to share variance
/// and allocation; see [`enumerate_xi_prime_checked`] for the checked form.
pub fn enumerate_xi_prime(
    bounds: &Boundaries,
    tau: &EffectConfig,
    d: usize,
    j: usize,
    k: usize,
) -> Result<ReducedSpace> {
    if tau.tau.len() != k {
        return Err(Error::Consistency(format!(
            "effect configuration has {} entries, K = {k}",
            tau.tau.len()
        )));
    }
    let blocks = ArmBlocks::by_effect(tau);
    Ok(ReducedSpace {
        outcomes: enumerate_reduced(bounds, d, j, &blocks)?,
        blocks,
        fallback: false,
    })
}

/// As [`enumerate_xi_prime`], falling back to the full space (all
/// degeneracies 1) when equal-effect arms differ in variance or allocation.
pub fn enumerate_xi_prime_checked(
    params: &DesignParams,
    bounds: &Boundaries,
    tau: &EffectConfig,
) -> Result<ReducedSpace> {
    let (k, j) = (params.k, params.j);
    if tau.tau.len() != k {
        return Err(Error::Consistency(format!(
            "effect configuration has {} entries, K = {k}",
            tau.tau.len()
        )));
    }
    let blocks = ArmBlocks::by_effect(tau);
    if blocks.respects(params) {
        return enumerate_xi_prime(bounds, tau, params.d, j, k);
    }
    log::warn!("arms with equal effect are not interchangeable; using the full sample space");
    let blocks = ArmBlocks::singletons(k);
    Ok(ReducedSpace {
        outcomes: enumerate_reduced(bounds, params.d, j, &blocks)?,
        blocks,
        fallback: true,
    })
}

fn binomial(n: usize, r: usize) -> u64 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    (0..r).fold(1u64, |acc, i| acc * (n - i) as u64 / (i as u64 + 1))
}

/// Closed-form `|Xi|` for finite boundaries.
pub fn cardinality_xi(d: usize, j: usize, k: usize) -> u64 {
    fn count(rem: usize, rejected: usize, left: usize, d: usize) -> u64 {
        let mut total = 1u64 << rem;
        if left > 1 {
            for stop in 0..rem {
                for rej in 0..=stop.min(d - 1 - rejected) {
                    total += binomial(rem, stop)
                        * binomial(stop, rej)
                        * count(rem - stop, rejected + rej, left - 1, d);
                }
            }
        }
        total
    }
    if d == 0 || d > k || j == 0 {
        return 0;
    }
    count(k, 0, j, d)
}

/// Which standard effect configuration a reduced cardinality refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauKind {
    Null,
    DeltaCK,
}

/// Closed-form `|Xi'|` under the global null or `delta_{c,K}`.
pub fn cardinality_xi_prime(d: usize, j: usize, k: usize, kind: TauKind, c: usize) -> u64 {
    let sizes: Vec<usize> = match kind {
        TauKind::Null => vec![k],
        TauKind::DeltaCK => [c, k.saturating_sub(c)].into_iter().filter(|&s| s > 0).collect(),
    };
    if kind == TauKind::DeltaCK && (c == 0 || c > k) {
        return 0;
    }
    cardinality_blocks(d, j, &sizes)
}

/// Closed-form size of the order-reduced space for blocks of the given sizes.
pub fn cardinality_blocks(d: usize, j: usize, sizes: &[usize]) -> u64 {
    let k: usize = sizes.iter().sum();
    if d == 0 || d > k || j == 0 {
        return 0;
    }
    count_blocks(sizes, 0, j, d)
}

fn count_blocks(rem: &[usize], rejected: usize, left: usize, d: usize) -> u64 {
    let mut total: u64 = rem.iter().map(|&r| r as u64 + 1).product();
    if left > 1 {
        let mut stopped = vec![0; rem.len()];
        let mut rejections = vec![0; rem.len()];
        split_blocks(rem, 0, &mut stopped, &mut rejections, rejected, left, d, &mut total);
    }
    total
}

#[allow(clippy::too_many_arguments)]
fn split_blocks(
    rem: &[usize],
    block: usize,
    stopped: &mut Vec<usize>,
    rejections: &mut Vec<usize>,
    rejected: usize,
    left: usize,
    d: usize,
    total: &mut u64,
) {
    if block == rem.len() {
        let stop: usize = stopped.iter().sum();
        let rej: usize = rejections.iter().sum();
        let all: usize = rem.iter().sum();
        if stop < all && rejected + rej < d {
            let next: Vec<usize> = rem.iter().zip(stopped.iter()).map(|(r, s)| r - s).collect();
            *total += count_blocks(&next, rejected + rej, left - 1, d);
        }
        return;
    }
    for s in 0..=rem[block] {
        for r in 0..=s {
            stopped[block] = s;
            rejections[block] = r;
            split_blocks(rem, block + 1, stopped, rejections, rejected, left, d, total);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn finite(j: usize) -> Boundaries {
        let mut f: Vec<f64> = (0..j).map(|s| s as f64 * 0.5).collect();
        let mut e: Vec<f64> = (0..j).map(|s| 3.0 - s as f64 * 0.5).collect();
        f[j - 1] = 2.0;
        e[j - 1] = 2.0;
        Boundaries::new(f, e)
    }

    fn outcome(psi: &[u8], omega: &[usize]) -> Outcome {
        Outcome::new(psi.iter().map(|&p| p == 1).collect(), omega.to_vec())
    }

    #[test]
    fn small_spaces() {
        let one = enumerate_xi(&finite(1), 1, 1, 1).unwrap();
        assert_eq!(one, vec![outcome(&[0], &[1]), outcome(&[1], &[1])]);
        assert_eq!(enumerate_xi(&finite(2), 1, 2, 2).unwrap().len(), 12);
        assert_eq!(enumerate_xi(&finite(3), 2, 3, 3).unwrap().len(), 186);
    }

    #[test]
    fn ordering_is_by_stop_stage_then_psi_then_omega() {
        let xi = enumerate_xi(&finite(3), 1, 3, 2).unwrap();
        for w in xi.windows(2) {
            assert!(w[0].order_key() < w[1].order_key());
        }
    }

    #[test]
    fn closed_forms_on_examples() {
        assert_eq!(cardinality_xi(4, 4, 4), 4096);
        assert_eq!(cardinality_xi(3, 4, 4), 3808);
        assert_eq!(cardinality_xi_prime(2, 3, 4, TauKind::Null, 0), 90);
        for k in 1..=5 {
            assert_eq!(cardinality_xi(1, 1, k), 1 << k);
        }
        assert_eq!(cardinality_xi_prime(1, 2, 3, TauKind::DeltaCK, 1), 23);
    }

    #[test]
    fn singleton_blocks_reproduce_full_count() {
        for k in 1..=4 {
            for d in 1..=k {
                for j in 1..=4 {
                    assert_eq!(cardinality_blocks(d, j, &vec![1; k]), cardinality_xi(d, j, k));
                }
            }
        }
    }

    /// Brute force: group the full space into classes by sorted per-block
    /// codes and count class sizes.
    fn class_sizes(xi: &[Outcome], blocks: &ArmBlocks) -> HashMap<Vec<Vec<usize>>, u64> {
        let mut out = HashMap::new();
        for o in xi {
            let key: Vec<Vec<usize>> = blocks
                .members()
                .iter()
                .map(|m| {
                    let mut c: Vec<usize> = m.iter().map(|&a| o.code(a)).collect();
                    c.sort_unstable();
                    c
                })
                .collect();
            *out.entry(key).or_insert(0) += 1;
        }
        out
    }

    #[test]
    fn degeneracy_matches_brute_force_class_sizes() {
        for (k, j, d) in [(3, 2, 1), (3, 3, 2), (4, 2, 2), (4, 3, 1)] {
            let bounds = finite(j);
            let xi = enumerate_xi(&bounds, d, j, k).unwrap();
            for tau in [vec![0.0; k], {
                let mut t = vec![0.1; k];
                t[0] = 0.5;
                t
            }] {
                let blocks = ArmBlocks::by_effect(&EffectConfig::new(tau));
                let sizes = class_sizes(&xi, &blocks);
                let reduced = enumerate_reduced(&bounds, d, j, &blocks).unwrap();
                assert_eq!(reduced.len(), sizes.len());
                for w in &reduced {
                    let key: Vec<Vec<usize>> = blocks
                        .members()
                        .iter()
                        .map(|m| {
                            let mut c: Vec<usize> = m.iter().map(|&a| w.outcome.code(a)).collect();
                            c.sort_unstable();
                            c
                        })
                        .collect();
                    assert_eq!(w.degeneracy, sizes[&key]);
                }
            }
        }
    }

    #[test]
    fn accept_then_two_late_rejections_has_three_arrangements() {
        let blocks = ArmBlocks::singletons(3);
        let xi = enumerate_xi(&finite(2), 1, 2, 3).unwrap();
        assert_eq!(xi.len(), 34);
        let null = ArmBlocks::from_labels(&[0, 0, 0]);
        let rep = outcome(&[1, 1, 0], &[2, 2, 1]);
        assert!(xi.contains(&rep));
        assert!(is_representative(&rep, &null));
        assert_eq!(degeneracy(&rep, &null), 3);
        assert_eq!(degeneracy(&rep, &blocks), 1);
    }

    #[test]
    fn membership_agrees_with_enumeration_including_infinite_bounds() {
        let inf = f64::INFINITY;
        let cases = [
            Boundaries::new(vec![0.0, 1.0, 2.0], vec![3.0, 2.5, 2.0]),
            Boundaries::new(vec![-inf, 1.0, 2.0], vec![3.0, 2.5, 2.0]),
            Boundaries::new(vec![0.0, -inf, 2.0], vec![inf, 2.5, 2.0]),
            Boundaries::new(vec![-inf, -inf, 2.0], vec![inf, inf, 2.0]),
        ];
        for bounds in &cases {
            for k in 1..=3 {
                for d in 1..=k {
                    let xi: BTreeSet<Outcome> =
                        enumerate_xi(bounds, d, 3, k).unwrap().into_iter().collect();
                    let mut members = BTreeSet::new();
                    let total = 6usize.pow(k as u32);
                    for code in 0..total {
                        let mut c = code;
                        let mut o = Outcome::new(vec![false; k], vec![0; k]);
                        for arm in 0..k {
                            o.psi[arm] = c % 2 == 1;
                            o.omega[arm] = (c / 2) % 3 + 1;
                            c /= 6;
                        }
                        if is_member(&o, bounds, d, 3) {
                            members.insert(o);
                        }
                    }
                    assert_eq!(xi, members, "k={k} d={d} bounds={bounds:?}");
                }
            }
        }
    }

    #[test]
    fn rectangle_examples() {
        let b = Boundaries::new(vec![0.5, 2.0], vec![2.5, 2.0]);
        let (r, idx) = build_rectangle(&outcome(&[1], &[2]), &b, 1).unwrap();
        assert_eq!(r.lower, vec![0.5, 2.0]);
        assert_eq!(r.upper, vec![2.5, f64::INFINITY]);
        assert_eq!(idx, vec![(1, 1), (1, 2)]);

        let (r, _) = build_rectangle(&outcome(&[0], &[1]), &b, 1).unwrap();
        assert_eq!((r.lower, r.upper), (vec![f64::NEG_INFINITY], vec![0.5]));

        let b1 = Boundaries::new(vec![1.0], vec![1.0]);
        let (r, idx) = build_rectangle(&outcome(&[1, 0], &[1, 1]), &b1, 1).unwrap();
        assert_eq!(r.lower, vec![1.0, f64::NEG_INFINITY]);
        assert_eq!(r.upper, vec![f64::INFINITY, 1.0]);
        assert_eq!(idx, vec![(1, 1), (2, 1)]);

        // stopping on a rejection merges acceptance and continuation
        let (r, _) = build_rectangle(&outcome(&[1, 0], &[1, 1]), &b, 1).unwrap();
        assert_eq!(r.upper, vec![f64::INFINITY, 2.5]);

        assert!(build_rectangle(&outcome(&[1, 1], &[1, 2]), &b, 1).is_err());
    }

    #[test]
    fn unbounded_coordinates_are_dropped() {
        let inf = f64::INFINITY;
        let b = Boundaries::new(vec![-inf, 1.0], vec![inf, 1.0]);
        let (r, idx) = build_rectangle(&outcome(&[1], &[2]), &b, 1).unwrap();
        assert_eq!(r.dim(), 1);
        assert_eq!(idx, vec![(1, 2)]);
    }

    #[test]
    fn checked_reduction_falls_back() {
        let mut p = DesignParams::tailor(2, 1, 1, 1, 1);
        let bounds = finite(2);
        let tau = EffectConfig::null(3);
        let space = enumerate_xi_prime_checked(&p, &bounds, &tau).unwrap();
        assert!(!space.fallback);
        assert_eq!(space.outcomes.len(), 13);
        p.sigma_sq[2] = 2.0;
        let space = enumerate_xi_prime_checked(&p, &bounds, &tau).unwrap();
        assert!(space.fallback);
        assert_eq!(space.outcomes.len(), 34);
        assert!(space.outcomes.iter().all(|w| w.degeneracy == 1));
    }

    #[test]
    fn bad_inputs() {
        assert!(enumerate_xi(&finite(2), 0, 2, 2).is_err());
        assert!(enumerate_xi(&finite(2), 3, 2, 2).is_err());
        assert!(enumerate_xi(&finite(2), 1, 3, 2).is_err());
        let bad = Boundaries::new(vec![1.0, 2.0], vec![0.5, 2.0]);
        assert!(enumerate_xi(&bad, 1, 2, 2).is_err());
    }
}
