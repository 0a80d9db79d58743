//! Problem statement shared by every other module: design parameters,
//! allocation ratios, stopping boundaries and treatment-effect configurations.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Exact positive rational number used for allocation ratios.
///
/// Kept as a reduced fraction so that "is `r * n` a whole number of
/// participants" can be answered without floating point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Ratio {
    num: u64,
    den: u64,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl Ratio {
    pub fn new(num: u64, den: u64) -> Result<Self> {
        if num == 0 || den == 0 {
            return Err(Error::Parameter(format!(
                "allocation ratio {num}/{den} must be strictly positive"
            )));
        }
        let g = gcd(num, den);
        Ok(Ratio {
            num: num / g,
            den: den / g,
        })
    }

    pub fn integer(value: u64) -> Result<Self> {
        Ratio::new(value, 1)
    }

    pub fn numer(&self) -> u64 {
        self.num
    }

    pub fn denom(&self) -> u64 {
        self.den
    }

    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// True when `self * n` is a positive integer.
    pub fn scales_to_integer(&self, n: u64) -> bool {
        n > 0 && (self.num as u128 * n as u128).is_multiple_of(self.den as u128)
    }
}

impl PartialOrd for Ratio {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ratio {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.num as u128 * other.den as u128).cmp(&(other.num as u128 * self.den as u128))
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl FromStr for Ratio {
    type Err = Error;

    /// Accepts `"3"`, `"3/2"` and terminating decimals such as `"1.5"`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Parameter(format!("cannot parse allocation ratio {s:?}"));
        if let Some((n, d)) = s.split_once('/') {
            let n: u64 = n.trim().parse().map_err(|_| bad())?;
            let d: u64 = d.trim().parse().map_err(|_| bad())?;
            return Ratio::new(n, d);
        }
        let (int_part, frac_part) = s.split_once('.').unwrap_or((s, ""));
        if frac_part.len() > 15 || !frac_part.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let int: u64 = if int_part.is_empty() {
            0
        } else {
            int_part.parse().map_err(|_| bad())?
        };
        let den = 10u64.pow(frac_part.len() as u32);
        let frac: u64 = if frac_part.is_empty() {
            0
        } else {
            frac_part.parse().map_err(|_| bad())?
        };
        let num = int
            .checked_mul(den)
            .and_then(|v| v.checked_add(frac))
            .ok_or_else(bad)?;
        Ratio::new(num, den)
    }
}

impl Serialize for Ratio {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        if self.den == 1 {
            serializer.serialize_u64(self.num)
        } else {
            serializer.serialize_str(&self.to_string())
        }
    }
}

impl<'de> Deserialize<'de> for Ratio {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Int(u64),
            Float(f64),
            Text(String),
        }
        let text = match Repr::deserialize(deserializer)? {
            Repr::Int(v) => v.to_string(),
            // shortest round-trip representation, e.g. 1.5 -> "1.5"
            Repr::Float(v) => format!("{v}"),
            Repr::Text(s) => s,
        };
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// Full problem statement of an abcd multi-arm multi-stage design.
///
/// Arm index 0 is the shared control; arms `1..=k` are experimental.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDesignParams")]
pub struct DesignParams {
    /// Number of experimental arms.
    #[serde(rename = "K")]
    pub k: usize,
    /// Maximum number of stages.
    #[serde(rename = "J")]
    pub j: usize,
    /// Order of the generalised type-I familywise error.
    pub a: usize,
    /// Rejections required among the first `c` arms for power.
    pub b: usize,
    /// Number of arms at the interesting effect in the power configuration.
    pub c: usize,
    /// Number of rejections that terminates the trial.
    pub d: usize,
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    pub delta0: f64,
    /// Response variances, index 0 is the control.
    pub sigma_sq: Vec<f64>,
    /// Cumulative allocation ratios `ratios[arm][stage]`, `(K+1) x J`.
    pub ratios: Vec<Vec<Ratio>>,
}

#[derive(Deserialize)]
struct RawDesignParams {
    #[serde(rename = "K")]
    k: usize,
    #[serde(rename = "J")]
    j: usize,
    a: usize,
    b: usize,
    c: usize,
    d: usize,
    alpha: f64,
    beta: f64,
    delta: f64,
    delta0: f64,
    sigma_sq: Vec<f64>,
    ratios: RatioSpec,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RatioSpec {
    Shorthand(String),
    Matrix(Vec<Vec<Ratio>>),
}

pub const EQUAL_CUMULATIVE: &str = "equal-cumulative";

impl TryFrom<RawDesignParams> for DesignParams {
    type Error = Error;

    fn try_from(raw: RawDesignParams) -> Result<Self> {
        let ratios = match raw.ratios {
            RatioSpec::Shorthand(s) if s == EQUAL_CUMULATIVE => equal_cumulative(raw.k, raw.j),
            RatioSpec::Shorthand(s) => {
                return Err(Error::Parameter(format!(
                    "unknown ratio shorthand {s:?} (expected {EQUAL_CUMULATIVE:?})"
                )))
            }
            RatioSpec::Matrix(m) => m,
        };
        let params = DesignParams {
            k: raw.k,
            j: raw.j,
            a: raw.a,
            b: raw.b,
            c: raw.c,
            d: raw.d,
            alpha: raw.alpha,
            beta: raw.beta,
            delta: raw.delta,
            delta0: raw.delta0,
            sigma_sq: raw.sigma_sq,
            ratios,
        };
        params.check_shape()?;
        Ok(params)
    }
}

/// `r_{k,j} = j` for every arm, the cumulative equal-allocation layout.
pub fn equal_cumulative(k: usize, j: usize) -> Vec<Vec<Ratio>> {
    (0..=k)
        .map(|_| {
            (1..=j as u64)
                .map(|s| Ratio { num: s, den: 1 })
                .collect()
        })
        .collect()
}

impl DesignParams {
    /// The three-arm example scenario used throughout the documentation:
    /// K = 3, alpha = 0.05, beta = 0.1, delta = 0.545, delta0 = 0.138, unit
    /// variances and equal cumulative allocation.
    pub fn tailor(j: usize, a: usize, b: usize, c: usize, d: usize) -> Self {
        DesignParams {
            k: 3,
            j,
            a,
            b,
            c,
            d,
            alpha: 0.05,
            beta: 0.1,
            delta: 0.545,
            delta0: 0.138,
            sigma_sq: vec![1.0; 4],
            ratios: equal_cumulative(3, j),
        }
    }

    /// Allocation ratio of `arm` (0 = control) at 1-based `stage`.
    pub fn ratio(&self, arm: usize, stage: usize) -> Ratio {
        self.ratios[arm][stage - 1]
    }

    fn check_shape(&self) -> Result<()> {
        if self.k == 0 || self.j == 0 {
            return Err(Error::Parameter("K and J must be positive".into()));
        }
        if self.sigma_sq.len() != self.k + 1 {
            return Err(Error::Parameter(format!(
                "sigma_sq has {} entries, expected K+1 = {}",
                self.sigma_sq.len(),
                self.k + 1
            )));
        }
        if self.ratios.len() != self.k + 1 || self.ratios.iter().any(|row| row.len() != self.j) {
            return Err(Error::Parameter(format!(
                "ratios must be a {} x {} matrix",
                self.k + 1,
                self.j
            )));
        }
        Ok(())
    }

    /// Every violated parameter invariant; empty when the parameters are usable.
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut param = |field: &'static str, detail: String| {
            out.push(Violation::Param { field, detail })
        };
        if self.k == 0 {
            param("K", "must be at least 1".into());
        }
        if self.j == 0 {
            param("J", "must be at least 1".into());
        }
        if self.a == 0 || self.a > self.k {
            param("a", format!("{} not in [1, K={}]", self.a, self.k));
        }
        if self.c == 0 || self.c > self.k {
            param("c", format!("{} not in [1, K={}]", self.c, self.k));
        }
        if self.b == 0 || self.b > self.c {
            param("b", format!("{} not in [1, c={}]", self.b, self.c));
        }
        if self.d == 0 || self.d > self.k {
            param("d", format!("{} not in [1, K={}]", self.d, self.k));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            param("alpha", format!("{} not in (0, 1)", self.alpha));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            param("beta", format!("{} not in (0, 1)", self.beta));
        }
        if !self.delta.is_finite() || !self.delta0.is_finite() || self.delta0 >= self.delta {
            param(
                "delta",
                format!("need finite delta0 < delta, got delta0={}, delta={}", self.delta0, self.delta),
            );
        }
        if self.sigma_sq.len() != self.k + 1 {
            param("sigma_sq", format!("expected {} entries", self.k + 1));
        } else if let Some(v) = self.sigma_sq.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            param("sigma_sq", format!("variance {v} is not a positive real"));
        }
        if self.ratios.len() != self.k + 1 || self.ratios.iter().any(|r| r.len() != self.j) {
            param("ratios", format!("expected a {} x {} matrix", self.k + 1, self.j));
        } else {
            if self.ratios[0][0] != (Ratio { num: 1, den: 1 }) {
                param("ratios", format!("r_(0,1) must equal 1, got {}", self.ratios[0][0]));
            }
            for (arm, row) in self.ratios.iter().enumerate() {
                if let Some(s) = row.windows(2).position(|w| w[0] >= w[1]) {
                    param(
                        "ratios",
                        format!("arm {arm}: ratios must increase strictly (stage {} -> {})", s + 1, s + 2),
                    );
                }
            }
        }
        out
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Parameter(join_violations(&v)))
        }
    }

    /// `sum_k r_{k,stage}` over the control and every experimental arm.
    pub fn total_ratio(&self, stage: usize) -> f64 {
        self.ratios.iter().map(|row| row[stage - 1].value()).sum()
    }
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

/// Futility (`f`) and efficacy (`e`) boundaries on the Wald-statistic scale.
///
/// Infinite entries are allowed (`f_j = -inf` disables early acceptance,
/// `e_j = +inf` disables early rejection) except at the final stage where
/// `f_J = e_J` must be finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Boundaries {
    #[serde(with = "extended_reals")]
    pub f: Vec<f64>,
    #[serde(with = "extended_reals")]
    pub e: Vec<f64>,
}

impl Boundaries {
    pub fn new(f: Vec<f64>, e: Vec<f64>) -> Self {
        Boundaries { f, e }
    }

    pub fn stages(&self) -> usize {
        self.e.len()
    }

    /// Boundary value at a 1-based stage.
    pub fn futility(&self, stage: usize) -> f64 {
        self.f[stage - 1]
    }

    pub fn efficacy(&self, stage: usize) -> f64 {
        self.e[stage - 1]
    }

    /// Every violated boundary invariant for a `j`-stage design.
    pub fn violations(&self, j: usize) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.f.len() != j || self.e.len() != j {
            out.push(Violation::BoundsLength {
                expected: j,
                f_len: self.f.len(),
                e_len: self.e.len(),
            });
            return out;
        }
        for s in 0..j {
            let (f, e) = (self.f[s], self.e[s]);
            if f.is_nan() || e.is_nan() {
                out.push(Violation::NotANumber { stage: s + 1 });
                continue;
            }
            if f == f64::INFINITY || e == f64::NEG_INFINITY {
                out.push(Violation::WrongInfinity { stage: s + 1 });
                continue;
            }
            if s + 1 < j {
                if f >= e {
                    out.push(Violation::Ordering { stage: s + 1, f, e });
                }
                if !f.is_finite() || !e.is_finite() {
                    out.push(Violation::Infinite { stage: s + 1 });
                }
            } else {
                if !f.is_finite() || !e.is_finite() {
                    out.push(Violation::FinalNotFinite);
                } else if f != e {
                    out.push(Violation::FinalMismatch { f, e });
                }
            }
        }
        out
    }

    /// Membership in the set of admissible boundary pairs (infinite
    /// interim boundaries allowed).
    pub fn is_admissible(&self, j: usize) -> bool {
        self.violations(j)
            .iter()
            .all(|v| matches!(v, Violation::Infinite { .. }))
    }

    /// Membership in the restricted set where every boundary is finite.
    pub fn is_finite_admissible(&self, j: usize) -> bool {
        self.violations(j).is_empty()
    }

    pub fn ensure_admissible(&self, j: usize) -> Result<()> {
        let v: Vec<_> = self
            .violations(j)
            .into_iter()
            .filter(|v| !matches!(v, Violation::Infinite { .. }))
            .collect();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Parameter(join_violations(&v)))
        }
    }
}

/// One failed invariant reported by [`validate`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Param { field: &'static str, detail: String },
    BoundsLength { expected: usize, f_len: usize, e_len: usize },
    NotANumber { stage: usize },
    WrongInfinity { stage: usize },
    Ordering { stage: usize, f: f64, e: f64 },
    FinalMismatch { f: f64, e: f64 },
    FinalNotFinite,
    /// Infinite interim boundary: admissible, but outside the finite set.
    Infinite { stage: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Param { field, detail } => write!(out, "{field}: {detail}"),
            Violation::BoundsLength { expected, f_len, e_len } => write!(
                out,
                "boundaries need {expected} stages, got f={f_len}, e={e_len}"
            ),
            Violation::NotANumber { stage } => write!(out, "stage {stage}: boundary is NaN"),
            Violation::WrongInfinity { stage } => {
                write!(out, "stage {stage}: f may only be -inf and e only +inf")
            }
            Violation::Ordering { stage, f, e } => {
                write!(out, "stage {stage}: futility {f} must be below efficacy {e}")
            }
            Violation::FinalMismatch { f, e } => {
                write!(out, "final stage: futility {f} must equal efficacy {e}")
            }
            Violation::FinalNotFinite => write!(out, "final stage boundaries must be finite"),
            Violation::Infinite { stage } => write!(out, "stage {stage}: infinite boundary"),
        }
    }
}

/// Result of [`validate`]: the list of violated invariants.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub violations: Vec<Violation>,
}

impl Verdict {
    /// Parameters usable and boundaries admissible (infinite interim bounds allowed).
    pub fn is_valid(&self) -> bool {
        self.violations
            .iter()
            .all(|v| matches!(v, Violation::Infinite { .. }))
    }

    /// Valid and every boundary finite.
    pub fn is_finite_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn validate(params: &DesignParams, bounds: &Boundaries) -> Verdict {
    let mut violations = params.violations();
    violations.extend(bounds.violations(params.j));
    Verdict { violations }
}

/// True treatment effects `tau_k = mu_k - mu_0`, one per experimental arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectConfig {
    pub tau: Vec<f64>,
}

impl EffectConfig {
    pub fn new(tau: Vec<f64>) -> Self {
        EffectConfig { tau }
    }

    /// The global null configuration `0_K`.
    pub fn null(k: usize) -> Self {
        EffectConfig { tau: vec![0.0; k] }
    }

    pub fn is_null(&self) -> bool {
        self.tau.iter().all(|&t| t == 0.0)
    }
}

/// `delta_{c,K}`: the first `c` arms at `delta`, the rest at `delta0`.
pub fn make_delta_config(params: &DesignParams, c: usize) -> Result<EffectConfig> {
    if c == 0 || c > params.k {
        return Err(Error::Parameter(format!(
            "c = {c} must lie in [1, K = {}]",
            params.k
        )));
    }
    Ok(delta_config(params, c))
}

/// Like [`make_delta_config`] but also accepts `c = 0` (every arm at `delta0`).
pub(crate) fn delta_config(params: &DesignParams, c: usize) -> EffectConfig {
    let tau = (0..params.k)
        .map(|i| if i < c { params.delta } else { params.delta0 })
        .collect();
    EffectConfig { tau }
}

/// Serde adapter for vectors of extended reals: finite values as numbers,
/// infinities as the strings `"inf"` / `"-inf"`.
pub mod extended_reals {
    use serde::ser::SerializeSeq;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for x in v {
            if x.is_finite() {
                seq.serialize_element(x)?;
            } else if *x > 0.0 {
                seq.serialize_element("inf")?;
            } else {
                seq.serialize_element("-inf")?;
            }
        }
        seq.end()
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn parse(text: &str) -> Option<f64> {
        match text.trim().to_ascii_lowercase().as_str() {
            "inf" | "+inf" | "infinity" | "+infinity" => Some(f64::INFINITY),
            "-inf" | "-infinity" => Some(f64::NEG_INFINITY),
            other => other.parse().ok(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let raw = Vec::<Repr>::deserialize(d)?;
        raw.into_iter()
            .map(|r| match r {
                Repr::Num(v) => Ok(v),
                Repr::Text(t) => parse(&t)
                    .ok_or_else(|| serde::de::Error::custom(format!("not an extended real: {t:?}"))),
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_parsing_and_integrality() {
        let r: Ratio = "3/2".parse().unwrap();
        assert_eq!((r.numer(), r.denom()), (3, 2));
        assert_eq!("1.5".parse::<Ratio>().unwrap(), r);
        assert_eq!("6/4".parse::<Ratio>().unwrap(), r);
        assert!(r.scales_to_integer(10));
        assert!(!r.scales_to_integer(11));
        assert!("0".parse::<Ratio>().is_err());
        assert!("x/2".parse::<Ratio>().is_err());
        assert!(Ratio::integer(2).unwrap() > r);
    }

    #[test]
    fn delta_config_examples() {
        let p = DesignParams::tailor(2, 2, 1, 1, 1);
        assert_eq!(make_delta_config(&p, 1).unwrap().tau, vec![0.545, 0.138, 0.138]);
        assert_eq!(make_delta_config(&p, 3).unwrap().tau, vec![0.545; 3]);
        assert!(make_delta_config(&p, 0).is_err());
        assert!(make_delta_config(&p, 4).is_err());

        let mut q = p.clone();
        q.k = 2;
        q.delta = 1.0;
        q.delta0 = 0.0;
        assert_eq!(make_delta_config(&q, 2).unwrap().tau, vec![1.0, 1.0]);
    }

    #[test]
    fn delta_config_has_c_interesting_arms() {
        let p = DesignParams::tailor(2, 1, 1, 1, 1);
        for c in 1..=p.k {
            let tau = make_delta_config(&p, c).unwrap().tau;
            assert_eq!(tau.iter().filter(|&&t| t == p.delta).count(), c);
        }
    }

    #[test]
    fn validate_examples() {
        let p = DesignParams::tailor(2, 2, 1, 1, 1);
        let ok = Boundaries::new(vec![0.08, 1.31], vec![1.70, 1.31]);
        let v = validate(&p, &ok);
        assert!(v.is_valid() && v.is_finite_valid(), "{:?}", v);

        let bad = Boundaries::new(vec![2.0, 1.0], vec![1.0, 1.0]);
        let v = validate(&p, &bad);
        assert!(!v.is_valid());
        assert!(matches!(v.violations[0], Violation::Ordering { stage: 1, .. }));

        let inf = Boundaries::new(vec![f64::NEG_INFINITY, 1.0], vec![2.0, 1.0]);
        let v = validate(&p, &inf);
        assert!(v.is_valid());
        assert!(!v.is_finite_valid());
    }

    #[test]
    fn validate_reports_every_failure() {
        let mut p = DesignParams::tailor(2, 2, 1, 1, 1);
        p.alpha = 1.5;
        p.b = 2; // b > c
        let b = Boundaries::new(vec![0.0, 1.0], vec![1.0, 1.2]);
        let v = validate(&p, &b);
        assert_eq!(v.violations.len(), 3, "{:?}", v.violations);
    }

    #[test]
    fn ratio_invariants_checked() {
        let mut p = DesignParams::tailor(2, 1, 1, 1, 1);
        p.ratios[0][0] = Ratio::integer(2).unwrap();
        p.ratios[1][1] = Ratio::integer(1).unwrap();
        let v = p.violations();
        assert_eq!(v.len(), 3, "{v:?}");
    }

    #[test]
    fn params_json_shorthand() {
        let text = r#"{"K":3,"J":2,"a":2,"b":1,"c":1,"d":1,"alpha":0.05,"beta":0.1,
            "delta":0.545,"delta0":0.138,"sigma_sq":[1,1,1,1],"ratios":"equal-cumulative"}"#;
        let p: DesignParams = serde_json::from_str(text).unwrap();
        assert_eq!(p, DesignParams::tailor(2, 2, 1, 1, 1));
        let back: DesignParams = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn params_json_rejects_bad_shapes() {
        let text = r#"{"K":3,"J":2,"a":2,"b":1,"c":1,"d":1,"alpha":0.05,"beta":0.1,
            "delta":0.545,"delta0":0.138,"sigma_sq":[1,1,1],"ratios":"equal-cumulative"}"#;
        assert!(serde_json::from_str::<DesignParams>(text).is_err());
        let text = text.replace("[1,1,1]", "[1,1,1,1]").replace("equal-cumulative", "bogus");
        assert!(serde_json::from_str::<DesignParams>(&text).is_err());
    }

    #[test]
    fn boundaries_json_infinities() {
        let b = Boundaries::new(vec![f64::NEG_INFINITY, 1.0], vec![f64::INFINITY, 1.0]);
        let text = serde_json::to_string(&b).unwrap();
        assert_eq!(text, r#"{"f":["-inf",1.0],"e":["inf",1.0]}"#);
        let back: Boundaries = serde_json::from_str(&text).unwrap();
        assert_eq!(back, b);
    }
}
