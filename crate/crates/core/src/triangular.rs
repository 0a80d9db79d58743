//! Modified triangular test: closed-form boundary and information shapes
//! indexed by `(alpha', beta')`, calibrated so the realised FWER_I(a) and
//! FWP(b, c) hit their targets.

use argmin::core::{CostFunction, Executor, State};
use argmin::solver::neldermead::NelderMead;
use serde::{Deserialize, Serialize};

use crate::chars::{evaluate_config, Quadrature};
use crate::design::{delta_config, Boundaries, DesignParams, EffectConfig};
use crate::error::{Error, Result};
use crate::normal::quantile;

/// Continuity correction for discrete monitoring of the triangle.
pub const CORRECTION: f64 = 0.583;

/// Which version of the shape formulas to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InfoScale {
    /// Information divided by `J * delta~`, the intercept added to the
    /// Z-scale boundaries unscaled, and `n = (s0^2 + s1^2) / I_1`.
    Printed,
    /// As `Printed` but with information divided by `J * delta~^2`.
    Squared,
    /// The triangle on the score scale mapped to Z: information over
    /// `J * delta~^2`, boundaries `(+-a + c I_j) / sqrt(I_j)` and
    /// `n = (s0^2 + s1^2) I_1`.
    #[default]
    Classical,
}

/// Boundaries and group size for one `(alpha', beta')`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriangularShape {
    pub delta_tilde: f64,
    pub info: Vec<f64>,
    /// Boundaries after setting `f_J = e_J` to their average.
    pub bounds: Boundaries,
    /// Boundaries exactly as the formulas give them.
    pub raw_f: Vec<f64>,
    pub raw_e: Vec<f64>,
    pub n: f64,
}

impl TriangularShape {
    /// `|f_J - e_J|` before the final stage was equalised.
    pub fn final_gap(&self) -> f64 {
        let j = self.raw_e.len();
        (self.raw_f[j - 1] - self.raw_e[j - 1]).abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriangularDesign {
    pub alpha_prime: f64,
    pub beta_prime: f64,
    pub delta_tilde: f64,
    pub info: Vec<f64>,
    pub bounds: Boundaries,
    pub n: f64,
    /// Squared distance of (FWER_I(a), FWP(b, c)) from (alpha, 1 - beta).
    pub residual: f64,
    pub fwer: f64,
    pub fwp: f64,
    pub scale: InfoScale,
}

fn check_setting(params: &DesignParams) -> Result<()> {
    params.ensure_valid()?;
    if params.sigma_sq[1..].iter().any(|&v| v != params.sigma_sq[1]) {
        return Err(Error::Parameter(
            "the triangular design needs equal experimental-arm variances".into(),
        ));
    }
    for row in &params.ratios {
        for (s, r) in row.iter().enumerate() {
            if r.denom() != 1 || r.numer() != s as u64 + 1 {
                return Err(Error::Parameter(
                    "the triangular design needs cumulative ratios r_(k,j) = j".into(),
                ));
            }
        }
    }
    Ok(())
}

fn check_prime(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v < 0.5) {
        return Err(Error::Parameter(format!("{name} = {v} must lie in (0, 1/2)")));
    }
    Ok(())
}

/// Boundaries from the information vector with an explicit correction
/// constant; `f_J` and `e_J` are left as computed.
fn raw_boundaries(
    info: &[f64],
    delta_tilde: f64,
    alpha_prime: f64,
    correction: f64,
    scale: InfoScale,
) -> (Vec<f64>, Vec<f64>) {
    let j = info.len() as f64;
    let last = info[info.len() - 1];
    let log_term = (2.0 / delta_tilde) * (1.0 / (2.0 * alpha_prime)).ln();
    let intercept = log_term - correction * (last / j).sqrt();
    let divisor = |s: usize| match scale {
        InfoScale::Classical => info[s].sqrt(),
        _ => 1.0,
    };
    let slope = |s: usize| last / j * (s as f64 + 1.0) / info[s].sqrt();
    let f = (0..info.len())
        .map(|s| -intercept / divisor(s) + 0.75 * delta_tilde * slope(s))
        .collect();
    let e = (0..info.len())
        .map(|s| intercept / divisor(s) + 0.25 * delta_tilde * slope(s))
        .collect();
    (f, e)
}

/// Evaluates the closed-form shape at `(alpha', beta')`.
pub fn triangular_shape(
    alpha_prime: f64,
    beta_prime: f64,
    params: &DesignParams,
    scale: InfoScale,
) -> Result<TriangularShape> {
    check_setting(params)?;
    check_prime("alpha'", alpha_prime)?;
    check_prime("beta'", beta_prime)?;
    let (za, zb) = (quantile(1.0 - alpha_prime), quantile(1.0 - beta_prime));
    let delta_tilde = 2.0 * za / (za + zb) * params.delta;
    let jf = params.j as f64;
    let log_term = (1.0 / (2.0 * alpha_prime)).ln();
    let root = (4.0 * CORRECTION * CORRECTION / jf + 8.0 * log_term).sqrt() - 2.0 * CORRECTION / jf.sqrt();
    let denom = match scale {
        InfoScale::Printed => jf * delta_tilde,
        InfoScale::Squared | InfoScale::Classical => jf * delta_tilde * delta_tilde,
    };
    let info: Vec<f64> = (1..=params.j).map(|s| s as f64 * root * root / denom).collect();
    let (raw_f, raw_e) = raw_boundaries(&info, delta_tilde, alpha_prime, CORRECTION, scale);
    let mut f = raw_f.clone();
    let mut e = raw_e.clone();
    let last = params.j - 1;
    let mid = 0.5 * (f[last] + e[last]);
    f[last] = mid;
    e[last] = mid;
    let var = params.sigma_sq[0] + params.sigma_sq[1];
    let n = match scale {
        InfoScale::Classical => var * info[0],
        _ => var / info[0],
    };
    if !(n.is_finite() && n > 0.0) || info.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!(
            "triangular shape at alpha' = {alpha_prime}, beta' = {beta_prime} is not finite"
        )));
    }
    Ok(TriangularShape {
        delta_tilde,
        info,
        bounds: Boundaries::new(f, e),
        raw_f,
        raw_e,
        n,
    })
}

/// Realised FWER_I(a) and FWP(b, c) of a shape.
fn realised(params: &DesignParams, shape: &TriangularShape, quad: &Quadrature) -> Result<(f64, f64)> {
    let null = evaluate_config(params, &shape.bounds, shape.n, &EffectConfig::null(params.k), quad)?;
    let alt = evaluate_config(params, &shape.bounds, shape.n, &delta_config(params, params.c), quad)?;
    Ok((null.fwer(params.a), alt.fwp(params.b, params.c)))
}

fn to_unit(x: f64) -> f64 {
    0.5 / (1.0 + (-x).exp())
}

fn from_unit(p: f64) -> f64 {
    let u = 2.0 * p;
    (u / (1.0 - u)).ln()
}

/// Cost assigned to inadmissible or failed shapes.
const INADMISSIBLE: f64 = 10.0;

struct Calibration<'a> {
    params: &'a DesignParams,
    scale: InfoScale,
    quad: Quadrature,
}

impl Calibration<'_> {
    fn residual(&self, x: &[f64]) -> f64 {
        let (ap, bp) = (to_unit(x[0]), to_unit(x[1]));
        if !(ap > 0.0 && ap < 0.5 && bp > 0.0 && bp < 0.5) {
            return INADMISSIBLE;
        }
        let Ok(shape) = triangular_shape(ap, bp, self.params, self.scale) else {
            return INADMISSIBLE;
        };
        if !shape.bounds.is_finite_admissible(self.params.j) {
            return INADMISSIBLE;
        }
        match realised(self.params, &shape, &self.quad) {
            Ok((fwer, fwp)) => {
                let r = (fwer - self.params.alpha).powi(2) + (fwp - (1.0 - self.params.beta)).powi(2);
                if r.is_finite() {
                    r
                } else {
                    INADMISSIBLE
                }
            }
            Err(_) => INADMISSIBLE,
        }
    }
}

impl CostFunction for Calibration<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, x: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        Ok(self.residual(x))
    }
}

/// Finds `(alpha', beta')` whose shape attains the error-rate targets, to a
/// squared residual of at most `tol`.
pub fn calibrate_triangular(params: &DesignParams, tol: f64, scale: InfoScale) -> Result<TriangularDesign> {
    check_setting(params)?;
    if !(tol > 0.0) {
        return Err(Error::Parameter(format!("tolerance {tol} must be positive")));
    }
    let quad = Quadrature::new((tol * 1e-2).clamp(1e-9, 1e-6), 0);
    let problem = Calibration { params, scale, quad };
    let mut best = vec![from_unit(params.alpha.min(0.49)), from_unit(params.beta.min(0.49))];
    let mut best_cost = problem.residual(&best);
    let mut step = 0.5;
    for round in 0..8 {
        if best_cost <= tol * 1e-3 {
            break;
        }
        let simplex = vec![
            best.clone(),
            vec![best[0] + step, best[1]],
            vec![best[0], best[1] + step],
        ];
        let solver = NelderMead::new(simplex)
            .with_sd_tolerance(1e-14)
            .map_err(|e| Error::Numeric(e.to_string()))?;
        let res = Executor::new(
            Calibration {
                params,
                scale,
                quad,
            },
            solver,
        )
        .configure(|s| s.max_iters(400).target_cost(0.0))
        .run()
        .map_err(|e| Error::Numeric(e.to_string()))?;
        let state = res.state();
        if let Some(p) = state.get_best_param() {
            if state.get_best_cost() < best_cost {
                best = p.clone();
                best_cost = state.get_best_cost();
            }
        }
        log::debug!("triangular calibration round {round}: residual {best_cost:.3e}");
        step *= 0.5;
    }
    let (ap, bp) = (to_unit(best[0]), to_unit(best[1]));
    if best_cost > tol {
        return Err(Error::Calibration {
            residual: best_cost,
            tol,
            alpha_prime: ap,
            beta_prime: bp,
        });
    }
    let shape = triangular_shape(ap, bp, params, scale)?;
    let (fwer, fwp) = realised(params, &shape, &quad)?;
    Ok(TriangularDesign {
        alpha_prime: ap,
        beta_prime: bp,
        delta_tilde: shape.delta_tilde,
        info: shape.info,
        bounds: shape.bounds,
        n: shape.n,
        residual: best_cost,
        fwer,
        fwp,
        scale,
    })
}
