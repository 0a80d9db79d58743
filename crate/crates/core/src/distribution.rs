//! Joint normal distribution of the stacked Wald statistics.
//!
//! Statistics are ordered stage by stage with arms inside each stage:
//! position `(j - 1) * K + (k - 1)` holds `Z_{k,j}`.

use crate::design::{DesignParams, EffectConfig};
use crate::error::{Error, Result};

/// Statistical information `I_{k,j}` of each arm-versus-control comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct InformationMatrix {
    k: usize,
    j: usize,
    values: Vec<f64>,
}

impl InformationMatrix {
    /// Information for experimental `arm` (1-based) at `stage` (1-based).
    pub fn get(&self, arm: usize, stage: usize) -> f64 {
        self.values[(arm - 1) * self.j + (stage - 1)]
    }

    pub fn arms(&self) -> usize {
        self.k
    }

    pub fn stages(&self) -> usize {
        self.j
    }
}

fn check_n(n: f64) -> Result<()> {
    if n.is_finite() && n > 0.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("group size n = {n} must be a positive real")))
    }
}

/// Variance of the control-arm mean at `stage` for group size `n`.
fn control_var(params: &DesignParams, stage: usize, n: f64) -> f64 {
    params.sigma_sq[0] / (params.ratio(0, stage).value() * n)
}

fn arm_var(params: &DesignParams, arm: usize, stage: usize, n: f64) -> f64 {
    params.sigma_sq[arm] / (params.ratio(arm, stage).value() * n)
}

pub fn build_information(params: &DesignParams, n: f64) -> Result<InformationMatrix> {
    check_n(n)?;
    let (k, j) = (params.k, params.j);
    let mut values = Vec::with_capacity(k * j);
    for arm in 1..=k {
        for stage in 1..=j {
            values.push(1.0 / (control_var(params, stage, n) + arm_var(params, arm, stage, n)));
        }
    }
    Ok(InformationMatrix { k, j, values })
}

/// Mean vector and covariance matrix of the stacked statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct ZDistribution {
    pub k: usize,
    pub j: usize,
    pub mean: Vec<f64>,
    /// Row-major `(K*J) x (K*J)` covariance (a correlation matrix).
    pub cov: Vec<f64>,
}

impl ZDistribution {
    pub fn dim(&self) -> usize {
        self.k * self.j
    }

    /// Position of `Z_{arm,stage}` (both 1-based) in the stacked vector.
    pub fn index(&self, arm: usize, stage: usize) -> usize {
        (stage - 1) * self.k + (arm - 1)
    }

    pub fn cov_at(&self, a: usize, b: usize) -> f64 {
        self.cov[a * self.dim() + b]
    }

    /// Mean sub-vector and covariance sub-block for the listed positions.
    pub fn marginal(&self, positions: &[usize]) -> (Vec<f64>, Vec<f64>) {
        let mean = positions.iter().map(|&p| self.mean[p]).collect();
        let mut cov = Vec::with_capacity(positions.len() * positions.len());
        for &a in positions {
            for &b in positions {
                cov.push(self.cov_at(a, b));
            }
        }
        (mean, cov)
    }
}

pub fn build_z_distribution(
    params: &DesignParams,
    n: f64,
    tau: &EffectConfig,
) -> Result<ZDistribution> {
    let info = build_information(params, n)?;
    if tau.tau.len() != params.k {
        return Err(Error::Consistency(format!(
            "effect configuration has {} entries, design has K = {} arms",
            tau.tau.len(),
            params.k
        )));
    }
    let (k, j) = (params.k, params.j);
    let dim = k * j;
    let pos = |arm: usize, stage: usize| (stage - 1) * k + (arm - 1);

    let mut mean = vec![0.0; dim];
    for stage in 1..=j {
        for arm in 1..=k {
            mean[pos(arm, stage)] = tau.tau[arm - 1] * info.get(arm, stage).sqrt();
        }
    }

    // Cov(Z_{k1,j1}, Z_{k2,j2}) = sqrt(I_{k1,j1}) Var(tau_hat_{j2})[k1,k2] sqrt(I_{k2,j2}),
    // j1 <= j2: cumulative estimates have independent increments.
    let mut cov = vec![0.0; dim * dim];
    for j1 in 1..=j {
        for j2 in j1..=j {
            let shared = control_var(params, j2, n);
            for k1 in 1..=k {
                for k2 in 1..=k {
                    let var = if k1 == k2 {
                        shared + arm_var(params, k1, j2, n)
                    } else {
                        shared
                    };
                    let c = info.get(k1, j1).sqrt() * var * info.get(k2, j2).sqrt();
                    let (a, b) = (pos(k1, j1), pos(k2, j2));
                    cov[a * dim + b] = c;
                    cov[b * dim + a] = c;
                }
            }
        }
    }
    for i in 0..dim {
        cov[i * dim + i] = 1.0;
    }
    Ok(ZDistribution { k, j, mean, cov })
}
