//! Gauss-Legendre and Gauss-Hermite rules of arbitrary order.

use std::f64::consts::PI;

/// A quadrature rule: nodes and weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Rule {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut deriv = 1.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            deriv = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let step = p1 / deriv;
            z -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = 2.0 / ((1.0 - z * z) * deriv * deriv);
        weights[n - 1 - i] = weights[i];
    }
    Rule { nodes, weights }
}

/// `n`-point Gauss-Hermite rule for the standard normal weight
/// `exp(-x^2 / 2) / sqrt(2 pi)`; weights sum to one.
pub fn gauss_hermite(n: usize) -> Rule {
    // physicists' rule via orthonormal recurrence, then rescaled
    let pim4 = PI.powf(-0.25);
    let nf = n as f64;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut z = 0.0;
    for i in 0..n.div_ceil(2) {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.855_75 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut deriv = 1.0;
        for _ in 0..200 {
            let (mut p1, mut p2) = (pim4, 0.0);
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            deriv = (2.0 * nf).sqrt() * p2;
            let step = p1 / deriv;
            z -= step;
            if step.abs() < 1e-14 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (deriv * deriv);
        w[n - 1 - i] = w[i];
    }
    let sqrt_pi = PI.sqrt();
    Rule {
        nodes: x.iter().rev().map(|v| v * std::f64::consts::SQRT_2).collect(),
        weights: w.iter().rev().map(|v| v / sqrt_pi).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn double_factorial(k: usize) -> f64 {
        (1..=k).rev().step_by(2).map(|v| v as f64).product()
    }

    #[test]
    fn legendre_integrates_polynomials_exactly() {
        for n in [1, 2, 5, 12, 31] {
            let r = gauss_legendre(n);
            for deg in 0..2 * n {
                let q: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn hermite_reproduces_normal_moments() {
        for n in [1, 2, 3, 8, 17, 40] {
            let r = gauss_hermite(n);
            assert!(r.nodes.windows(2).all(|w| w[0] < w[1]));
            for deg in 0..(2 * n).min(30) {
                let q: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { double_factorial(deg.saturating_sub(1)) };
                let scale = double_factorial(deg + deg % 2);
                assert!((q - exact).abs() < 1e-12 * scale.max(1.0), "n={n} deg={deg}: {q} vs {exact}");
            }
        }
    }
}
