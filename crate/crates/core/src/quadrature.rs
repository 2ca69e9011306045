//! Gauss-Hermite quadrature for `e^{-t^2}` weighted integrals, rescaled to the
//! transverse scale of a Hermite-Gauss basis.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Gauss-Hermite rule of a given order.
///
/// Nodes and weights are stored for the unit weight `e^{-t^2}`; the weights
/// kept here already carry the factor `e^{t^2}` so that the rule integrates a
/// plain function `f(t)` whose decay is Gaussian.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    order: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    plain_weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn gauss_hermite(order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::Numerical("quadrature order must be positive".into()));
        }
        let (nodes, weights) = gauss_hermite_newton(order)?;
        let plain_weights = nodes
            .iter()
            .zip(&weights)
            .map(|(t, w)| w * (t * t).exp())
            .collect();
        Ok(Self {
            order,
            nodes,
            weights,
            plain_weights,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Nodes for the weight `e^{-t^2}`, ascending.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Weights for the weight `e^{-t^2}`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Nodes and weights for `int f(x) dx` when `f` decays like
    /// `e^{-(x/scale)^2}`: `x_i = scale t_i`, `W_i = scale w_i e^{t_i^2}`.
    pub fn scaled(&self, scale: f64) -> (Vec<f64>, Vec<f64>) {
        let x = self.nodes.iter().map(|t| scale * t).collect();
        let w = self.plain_weights.iter().map(|w| scale * w).collect();
        (x, w)
    }

    /// Smallest order allowed for decomposing onto a basis truncated at `n_max`.
    pub fn policy_order(n_max: usize) -> usize {
        2 * n_max + 16
    }
}

/// Newton iteration on the orthonormal Hermite recurrence with the usual
/// asymptotic starting guesses for the largest roots.
fn gauss_hermite_newton(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    const EPS: f64 = 1e-15;
    const MAX_ITER: usize = 100;
    let pim4 = PI.powf(-0.25);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let half = n.div_ceil(2);
    let nf = n as f64;
    let mut z = 0.0_f64;
    for i in 0..half {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        let mut converged = false;
        for _ in 0..MAX_ITER {
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= EPS * z.abs().max(1.0) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Numerical(format!(
                "Gauss-Hermite root {i} of order {n} did not converge"
            )));
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    // fix the central node exactly for odd orders
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    // roots were produced largest first
    let mut pairs: Vec<(f64, f64)> = x.into_iter().zip(w).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(pairs.into_iter().unzip())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, SymmetricEigen};

    fn gamma_half_int(j: usize) -> f64 {
        // Gamma((j+1)/2) for even j
        let k = j / 2;
        let mut g = PI.sqrt();
        for i in 0..k {
            g *= i as f64 + 0.5;
        }
        g
    }

    #[test]
    fn moments_exact_to_degree_2q_minus_1() {
        for q in [1usize, 2, 5, 12, 40, 48] {
            let rule = QuadratureRule::gauss_hermite(q).unwrap();
            for j in 0..(2 * q).min(60) {
                let s: f64 = rule
                    .nodes()
                    .iter()
                    .zip(rule.weights())
                    .map(|(t, w)| w * t.powi(j as i32))
                    .sum();
                let exact = if j % 2 == 1 { 0.0 } else { gamma_half_int(j) };
                // odd moments cancel between +t and -t; scale by the absolute moment
                let tol = 1e-13 * gamma_half_int(j + j % 2).max(1.0);
                assert!((s - exact).abs() <= tol, "q={q} j={j} s={s} exact={exact}");
            }
        }
    }

    #[test]
    fn agrees_with_golub_welsch() {
        for q in [3usize, 10, 33] {
            let mut jac = DMatrix::<f64>::zeros(q, q);
            for k in 1..q {
                let b = (k as f64 / 2.0).sqrt();
                jac[(k, k - 1)] = b;
                jac[(k - 1, k)] = b;
            }
            let eig = SymmetricEigen::new(jac);
            let mut gw: Vec<(f64, f64)> = (0..q)
                .map(|i| {
                    let v0 = eig.eigenvectors[(0, i)];
                    (eig.eigenvalues[i], PI.sqrt() * v0 * v0)
                })
                .collect();
            gw.sort_by(|a, b| a.0.total_cmp(&b.0));
            let rule = QuadratureRule::gauss_hermite(q).unwrap();
            for (i, (t, w)) in gw.iter().enumerate() {
                assert!((rule.nodes()[i] - t).abs() < 1e-11, "q={q} i={i}");
                assert!((rule.weights()[i] - w).abs() <= 1e-9 * w + 1e-15, "q={q} i={i}");
            }
        }
    }

    #[test]
    fn scaled_rule_integrates_gaussian() {
        let rule = QuadratureRule::gauss_hermite(20).unwrap();
        let scale = 0.37;
        let (x, w) = rule.scaled(scale);
        let s: f64 = x
            .iter()
            .zip(&w)
            .map(|(x, w)| w * (-(x / scale).powi(2)).exp() * x * x)
            .sum();
        // int x^2 e^{-x^2/s^2} dx = s^3 sqrt(pi) / 2
        let exact = scale.powi(3) * PI.sqrt() / 2.0;
        assert!((s - exact).abs() < 1e-14);
    }

    #[test]
    fn zero_order_rejected() {
        assert!(QuadratureRule::gauss_hermite(0).is_err());
    }
}
