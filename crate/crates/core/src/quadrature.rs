//! One-dimensional quadrature on finite intervals and half-lines.
//!
//! The default rule is double-exponential: tanh-sinh on `[a, b]` and exp-sinh
//! on `[a, ∞)`. Both refine by halving the step until successive estimates
//! agree to `tol`. A fixed Gauss-Legendre rule is available as an
//! alternative and is also what the finite-element and model-ball code use
//! for element integrals.

use std::collections::HashMap;
use std::f64::consts::FRAC_PI_2;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{BridgeError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    TanhSinh,
    GaussLegendre,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// Upper bound on abscissae per integral (double-exponential) or the rule size (Gauss-Legendre).
    pub node_count: usize,
    pub scheme: Scheme,
    /// Half-width of the window in the double-exponential variable.
    pub tail_cutoff: f64,
    pub tol: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            node_count: 1024,
            scheme: Scheme::TanhSinh,
            tail_cutoff: 4.5,
            tol: 1e-14,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.node_count < 16 {
            return Err(BridgeError::Domain(format!(
                "quadrature node_count {} is below 16",
                self.node_count
            )));
        }
        if !(self.tol >= 1e-14) {
            return Err(BridgeError::Domain(format!(
                "quadrature tol {:e} is below 1e-14",
                self.tol
            )));
        }
        if !(self.tail_cutoff > 0.0 && self.tail_cutoff.is_finite()) {
            return Err(BridgeError::Domain("tail_cutoff must be positive".into()));
        }
        Ok(())
    }

    /// Integrate `f` over `[a, b]`; `b` may be `f64::INFINITY`.
    ///
    /// `scale` is the characteristic length of the integrand near `a` and is
    /// only used on half-lines.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64, scale: f64) -> Result<f64> {
        self.validate()?;
        if !(a.is_finite()) || b.is_nan() || b < a {
            return Err(BridgeError::Integral(format!("bad interval [{a}, {b}]")));
        }
        if b == a {
            return Ok(0.0);
        }
        let value = match (self.scheme, b.is_finite()) {
            (Scheme::TanhSinh, true) => self.tanh_sinh(&f, a, b)?,
            (Scheme::TanhSinh, false) => self.exp_sinh(&f, a, scale)?,
            (Scheme::GaussLegendre, true) => {
                let rule = gauss_legendre(self.node_count);
                let (c, d) = (0.5 * (a + b), 0.5 * (b - a));
                d * rule.sum(|u| f(c + d * u))
            }
            (Scheme::GaussLegendre, false) => {
                // x = a + w (1 + u) / (1 - u)
                let rule = gauss_legendre(self.node_count);
                let w = scale;
                rule.sum(|u| {
                    let den = 1.0 - u;
                    2.0 * w / (den * den) * f(a + w * (1.0 + u) / den)
                })
            }
        };
        if !value.is_finite() {
            return Err(BridgeError::Integral(format!(
                "non-finite quadrature value on [{a}, {b}]"
            )));
        }
        Ok(value)
    }

    fn refine<G: Fn(f64) -> f64>(&self, g: &G) -> Result<f64> {
        // g is the transformed integrand in the double-exponential variable.
        let tmax = self.tail_cutoff;
        let mut h = 0.5_f64;
        let mut sum = g(0.0);
        let mut k = 1;
        while (k as f64) * h <= tmax {
            let t = k as f64 * h;
            sum += g(t) + g(-t);
            k += 1;
        }
        let mut estimate = h * sum;
        let mut nodes = 2 * k - 1;
        let mut level = 0;
        loop {
            h *= 0.5;
            let mut added = 0.0;
            let mut j = 1;
            while (j as f64) * h <= tmax {
                let t = j as f64 * h;
                added += g(t) + g(-t);
                nodes += 2;
                j += 2;
            }
            sum += added;
            let next = h * sum;
            level += 1;
            let diff = (next - estimate).abs();
            estimate = next;
            if level >= 3 && diff <= self.tol * estimate.abs().max(f64::MIN_POSITIVE) {
                return Ok(estimate);
            }
            if nodes * 2 > self.node_count {
                if diff <= 1e-6 * estimate.abs().max(1e-300) {
                    return Ok(estimate);
                }
                return Err(BridgeError::Integral(format!(
                    "double-exponential rule did not converge: last change {diff:e}, value {estimate:e}"
                )));
            }
        }
    }

    fn tanh_sinh<F: Fn(f64) -> f64>(&self, f: &F, a: f64, b: f64) -> Result<f64> {
        let half = 0.5 * (b - a);
        let g = |t: f64| {
            let u = FRAC_PI_2 * t.sinh();
            let ch = u.cosh();
            let w = FRAC_PI_2 * t.cosh() / (ch * ch);
            // Distance to the nearer endpoint without cancellation.
            let e = (-2.0 * u.abs()).exp();
            let dist = half * 2.0 * e / (1.0 + e);
            let x = if t < 0.0 { a + dist } else { b - dist };
            if w == 0.0 || dist == 0.0 {
                0.0
            } else {
                half * w * f(x)
            }
        };
        self.refine(&g)
    }

    fn exp_sinh<F: Fn(f64) -> f64>(&self, f: &F, a: f64, scale: f64) -> Result<f64> {
        let w = if scale > 0.0 && scale.is_finite() { scale } else { 1.0 };
        let g = |t: f64| {
            let e = (FRAC_PI_2 * t.sinh()).exp();
            let jac = w * FRAC_PI_2 * t.cosh() * e;
            if e == 0.0 || !jac.is_finite() {
                0.0
            } else {
                let v = f(a + w * e);
                if v == 0.0 {
                    0.0
                } else {
                    jac * v
                }
            }
        };
        self.refine(&g)
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    pub fn sum<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let (c, d) = (0.5 * (a + b), 0.5 * (b - a));
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (c + d * x, d * w))
    }
}

fn build_gauss_legendre(n: usize) -> GaussRule {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    GaussRule { nodes, weights }
}

/// Shared, cached Gauss-Legendre rule with `n` points.
pub fn gauss_legendre(n: usize) -> Arc<GaussRule> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussRule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    guard
        .entry(n)
        .or_insert_with(|| Arc::new(build_gauss_legendre(n)))
        .clone()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let rule = gauss_legendre(8);
        let v = rule.sum(|x| x.powi(14) + 3.0 * x.powi(3));
        assert!((v - 2.0 / 15.0).abs() < 1e-15);
        let total: f64 = rule.weights.iter().sum();
        // Each weight carries a few ulps from the 1 − x² factor.
        assert!((total - 2.0).abs() < 4e-15, "{total:e}");
    }

    #[test]
    fn double_exponential_rules() {
        let q = QuadratureSpec::default();
        let v = q.integrate(|x| (1.0 - x * x).sqrt(), -1.0, 1.0, 1.0).unwrap();
        assert!((v - std::f64::consts::FRAC_PI_2).abs() < 1e-14);
        let v = q.integrate(|x| 1.0 / (1.0 + x * x), 0.0, f64::INFINITY, 1.0).unwrap();
        assert!((v - std::f64::consts::FRAC_PI_2).abs() < 1e-14);
        let v = q.integrate(|x| (-x).exp(), 2.0, f64::INFINITY, 1.0).unwrap();
        assert!((v - (-2.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn gauss_legendre_scheme_on_half_line() {
        let q = QuadratureSpec {
            scheme: Scheme::GaussLegendre,
            node_count: 400,
            ..QuadratureSpec::default()
        };
        let v = q.integrate(|x| 1.0 / (1.0 + x * x).powi(2), 0.0, f64::INFINITY, 1.0).unwrap();
        assert!((v - std::f64::consts::PI / 4.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_settings_are_rejected() {
        let bad = QuadratureSpec {
            node_count: 8,
            ..QuadratureSpec::default()
        };
        assert!(bad.validate().is_err());
        let bad = QuadratureSpec {
            tol: 1e-16,
            ..QuadratureSpec::default()
        };
        assert!(bad.validate().is_err());
    }
}
