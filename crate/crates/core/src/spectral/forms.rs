//! Radial functions on [0, R] and the two sector quadratic forms.

use serde::{Deserialize, Serialize};

use crate::error::{BridgeError, Result};
use crate::geometry::ModelBall;
use crate::profile::BridgeProfile;
use crate::quadrature::gauss_legendre;
use crate::special::harmonic_multiplicity;

/// Gauss points per grid interval; exact for the squared cubic pieces up to
/// the smooth weight.
const PANEL_POINTS: usize = 8;

/// One spherical-harmonic sector of degree ℓ on S^{n−1}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sector {
    pub ell: usize,
    pub angular_eigenvalue: f64,
    pub multiplicity: u64,
}

impl Sector {
    pub fn new(n: usize, ell: usize) -> Self {
        Self {
            ell,
            angular_eigenvalue: (ell * (ell + n - 2)) as f64,
            multiplicity: harmonic_multiplicity(n, ell),
        }
    }
}

/// A radial profile sampled with derivatives; evaluated by cubic Hermite
/// interpolation between nodes and by the regular power law r^ℓ below the
/// first node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialFunction {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub derivs: Vec<f64>,
    pub ell: usize,
}

impl RadialFunction {
    pub fn new(grid: Vec<f64>, values: Vec<f64>, derivs: Vec<f64>, ell: usize) -> Result<Self> {
        if grid.len() < 2 || values.len() != grid.len() || derivs.len() != grid.len() {
            return Err(BridgeError::Domain("radial function needs matching grid, values and derivatives".into()));
        }
        if !(grid[0] > 0.0) || grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(BridgeError::Domain("radial grid must be positive and strictly increasing".into()));
        }
        if values.iter().chain(&derivs).any(|v| !v.is_finite()) {
            return Err(BridgeError::Domain("radial function has non-finite samples".into()));
        }
        Ok(Self {
            grid,
            values,
            derivs,
            ell,
        })
    }

    /// Sample a closure returning (f, f′) on `grid`.
    pub fn from_fn<F: Fn(f64) -> (f64, f64)>(grid: Vec<f64>, ell: usize, f: F) -> Result<Self> {
        let (values, derivs) = grid.iter().map(|&r| f(r)).unzip();
        Self::new(grid, values, derivs, ell)
    }

    pub fn outer_radius(&self) -> f64 {
        *self.grid.last().expect("nonempty grid")
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * factor).collect(),
            derivs: self.derivs.iter().map(|v| v * factor).collect(),
            ell: self.ell,
        }
    }

    /// (f(r), f′(r)).
    pub fn eval(&self, r: f64) -> (f64, f64) {
        let g = &self.grid;
        let r0 = g[0];
        if r <= r0 {
            let (f0, d0) = (self.values[0], self.derivs[0]);
            return if self.ell == 0 {
                // h = 1 + a r² near the origin
                (f0 + 0.5 * d0 * (r * r / r0 - r0), d0 * r / r0)
            } else {
                let ell = self.ell as i32;
                let ratio = r.max(0.0) / r0;
                (f0 * ratio.powi(ell), self.ell as f64 * f0 * ratio.powi(ell - 1) / r0)
            };
        }
        let last = g.len() - 1;
        let i = match g.binary_search_by(|v| v.partial_cmp(&r).expect("finite grid")) {
            Ok(i) => return (self.values[i], self.derivs[i]),
            Err(i) => i.min(last),
        };
        let (a, b) = (g[i - 1], g[i]);
        let h = b - a;
        let s = ((r - a) / h).min(1.0 + 1e-12);
        let (f0, f1) = (self.values[i - 1], self.values[i]);
        let (d0, d1) = (self.derivs[i - 1] * h, self.derivs[i] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        let value = (2.0 * s3 - 3.0 * s2 + 1.0) * f0 + (s3 - 2.0 * s2 + s) * d0 + (-2.0 * s3 + 3.0 * s2) * f1
            + (s3 - s2) * d1;
        let deriv = ((6.0 * s2 - 6.0 * s) * f0 + (3.0 * s2 - 4.0 * s + 1.0) * d0 + (-6.0 * s2 + 6.0 * s) * f1
            + (3.0 * s2 - 2.0 * s) * d1)
            / h;
        (value, deriv)
    }

    /// ∫₀^{R} g(r, f, f′) dr with a Gauss rule on every grid interval and on [0, r₀].
    pub fn integrate<G: Fn(f64, f64, f64) -> f64>(&self, g: G) -> f64 {
        let rule = gauss_legendre(PANEL_POINTS);
        let mut total = 0.0;
        let mut a = 0.0;
        for &b in &self.grid {
            for (r, w) in rule.mapped(a, b) {
                let (f, fp) = self.eval(r);
                total += w * g(r, f, fp);
            }
            a = b;
        }
        total
    }

    /// Nodes and weights of the same composite rule.
    pub fn quadrature_nodes(&self) -> Vec<(f64, f64)> {
        let rule = gauss_legendre(PANEL_POINTS);
        let mut out = Vec::with_capacity(PANEL_POINTS * self.grid.len());
        let mut a = 0.0;
        for &b in &self.grid {
            out.extend(rule.mapped(a, b));
            a = b;
        }
        out
    }
}

fn check_support(ball: &ModelBall, f: &RadialFunction) -> Result<()> {
    let end = f.outer_radius();
    if (end - ball.radius).abs() > 1e-12 * ball.radius {
        return Err(BridgeError::Domain(format!(
            "radial function ends at {end}, the ball radius is {}",
            ball.radius
        )));
    }
    Ok(())
}

/// The three integrals every sector form is built from, with f(R)².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectorIntegrals {
    /// ∫ f′² s^{n−1}
    pub gradient: f64,
    /// ∫ f² s^{n−3}
    pub angular: f64,
    /// ∫ f² s^{n−1}
    pub mass: f64,
    /// s(R)^{n−1} f(R)²
    pub trace: f64,
}

pub fn sector_integrals(ball: &ModelBall, f: &RadialFunction) -> Result<SectorIntegrals> {
    check_support(ball, f)?;
    let n = ball.n as i32;
    let rule = gauss_legendre(PANEL_POINTS);
    let (mut gradient, mut angular, mut mass) = (0.0, 0.0, 0.0);
    let mut a = 0.0;
    for &b in &f.grid {
        for (r, w) in rule.mapped(a, b) {
            let (v, d) = f.eval(r);
            let s = ball.s(r);
            let wn3 = s.powi(n - 3);
            let wn1 = wn3 * s * s;
            gradient += w * d * d * wn1;
            angular += w * v * v * wn3;
            mass += w * v * v * wn1;
        }
        a = b;
    }
    let fr = *f.values.last().expect("nonempty");
    let trace = ball.s(ball.radius).powi(n - 1) * fr * fr;
    Ok(SectorIntegrals {
        gradient,
        angular,
        mass,
        trace,
    })
}

impl SectorIntegrals {
    pub fn q_form(&self, ball: &ModelBall, ell: usize) -> f64 {
        let l = Sector::new(ball.n, ell).angular_eigenvalue;
        self.gradient + l * self.angular - ball.n as f64 * ball.kappa * self.mass - ball.beta * self.trace
    }

    pub fn n_form(&self, ball: &ModelBall, lambda: f64, sigma: f64, ell: usize) -> f64 {
        let l = Sector::new(ball.n, ell).angular_eigenvalue;
        self.gradient + l * self.angular + lambda * self.mass - sigma * self.trace
    }
}

/// 𝒬_ℓ(f) = ∫(f′² + ℓ(ℓ+n−2)s⁻²f² − nκf²)s^{n−1} − β s(R)^{n−1}f(R)².
pub fn q_form_sector(ball: &ModelBall, ell: usize, f: &RadialFunction) -> Result<f64> {
    Ok(sector_integrals(ball, f)?.q_form(ball, ell))
}

/// The transported Dirichlet energy
/// N_ℓ(f) = ∫(f′² + ℓ(ℓ+n−2)s⁻²f²)s^{n−1} + λ∫f²s^{n−1} − σ s(R)^{n−1}f(R)².
pub fn n_form_sector(ball: &ModelBall, profile: &BridgeProfile, ell: usize, f: &RadialFunction) -> Result<f64> {
    let value = sector_integrals(ball, f)?.n_form(ball, profile.lambda, profile.sigma, ell);
    if !(value > 0.0) && f.max_abs() > 0.0 {
        return Err(BridgeError::Transport(format!(
            "transported norm {value:e} of a nonzero function in sector {ell} is not positive"
        )));
    }
    Ok(value)
}

/// Cosine-graded nodes R(1 − cos(πj/K))/2, j = 1..K, preceded by the shooting start r₀.
pub fn cosine_grid(radius: f64, intervals: usize, r0: f64) -> Vec<f64> {
    let mut g = Vec::with_capacity(intervals + 1);
    g.push(r0);
    for j in 1..=intervals {
        let r = 0.5 * radius * (1.0 - (std::f64::consts::PI * j as f64 / intervals as f64).cos());
        if r > r0 {
            g.push(r);
        }
    }
    *g.last_mut().expect("nonempty") = radius;
    g
}
