//! Constant-curvature model spaces and the geodesic ball carried by a bridge profile.
//!
//! The conformal metric U^{4/(n−2)}|dx|² of a profile is isometric to a
//! geodesic ball in the round sphere or in hyperbolic space, scaled by α.
//! Instead of writing the ambient rotation or Lorentz boost explicitly, all
//! quantities are computed from rotation-invariant scalars: geodesic
//! distances in the stereographic chart y = x − t e₁.

use serde::{Deserialize, Serialize};

use crate::error::{BridgeError, Result};
use crate::profile::BridgeProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Spherical,
    Hyperbolic,
}

impl Branch {
    pub fn eta(self) -> i32 {
        match self {
            Branch::Spherical => 1,
            Branch::Hyperbolic => -1,
        }
    }

    pub fn sign(self) -> f64 {
        self.eta() as f64
    }
}

impl std::fmt::Display for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Branch::Spherical => "spherical",
            Branch::Hyperbolic => "hyperbolic",
        })
    }
}

impl std::str::FromStr for Branch {
    type Err = BridgeError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "spherical" | "sphere" | "s" => Ok(Branch::Spherical),
            "hyperbolic" | "h" => Ok(Branch::Hyperbolic),
            other => Err(BridgeError::Domain(format!("unknown branch '{other}'"))),
        }
    }
}

fn check_kappa(kappa: f64) -> Result<()> {
    if kappa == 0.0 || !kappa.is_finite() {
        return Err(BridgeError::Domain(format!(
            "curvature must be nonzero and finite, got {kappa}"
        )));
    }
    Ok(())
}

/// sin(√κ r)/√κ for κ > 0 and sinh(√−κ r)/√−κ for κ < 0.
pub fn s_kappa(kappa: f64, r: f64) -> Result<f64> {
    check_kappa(kappa)?;
    let k = kappa.abs().sqrt();
    Ok(if kappa > 0.0 {
        (k * r).sin() / k
    } else {
        (k * r).sinh() / k
    })
}

/// r-derivative of [`s_kappa`].
pub fn s_kappa_prime(kappa: f64, r: f64) -> Result<f64> {
    check_kappa(kappa)?;
    let k = kappa.abs().sqrt();
    Ok(if kappa > 0.0 {
        (k * r).cos()
    } else {
        (k * r).cosh()
    })
}

const SERIES_SWITCH: f64 = 1e-2;

/// s′/s − 1/r, without cancellation near r = 0.
pub fn log_derivative_correction(kappa: f64, r: f64) -> f64 {
    let z = kappa.abs().sqrt() * r;
    if z < SERIES_SWITCH {
        let k2 = kappa * kappa;
        let r2 = r * r;
        -kappa * r / 3.0 - k2 * r * r2 / 45.0 - 2.0 * k2 * kappa * r * r2 * r2 / 945.0
            - k2 * k2 * r * r2 * r2 * r2 / 4725.0
    } else {
        let k = kappa.abs().sqrt();
        let ratio = if kappa > 0.0 {
            k / (k * r).tan()
        } else {
            k / (k * r).tanh()
        };
        ratio - 1.0 / r
    }
}

/// 1/s² − 1/r², without cancellation near r = 0.
pub fn inverse_square_correction(kappa: f64, r: f64) -> f64 {
    let z = kappa.abs().sqrt() * r;
    if z < SERIES_SWITCH {
        let r2 = r * r;
        kappa / 3.0 + kappa * kappa * r2 / 15.0 + 2.0 * kappa.powi(3) * r2 * r2 / 189.0
            + kappa.powi(4) * r2 * r2 * r2 / 675.0
    } else {
        let k = kappa.abs().sqrt();
        let s = if kappa > 0.0 {
            (k * r).sin() / k
        } else {
            (k * r).sinh() / k
        };
        1.0 / (s * s) - 1.0 / (r * r)
    }
}

/// A point of Sⁿ ⊂ ℝⁿ⁺¹ or of the upper sheet of the hyperboloid Hⁿ ⊂ ℝⁿ,¹.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelPoint {
    pub coords: Vec<f64>,
}

impl ModelPoint {
    pub fn dim(&self) -> usize {
        self.coords.len() - 1
    }

    /// Residual of the defining quadratic constraint.
    pub fn constraint_residual(&self, branch: Branch) -> f64 {
        let (head, last) = self.coords.split_at(self.coords.len() - 1);
        let h: f64 = head.iter().map(|v| v * v).sum();
        match branch {
            Branch::Spherical => h + last[0] * last[0] - 1.0,
            Branch::Hyperbolic => h - last[0] * last[0] + 1.0,
        }
    }

    pub fn validate(&self, branch: Branch) -> Result<()> {
        let res = self.constraint_residual(branch);
        let last = *self.coords.last().unwrap_or(&0.0);
        if res.abs() > 1e-12 * (1.0 + last * last) || (branch == Branch::Hyperbolic && last < 1.0) {
            return Err(BridgeError::Geometry(format!(
                "point off the {branch} model (residual {res:e})"
            )));
        }
        Ok(())
    }

    /// ⟨p, q⟩ (Euclidean) on the sphere, ⟨p, q⟩ (Minkowski, signature + … + −) on the hyperboloid.
    pub fn inner(&self, other: &ModelPoint, branch: Branch) -> f64 {
        ambient_inner(branch, &self.coords, &other.coords)
    }

    /// The pole that the point at infinity of the chart maps to.
    ///
    /// This is the north pole of Sⁿ and the vertex o = eₙ₊₁ of Hⁿ, so the
    /// coordinates do not depend on the branch.
    pub fn pole(n: usize) -> ModelPoint {
        let mut coords = vec![0.0; n + 1];
        coords[n] = 1.0;
        ModelPoint { coords }
    }
}

pub(crate) fn ambient_inner(branch: Branch, a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() - 1;
    let head: f64 = a[..n].iter().zip(&b[..n]).map(|(x, y)| x * y).sum();
    match branch {
        Branch::Spherical => head + a[n] * b[n],
        Branch::Hyperbolic => head - a[n] * b[n],
    }
}

/// Inverse stereographic projection from the north pole (sphere) or from
/// the vertex of the lower sheet (hyperboloid).
pub fn stereo_inverse(branch: Branch, y: &[f64]) -> Result<ModelPoint> {
    let n = y.len();
    let r2: f64 = y.iter().map(|v| v * v).sum();
    let mut coords = vec![0.0; n + 1];
    match branch {
        Branch::Spherical => {
            let den = 1.0 + r2;
            for i in 0..n {
                coords[i] = 2.0 * y[i] / den;
            }
            coords[n] = (r2 - 1.0) / den;
        }
        Branch::Hyperbolic => {
            // |y|² − 1 = (|y₁| − 1)(|y₁| + 1) + |y′|², exact near the unit sphere on the axis.
            let y0 = y[0].abs();
            let den = (y0 - 1.0) * (y0 + 1.0) + y[1..].iter().map(|v| v * v).sum::<f64>();
            if den <= 0.0 {
                return Err(BridgeError::Domain(format!(
                    "hyperbolic chart needs |y| > 1, got |y|² = {r2}"
                )));
            }
            for i in 0..n {
                coords[i] = 2.0 * y[i] / den;
            }
            coords[n] = (r2 + 1.0) / den;
        }
    }
    Ok(ModelPoint { coords })
}

/// Stereographic projection, the inverse of [`stereo_inverse`].
pub fn stereo(branch: Branch, p: &ModelPoint) -> Vec<f64> {
    let n = p.dim();
    let den = match branch {
        Branch::Spherical => 1.0 - p.coords[n],
        Branch::Hyperbolic => p.coords[n] - 1.0,
    };
    p.coords[..n].iter().map(|v| v / den).collect()
}

/// Density of the pulled-back model metric with respect to |dy|².
pub fn conformal_factor(branch: Branch, y: &[f64]) -> Result<f64> {
    let r2: f64 = y.iter().map(|v| v * v).sum();
    match branch {
        Branch::Spherical => Ok(4.0 / ((1.0 + r2) * (1.0 + r2))),
        Branch::Hyperbolic => {
            if r2 <= 1.0 {
                return Err(BridgeError::Domain("hyperbolic chart needs |y| > 1".into()));
            }
            Ok(4.0 / ((r2 - 1.0) * (r2 - 1.0)))
        }
    }
}

/// Geodesic distance in the model scaled by α (metric α·g₁).
pub fn geodesic_distance(branch: Branch, alpha: f64, p: &ModelPoint, q: &ModelPoint) -> Result<f64> {
    if p.coords.len() != q.coords.len() {
        return Err(BridgeError::Geometry("points of different dimension".into()));
    }
    let ip = p.inner(q, branch);
    let diff: Vec<f64> = p.coords.iter().zip(&q.coords).map(|(a, b)| a - b).collect();
    let d2 = ambient_inner(branch, &diff, &diff);
    let unit = match branch {
        Branch::Spherical => {
            if !(-1.0 - 1e-10..=1.0 + 1e-10).contains(&ip) {
                return Err(BridgeError::Geometry(format!("p·q = {ip} outside [-1, 1]")));
            }
            let sum: Vec<f64> = p.coords.iter().zip(&q.coords).map(|(a, b)| a + b).collect();
            let s2: f64 = sum.iter().map(|v| v * v).sum();
            2.0 * d2.max(0.0).sqrt().atan2(s2.sqrt())
        }
        Branch::Hyperbolic => {
            let n = p.dim();
            let magnitude = (p.coords[n] * q.coords[n]).abs().max(1.0);
            if -ip < 1.0 - 1e-10 * magnitude {
                return Err(BridgeError::Geometry(format!("-<p,q> = {} below 1", -ip)));
            }
            // |p − q|²_M = 2(cosh d − 1) = 4 sinh²(d/2)
            2.0 * (0.5 * d2.max(0.0).sqrt()).asinh()
        }
    };
    Ok(alpha.sqrt() * unit)
}

/// The reduced Robin domain: a geodesic ball of radius R in the model of
/// curvature κ = η/α, with Robin coefficient β.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBall {
    pub n: usize,
    pub branch: Branch,
    pub alpha: f64,
    pub kappa: f64,
    pub radius: f64,
    pub beta: f64,
    /// Shift of the generating profile; fixes the stereographic chart y = x − t e₁.
    pub t: f64,
    /// The half-space point (x₁, 0) that maps to the ball centre.
    pub center_x1: f64,
    /// Ball centre in ambient coordinates of the unit model.
    pub center: ModelPoint,
    /// Unit tangent at the centre pointing along the image of the x₁ axis; θ₁ is measured from it.
    pub axis: Vec<f64>,
}

/// Position and (r, θ)-derivatives of a point of the zonal half-plane
/// {(x₁, ρ)} of the half-space, as a function of model polar coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChartPoint {
    pub x: [f64; 2],
    pub dx_dr: [f64; 2],
    pub dx_dtheta: [f64; 2],
}

impl ModelBall {
    pub fn s(&self, r: f64) -> f64 {
        s_kappa(self.kappa, r).expect("ModelBall has nonzero curvature")
    }

    pub fn s_prime(&self, r: f64) -> f64 {
        s_kappa_prime(self.kappa, r).expect("ModelBall has nonzero curvature")
    }

    /// s′_κ(R)/s_κ(R) − β; zero when s_κ satisfies the Robin condition.
    pub fn robin_residual(&self) -> f64 {
        self.s_prime(self.radius) / self.s(self.radius) - self.beta
    }

    /// ∫₀^R s_κ^{n−1} dr in closed form.
    pub fn radial_volume(&self) -> f64 {
        let k = self.kappa.abs().sqrt();
        let x = k * self.radius;
        let m = self.n - 1;
        // ∫₀^x sin^j = (−sin^{j−1} cos + (j−1) I_{j−2})/j, and sinh^j with the signs flipped.
        let (sn, cs, sgn) = if self.kappa > 0.0 {
            (x.sin(), x.cos(), 1.0)
        } else {
            (x.sinh(), x.cosh(), -1.0)
        };
        let mut i_even = x;
        let mut i_odd = sgn * (1.0 - cs);
        for j in 2..=m {
            let jf = j as f64;
            let prev = if j % 2 == 0 { i_even } else { i_odd };
            let cur = (-sgn * sn.powi(j as i32 - 1) * cs + sgn * (jf - 1.0) * prev) / jf;
            if j % 2 == 0 {
                i_even = cur;
            } else {
                i_odd = cur;
            }
        }
        let im = if m % 2 == 0 { i_even } else { i_odd };
        im / k.powi(m as i32 + 1)
    }

    /// The half-space point with model polar coordinates (r, θ) in the zonal
    /// plane spanned by the axis and e₂, together with its derivatives.
    pub fn chart_point(&self, r: f64, theta: f64) -> ChartPoint {
        let n = self.n;
        let sa = self.alpha.sqrt();
        let r1 = r / sa;
        let (c, s, dc, ds) = match self.branch {
            Branch::Spherical => (r1.cos(), r1.sin(), -r1.sin(), r1.cos()),
            Branch::Hyperbolic => (r1.cosh(), r1.sinh(), r1.sinh(), r1.cosh()),
        };
        let (ct, st) = (theta.cos(), theta.sin());
        let p = &self.center.coords;
        let w = &self.axis;
        // Only ambient coordinates 1, 2 and n+1 are nonzero in the zonal plane.
        let coord = |i: usize, a: f64, b: f64, e2: f64| a * p[i] + b * w[i] + if i == 1 { e2 } else { 0.0 };
        let xi = [
            coord(0, c, s * ct, s * st),
            coord(1, c, s * ct, s * st),
            coord(n, c, s * ct, s * st),
        ];
        let dxi_dr = [
            coord(0, dc, ds * ct, ds * st) / sa,
            coord(1, dc, ds * ct, ds * st) / sa,
            coord(n, dc, ds * ct, ds * st) / sa,
        ];
        let dxi_dt = [
            coord(0, 0.0, -s * st, s * ct),
            coord(1, 0.0, -s * st, s * ct),
            coord(n, 0.0, -s * st, s * ct),
        ];
        let (den, dsign) = match self.branch {
            Branch::Spherical => (1.0 - xi[2], -1.0),
            Branch::Hyperbolic => (xi[2] - 1.0, 1.0),
        };
        let y = [xi[0] / den, xi[1] / den];
        let d_r = dsign * dxi_dr[2];
        let d_t = dsign * dxi_dt[2];
        ChartPoint {
            x: [y[0] + self.t, y[1]],
            dx_dr: [(dxi_dr[0] - y[0] * d_r) / den, (dxi_dr[1] - y[1] * d_r) / den],
            dx_dtheta: [(dxi_dt[0] - y[0] * d_t) / den, (dxi_dt[1] - y[1] * d_t) / den],
        }
    }

    /// Model polar coordinates of a half-space point: geodesic radius r and
    /// the unit direction (θ₁, …, θₙ) in the frame (axis, e₂, …, eₙ).
    ///
    /// The angle comes from the law of cosines in the triangle formed with
    /// the boundary point x = 0, which stays well conditioned even when the
    /// ambient hyperboloid coordinates are huge.
    pub fn polar(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let n = self.n;
        let mut xc = vec![0.0; n];
        xc[0] = self.center_x1;
        let origin = vec![0.0; n];
        let r1 = chart_distance(self.branch, 1.0, self.t, x, Some(&xc))?;
        let d_a = chart_distance(self.branch, 1.0, self.t, x, Some(&origin))?;
        let big_r = self.radius / self.alpha.sqrt();
        let cos_a = match self.branch {
            Branch::Spherical => (d_a.cos() - r1.cos() * big_r.cos()) / (r1.sin() * big_r.sin()),
            Branch::Hyperbolic => (r1.cosh() * big_r.cosh() - d_a.cosh()) / (r1.sinh() * big_r.sinh()),
        };
        // The axis points from the centre towards the image of ∞, opposite to x = 0.
        let c1 = if r1 > 0.0 { (-cos_a).clamp(-1.0, 1.0) } else { 1.0 };
        let sin1 = (1.0 - c1 * c1).max(0.0).sqrt();
        let rho: f64 = x[1..].iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut theta = vec![0.0; n];
        theta[0] = c1;
        if rho > 0.0 {
            for i in 1..n {
                theta[i] = sin1 * x[i] / rho;
            }
        }
        Ok((self.alpha.sqrt() * r1, theta))
    }
}

/// |y|² − 1 for y = x − t e₁ with t < −1, free of cancellation near ∂ℍⁿ₊.
fn hyperbolic_base(t: f64, x: &[f64]) -> f64 {
    let delta = -1.0 - t;
    (x[0] + delta) * (x[0] + delta + 2.0) + x[1..].iter().map(|v| v * v).sum::<f64>()
}

/// Geodesic distance between two half-space points (`None` is the point at
/// infinity) in the model metric of a profile with shift t, scaled by α.
///
/// On the hyperbolic branch this uses sinh(d/2) = |y − y′| / √((|y|²−1)(|y′|²−1)),
/// which avoids the near-null ambient coordinates of points close to ∂B.
pub fn chart_distance(branch: Branch, alpha: f64, t: f64, x: &[f64], xp: Option<&[f64]>) -> Result<f64> {
    match branch {
        Branch::Spherical => {
            let p = chart_image(branch, t, x)?;
            let q = match xp {
                Some(v) => chart_image(branch, t, v)?,
                None => ModelPoint::pole(x.len()),
            };
            geodesic_distance(branch, alpha, &p, &q)
        }
        Branch::Hyperbolic => {
            if !(t < -1.0) {
                return Err(BridgeError::Domain(format!("hyperbolic chart needs t < −1, got {t}")));
            }
            let b = hyperbolic_base(t, x);
            if !(b > 0.0) {
                return Err(BridgeError::Domain("point outside the hyperbolic chart".into()));
            }
            let half = match xp {
                None => 1.0 / b.sqrt(),
                Some(v) => {
                    let bp = hyperbolic_base(t, v);
                    if !(bp > 0.0) {
                        return Err(BridgeError::Domain("point outside the hyperbolic chart".into()));
                    }
                    let d2: f64 = x.iter().zip(v).map(|(a, c)| (a - c) * (a - c)).sum();
                    (d2 / (b * bp)).sqrt()
                }
            };
            Ok(alpha.sqrt() * 2.0 * half.asinh())
        }
    }
}

fn chart_image(branch: Branch, t: f64, x: &[f64]) -> Result<ModelPoint> {
    let mut y = x.to_vec();
    y[0] -= t;
    stereo_inverse(branch, &y)
}

/// Locate the model ball of a profile and its Robin coefficient.
pub fn model_ball_from_profile(profile: &BridgeProfile) -> Result<ModelBall> {
    let n = profile.n;
    let branch = profile.branch;
    let t = profile.t;
    let alpha = profile.c.powf(4.0 / (n as f64 - 2.0)) / 4.0;
    let kappa = branch.sign() / alpha;
    let origin = vec![0.0; n];
    let on_axis = |c: f64| {
        let mut x = vec![0.0; n];
        x[0] = c;
        x
    };

    // The x₁ axis maps onto a diameter of the ball ending at the images of 0 and ∞;
    // the centre is the axis point equidistant from both.
    let gap = |c: f64| -> Result<f64> {
        let x = on_axis(c);
        Ok(chart_distance(branch, 1.0, t, &x, Some(&origin))? - chart_distance(branch, 1.0, t, &x, None)?)
    };
    let (mut lo, mut hi) = (-40.0_f64, 40.0_f64);
    let (glo, ghi) = (gap(lo.exp())?, gap(hi.exp())?);
    if !(glo < 0.0 && ghi > 0.0) {
        return Err(BridgeError::Isometry(format!(
            "ball centre not bracketed on the axis (gaps {glo:e}, {ghi:e})"
        )));
    }
    while hi - lo > 1e-15 * (1.0 + lo.abs().max(hi.abs())) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if gap(mid.exp())? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let center_x1 = (0.5 * (lo + hi)).exp();
    let xc = on_axis(center_x1);
    let center = chart_image(branch, t, &xc)?;
    center.validate(branch)?;

    let radius = chart_distance(branch, alpha, t, &xc, Some(&origin))?;
    let r_inf = chart_distance(branch, alpha, t, &xc, None)?;
    let mut e2 = vec![0.0; n];
    e2[1] = 1.0;
    let r_e2 = chart_distance(branch, alpha, t, &xc, Some(&e2))?;
    for (label, r) in [("infinity", r_inf), ("e2", r_e2)] {
        let spread = (r - radius).abs() / radius;
        if spread > 1e-8 {
            return Err(BridgeError::Isometry(format!(
                "boundary point {label} gives radius {r}, expected {radius} (spread {spread:e})"
            )));
        }
    }
    if branch == Branch::Spherical && !(radius < std::f64::consts::PI / kappa.sqrt()) {
        return Err(BridgeError::Isometry(format!(
            "spherical ball radius {radius} exceeds the injectivity radius"
        )));
    }

    let p = &center.coords;
    let mut axis = vec![0.0; n + 1];
    match branch {
        Branch::Spherical => {
            axis[0] = -p[n];
            axis[n] = p[0];
        }
        Branch::Hyperbolic => {
            axis[0] = -p[n];
            axis[n] = -p[0];
        }
    }

    let ex = crate::profile::Exponents::new(n);
    let beta = -(ex.two_sharp - 2.0) * profile.sigma;
    let ball = ModelBall {
        n,
        branch,
        alpha,
        kappa,
        radius,
        beta,
        t,
        center_x1,
        center,
        axis,
    };
    let robin = ball.robin_residual();
    if robin.abs() > 1e-8 * beta.abs().max(1.0) {
        return Err(BridgeError::Isometry(format!(
            "Robin coefficient {beta} does not match s'/s(R) (residual {robin:e})"
        )));
    }
    Ok(ball)
}
