//! Perturbation experiments on the constraint manifold A_T.
//!
//! Competitors are written as u = U·Ψ with Ψ a function on the model ball.
//! The ground-state transform turns the three quantities that matter into
//! ball integrals:
//!
//!   ∫ u^{2*} = ∫_B Ψ^{2*} dV,   ∫_∂ u^{2♯} = ∫_{∂B} Ψ^{2♯} dS,
//!   ‖∇u‖² = N(Ψ) = ∫_B |∇Ψ|² + λ ∫_B Ψ² − σ ∫_{∂B} Ψ².
//!
//! The orbit of U under dilations and tangential translations consists of
//! bubbles, so orbit points are evaluated in closed form as Ψ = gU/U. Test
//! perturbations are zonal about the θ₁ axis, which reduces every integral to
//! two-dimensional quadrature in (r, θ).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{BridgeError, Result};
use crate::geometry::{model_ball_from_profile, Branch, ChartPoint, ModelBall};
use crate::profile::{profile_eval, BridgeProfile, Bubble, Exponents};
use crate::quadrature::gauss_legendre;
use crate::report::Check;
use crate::spectral::forms::{cosine_grid, sector_integrals, RadialFunction};
use crate::spectral::{spectral_gap, SectorBottom};
use crate::special::{sphere_area, ZonalHarmonic};

const THETA_POINTS: usize = 48;
/// Quadrature noise in the deficit; values above −NOISE_FLOOR are admissible.
pub const NOISE_FLOOR: f64 = 1e-10;
/// A deficit below −DEFICIT_FLOOR contradicts minimality of U.
pub const DEFICIT_FLOOR: f64 = 1e-8;
pub const ORTHOGONALITY_TOLERANCE: f64 = 1e-7;
const MIN_JACOBIAN: f64 = 1e-6;
const CONSTRAINT_TOLERANCE: f64 = 1e-11;

pub const DEFAULT_EPS: [f64; 7] = [1e-1, 5e-2, 2e-2, 1e-2, 5e-3, 2e-3, 1e-3];

/// (a, z) acting by (g·u)(x₁, x′) = a^{(n−2)/2} u(a x₁, a(x′ − z)).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupElement {
    pub scale: f64,
    pub shift: Vec<f64>,
}

impl GroupElement {
    pub fn identity(n: usize) -> Self {
        Self {
            scale: 1.0,
            shift: vec![0.0; n - 1],
        }
    }

    pub fn new(scale: f64, shift: Vec<f64>) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) || shift.iter().any(|z| !z.is_finite()) {
            return Err(BridgeError::Domain(format!("invalid group element (scale {scale})")));
        }
        Ok(Self { scale, shift })
    }

    pub fn dilation(n: usize, scale: f64) -> Result<Self> {
        Self::new(scale, vec![0.0; n - 1])
    }

    /// The element g with act(g, u) = act(self, act(other, u)).
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            scale: self.scale * other.scale,
            shift: self.shift.iter().zip(&other.shift).map(|(z1, z2)| z1 + z2 / self.scale).collect(),
        }
    }

    /// The point (a x₁, a(x′ − z)) at which u is sampled.
    pub fn pull(&self, x: &[f64]) -> Vec<f64> {
        let mut y = Vec::with_capacity(x.len());
        y.push(self.scale * x[0]);
        y.extend(x[1..].iter().zip(&self.shift).map(|(xi, zi)| self.scale * (xi - zi)));
        y
    }
}

pub fn act<'a, F: Fn(&[f64]) -> f64 + 'a>(g: &'a GroupElement, u: F) -> impl Fn(&[f64]) -> f64 + 'a {
    move |x| {
        let m = 0.5 * (x.len() as f64 - 2.0);
        g.scale.powf(m) * u(&g.pull(x))
    }
}

/// The action on the bubble family, in closed form.
pub fn act_bubble(g: &GroupElement, b: &Bubble) -> Bubble {
    let a = g.scale;
    let m = 0.5 * (b.n as f64 - 2.0);
    Bubble {
        n: b.n,
        amplitude: b.amplitude * a.powf(-m),
        center: b.center / a,
        offset: b.offset / (a * a),
        shift: g.shift.iter().zip(&b.shift).map(|(z, zb)| z + zb / a).collect(),
    }
}

/// A zonal test direction φ = f(r)·Y_ℓ(θ₁) on the model ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub label: String,
    pub ell: usize,
    pub radial: RadialFunction,
    pub zonal_degree: usize,
    pub amplitude: f64,
    /// The direction is tangent to the orbit; sweeps then test δ = o(ε²) instead of the gap bound.
    pub tangent: bool,
}

impl Perturbation {
    pub fn new(label: impl Into<String>, radial: RadialFunction, amplitude: f64) -> Result<Self> {
        if !amplitude.is_finite() {
            return Err(BridgeError::Domain("perturbation amplitude must be finite".into()));
        }
        Ok(Self {
            label: label.into(),
            ell: radial.ell,
            zonal_degree: radial.ell,
            radial,
            amplitude,
            tangent: false,
        })
    }

    /// The eigenfunction of a computed sector bottom.
    pub fn from_bottom(bottom: &SectorBottom) -> Self {
        Self {
            label: format!("l{}-argmin", bottom.ell),
            ell: bottom.ell,
            zonal_degree: bottom.ell,
            radial: bottom.argmin.clone(),
            amplitude: 1.0,
            tangent: false,
        }
    }

    /// f = s_κ in sector 1: the lift is the dilation field Z₀ up to a factor.
    pub fn kernel(ball: &ModelBall) -> Result<Self> {
        let grid = cosine_grid(ball.radius, 256, 1e-6 * ball.radius);
        let radial = RadialFunction::from_fn(grid, 1, |r| (ball.s(r), ball.s_prime(r)))?;
        Ok(Self {
            tangent: true,
            ..Self::new("l1-kernel", radial, 1.0)?
        })
    }

    /// f = s_κ^ℓ (1 + c₁ b + c₂ b²) with b = (r/R)² and seeded coefficients in [−1, 1],
    /// scaled to unit transported norm.
    pub fn random(ball: &ModelBall, profile: &BridgeProfile, ell: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (c1, c2): (f64, f64) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let big_r = ball.radius;
        let l = ell as i32;
        let grid = cosine_grid(big_r, 128, 1e-6 * big_r);
        let radial = RadialFunction::from_fn(grid, ell, |r| {
            let (s, sp) = (ball.s(r), ball.s_prime(r));
            let b = (r / big_r).powi(2);
            let db = 2.0 * r / (big_r * big_r);
            let p = 1.0 + c1 * b + c2 * b * b;
            let dp = (c1 + 2.0 * c2 * b) * db;
            let sl = s.powi(l);
            let dsl = if ell == 0 { 0.0 } else { ell as f64 * s.powi(l - 1) * sp };
            (sl * p, dsl * p + sl * dp)
        })?;
        let norm = sector_integrals(ball, &radial)?.n_form(ball, profile.lambda, profile.sigma, ell);
        if !(norm > 0.0) {
            return Err(BridgeError::Transport(format!("random profile has transported norm {norm:e}")));
        }
        Self::new(format!("l{ell}-random-{seed:x}"), radial.scaled(1.0 / norm.sqrt()), 1.0)
    }
}

/// The half-space function ψ = U·(φ∘F) of a perturbation.
#[derive(Debug, Clone)]
pub struct Lift {
    pub profile: BridgeProfile,
    pub ball: ModelBall,
    pub radial: RadialFunction,
    harmonic: ZonalHarmonic,
}

pub fn lift(profile: &BridgeProfile, pert: &Perturbation) -> Result<Lift> {
    if pert.zonal_degree != pert.ell || pert.radial.ell != pert.ell {
        return Err(BridgeError::Domain("perturbation degree and radial regularity disagree".into()));
    }
    let ball = model_ball_from_profile(profile)?;
    if (pert.radial.outer_radius() - ball.radius).abs() > 1e-12 * ball.radius {
        return Err(BridgeError::Domain("perturbation is not supported on the model ball".into()));
    }
    Ok(Lift {
        profile: profile.clone(),
        harmonic: ZonalHarmonic::new(profile.n, pert.ell),
        radial: pert.radial.clone(),
        ball,
    })
}

/// Inverse of the 2×2 chart Jacobian: rows (∂r/∂x₁, ∂r/∂ρ) and (∂θ/∂x₁, ∂θ/∂ρ).
fn inverse_jacobian(c: &ChartPoint) -> [[f64; 2]; 2] {
    let (a, b, cc, d) = (c.dx_dr[0], c.dx_dtheta[0], c.dx_dr[1], c.dx_dtheta[1]);
    let det = a * d - b * cc;
    [[d / det, -b / det], [-cc / det, a / det]]
}

impl Lift {
    /// φ, ∂_r φ and ∂_θ φ at model polar coordinates (r, θ).
    pub fn model(&self, r: f64, theta: f64) -> [f64; 3] {
        let (f, fp) = self.radial.eval(r);
        let (y, yp) = self.harmonic.eval(theta);
        [f * y, fp * y, f * yp]
    }

    /// ψ(x) and ∇ψ(x) at a half-space point.
    pub fn eval(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let (r, dir) = self.ball.polar(x)?;
        let theta = dir[0].clamp(-1.0, 1.0).acos();
        let [phi, phi_r, phi_t] = self.model(r, theta);
        let (u, grad_u) = profile_eval(&self.profile, x);
        let inv = inverse_jacobian(&self.ball.chart_point(r, theta));
        let d_x1 = phi_r * inv[0][0] + phi_t * inv[1][0];
        let d_rho = phi_r * inv[0][1] + phi_t * inv[1][1];
        let rho: f64 = x[1..].iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut grad = Vec::with_capacity(x.len());
        grad.push(grad_u[0] * phi + u * d_x1);
        for (xi, gi) in x[1..].iter().zip(&grad_u[1..]) {
            let radial = if rho > 0.0 { d_rho * xi / rho } else { 0.0 };
            grad.push(gi * phi + u * radial);
        }
        Ok((u * phi, grad))
    }
}

/// A zonal function on the ball sampled at the lab's quadrature nodes:
/// (value, ∂_r, ∂_θ) in the bulk and the value on ∂B.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFunction {
    pub bulk: Vec<[f64; 3]>,
    pub boundary: Vec<f64>,
}

impl ModelFunction {
    pub fn sub(&self, other: &Self) -> Self {
        Self {
            bulk: self
                .bulk
                .iter()
                .zip(&other.bulk)
                .map(|(a, b)| [a[0] - b[0], a[1] - b[1], a[2] - b[2]])
                .collect(),
            boundary: self.boundary.iter().zip(&other.boundary).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            bulk: self.bulk.iter().map(|v| [c * v[0], c * v[1], c * v[2]]).collect(),
            boundary: self.boundary.iter().map(|v| c * v).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct BulkNode {
    weight: f64,
    s: f64,
    chart: ChartPoint,
    /// b = (r/R)² and ∂_r b.
    b: f64,
    b_r: f64,
    phi: [f64; 3],
}

#[derive(Debug, Clone, Copy)]
struct BoundaryNode {
    weight: f64,
    x: [f64; 2],
    phi: f64,
}

/// Orbit sample at one node: ρ − 1, ρ, ∂_τρ and ∇ₓ log ρ, with τ = log a.
struct OrbitSample {
    minus_one: f64,
    rho: f64,
    d_tau: f64,
    grad_log: [f64; 2],
}

/// Result of re-projecting U·(1 + εφ) onto A_T.
#[derive(Debug, Clone)]
pub struct Projection {
    pub eps: f64,
    /// Ψ = 1 + c_bulk + εφ + c_boundary·(r/R)².
    pub c_bulk: f64,
    pub c_boundary: f64,
    /// Largest relative constraint defect of 1 + εφ before correction.
    pub defect_before: f64,
    pub defect_after: f64,
    /// Transported norm of the correction c_bulk + c_boundary·(r/R)².
    pub correction_norm: f64,
    pub iterations: usize,
    /// Ψ − 1.
    pub function: ModelFunction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NearestPoint {
    pub element: GroupElement,
    pub distance: f64,
    /// |⟨u − gU, Z₀^g⟩| / (‖u − gU‖ ‖Z₀^g‖).
    pub orthogonality: f64,
    pub iterations: usize,
}

/// Quadrature and multipliers for perturbation experiments with one direction.
#[derive(Debug, Clone)]
pub struct Lab {
    pub profile: BridgeProfile,
    pub ball: ModelBall,
    pub perturbation: Perturbation,
    exponents: Exponents,
    bulk: Vec<BulkNode>,
    boundary: Vec<BoundaryNode>,
    volume: f64,
    area: f64,
}

impl Lab {
    pub fn new(profile: &BridgeProfile, pert: &Perturbation) -> Result<Self> {
        let lifted = lift(profile, pert)?;
        let ball = lifted.ball.clone();
        let n = profile.n as i32;
        let big_r = ball.radius;
        let sphere = sphere_area(profile.n - 2);
        let thetas: Vec<(f64, f64)> = gauss_legendre(THETA_POINTS)
            .mapped(0.0, std::f64::consts::PI)
            .map(|(th, w)| (th, w * sphere * th.sin().powi(n - 2)))
            .collect();
        let mut bulk = Vec::with_capacity(thetas.len() * 8 * pert.radial.grid.len());
        for (r, wr) in pert.radial.quadrature_nodes() {
            let s = ball.s(r);
            for &(th, wt) in &thetas {
                bulk.push(BulkNode {
                    weight: wr * wt * s.powi(n - 1),
                    s,
                    chart: ball.chart_point(r, th),
                    b: (r / big_r).powi(2),
                    b_r: 2.0 * r / (big_r * big_r),
                    phi: lifted.model(r, th),
                });
            }
        }
        let sr = ball.s(big_r).powi(n - 1);
        let boundary: Vec<BoundaryNode> = thetas
            .iter()
            .map(|&(th, wt)| BoundaryNode {
                weight: wt * sr,
                x: ball.chart_point(big_r, th).x,
                phi: lifted.model(big_r, th)[0],
            })
            .collect();
        let volume = bulk.iter().map(|q| q.weight).sum();
        let area = boundary.iter().map(|q| q.weight).sum();
        Ok(Self {
            profile: profile.clone(),
            ball,
            perturbation: pert.clone(),
            exponents: profile.exponents(),
            bulk,
            boundary,
            volume,
            area,
        })
    }

    /// Quadrature values of |B| and |∂B|; equal to 1 and T^{2♯} for an exact rule.
    pub fn measures(&self) -> (f64, f64) {
        (self.volume, self.area)
    }

    pub fn nodes(&self) -> (usize, usize) {
        (self.bulk.len(), self.boundary.len())
    }

    /// c_bulk + εφ + c_boundary·(r/R)².
    pub fn perturbed(&self, c_bulk: f64, eps: f64, c_boundary: f64) -> ModelFunction {
        ModelFunction {
            bulk: self
                .bulk
                .iter()
                .map(|q| {
                    [
                        c_bulk + eps * q.phi[0] + c_boundary * q.b,
                        eps * q.phi[1] + c_boundary * q.b_r,
                        eps * q.phi[2],
                    ]
                })
                .collect(),
            boundary: self.boundary.iter().map(|q| c_bulk + eps * q.phi + c_boundary).collect(),
        }
    }

    /// N(v) in the ball quadrature.
    pub fn n_form(&self, v: &ModelFunction) -> f64 {
        let (lambda, sigma) = (self.profile.lambda, self.profile.sigma);
        let bulk: f64 = self
            .bulk
            .iter()
            .zip(&v.bulk)
            .map(|(q, f)| q.weight * (f[1] * f[1] + (f[2] / q.s).powi(2) + lambda * f[0] * f[0]))
            .sum();
        let trace: f64 = self.boundary.iter().zip(&v.boundary).map(|(q, f)| q.weight * f * f).sum();
        bulk - sigma * trace
    }

    /// Relative constraint defects (∫Ψ^{2*} − |B|)/|B| and (∫_∂Ψ^{2♯} − |∂B|)/|∂B| of Ψ = 1 + v.
    pub fn constraint_defect(&self, v: &ModelFunction) -> Result<[f64; 2]> {
        let (p, q) = (self.exponents.two_star, self.exponents.two_sharp);
        let power = |v: f64, e: f64| -> Result<f64> {
            if !(v > -1.0) {
                return Err(BridgeError::Projection {
                    message: "competitor changes sign".into(),
                    defects: vec![],
                });
            }
            Ok((e * v.ln_1p()).exp_m1())
        };
        let mut bulk = 0.0;
        for (node, f) in self.bulk.iter().zip(&v.bulk) {
            bulk += node.weight * power(f[0], p)?;
        }
        let mut trace = 0.0;
        for (node, f) in self.boundary.iter().zip(&v.boundary) {
            trace += node.weight * power(*f, q)?;
        }
        Ok([bulk / self.volume, trace / self.area])
    }

    /// δ_T(U(1 + v)) = N(1 + v) − N(1) = 2(λ∫v − σ∫_∂v) + N(v), for 1 + v ∈ A_T.
    pub fn deficit(&self, v: &ModelFunction) -> Result<f64> {
        let (lambda, sigma) = (self.profile.lambda, self.profile.sigma);
        let mean: f64 = self.bulk.iter().zip(&v.bulk).map(|(q, f)| q.weight * f[0]).sum();
        let trace: f64 = self.boundary.iter().zip(&v.boundary).map(|(q, f)| q.weight * f).sum();
        let d = 2.0 * (lambda * mean - sigma * trace) + self.n_form(v);
        if d < -DEFICIT_FLOOR {
            return Err(BridgeError::Deficit(d));
        }
        Ok(d)
    }

    /// Re-project 1 + εφ onto both constraints with the directions 1 and (r/R)².
    pub fn project(&self, eps: f64) -> Result<Projection> {
        let peak = self.bulk.iter().map(|q| q.phi[0].abs()).fold(0.0, f64::max);
        if !(eps.abs() * peak < 0.5) {
            return Err(BridgeError::Projection {
                message: format!("ε = {eps} is outside the local regime (ε·max|φ| = {:.3})", eps.abs() * peak),
                defects: vec![],
            });
        }
        let (p, q) = (self.exponents.two_star, self.exponents.two_sharp);
        let mut c = [0.0_f64; 2];
        let mut trace = Vec::new();
        let mut before = f64::NAN;
        for iteration in 0..40 {
            let v = self.perturbed(c[0], eps, c[1]);
            let f = self.constraint_defect(&v).map_err(|e| match e {
                BridgeError::Projection { message, .. } => BridgeError::Projection {
                    message,
                    defects: trace.clone(),
                },
                other => other,
            })?;
            let residual = f[0].abs().max(f[1].abs());
            trace.push(residual);
            if iteration == 0 {
                before = residual;
            }
            let stalled = iteration >= 3 && residual >= 0.5 * trace[iteration - 1];
            if residual <= 1e-15 || (stalled && residual <= CONSTRAINT_TOLERANCE) {
                let correction = self.perturbed(c[0], 0.0, c[1]);
                return Ok(Projection {
                    eps,
                    c_bulk: c[0],
                    c_boundary: c[1],
                    defect_before: before,
                    defect_after: residual,
                    correction_norm: self.n_form(&correction).max(0.0).sqrt(),
                    iterations: iteration,
                    function: v,
                });
            }
            if stalled && iteration > 8 {
                break;
            }
            // Jacobian of the relative defects in (c_bulk, c_boundary).
            let mut j = [[0.0; 2]; 2];
            for (node, fv) in self.bulk.iter().zip(&v.bulk) {
                let d = node.weight * p * (1.0 + fv[0]).powf(p - 1.0) / self.volume;
                j[0][0] += d;
                j[0][1] += d * node.b;
            }
            for (node, fv) in self.boundary.iter().zip(&v.boundary) {
                let d = node.weight * q * (1.0 + fv).powf(q - 1.0) / self.area;
                j[1][0] += d;
                j[1][1] += d;
            }
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            if !(det.abs() > MIN_JACOBIAN) {
                return Err(BridgeError::Projection {
                    message: format!("constraint Jacobian determinant {det:e} is degenerate"),
                    defects: trace,
                });
            }
            c[0] -= (j[1][1] * f[0] - j[0][1] * f[1]) / det;
            c[1] -= (j[0][0] * f[1] - j[1][0] * f[0]) / det;
        }
        Err(BridgeError::Projection {
            message: "Newton iteration did not reach the constraint tolerance".into(),
            defects: trace,
        })
    }

    fn orbit_sample(&self, x: [f64; 2], a: f64) -> OrbitSample {
        let t = self.profile.t;
        let m = 0.5 * (self.profile.n as f64 - 2.0);
        let rho2 = x[1] * x[1];
        // base_a = η/a² + (x₁ − t/a)² + ρ², factored on the hyperbolic branch.
        let (base1, base_a, shift_term) = match self.ball.branch {
            Branch::Spherical => (
                1.0 + (x[0] - t).powi(2) + rho2,
                1.0 / (a * a) + (x[0] - t / a).powi(2) + rho2,
                -(1.0 + t * t),
            ),
            Branch::Hyperbolic => {
                let delta = -1.0 - t;
                (
                    (x[0] + delta) * (x[0] + delta + 2.0) + rho2,
                    (x[0] + delta / a) * (x[0] + (delta + 2.0) / a) + rho2,
                    (1.0 - t) * (1.0 + t),
                )
            }
        };
        let log_rho = -m * a.ln() + m * (base1 / base_a).ln();
        let rho = log_rho.exp();
        // a ∂_a base_a = 2(−η − t²)/a² + 2 t x₁ / a
        let d_tau_base = 2.0 * shift_term / (a * a) + 2.0 * t * x[0] / a;
        let d_tau = rho * (-m - m * d_tau_base / base_a);
        let g1 = [2.0 * (x[0] - t) / base1, 2.0 * x[1] / base1];
        let ga = [2.0 * (x[0] - t / a) / base_a, 2.0 * x[1] / base_a];
        OrbitSample {
            minus_one: log_rho.exp_m1(),
            rho,
            d_tau,
            grad_log: [m * (g1[0] - ga[0]), m * (g1[1] - ga[1])],
        }
    }

    /// gU/U − 1 for the dilation by `scale`.
    pub fn orbit_point(&self, scale: f64) -> ModelFunction {
        ModelFunction {
            bulk: self
                .bulk
                .iter()
                .map(|q| {
                    let o = self.orbit_sample(q.chart.x, scale);
                    let c = &q.chart;
                    [
                        o.minus_one,
                        o.rho * (o.grad_log[0] * c.dx_dr[0] + o.grad_log[1] * c.dx_dr[1]),
                        o.rho * (o.grad_log[0] * c.dx_dtheta[0] + o.grad_log[1] * c.dx_dtheta[1]),
                    ]
                })
                .collect(),
            boundary: self.boundary.iter().map(|q| self.orbit_sample(q.x, scale).minus_one).collect(),
        }
    }

    /// ⟨U(1 + v) − gU, Z⟩ and ‖Z‖² for Z = ∂_τ(gU), from the linearized
    /// Euler–Lagrange equation satisfied by Z (no derivatives needed).
    fn tangent_pairing(&self, v: &ModelFunction, scale: f64) -> (f64, f64) {
        let (p, q) = (self.exponents.two_star, self.exponents.two_sharp);
        let (lambda, sigma) = (self.profile.lambda, self.profile.sigma);
        let (mut gb, mut zb) = (0.0, 0.0);
        for (node, f) in self.bulk.iter().zip(&v.bulk) {
            let o = self.orbit_sample(node.chart.x, scale);
            let w = f[0] - o.minus_one;
            let k = node.weight * o.rho.powf(p - 2.0) * o.d_tau;
            gb += k * w;
            zb += k * o.d_tau;
        }
        let (mut gs, mut zs) = (0.0, 0.0);
        for (node, f) in self.boundary.iter().zip(&v.boundary) {
            let o = self.orbit_sample(node.x, scale);
            let w = f - o.minus_one;
            let k = node.weight * o.rho.powf(q - 2.0) * o.d_tau;
            gs += k * w;
            zs += k * o.d_tau;
        }
        let (cb, cs) = (lambda * (p - 1.0), sigma * (q - 1.0));
        (cb * gb - cs * gs, cb * zb - cs * zs)
    }

    /// Largest |δ| over exact orbit points a ∈ {0.9, 1.1}: the deficit resolution of the rule.
    pub fn noise_floor(&self) -> Result<f64> {
        let mut noise: f64 = 0.0;
        for a in [0.9, 1.1] {
            noise = noise.max(self.deficit(&self.orbit_point(a))?.abs());
        }
        Ok(noise)
    }

    /// Nearest orbit point to U(1 + v) along dilations, by a secant iteration
    /// on the first-order condition in τ = log a, started with a Gauss–Newton step.
    pub fn nearest_point(&self, v: &ModelFunction) -> Result<NearestPoint> {
        let n = self.profile.n;
        let (g0, z0) = self.tangent_pairing(v, 1.0);
        if g0 == 0.0 {
            return self.finish_nearest(v, 0.0, 0);
        }
        let (mut t0, mut f0) = (0.0, g0);
        let mut t1 = g0 / z0;
        for iteration in 1..80 {
            if !(t1.abs() < 5.0) {
                return Err(BridgeError::NearestPoint(format!(
                    "dilation parameter log a = {t1:.3} left the local regime"
                )));
            }
            let (f1, _) = self.tangent_pairing(v, t1.exp());
            if f1 == 0.0 || (t1 - t0).abs() <= 1e-15 * (1.0 + t1.abs()) {
                return self.finish_nearest(v, t1, iteration);
            }
            let t2 = if f1 == f0 { t1 } else { t1 - f1 * (t1 - t0) / (f1 - f0) };
            (t0, f0, t1) = (t1, f1, t2);
        }
        Err(BridgeError::NearestPoint(format!(
            "secant iteration on the dilation parameter did not converge in dimension {n}"
        )))
    }

    fn finish_nearest(&self, v: &ModelFunction, tau: f64, iterations: usize) -> Result<NearestPoint> {
        let scale = tau.exp();
        let w = v.sub(&self.orbit_point(scale));
        let d2 = self.n_form(&w).max(0.0);
        let (g, z2) = self.tangent_pairing(v, scale);
        // Below the distance floor u lies on the orbit and the pairing is roundoff.
        let floor = 1e-6 * self.profile.phi;
        let orthogonality = g.abs() / (d2.sqrt().max(floor) * z2.abs().sqrt());
        if !(orthogonality < ORTHOGONALITY_TOLERANCE) {
            return Err(BridgeError::NearestPoint(format!(
                "residual is not orthogonal to the dilation field ({orthogonality:e})"
            )));
        }
        Ok(NearestPoint {
            element: GroupElement::dilation(self.profile.n, scale)?,
            distance: d2.sqrt(),
            orthogonality,
            iterations,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub eps: f64,
    pub deficit: f64,
    pub distance: f64,
    /// δ/d², or NaN when d = 0.
    pub ratio: f64,
    pub defect_before: f64,
    pub defect_after: f64,
    pub correction_norm: f64,
    /// Dilation of the nearest orbit point.
    pub scale: f64,
    pub orthogonality: f64,
}

/// Log–log slopes over the sweep; NaN when fewer than three rows resolve the quantity.
/// The deficit slope only uses rows a hundred times above the lab's noise floor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Slopes {
    pub defect: f64,
    pub correction: f64,
    pub deficit: f64,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub profile_id: String,
    pub perturbation_id: String,
    pub ell: usize,
    pub sweep: Vec<SweepRow>,
    /// ε → 0 limit of δ/d².
    pub fitted_coefficient: f64,
    /// 𝒬(ψ)/N(ψ) from the sector forms.
    pub q_over_n: f64,
    pub q_half: f64,
    pub gap: f64,
    pub gap_sector: usize,
    pub gap_half: f64,
    pub slopes: Slopes,
    /// Deficit resolution measured on exact orbit points.
    pub noise_floor: f64,
    pub checks: Vec<Check>,
}

/// Least-squares slope of log|y| against log x over the points with |y| > floor.
pub fn log_log_slope(xs: &[f64], ys: &[f64], floor: f64) -> f64 {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && y.abs() > floor && y.is_finite())
        .map(|(x, y)| (x.ln(), y.abs().ln()))
        .collect();
    if pts.len() < 3 {
        return f64::NAN;
    }
    let k = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / k, pts.iter().map(|p| p.1).sum::<f64>() / k);
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Intercept of the least-squares quadratic c₀ + c₁ε + c₂ε² through (ε, y).
pub fn quadratic_intercept(eps: &[f64], ys: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = eps.iter().zip(ys).filter(|(_, y)| y.is_finite()).map(|(&e, &y)| (e, y)).collect();
    if pts.len() < 3 {
        return f64::NAN;
    }
    let a = nalgebra::DMatrix::from_fn(pts.len(), 3, |i, j| pts[i].0.powi(j as i32));
    let b = nalgebra::DVector::from_iterator(pts.len(), pts.iter().map(|p| p.1));
    match a.svd(true, true).solve(&b, 1e-14) {
        Ok(c) => c[0],
        Err(_) => f64::NAN,
    }
}

pub fn profile_id(profile: &BridgeProfile) -> String {
    format!("n{}-{}-t{:+.9e}", profile.n, profile.branch, profile.t)
}

/// One experiment: for each ε project, measure the deficit and the distance to
/// the orbit, and extrapolate δ/d² to ε = 0.
pub fn stability_sweep(profile: &BridgeProfile, pert: &Perturbation, eps_list: &[f64]) -> Result<StabilityReport> {
    if eps_list.len() < 4 {
        return Err(BridgeError::Domain(format!("a sweep needs at least 4 amplitudes, got {}", eps_list.len())));
    }
    if eps_list.iter().any(|e| !(e.is_finite() && *e != 0.0)) || eps_list.windows(2).any(|w| !(w[0].abs() > w[1].abs())) {
        return Err(BridgeError::Domain("amplitudes must be nonzero and strictly decreasing in size".into()));
    }
    let lab = Lab::new(profile, pert)?;
    let noise_floor = lab.noise_floor()?;
    let sweep: Vec<SweepRow> = eps_list
        .par_iter()
        .map(|&eps| {
            let proj = lab.project(eps)?;
            let deficit = lab.deficit(&proj.function)?;
            let near = lab.nearest_point(&proj.function)?;
            let d2 = near.distance * near.distance;
            Ok(SweepRow {
                eps,
                deficit,
                distance: near.distance,
                ratio: if d2 > 0.0 { deficit / d2 } else { f64::NAN },
                defect_before: proj.defect_before,
                defect_after: proj.defect_after,
                correction_norm: proj.correction_norm,
                scale: near.element.scale,
                orthogonality: near.orthogonality,
            })
        })
        .collect::<Result<_>>()?;

    let ints = sector_integrals(&lab.ball, &pert.radial)?;
    let q_over_n = ints.q_form(&lab.ball, pert.ell) / ints.n_form(&lab.ball, profile.lambda, profile.sigma, pert.ell);
    let spectrum = spectral_gap(&lab.ball, profile, 10)?;

    let eps: Vec<f64> = sweep.iter().map(|r| r.eps.abs()).collect();
    let col = |f: fn(&SweepRow) -> f64| sweep.iter().map(f).collect::<Vec<f64>>();
    let slopes = Slopes {
        defect: log_log_slope(&eps, &col(|r| r.defect_before), 1e-14),
        correction: log_log_slope(&eps, &col(|r| r.correction_norm), 1e-14),
        deficit: log_log_slope(&eps, &col(|r| r.deficit), (100.0 * noise_floor).max(1e-14)),
        distance: log_log_slope(&eps, &col(|r| r.distance), 1e-12),
    };
    let fitted_coefficient = quadratic_intercept(&eps, &col(|r| r.ratio));
    let gap_half = 0.5 * spectrum.gap;

    let min_deficit = sweep.iter().map(|r| r.deficit).fold(f64::INFINITY, f64::min);
    let worst_defect = sweep.iter().map(|r| r.defect_after).fold(0.0, f64::max);
    let worst_orth = sweep.iter().map(|r| r.orthogonality).fold(0.0, f64::max);
    let mut checks = vec![
        Check::at_least("deficit_nonnegative", min_deficit, -NOISE_FLOOR),
        Check::new("orbit_deficit_noise", noise_floor, NOISE_FLOOR),
        Check::new("constraints_after_projection", worst_defect, CONSTRAINT_TOLERANCE),
        Check::new("defect_slope_minus_two", slopes.defect - 2.0, 0.1),
        Check::new("correction_slope_minus_two", slopes.correction - 2.0, 0.1),
        Check::new("nearest_point_orthogonality", worst_orth, ORTHOGONALITY_TOLERANCE),
    ];
    if pert.tangent {
        checks.push(Check::at_least("tangent_deficit_slope", slopes.deficit, 2.5));
        checks.push(Check::at_least("tangent_distance_slope", slopes.distance, 1.5));
    } else {
        checks.push(Check::at_least("coefficient_over_half_gap", fitted_coefficient / gap_half, 0.99));
    }
    Ok(StabilityReport {
        profile_id: profile_id(profile),
        perturbation_id: pert.label.clone(),
        ell: pert.ell,
        sweep,
        fitted_coefficient,
        q_over_n,
        q_half: 0.5 * q_over_n,
        gap: spectrum.gap,
        gap_sector: spectrum.gap_sector,
        gap_half,
        slopes,
        noise_floor,
        checks,
    })
}
