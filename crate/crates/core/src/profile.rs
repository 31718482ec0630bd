//! Bridge minimizers on the half-space ℍⁿ₊ = {x₁ > 0}.
//!
//! Every minimizer is a bubble U(x) = C (η + |x − t e₁|²)^{−(n−2)/2} with
//! η = +1 (spherical branch, T < T_E) or η = −1 (hyperbolic branch, T > T_E,
//! t < −1). The two constraints ‖U‖_{2*} = 1 and ‖U‖_{2♯} = T fix (t, C).
//!
//! Half-space integrals of bubbles are reduced to one dimension: the
//! tangential integral over x′ ∈ ℝⁿ⁻¹ has a closed beta-function form, and
//! only the normal variable is integrated numerically.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{BridgeError, Result};
use crate::geometry::{model_ball_from_profile, Branch};
use crate::quadrature::QuadratureSpec;
use crate::report::{rel_err, Check};
use crate::special::{radial_moment, sphere_area};

/// Critical exponents 2* = 2n/(n−2) and 2♯ = 2(n−1)/(n−2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exponents {
    pub two_star: f64,
    pub two_sharp: f64,
}

impl Exponents {
    pub fn new(n: usize) -> Self {
        let nf = n as f64;
        Self {
            two_star: 2.0 * nf / (nf - 2.0),
            two_sharp: 2.0 * (nf - 1.0) / (nf - 2.0),
        }
    }
}

/// The family A (b + (x₁ − c)² + |x′ − z|²)^{−(n−2)/2}.
///
/// It contains every bridge profile (b = η, c = t, z = 0), the Escobar
/// bubble (b = 0, c = −1) and is closed under the dilation/translation action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bubble {
    pub n: usize,
    pub amplitude: f64,
    pub center: f64,
    pub offset: f64,
    pub shift: Vec<f64>,
}

impl Bubble {
    pub fn new(n: usize, amplitude: f64, center: f64, offset: f64) -> Self {
        Self {
            n,
            amplitude,
            center,
            offset,
            shift: vec![0.0; n - 1],
        }
    }

    fn m(&self) -> f64 {
        0.5 * (self.n as f64 - 2.0)
    }

    /// y = x − c e₁ − (0, z) and the base b + |y|².
    fn base(&self, x: &[f64]) -> (Vec<f64>, f64) {
        let mut y = x.to_vec();
        y[0] -= self.center;
        for (yi, zi) in y[1..].iter_mut().zip(&self.shift) {
            *yi -= zi;
        }
        let b = self.offset + y.iter().map(|v| v * v).sum::<f64>();
        (y, b)
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let (_, b) = self.base(x);
        self.amplitude * b.powf(-self.m())
    }

    /// Value and exact gradient.
    pub fn eval(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let m = self.m();
        let (y, b) = self.base(x);
        let u = self.amplitude * b.powf(-m);
        let g = y.iter().map(|yi| -2.0 * m * u * yi / b).collect();
        (u, g)
    }

    /// Laplacian summed from the exact second partial derivatives.
    pub fn laplacian(&self, x: &[f64]) -> f64 {
        let m = self.m();
        let (y, b) = self.base(x);
        let a = self.amplitude;
        y.iter()
            .map(|yi| a * (-2.0 * m * b.powf(-m - 1.0) + 4.0 * m * (m + 1.0) * yi * yi * b.powf(-m - 2.0)))
            .sum()
    }

    /// Boundary values need a positive base on ∂ℍⁿ₊.
    fn trace_square(&self) -> Result<f64> {
        let a2 = boundary_scale_squared(self.offset, self.center);
        if !(a2 > 0.0) {
            return Err(BridgeError::Domain(format!(
                "bubble base vanishes on the boundary (a² = {a2})"
            )));
        }
        Ok(a2)
    }

    /// ∫_{ℍⁿ₊} u^q dx.
    pub fn bulk_power(&self, q: f64, quad: &QuadratureSpec) -> Result<f64> {
        let n = self.n;
        let p = q * self.m();
        if !(p > 0.5 * n as f64) {
            return Err(BridgeError::Integral(format!(
                "∫ u^q diverges for q = {q} in dimension {n}"
            )));
        }
        let k = radial_moment(n - 1, 1.0, p, 0);
        let e = 0.5 * (n as f64 - 1.0) - p;
        let axis = axis_integral(self.offset, self.center, e, quad)?;
        Ok(self.amplitude.powf(q) * k * axis)
    }

    /// ∫_{∂ℍⁿ₊} u^q dx′, in closed form.
    pub fn boundary_power(&self, q: f64) -> Result<f64> {
        let n = self.n;
        let p = q * self.m();
        if !(p > 0.5 * (n as f64 - 1.0)) {
            return Err(BridgeError::Integral(format!(
                "boundary integral of u^q diverges for q = {q}"
            )));
        }
        let a = self.trace_square()?.sqrt();
        Ok(self.amplitude.powf(q) * radial_moment(n - 1, a, p, 0))
    }

    /// ∫_{ℍⁿ₊} |∇u|² dx.
    pub fn dirichlet(&self, quad: &QuadratureSpec) -> Result<f64> {
        let n = self.n;
        let nf = n as f64;
        // |∇u|² = A²(n−2)² (s² + ρ²) base^{−n}; integrate ρ with the moments k = 0, 1.
        let k0 = radial_moment(n - 1, 1.0, nf, 0);
        let k1 = radial_moment(n - 1, 1.0, nf, 1);
        let i1 = axis_integral(self.offset, self.center, 0.5 * (1.0 - nf), quad)?;
        let i2 = axis_integral(self.offset, self.center, -0.5 * (1.0 + nf), quad)?;
        let pref = self.amplitude * self.amplitude * (nf - 2.0) * (nf - 2.0);
        Ok(pref * ((k0 + k1) * i1 - k0 * self.offset * i2))
    }

    /// The three norms preserved by the group action: (‖∇u‖², ‖u‖_{2*}, ‖u‖_{2♯}).
    pub fn norms(&self, quad: &QuadratureSpec) -> Result<(f64, f64, f64)> {
        let ex = Exponents::new(self.n);
        let d = self.dirichlet(quad)?;
        let b = self.bulk_power(ex.two_star, quad)?.powf(1.0 / ex.two_star);
        let s = self.boundary_power(ex.two_sharp)?.powf(1.0 / ex.two_sharp);
        Ok((d, b, s))
    }
}

/// ∫_{−c}^∞ (b + s²)^e ds, assuming b + s² > 0 on the range and 2e < −1.
///
/// For b < 0 the base is factored as (u + g)(u + g + 2w) with w = √−b,
/// u = s + c and g = −c − w, so profiles with t close to −1 keep full
/// relative accuracy.
fn axis_integral(b: f64, c: f64, e: f64, quad: &QuadratureSpec) -> Result<f64> {
    let lo = -c;
    if b < 0.0 {
        let w = (-b).sqrt();
        let g = lo - w;
        if !(g > 0.0) {
            return Err(BridgeError::Domain(format!(
                "bubble base is not positive on the half-space (gap {g})"
            )));
        }
        let f = |u: f64| ((u + g) * (u + g + 2.0 * w)).powf(e);
        let a2 = g * (g + 2.0 * w);
        let scale = a2.sqrt().min(a2 / (2.0 * lo));
        return quad.integrate(f, 0.0, f64::INFINITY, scale);
    }
    let f = |s: f64| (b + s * s).powf(e);
    if lo < 0.0 {
        let w = b.sqrt().max(1e-300);
        let near = quad.integrate(f, lo, 0.0, 1.0)?;
        let far = quad.integrate(f, 0.0, f64::INFINITY, w)?;
        Ok(near + far)
    } else {
        let a2 = b + lo * lo;
        if !(a2 > 0.0) {
            return Err(BridgeError::Domain(format!(
                "bubble base is not positive on the half-space (a² = {a2})"
            )));
        }
        let a = a2.sqrt();
        let scale = if lo > 0.0 { a.min(a2 / (2.0 * lo)) } else { a };
        quad.integrate(f, lo, f64::INFINITY, scale)
    }
}

/// b + c², the squared tangential scale of the bubble on ∂ℍⁿ₊, without cancellation.
fn boundary_scale_squared(b: f64, c: f64) -> f64 {
    if b < 0.0 {
        let w = (-b).sqrt();
        let g = -c - w;
        g * (g + 2.0 * w)
    } else {
        b + c * c
    }
}

fn check_shift(branch: Branch, t: f64) -> Result<()> {
    if !t.is_finite() {
        return Err(BridgeError::Domain(format!("shift t = {t} is not finite")));
    }
    if branch == Branch::Hyperbolic && t >= -1.0 {
        return Err(BridgeError::Domain(format!(
            "hyperbolic profiles need t < −1, got {t}"
        )));
    }
    Ok(())
}

fn check_dim(n: usize) -> Result<()> {
    if n < 3 {
        return Err(BridgeError::Domain(format!("dimension n = {n} must be at least 3")));
    }
    Ok(())
}

/// ∫_{ℍⁿ₊} base(x)^{−q(n−2)/2} dx for the unnormalised profile (C = 1).
pub fn bulk_integral(n: usize, branch: Branch, t: f64, q: f64, quad: &QuadratureSpec) -> Result<f64> {
    check_dim(n)?;
    check_shift(branch, t)?;
    Bubble::new(n, 1.0, t, branch.sign()).bulk_power(q, quad)
}

/// ∫_{ℝⁿ⁻¹} (a² + |x′|²)^{−(n−1)} dx′ with a² = t² + η.
pub fn boundary_integral(n: usize, branch: Branch, t: f64) -> Result<f64> {
    check_dim(n)?;
    check_shift(branch, t)?;
    Bubble::new(n, 1.0, t, branch.sign()).boundary_power(Exponents::new(n).two_sharp)
}

/// [`boundary_integral`] by 1D quadrature in |x′|, as an independent cross-check.
pub fn boundary_integral_quadrature(n: usize, branch: Branch, t: f64, quad: &QuadratureSpec) -> Result<f64> {
    check_dim(n)?;
    check_shift(branch, t)?;
    let a2 = boundary_scale_squared(branch.sign(), t);
    let p = n as f64 - 1.0;
    let f = |rho: f64| rho.powi(n as i32 - 2) * (a2 + rho * rho).powf(-p);
    Ok(sphere_area(n - 2) * quad.integrate(f, 0.0, f64::INFINITY, a2.sqrt())?)
}

/// Amplitude C with ‖U‖_{2*} = 1.
pub fn normalize(n: usize, branch: Branch, t: f64, quad: &QuadratureSpec) -> Result<f64> {
    let ex = Exponents::new(n);
    Ok(bulk_integral(n, branch, t, ex.two_star, quad)?.powf(-1.0 / ex.two_star))
}

/// T(t) = ‖U‖_{2♯} for the normalised profile of shift t.
pub fn trace_constraint(n: usize, branch: Branch, t: f64, quad: &QuadratureSpec) -> Result<f64> {
    let ex = Exponents::new(n);
    let c = normalize(n, branch, t, quad)?;
    Ok(c * boundary_integral(n, branch, t)?.powf(1.0 / ex.two_sharp))
}

/// The Escobar bubble c((x₁+1)² + |x′|²)^{−(n−2)/2}, normalised in L^{2*}.
pub fn escobar_bubble(n: usize, quad: &QuadratureSpec) -> Result<Bubble> {
    check_dim(n)?;
    let ex = Exponents::new(n);
    let raw = Bubble::new(n, 1.0, -1.0, 0.0);
    let c = raw.bulk_power(ex.two_star, quad)?.powf(-1.0 / ex.two_star);
    Ok(Bubble::new(n, c, -1.0, 0.0))
}

/// T_E = ‖U_E‖_{L^{2♯}(∂ℍⁿ₊)}.
pub fn escobar_threshold(n: usize, quad: &QuadratureSpec) -> Result<f64> {
    let ex = Exponents::new(n);
    let ue = escobar_bubble(n, quad)?;
    Ok(ue.boundary_power(ex.two_sharp)?.powf(1.0 / ex.two_sharp))
}

/// Sharp Sobolev constant S_n = n(n−2)/4 · |Sⁿ|^{2/n}.
pub fn sobolev_constant(n: usize) -> f64 {
    let nf = n as f64;
    nf * (nf - 2.0) / 4.0 * sphere_area(n).powf(2.0 / nf)
}

/// S_n as the Rayleigh quotient of the whole-space bubble, by radial quadrature.
pub fn sobolev_constant_quadrature(n: usize, quad: &QuadratureSpec) -> Result<f64> {
    let nf = n as f64;
    let ex = Exponents::new(n);
    let grad = quad.integrate(
        |r| (nf - 2.0).powi(2) * r * r * (1.0 + r * r).powf(-nf) * r.powi(n as i32 - 1),
        0.0,
        f64::INFINITY,
        1.0,
    )?;
    let mass = quad.integrate(|r| (1.0 + r * r).powf(-nf) * r.powi(n as i32 - 1), 0.0, f64::INFINITY, 1.0)?;
    let area = sphere_area(n - 1);
    Ok(area * grad / (area * mass).powf(2.0 / ex.two_star))
}

/// A classified bridge minimizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgeProfile {
    pub n: usize,
    pub branch: Branch,
    pub t: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub lambda: f64,
    pub sigma: f64,
    #[serde(rename = "T")]
    pub trace: f64,
    pub phi: f64,
}

impl BridgeProfile {
    pub fn bubble(&self) -> Bubble {
        Bubble::new(self.n, self.c, self.t, self.branch.sign())
    }

    pub fn exponents(&self) -> Exponents {
        Exponents::new(self.n)
    }

    /// Φ(T)².
    pub fn phi_squared(&self) -> f64 {
        self.phi * self.phi
    }

    /// The invariant battery: both constraints, the curvature relation for λ,
    /// the Pohozaev identity, and pointwise Euler–Lagrange residuals.
    pub fn invariant_checks(&self, quad: &QuadratureSpec) -> Result<Vec<Check>> {
        let ex = self.exponents();
        let u = self.bubble();
        let bulk = u.bulk_power(ex.two_star, quad)?.powf(1.0 / ex.two_star);
        let trace = u.boundary_power(ex.two_sharp)?.powf(1.0 / ex.two_sharp);
        let ball = model_ball_from_profile(self)?;
        let nf = self.n as f64;
        let lambda_geo = nf * (nf - 2.0) * ball.kappa / 4.0;
        let pohozaev = self.lambda - self.sigma * self.trace.powf(ex.two_sharp);
        let (el_int, el_bdy) = euler_lagrange_residuals(self, 50, 0x5eed)?;
        Ok(vec![
            Check::new("bulk_norm", (bulk - 1.0).abs(), 1e-9),
            Check::new("trace_norm", rel_err(trace, self.trace), 1e-9),
            Check::new("lambda_curvature", rel_err(self.lambda, lambda_geo), 1e-8),
            Check::new("pohozaev", rel_err(self.phi_squared(), pohozaev), 1e-8),
            Check::new("el_interior", el_int, 1e-8),
            Check::new("el_boundary", el_bdy, 1e-8),
        ])
    }
}

/// Value and gradient of the profile.
pub fn profile_eval(profile: &BridgeProfile, x: &[f64]) -> (f64, Vec<f64>) {
    profile.bubble().eval(x)
}

fn sample_points(n: usize, count: usize, seed: u64, boundary: bool) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut x: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
            x[0] = if boundary { 0.0 } else { rng.random_range(0.0..4.0) };
            x
        })
        .collect()
}

/// Largest relative residuals of −ΔU = λU^{2*−1} and ∂_νU = −σU^{2♯−1} at random points.
pub fn euler_lagrange_residuals(profile: &BridgeProfile, count: usize, seed: u64) -> Result<(f64, f64)> {
    let ex = profile.exponents();
    let u = profile.bubble();
    let mut interior: f64 = 0.0;
    for x in sample_points(profile.n, count, seed, false) {
        let v = u.value(&x);
        let rhs = profile.lambda * v.powf(ex.two_star - 1.0);
        interior = interior.max((-u.laplacian(&x) - rhs).abs() / rhs.abs());
    }
    let mut boundary: f64 = 0.0;
    for x in sample_points(profile.n, count, seed ^ 0xb0, true) {
        let (v, g) = u.eval(&x);
        let rhs = -profile.sigma * v.powf(ex.two_sharp - 1.0);
        // outward normal is −e₁
        let dnu = -g[0];
        let scale = rhs.abs().max(v.powf(ex.two_sharp - 1.0) * 1e-300);
        boundary = boundary.max((dnu - rhs).abs() / scale.max(f64::MIN_POSITIVE));
    }
    Ok((interior, boundary))
}

/// Bulk and boundary multipliers (λ, σ) of a bubble with shift t and amplitude C.
///
/// Both are read off from pointwise ratios at sample points; a ratio that is
/// not constant signals an inconsistent profile.
pub fn multipliers(n: usize, branch: Branch, t: f64, c: f64) -> Result<(f64, f64)> {
    check_dim(n)?;
    check_shift(branch, t)?;
    let ex = Exponents::new(n);
    let u = Bubble::new(n, c, t, branch.sign());
    let ratios = |pts: Vec<Vec<f64>>, f: &dyn Fn(&[f64]) -> f64| -> Result<f64> {
        let vals: Vec<f64> = pts.iter().map(|x| f(x)).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let spread = vals.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max) / mean.abs().max(f64::MIN_POSITIVE);
        if spread > 1e-9 && mean.abs() > 1e-300 {
            return Err(BridgeError::ElConsistency(format!(
                "multiplier ratio varies by {spread:e} across sample points"
            )));
        }
        Ok(mean)
    };
    let lambda = ratios(sample_points(n, 16, 11, false), &|x| {
        -u.laplacian(x) / u.value(x).powf(ex.two_star - 1.0)
    })?;
    let sigma = if t == 0.0 {
        0.0
    } else {
        ratios(sample_points(n, 16, 13, true), &|x| {
            let (v, g) = u.eval(x);
            g[0] / v.powf(ex.two_sharp - 1.0)
        })?
    };
    Ok((lambda, sigma))
}

/// Φ(T) from the Dirichlet integral, cross-checked against Φ² = λ − σT^{2♯}.
pub fn phi_value(profile: &BridgeProfile, quad: &QuadratureSpec) -> Result<f64> {
    let direct = profile.bubble().dirichlet(quad)?;
    let ex = profile.exponents();
    let pohozaev = profile.lambda - profile.sigma * profile.trace.powf(ex.two_sharp);
    let err = rel_err(direct, pohozaev);
    if err > 1e-6 {
        return Err(BridgeError::ElConsistency(format!(
            "Dirichlet energy {direct} disagrees with the Pohozaev value {pohozaev} ({err:e})"
        )));
    }
    Ok(direct.sqrt())
}

/// The profile with a prescribed shift on a given branch.
pub fn profile_from_shift(n: usize, branch: Branch, t: f64, quad: &QuadratureSpec) -> Result<BridgeProfile> {
    check_dim(n)?;
    check_shift(branch, t)?;
    let c = normalize(n, branch, t, quad)?;
    let trace = trace_constraint(n, branch, t, quad)?;
    let (lambda, sigma) = multipliers(n, branch, t, c)?;
    let mut profile = BridgeProfile {
        n,
        branch,
        t,
        c,
        lambda,
        sigma,
        trace,
        phi: 0.0,
    };
    profile.phi = phi_value(&profile, quad)?;
    Ok(profile)
}

/// T(t) sampled on the solver's bracket grid for one branch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchScan {
    pub branch: Branch,
    pub shifts: Vec<f64>,
    pub traces: Vec<f64>,
    /// Number of adjacent grid pairs where T(t) fails to be strictly monotone.
    pub monotonicity_violations: usize,
    /// +1 if T increases with t on the grid, −1 if it decreases.
    pub orientation: i32,
}

/// Bracket grid: log-spaced |t| on both sides of 0 (spherical) or log-spaced −1−t (hyperbolic).
pub fn scan_grid(branch: Branch) -> Vec<f64> {
    // log₁₀|t| from −3 to 3 in steps of 0.1
    let logs: Vec<f64> = (0..=60).map(|i| -3.0 + 0.1 * i as f64).collect();
    match branch {
        Branch::Spherical => {
            let mut ts: Vec<f64> = logs.iter().rev().map(|l| -(10f64.powf(*l))).collect();
            ts.push(0.0);
            ts.extend(logs.iter().map(|l| 10f64.powf(*l)));
            ts
        }
        Branch::Hyperbolic => {
            // T(t) grows only like (t²−1)^{−(n−2)/(4n)} as t → −1, so the grid reaches far in.
            let hi = 999f64.log10();
            let k = 172;
            let mut ts: Vec<f64> = (0..=k)
                .map(|i| -1.0 - 10f64.powf(-14.0 + (hi + 14.0) * i as f64 / k as f64))
                .collect();
            ts.reverse();
            ts
        }
    }
}

pub fn scan_branch(n: usize, branch: Branch, quad: &QuadratureSpec) -> Result<BranchScan> {
    let shifts = scan_grid(branch);
    let traces = shifts
        .iter()
        .map(|&t| trace_constraint(n, branch, t, quad))
        .collect::<Result<Vec<_>>>()?;
    let diffs: Vec<f64> = traces.windows(2).map(|w| w[1] - w[0]).collect();
    let pos = diffs.iter().filter(|d| **d > 0.0).count();
    let neg = diffs.iter().filter(|d| **d < 0.0).count();
    let orientation = if pos >= neg { 1 } else { -1 };
    let monotonicity_violations = diffs.len() - pos.max(neg);
    Ok(BranchScan {
        branch,
        shifts,
        traces,
        monotonicity_violations,
        orientation,
    })
}

/// Solver diagnostics that accompany a solved profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveDiagnostics {
    pub escobar_threshold: f64,
    pub bracket: (f64, f64),
    pub monotonicity_violations: usize,
    pub trace_relative_error: f64,
}

/// Solve the two-constraint system for the minimizer with trace norm T.
pub fn solve_profile(n: usize, trace: f64, quad: &QuadratureSpec) -> Result<BridgeProfile> {
    solve_profile_with_diagnostics(n, trace, quad).map(|(p, _)| p)
}

pub fn solve_profile_with_diagnostics(
    n: usize,
    trace: f64,
    quad: &QuadratureSpec,
) -> Result<(BridgeProfile, SolveDiagnostics)> {
    check_dim(n)?;
    quad.validate()?;
    if !(trace > 0.0 && trace.is_finite()) {
        return Err(BridgeError::Domain(format!("T must be positive, got {trace}")));
    }
    let t_e = escobar_threshold(n, quad)?;
    let rel_gap = (trace - t_e).abs() / t_e;
    if rel_gap <= 1e-6 {
        return Err(BridgeError::DegenerateBridge {
            t_value: trace,
            t_e,
            rel_gap,
        });
    }
    let branch = if trace < t_e { Branch::Spherical } else { Branch::Hyperbolic };
    let scan = scan_branch(n, branch, quad)?;

    // Hyperbolic shifts are handled in u = ln(−1 − t) so both ends are resolved.
    let to_u = |t: f64| match branch {
        Branch::Spherical => t,
        Branch::Hyperbolic => (-1.0 - t).ln(),
    };
    let from_u = |u: f64| match branch {
        Branch::Spherical => u,
        Branch::Hyperbolic => -1.0 - u.exp(),
    };
    let residual = |u: f64| -> Result<f64> { Ok(trace_constraint(n, branch, from_u(u), quad)? - trace) };

    let idx = scan
        .traces
        .windows(2)
        .position(|w| (w[0] - trace) * (w[1] - trace) <= 0.0)
        .ok_or_else(|| BridgeError::Root {
            target: trace,
            lo: scan.shifts[0],
            hi: *scan.shifts.last().unwrap(),
            detail: format!(
                "T(t) spans [{:.6e}, {:.6e}] on the {branch} scan grid",
                scan.traces.iter().cloned().fold(f64::INFINITY, f64::min),
                scan.traces.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            ),
        })?;
    let (mut a, mut b) = (to_u(scan.shifts[idx]), to_u(scan.shifts[idx + 1]));
    let mut fa = scan.traces[idx] - trace;
    if fa == 0.0 {
        b = a;
    }
    while (b - a).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
        let mid = 0.5 * (a + b);
        let fm = residual(mid)?;
        if fm == 0.0 {
            a = mid;
            b = mid;
            break;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    // Two secant steps from the final bracket.
    let (mut u0, mut u1) = (a, 0.5 * (a + b));
    let (mut f0, mut f1) = (residual(u0)?, residual(u1)?);
    for _ in 0..2 {
        if f1 == f0 || f1 == 0.0 {
            break;
        }
        let u2 = u1 - f1 * (u1 - u0) / (f1 - f0);
        if !u2.is_finite() || (u2 - u1).abs() > 1e-6 * u1.abs().max(1.0) {
            break;
        }
        u0 = u1;
        f0 = f1;
        u1 = u2;
        f1 = residual(u1)?;
    }
    let t = from_u(u1);
    let profile = profile_from_shift(n, branch, t, quad)?;
    let trace_err = rel_err(profile.trace, trace);
    // Near t = −1 one ulp of t moves T by more than 1e−10; accept that resolution.
    let step = t.abs().max(1.0) * f64::EPSILON;
    let resolution = rel_err(trace_constraint(n, branch, t + step, quad)?, profile.trace);
    if trace_err > 1e-10_f64.max(4.0 * resolution) {
        return Err(BridgeError::Root {
            target: trace,
            lo: from_u(a),
            hi: from_u(b),
            detail: format!("converged shift misses T by {trace_err:e}"),
        });
    }
    let diag = SolveDiagnostics {
        escobar_threshold: t_e,
        bracket: (scan.shifts[idx], scan.shifts[idx + 1]),
        monotonicity_violations: scan.monotonicity_violations,
        trace_relative_error: trace_err,
    };
    Ok((profile, diag))
}
