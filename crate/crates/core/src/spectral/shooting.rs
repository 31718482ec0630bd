//! Radial shooting for the sector equations.
//!
//! The generalized sector problem 𝒬_ℓ(f) = μ N_ℓ(f) has the Euler–Lagrange
//! equation
//!
//!   f″ + (n−1)(s′/s) f′ − ℓ(ℓ+n−2) s⁻² f + ν f = 0,  ν = (nκ + μλ)/(1 − μ),
//!
//! with the Robin condition (1 − μ) f′(R) = (β − μσ) f(R). For μ = 0 this is
//! the kernel equation with f′(R) = β f(R). The regular solution behaves
//! like r^ℓ at the origin, so the integration runs on h = f / r^ℓ, which
//! solves an equation with a removable singularity.

use serde::{Deserialize, Serialize};

use super::forms::{cosine_grid, RadialFunction, Sector};
use crate::error::{BridgeError, Result};
use crate::geometry::{inverse_square_correction, log_derivative_correction, ModelBall};
use crate::ode::integrate_linear;
use crate::profile::Exponents;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShootingOptions {
    /// r₀ / R for the Frobenius start.
    pub start_fraction: f64,
    /// Output intervals of the returned radial function.
    pub intervals: usize,
    pub rtol: f64,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        Self {
            start_fraction: 1e-6,
            intervals: 256,
            rtol: 1e-12,
        }
    }
}

/// Multipliers (λ, σ) implied by the ball: λ = n(n−2)κ/4 and β = −(2♯−2)σ.
pub fn ball_multipliers(ball: &ModelBall) -> (f64, f64) {
    let nf = ball.n as f64;
    let ex = Exponents::new(ball.n);
    (nf * (nf - 2.0) * ball.kappa / 4.0, -ball.beta / (ex.two_sharp - 2.0))
}

/// Everything one shot produces.
#[derive(Debug, Clone, PartialEq)]
pub struct Shot {
    pub mu: f64,
    /// [(1−μ)f′(R) − (β−μσ)f(R)] / max|f|.
    pub mismatch: f64,
    pub f: RadialFunction,
    /// ∫₀^R f s^{n−1} dr in the scale of `f`.
    pub mean: f64,
}

/// Integrate the regular solution for (ℓ, μ) from r₀ = 1e−6·R and return
/// the normalized Robin mismatch together with the solution.
pub fn shoot(ball: &ModelBall, ell: usize, mu: f64) -> Result<(f64, RadialFunction)> {
    let shot = shoot_with(ball, ell, mu, &ShootingOptions::default())?;
    Ok((shot.mismatch, shot.f))
}

pub fn shoot_with(ball: &ModelBall, ell: usize, mu: f64, opts: &ShootingOptions) -> Result<Shot> {
    if !(mu.is_finite()) || (1.0 - mu).abs() < 1e-13 {
        return Err(BridgeError::Domain(format!("shooting parameter μ = {mu} is singular")));
    }
    let n = ball.n;
    let nf = n as f64;
    let kappa = ball.kappa;
    let (lambda, sigma) = ball_multipliers(ball);
    let nu = (nf * kappa + mu * lambda) / (1.0 - mu);
    let big_l = Sector::new(n, ell).angular_eigenvalue;
    let lf = ell as f64;
    let radius = ball.radius;
    let r0 = opts.start_fraction * radius;
    let grid = cosine_grid(radius, opts.intervals, r0);

    // h″ + ((2ℓ+n−1)/r + (n−1)g) h′ + ((n−1)ℓ g/r − L k + ν) h = 0,
    // where s′/s = 1/r + g and s⁻² = 1/r² + k; the third component accumulates ∫ f s^{n−1}.
    let rhs = |r: f64, y: &[f64], dy: &mut [f64]| {
        let g = log_derivative_correction(kappa, r);
        let k = inverse_square_correction(kappa, r);
        let c1 = (2.0 * lf + nf - 1.0) / r + (nf - 1.0) * g;
        let c0 = (nf - 1.0) * lf * g / r - big_l * k + nu;
        dy[0] = y[1];
        dy[1] = -c1 * y[1] - c0 * y[0];
        let s = ball.s(r);
        dy[2] = r.powi(ell as i32) * y[0] * s.powi(n as i32 - 1);
    };
    // One series term at the origin: h = 1 + a r².
    let c00 = -(nf - 1.0) * lf * kappa / 3.0 - big_l * kappa / 3.0 + nu;
    let a = -c00 / (2.0 * (2.0 * lf + nf));
    let y0 = [1.0 + a * r0 * r0, 2.0 * a * r0, r0.powi(ell as i32 + n as i32) / (lf + nf)];
    let traj = integrate_linear(rhs, r0, &y0, &grid[1..], opts.rtol)?;

    let mut values = Vec::with_capacity(grid.len());
    let mut derivs = Vec::with_capacity(grid.len());
    let mut push = |r: f64, h: f64, hp: f64| {
        let rl = r.powi(ell as i32);
        let fp = if ell == 0 { hp } else { lf * r.powi(ell as i32 - 1) * h + rl * hp };
        values.push(rl * h);
        derivs.push(fp);
    };
    push(r0, traj.factor * y0[0], traj.factor * y0[1]);
    for (r, st) in grid[1..].iter().zip(&traj.states) {
        push(*r, st[0], st[1]);
    }
    let last = traj.states.last().expect("at least one node");
    let mean = last[2];
    let f = RadialFunction::new(grid, values, derivs, ell)?;
    let (fr, fpr) = (*f.values.last().unwrap(), *f.derivs.last().unwrap());
    let scale = f.max_abs();
    if !(scale > 0.0) {
        return Err(BridgeError::Grid("shooting produced the zero function".into()));
    }
    let mismatch = ((1.0 - mu) * fpr - (ball.beta - mu * sigma) * fr) / scale;
    Ok(Shot { mu, mismatch, f, mean })
}

/// ℓ = 0 with f(R) = 0 and ∫ f s^{n−1} = 0: the regular solutions of the
/// constrained Euler–Lagrange equation are a·f_hom + b, so eigenvalues are
/// the zeros of D(μ) = f_hom(R)·V − ∫ f_hom s^{n−1}. Returns D / (V max|f_hom|)
/// and the admissible combination f_hom − f_hom(R).
pub fn secular(ball: &ModelBall, mu: f64, opts: &ShootingOptions) -> Result<(f64, RadialFunction)> {
    let shot = shoot_with(ball, 0, mu, opts)?;
    let volume = ball.radial_volume();
    let fr = *shot.f.values.last().expect("nonempty");
    let d = fr * volume - shot.mean;
    let value = d / (volume * shot.f.max_abs());
    let shifted = RadialFunction::new(
        shot.f.grid.clone(),
        shot.f.values.iter().map(|v| v - fr).collect(),
        shot.f.derivs.clone(),
        0,
    )?;
    Ok((value, shifted))
}

/// Root of `g` near `guess`, bracketed by expanding outward from `width`
/// and refined by the Illinois variant of regula falsi.
pub fn refine_root<G: Fn(f64) -> Result<f64>>(g: G, guess: f64, width: f64, limit: f64) -> Result<f64> {
    let g0 = g(guess)?;
    if g0 == 0.0 {
        return Ok(guess);
    }
    let mut w = width;
    let (mut a, mut b, mut fa, mut fb);
    loop {
        let lo = guess - w;
        let hi = guess + w;
        let (flo, fhi) = (g(lo)?, g(hi)?);
        if flo * g0 <= 0.0 {
            (a, b, fa, fb) = (lo, guess, flo, g0);
            break;
        }
        if fhi * g0 <= 0.0 {
            (a, b, fa, fb) = (guess, hi, g0, fhi);
            break;
        }
        w *= 2.0;
        if w > limit {
            return Err(BridgeError::Root {
                target: 0.0,
                lo: guess - w,
                hi: guess + w,
                detail: "no sign change of the shooting function near the discrete eigenvalue".into(),
            });
        }
    }
    for _ in 0..300 {
        let c = b - fb * (b - a) / (fb - fa);
        let fc = g(c)?;
        if fc == 0.0 {
            return Ok(c);
        }
        if fc * fb < 0.0 {
            a = b;
            fa = fb;
        } else {
            fa *= 0.5;
        }
        b = c;
        fb = fc;
        if (b - a).abs() <= 1e-15 * b.abs().max(1.0) {
            break;
        }
    }
    Ok(b)
}
