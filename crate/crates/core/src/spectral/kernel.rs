//! The kernel of the reduced Robin problem from the symmetry fields.
//!
//! Dilations and tangential translations of U give
//! Z₀ = (n−2)/2·U + x·∇U and Zᵢ = ∂_{xᵢ}U (i = 2..n). Their quotients by U,
//! read in model polar coordinates, are each a constant multiple of
//! s_κ(r)·θⱼ: first spherical harmonics with the kernel radial profile.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::forms::{cosine_grid, sector_integrals, RadialFunction};
use crate::error::{BridgeError, Result};
use crate::geometry::ModelBall;
use crate::profile::{profile_eval, BridgeProfile};
use crate::quadrature::gauss_legendre;
use crate::special::sphere_area;

const SAMPLES: usize = 96;
const SEED: u64 = 0x6b65_726e;
const MISMATCH_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelField {
    /// "Z0" for the dilation field, "Zi" for the translation along xᵢ.
    pub label: String,
    /// Index j of the coordinate θⱼ the field is proportional to (1-based).
    pub harmonic: usize,
    /// φ = coefficient · s_κ(r) · θⱼ.
    pub coefficient: f64,
    /// Largest relative deviation of the sampled ratio from the coefficient.
    pub spread: f64,
    /// ∫_B φ dV and ∫_{∂B} φ dS.
    pub bulk_mean: f64,
    pub boundary_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelFields {
    pub radial: RadialFunction,
    pub fields: Vec<KernelField>,
    /// Eigenvalues of the Gram matrix in the transported inner product.
    pub gram_eigenvalues: Vec<f64>,
    pub gram_condition: f64,
}

fn field_quotients(profile: &BridgeProfile, x: &[f64]) -> Vec<f64> {
    let n = profile.n;
    let (u, grad) = profile_eval(profile, x);
    let m = 0.5 * (n as f64 - 2.0);
    let radial: f64 = x.iter().zip(&grad).map(|(a, g)| a * g).sum();
    let mut out = Vec::with_capacity(n);
    out.push(m + radial / u);
    out.extend(grad[1..].iter().map(|g| g / u));
    out
}

pub fn kernel_fields(profile: &BridgeProfile, ball: &ModelBall) -> Result<KernelFields> {
    let n = profile.n;
    if ball.n != n || ball.t != profile.t {
        return Err(BridgeError::Domain("profile and ball do not belong together".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let scale = ball.center_x1;
    let mut ratios: Vec<Vec<f64>> = vec![Vec::new(); n];
    for _ in 0..SAMPLES {
        let mut x = vec![0.0; n];
        x[0] = scale * rng.random_range(-2.0_f64..2.0).exp();
        for xi in x[1..].iter_mut() {
            *xi = scale * rng.random_range(-2.0..2.0);
        }
        let (r, theta) = ball.polar(&x)?;
        let s = ball.s(r);
        for (j, q) in field_quotients(profile, &x).into_iter().enumerate() {
            if theta[j].abs() > 0.1 {
                ratios[j].push(q / (s * theta[j]));
            }
        }
    }

    let area = sphere_area(n - 2);
    let rule = gauss_legendre(n + 16);
    let odd_moment: f64 = rule
        .mapped(0.0, std::f64::consts::PI)
        .map(|(th, w)| w * th.cos() * th.sin().powi(n as i32 - 2))
        .sum::<f64>()
        * area;
    let r_rule = gauss_legendre(48);
    let s_n: f64 = r_rule.mapped(0.0, ball.radius).map(|(r, w)| w * ball.s(r).powi(n as i32)).sum();
    let s_rn = ball.s(ball.radius).powi(n as i32);

    let mut fields = Vec::with_capacity(n);
    for (j, rs) in ratios.iter().enumerate() {
        if rs.len() < 8 {
            return Err(BridgeError::KernelMismatch(format!("too few usable samples for field {j}")));
        }
        let mean = rs.iter().sum::<f64>() / rs.len() as f64;
        let spread = rs.iter().fold(0.0_f64, |m, v| m.max((v - mean).abs())) / mean.abs();
        let label = if j == 0 { "Z0".to_string() } else { format!("Z{}", j + 1) };
        if !(spread <= MISMATCH_TOLERANCE) {
            return Err(BridgeError::KernelMismatch(format!(
                "{label}/U deviates from c·s_κ(r)·θ by {spread:e}"
            )));
        }
        fields.push(KernelField {
            label,
            harmonic: j + 1,
            coefficient: mean,
            spread,
            bulk_mean: mean * s_n * odd_moment,
            boundary_mean: mean * s_rn * odd_moment,
        });
    }

    let grid = cosine_grid(ball.radius, 256, 1e-6 * ball.radius);
    let radial = RadialFunction::from_fn(grid, 1, |r| (ball.s(r), ball.s_prime(r)))?;
    let n1 = sector_integrals(ball, &radial)?.n_form(ball, profile.lambda, profile.sigma, 1);
    let harmonic_mass = sphere_area(n - 1) / n as f64;
    let gram = DMatrix::from_fn(n, n, |a, b| {
        if a == b {
            fields[a].coefficient * fields[b].coefficient * harmonic_mass * n1
        } else {
            0.0
        }
    });
    let mut eig: Vec<f64> = SymmetricEigen::new(gram).eigenvalues.iter().copied().collect();
    eig.sort_by(f64::total_cmp);
    let gram_condition = eig[n - 1] / eig[0];
    if !(eig[0] > 0.0) {
        return Err(BridgeError::KernelMismatch("kernel fields are linearly dependent".into()));
    }
    Ok(KernelFields {
        radial,
        fields,
        gram_eigenvalues: eig,
        gram_condition,
    })
}
