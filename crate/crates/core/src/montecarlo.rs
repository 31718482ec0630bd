//! Importance-sampled Monte Carlo for the constraint integrals.
//!
//! Used only as an independent oracle for the beta-reduced quadrature. The
//! proposal is a multivariate Cauchy law, whose algebraic tails dominate the
//! bubble integrands, so the weights have finite variance. Samples are drawn
//! in fixed-size chunks, each chunk from its own ChaCha stream, so the
//! estimate is bit-identical for a given seed regardless of thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{BridgeError, Result};
use crate::geometry::Branch;

const CHUNK: u64 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "domain")]
pub enum McTarget {
    /// ∫_{ℍⁿ₊} base(x)^{−q(n−2)/2} dx.
    Bulk { q: f64 },
    /// ∫_{ℝⁿ⁻¹} (a² + |x′|²)^{−(n−1)} dx′.
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub standard_error: f64,
    pub samples: u64,
}

struct Cauchy {
    dim: usize,
    center0: f64,
    scale: f64,
    log_norm: f64,
}

impl Cauchy {
    fn new(dim: usize, center0: f64, scale: f64) -> Self {
        let h = 0.5 * (dim as f64 + 1.0);
        let log_norm = ln_gamma(h) - h * std::f64::consts::PI.ln() - dim as f64 * scale.ln();
        Self {
            dim,
            center0,
            scale,
            log_norm,
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng, x: &mut [f64]) -> f64 {
        let g: f64 = StandardNormal.sample(rng);
        let inv = 1.0 / g.abs();
        let mut r2 = 0.0;
        for xi in x.iter_mut() {
            let z: f64 = StandardNormal.sample(rng);
            let v = z * inv;
            r2 += v * v;
            *xi = self.scale * v;
        }
        x[0] += self.center0;
        // log density at the sample
        self.log_norm - 0.5 * (self.dim as f64 + 1.0) * (1.0 + r2).ln()
    }
}

pub fn mc_oracle(
    n: usize,
    branch: Branch,
    t: f64,
    target: McTarget,
    samples: u64,
    seed: u64,
) -> Result<McEstimate> {
    if n < 3 {
        return Err(BridgeError::Domain(format!("dimension n = {n} must be at least 3")));
    }
    if branch == Branch::Hyperbolic && !(t < -1.0) {
        return Err(BridgeError::Domain(format!("hyperbolic profiles need t < −1, got {t}")));
    }
    if samples < 2 {
        return Err(BridgeError::Domain("Monte Carlo needs at least two samples".into()));
    }
    let eta = branch.sign();
    let m = 0.5 * (n as f64 - 2.0);
    let a0 = (t * t + eta).sqrt();
    let (dim, proposal, exponent) = match target {
        McTarget::Bulk { q } => {
            let (c0, w) = match branch {
                Branch::Spherical if t > 0.0 => (t, 1.0),
                _ => (0.0, a0),
            };
            (n, Cauchy::new(n, c0, w), q * m)
        }
        McTarget::Boundary => (n - 1, Cauchy::new(n - 1, 0.0, a0), n as f64 - 1.0),
    };
    let chunks = samples.div_ceil(CHUNK);
    let partial: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k);
            let count = CHUNK.min(samples - k * CHUNK);
            let mut x = vec![0.0; dim];
            let (mut s1, mut s2) = (0.0, 0.0);
            for _ in 0..count {
                let log_q = proposal.sample(&mut rng, &mut x);
                let w = match target {
                    McTarget::Bulk { .. } => {
                        if x[0] <= 0.0 {
                            0.0
                        } else {
                            let s = x[0] - t;
                            let base = eta + s * s + x[1..].iter().map(|v| v * v).sum::<f64>();
                            (-exponent * base.ln() - log_q).exp()
                        }
                    }
                    McTarget::Boundary => {
                        let base = a0 * a0 + x.iter().map(|v| v * v).sum::<f64>();
                        (-exponent * base.ln() - log_q).exp()
                    }
                };
                s1 += w;
                s2 += w * w;
            }
            (s1, s2)
        })
        .collect();
    let (s1, s2) = partial.iter().fold((0.0, 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1));
    let nf = samples as f64;
    let mean = s1 / nf;
    let var = (s2 / nf - mean * mean).max(0.0) * nf / (nf - 1.0);
    Ok(McEstimate {
        estimate: mean,
        standard_error: (var / nf).sqrt(),
        samples,
    })
}

/// Seeded (branch, t) pairs for oracle runs: spherical t uniform in [−2, 3],
/// hyperbolic t = −1 − 10^u with u uniform in [−1, 1].
pub fn oracle_pairs(count: usize, seed: u64) -> Vec<(Branch, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            if i % 2 == 0 {
                (Branch::Spherical, rng.random_range(-2.0..3.0))
            } else {
                (Branch::Hyperbolic, -1.0 - 10f64.powf(rng.random_range(-1.0..1.0)))
            }
        })
        .collect()
}
