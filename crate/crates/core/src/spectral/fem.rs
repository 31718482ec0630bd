//! Piecewise-linear Galerkin discretization of the sector pencil on a
//! cosine-graded grid, with eigenvalues located by Sturm inertia counts.
//!
//! Both forms are tridiagonal. A single linear constraint cᵀx = 0 is
//! handled without projection: for H = A − μB the constrained inertia is
//! neg(H) + [cᵀH⁻¹c > 0] − 1, by the Haynsworth formula applied to the
//! bordered matrix [[H, c], [cᵀ, 0]].

use serde::{Deserialize, Serialize};

use super::forms::Sector;
use crate::error::{BridgeError, Result};
use crate::geometry::ModelBall;
use crate::quadrature::gauss_legendre;

const ELEMENT_POINTS: usize = 6;

#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    /// off[i] couples unknowns i and i + 1.
    pub off: Vec<f64>,
}

impl Tridiagonal {
    fn zeros(dim: usize) -> Self {
        Self {
            diag: vec![0.0; dim],
            off: vec![0.0; dim.saturating_sub(1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut m = vec![vec![0.0; n]; n];
        for i in 0..n {
            m[i][i] = self.diag[i];
            if i + 1 < n {
                m[i][i + 1] = self.off[i];
                m[i + 1][i] = self.off[i];
            }
        }
        m
    }
}

/// Negative pivots of the LDLᵀ factorization of a − μb and, if `c` is
/// given, the sign of cᵀ(a − μb)⁻¹c.
fn inertia(a: &Tridiagonal, b: &Tridiagonal, mu: f64, c: Option<&[f64]>) -> (usize, bool) {
    let n = a.dim();
    let mut neg = 0;
    let mut d_prev = 1.0;
    let mut z_prev = 0.0;
    let mut quad = 0.0;
    for i in 0..n {
        let h = a.diag[i] - mu * b.diag[i];
        let (d, l) = if i == 0 {
            (h, 0.0)
        } else {
            let e = a.off[i - 1] - mu * b.off[i - 1];
            let l = e / d_prev;
            (h - l * e, l)
        };
        let d = if d == 0.0 { f64::EPSILON * (h.abs() + 1e-300) } else { d };
        if d < 0.0 {
            neg += 1;
        }
        if let Some(c) = c {
            let z = c[i] - l * z_prev;
            quad += z * z / d;
            z_prev = z;
        }
        d_prev = d;
    }
    (neg, quad > 0.0)
}

/// Which sector constraint the discrete space carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Boundary {
    /// Free value at r = R (Robin data live in the forms).
    Natural,
    /// f(R) = 0 and ∫ f s^{n−1} = 0 (ℓ = 0 only).
    ZeroMeanZeroTrace,
}

/// The discrete pencil (A, B) for 𝒬_ℓ and N_ℓ.
#[derive(Debug, Clone, PartialEq)]
pub struct Pencil {
    pub a: Tridiagonal,
    pub b: Tridiagonal,
    /// Radii of the unknowns.
    pub nodes: Vec<f64>,
    pub constraint: Option<Vec<f64>>,
}

pub fn cosine_nodes(radius: f64, intervals: usize) -> Vec<f64> {
    (0..=intervals)
        .map(|j| {
            if j == intervals {
                radius
            } else {
                0.5 * radius * (1.0 - (std::f64::consts::PI * j as f64 / intervals as f64).cos())
            }
        })
        .collect()
}

/// Assemble the pencil of 𝒬_ℓ (A) and N_ℓ (B) for multipliers (λ, σ).
pub fn assemble(ball: &ModelBall, lambda: f64, sigma: f64, ell: usize, intervals: usize, boundary: Boundary) -> Result<Pencil> {
    if intervals < 8 {
        return Err(BridgeError::Grid(format!("{intervals} intervals is too coarse")));
    }
    if boundary == Boundary::ZeroMeanZeroTrace && ell != 0 {
        return Err(BridgeError::Domain("the zero-mean, zero-trace space is radial (ℓ = 0)".into()));
    }
    let n = ball.n as i32;
    let nf = ball.n as f64;
    let big_l = Sector::new(ball.n, ell).angular_eigenvalue;
    let grid = cosine_nodes(ball.radius, intervals);
    // The regular solution vanishes at the origin for ℓ ≥ 1.
    let first = usize::from(ell > 0);
    let last = if boundary == Boundary::ZeroMeanZeroTrace { intervals - 1 } else { intervals };
    let dim = last + 1 - first;
    let mut a = Tridiagonal::zeros(dim);
    let mut b = Tridiagonal::zeros(dim);
    let mut c = vec![0.0; dim];
    let rule = gauss_legendre(ELEMENT_POINTS);
    for e in 0..intervals {
        let (r0, r1) = (grid[e], grid[e + 1]);
        let h = r1 - r0;
        // Element integrals ∫w φᵢφⱼ, ∫L s^{n−3} φᵢφⱼ, ∫w φᵢ′φⱼ′ on the two local shape functions.
        let (mut m, mut ang, mut load) = ([[0.0; 2]; 2], [[0.0; 2]; 2], [0.0; 2]);
        let mut wsum = 0.0;
        for (r, w) in rule.mapped(r0, r1) {
            let s = ball.s(r);
            let wn3 = s.powi(n - 3);
            let wn1 = wn3 * s * s;
            let phi = [(r1 - r) / h, (r - r0) / h];
            for i in 0..2 {
                load[i] += w * wn1 * phi[i];
                for j in 0..2 {
                    m[i][j] += w * wn1 * phi[i] * phi[j];
                    ang[i][j] += w * big_l * wn3 * phi[i] * phi[j];
                }
            }
            wsum += w * wn1;
        }
        let stiff = wsum / (h * h);
        let k = [[stiff, -stiff], [-stiff, stiff]];
        for i in 0..2 {
            let gi = e + i;
            if gi < first || gi > last {
                continue;
            }
            let li = gi - first;
            c[li] += load[i];
            for j in 0..2 {
                let gj = e + j;
                if gj < first || gj > last {
                    continue;
                }
                let lj = gj - first;
                let base = k[i][j] + ang[i][j];
                let av = base - nf * ball.kappa * m[i][j];
                let bv = base + lambda * m[i][j];
                if li == lj {
                    a.diag[li] += av;
                    b.diag[li] += bv;
                } else if lj == li + 1 {
                    a.off[li] += av;
                    b.off[li] += bv;
                }
            }
        }
    }
    if boundary == Boundary::Natural {
        let wr = ball.s(ball.radius).powi(n - 1);
        a.diag[dim - 1] -= ball.beta * wr;
        b.diag[dim - 1] -= sigma * wr;
    }
    Ok(Pencil {
        a,
        b,
        nodes: grid[first..=last].to_vec(),
        constraint: (boundary == Boundary::ZeroMeanZeroTrace).then_some(c),
    })
}

impl Pencil {
    /// Dimension of the constrained space.
    pub fn dim(&self) -> usize {
        self.a.dim() - usize::from(self.constraint.is_some())
    }

    /// Number of constrained eigenvalues strictly below μ.
    pub fn count_below(&self, mu: f64) -> usize {
        let (neg, positive) = inertia(&self.a, &self.b, mu, self.constraint.as_deref());
        match self.constraint {
            Some(_) => (neg + usize::from(positive)).saturating_sub(1),
            None => neg,
        }
    }

    /// The transported norm must be positive definite on the discrete space.
    pub fn check_definite(&self) -> Result<()> {
        let zero = Tridiagonal::zeros(self.a.dim());
        let (neg, _) = inertia(&zero, &self.b, -1.0, None);
        if neg > 0 {
            return Err(BridgeError::Transport(format!(
                "discrete transported norm has {neg} negative directions"
            )));
        }
        Ok(())
    }

    /// The k-th (0-based) eigenvalue by bisection on the inertia count.
    pub fn eigenvalue(&self, k: usize) -> Result<f64> {
        if k >= self.dim() {
            return Err(BridgeError::Domain(format!("eigenvalue index {k} exceeds dimension {}", self.dim())));
        }
        let mut lo = -1.0;
        let mut tries = 0;
        while self.count_below(lo) > k {
            lo = 2.0 * lo - 1.0;
            tries += 1;
            if tries > 80 {
                return Err(BridgeError::Grid("eigenvalue lower bound not found".into()));
            }
        }
        let mut hi = 1.0;
        tries = 0;
        while self.count_below(hi) <= k {
            hi = 2.0 * hi + 1.0;
            tries += 1;
            if tries > 80 {
                return Err(BridgeError::Grid("eigenvalue upper bound not found".into()));
            }
        }
        for _ in 0..400 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 2.0 * f64::EPSILON * hi.abs().max(lo.abs()) {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// Discrete eigenvalue on a grid and its refinement, with the h² extrapolation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extrapolated {
    pub coarse: f64,
    pub fine: f64,
    pub extrapolated: f64,
}

impl Extrapolated {
    pub fn new(coarse: f64, fine: f64) -> Self {
        Self {
            coarse,
            fine,
            extrapolated: (4.0 * fine - coarse) / 3.0,
        }
    }

    /// Extrapolation is trusted when the correction is small against the change between grids.
    pub fn check(&self, what: &str) -> Result<()> {
        let change = (self.fine - self.coarse).abs();
        if !self.extrapolated.is_finite() || change > 1e-3 * self.fine.abs().max(1.0) {
            return Err(BridgeError::Grid(format!(
                "{what}: grid values {} and {} are not in the asymptotic range",
                self.coarse, self.fine
            )));
        }
        Ok(())
    }
}
