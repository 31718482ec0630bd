//! Gamma-function helpers, sphere areas and zonal harmonics.

use std::f64::consts::PI;

use statrs::function::gamma::ln_gamma;

/// Surface area of the unit sphere Sᵏ ⊂ ℝᵏ⁺¹.
pub fn sphere_area(k: usize) -> f64 {
    let h = 0.5 * (k as f64 + 1.0);
    2.0 * (h * PI.ln() - ln_gamma(h)).exp()
}

/// ∫_{ℝᵈ} ρ^{2k} (a² + ρ²)^{-p} dx for d-dimensional x with ρ = |x|.
///
/// Converges when p > k + d/2.
pub fn radial_moment(d: usize, a: f64, p: f64, k: usize) -> f64 {
    let h = 0.5 * d as f64;
    let kf = k as f64;
    let ln = h * PI.ln() + (d as f64 + 2.0 * kf - 2.0 * p) * a.ln() + ln_gamma(kf + h)
        + ln_gamma(p - kf - h)
        - ln_gamma(h)
        - ln_gamma(p);
    ln.exp()
}

/// Gegenbauer polynomial C_ℓ^{(ν)}(x) and its x-derivative, for ν > 0.
pub fn gegenbauer(ell: usize, nu: f64, x: f64) -> (f64, f64) {
    let value = gegenbauer_value(ell, nu, x);
    let deriv = if ell == 0 {
        0.0
    } else {
        2.0 * nu * gegenbauer_value(ell - 1, nu + 1.0, x)
    };
    (value, deriv)
}

fn gegenbauer_value(ell: usize, nu: f64, x: f64) -> f64 {
    let mut c0 = 1.0;
    if ell == 0 {
        return c0;
    }
    let mut c1 = 2.0 * nu * x;
    for k in 2..=ell {
        let kf = k as f64;
        let c2 = (2.0 * x * (kf + nu - 1.0) * c1 - (kf + 2.0 * nu - 2.0) * c0) / kf;
        c0 = c1;
        c1 = c2;
    }
    c1
}

/// Unit-normalised zonal harmonic of degree ℓ on S^{n-1}, as a function of θ
/// (angle to the axis). Returns `(Y(θ), dY/dθ)`.
#[derive(Debug, Clone, Copy)]
pub struct ZonalHarmonic {
    pub n: usize,
    pub ell: usize,
    norm: f64,
}

impl ZonalHarmonic {
    pub fn new(n: usize, ell: usize) -> Self {
        let mut z = Self { n, ell, norm: 1.0 };
        // ∫_{S^{n-1}} Y² = |S^{n-2}| ∫_0^π Y(θ)² sin^{n-2}θ dθ; the integrand is a
        // trigonometric polynomial, so a moderate Gauss rule is exact.
        let rule = crate::quadrature::gauss_legendre(2 * ell + n + 32);
        let area = sphere_area(n - 2);
        let mass: f64 = rule
            .mapped(0.0, PI)
            .map(|(th, w)| {
                let (y, _) = z.eval(th);
                w * y * y * th.sin().powi(n as i32 - 2)
            })
            .sum::<f64>()
            * area;
        z.norm = 1.0 / mass.sqrt();
        z
    }

    pub fn eval(&self, theta: f64) -> (f64, f64) {
        let nu = 0.5 * self.n as f64 - 1.0;
        let (c, dc) = gegenbauer(self.ell, nu, theta.cos());
        (self.norm * c, -self.norm * theta.sin() * dc)
    }
}

/// Dimension of degree-ℓ spherical harmonics on S^{n-1}.
pub fn harmonic_multiplicity(n: usize, ell: usize) -> u64 {
    if ell == 0 {
        return 1;
    }
    // (2ℓ+n−2)(ℓ+n−3)!/(ℓ!(n−2)!) = (2ℓ+n−2)/(ℓ+n−2) · binom(ℓ+n−2, ℓ)
    let mut binom: u128 = 1;
    for i in 1..=ell as u128 {
        binom = binom * (n as u128 - 2 + i) / i;
    }
    ((2 * ell + n - 2) as u128 * binom / (ell + n - 2) as u128) as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(1) - 2.0 * PI).abs() < 1e-13);
        assert!((sphere_area(2) - 4.0 * PI).abs() < 1e-13);
        assert!((sphere_area(3) - 2.0 * PI * PI).abs() < 1e-12);
    }

    #[test]
    fn radial_moment_polar_integral() {
        // ∫_{ℝ²} (1+ρ²)^{-2} = π
        assert!((radial_moment(2, 1.0, 2.0, 0) - PI).abs() < 1e-13);
        // ∫_{ℝ} (1+x²)^{-1} = π
        assert!((radial_moment(1, 1.0, 1.0, 0) - PI).abs() < 1e-13);
        // ∫_{ℝ} x² (1+x²)^{-2} = π/2
        assert!((radial_moment(1, 1.0, 2.0, 1) - PI / 2.0).abs() < 1e-13);
    }

    #[test]
    fn legendre_case() {
        let (p2, dp2) = gegenbauer(2, 0.5, 0.3);
        assert!((p2 - 0.5 * (3.0 * 0.09 - 1.0)).abs() < 1e-15);
        assert!((dp2 - 0.9).abs() < 1e-15);
    }

    #[test]
    fn multiplicities() {
        assert_eq!(harmonic_multiplicity(3, 2), 5);
        assert_eq!(harmonic_multiplicity(4, 1), 4);
        assert_eq!(harmonic_multiplicity(5, 1), 5);
        assert_eq!(harmonic_multiplicity(4, 3), 16);
    }

    #[test]
    fn zonal_normalisation_n3() {
        // Y_ℓ = sqrt((2ℓ+1)/(4π)) P_ℓ(cos θ)
        let z = ZonalHarmonic::new(3, 2);
        let (y, _) = z.eval(0.0);
        assert!((y - (5.0 / (4.0 * PI)).sqrt()).abs() < 1e-14);
    }
}
