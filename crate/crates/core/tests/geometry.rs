use bridge_core::geometry::{
    chart_distance, conformal_factor, geodesic_distance, inverse_square_correction, log_derivative_correction,
    model_ball_from_profile, s_kappa, s_kappa_prime, stereo, stereo_inverse,
};
use bridge_core::profile::profile_from_shift;
use bridge_core::quadrature::gauss_legendre;
use bridge_core::{Branch, BridgeError, QuadratureSpec};
use proptest::prelude::*;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

#[test]
fn zero_curvature_is_rejected() {
    assert!(matches!(s_kappa(0.0, 1.0), Err(BridgeError::Domain(_))));
    assert!(s_kappa_prime(f64::NAN, 1.0).is_err());
}

#[test]
fn s_kappa_matches_unit_models() {
    assert!(close(s_kappa(1.0, 0.7).unwrap(), 0.7f64.sin(), 1e-15));
    assert!(close(s_kappa(-1.0, 0.7).unwrap(), 0.7f64.sinh(), 1e-15));
    // s_κ(r) = s_1(√κ r)/√κ
    assert!(close(s_kappa(4.0, 0.3).unwrap(), 0.6f64.sin() / 2.0, 1e-15));
}

#[test]
fn series_corrections_are_continuous_at_the_switch() {
    for kappa in [3.0, -3.0, 1e4, -1e4] {
        let r0 = 1e-2 / f64::abs(kappa).sqrt();
        let (lo, hi) = (r0 * (1.0 - 1e-9), r0 * (1.0 + 1e-9));
        let (a, b) = (log_derivative_correction(kappa, lo), log_derivative_correction(kappa, hi));
        assert!((a - b).abs() <= 1e-8 * a.abs(), "log-derivative jump at κ = {kappa}: {a} vs {b}");
        let (a, b) = (inverse_square_correction(kappa, lo), inverse_square_correction(kappa, hi));
        assert!((a - b).abs() <= 1e-8 * a.abs(), "inverse-square jump at κ = {kappa}: {a} vs {b}");
    }
}

proptest! {
    #[test]
    fn log_derivative_correction_matches_direct_formula(kappa in -50.0f64..50.0, r in 0.05f64..0.2) {
        prop_assume!(kappa.abs() > 1e-3);
        prop_assume!(kappa < 0.0 || kappa.sqrt() * r < 3.0);
        let direct = s_kappa_prime(kappa, r).unwrap() / s_kappa(kappa, r).unwrap() - 1.0 / r;
        prop_assert!((log_derivative_correction(kappa, r) - direct).abs() < 1e-10 * direct.abs().max(1.0));
    }

    #[test]
    fn stereographic_charts_are_inverse(y0 in -3.0f64..3.0, y1 in -3.0f64..3.0, y2 in -3.0f64..3.0) {
        let y = [y0, y1, y2];
        let p = stereo_inverse(Branch::Spherical, &y).unwrap();
        prop_assert!(p.constraint_residual(Branch::Spherical).abs() < 1e-13);
        let back = stereo(Branch::Spherical, &p);
        for (a, b) in back.iter().zip(&y) {
            prop_assert!((a - b).abs() < 1e-11 * b.abs().max(1.0));
        }
        let r2 = y0 * y0 + y1 * y1 + y2 * y2;
        prop_assume!(r2 > 1.05);
        let q = stereo_inverse(Branch::Hyperbolic, &y).unwrap();
        prop_assert!(q.constraint_residual(Branch::Hyperbolic).abs() < 1e-9 * q.coords[3].powi(2));
        let back = stereo(Branch::Hyperbolic, &q);
        for (a, b) in back.iter().zip(&y) {
            prop_assert!((a - b).abs() < 1e-9 * b.abs().max(1.0));
        }
    }

    /// Short Euclidean steps dy have model length √(conformal factor)·|dy|.
    #[test]
    fn conformal_factor_measures_short_steps(y0 in 1.2f64..3.0, y1 in -2.0f64..2.0, spherical in any::<bool>()) {
        let branch = if spherical { Branch::Spherical } else { Branch::Hyperbolic };
        let y = [y0, y1];
        let h = 1e-5;
        let p = stereo_inverse(branch, &y).unwrap();
        let q = stereo_inverse(branch, &[y0 + h, y1]).unwrap();
        let d = geodesic_distance(branch, 1.0, &p, &q).unwrap();
        let mid = conformal_factor(branch, &[y0 + 0.5 * h, y1]).unwrap().sqrt() * h;
        prop_assert!((d - mid).abs() < 1e-8 * mid);
    }

    #[test]
    fn chart_distance_agrees_with_ambient_distance(
        x0 in 0.0f64..3.0, x1 in -2.0f64..2.0, z0 in 0.0f64..3.0, z1 in -2.0f64..2.0, t in -4.0f64..-1.2,
    ) {
        let (x, z) = ([x0, x1], [z0, z1]);
        let mut yx = x; yx[0] -= t;
        let mut yz = z; yz[0] -= t;
        let p = stereo_inverse(Branch::Hyperbolic, &yx).unwrap();
        let q = stereo_inverse(Branch::Hyperbolic, &yz).unwrap();
        let ambient = geodesic_distance(Branch::Hyperbolic, 2.0, &p, &q).unwrap();
        let chart = chart_distance(Branch::Hyperbolic, 2.0, t, &x, Some(&z)).unwrap();
        prop_assert!((ambient - chart).abs() < 1e-9 * ambient.max(1.0));
    }
}

fn profiles() -> Vec<(Branch, f64)> {
    vec![
        (Branch::Spherical, 2.0),
        (Branch::Spherical, 0.0),
        (Branch::Spherical, -1.5),
        (Branch::Hyperbolic, -1.05),
        (Branch::Hyperbolic, -3.0),
    ]
}

#[test]
fn model_ball_satisfies_robin_identity_and_radius() {
    let quad = QuadratureSpec::default();
    for n in [3, 4, 5] {
        for (branch, t) in profiles() {
            let p = profile_from_shift(n, branch, t, &quad).unwrap();
            let ball = model_ball_from_profile(&p).unwrap();
            assert!(ball.robin_residual().abs() < 1e-10 * ball.beta.abs().max(1.0), "n={n} {branch} t={t}");
            // β = −t/√α on both branches.
            assert!(close(ball.beta, -t / ball.alpha.sqrt(), 1e-12));
            assert_eq!(ball.kappa.signum(), branch.sign());
            // Boundary points x = 0 and x = e₂ both lie on the sphere of radius R about the centre.
            let mut centre = vec![0.0; n];
            centre[0] = ball.center_x1;
            let mut e2 = vec![0.0; n];
            e2[1] = 1.0;
            for b in [vec![0.0; n], e2] {
                let d = chart_distance(branch, ball.alpha, t, &b, Some(&centre)).unwrap();
                assert!(close(d, ball.radius, 1e-9), "n={n} {branch} t={t}: {d} vs {}", ball.radius);
            }
        }
    }
}

#[test]
fn radial_volume_matches_quadrature() {
    let quad = QuadratureSpec::default();
    let rule = gauss_legendre(40);
    for n in [3, 4, 5, 6] {
        for (branch, t) in profiles() {
            let ball = model_ball_from_profile(&profile_from_shift(n, branch, t, &quad).unwrap()).unwrap();
            let numeric: f64 = rule.mapped(0.0, ball.radius).map(|(r, w)| w * ball.s(r).powi(n as i32 - 1)).sum();
            let exact = ball.radial_volume();
            assert!((exact - numeric).abs() <= 1e-11 * numeric, "n={n} {branch} t={t}: {exact} vs {numeric}");
        }
    }
}

#[test]
fn polar_coordinates_invert_the_chart() {
    let quad = QuadratureSpec::default();
    for (branch, t) in profiles() {
        let ball = model_ball_from_profile(&profile_from_shift(3, branch, t, &quad).unwrap()).unwrap();
        for &(fr, theta) in &[(0.2, 0.3), (0.5, 1.4), (0.9, 2.8), (0.99, 0.01)] {
            let r = fr * ball.radius;
            let c = ball.chart_point(r, theta);
            let x = [c.x[0], c.x[1], 0.0];
            assert!(x[0] > 0.0);
            let (r2, dir) = ball.polar(&x).unwrap();
            assert!(close(r2, r, 1e-9), "{branch} t={t}: r {r2} vs {r}");
            assert!((dir[0].acos() - theta).abs() < 1e-7, "{branch} t={t}: θ {} vs {theta}", dir[0].acos());
        }
    }
}
