use std::f64::consts::PI;

use bridge_core::profile::{
    boundary_integral, bulk_integral, escobar_threshold, profile_from_shift, scan_branch, sobolev_constant,
    sobolev_constant_quadrature, solve_profile,
};
use bridge_core::report::all_pass;
use bridge_core::{Branch, BridgeError, BridgeProfile, QuadratureSpec};
use proptest::prelude::*;
use statrs::function::gamma::gamma;

/// πn(n−2)(Γ(n/2)/Γ(n))^{2/n}
fn aubin_talenti(n: usize) -> f64 {
    let nf = n as f64;
    PI * nf * (nf - 2.0) * (gamma(nf / 2.0) / gamma(nf)).powf(2.0 / nf)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn sobolev_constant_has_the_closed_form() {
    // S₃ = 3(π/2)^{4/3}
    assert!(rel(aubin_talenti(3), 3.0 * (PI / 2.0).powf(4.0 / 3.0)) < 1e-14);
    let quad = QuadratureSpec::default();
    for n in 3..=7 {
        assert!(rel(sobolev_constant(n), aubin_talenti(n)) < 1e-12, "n = {n}");
        assert!(rel(sobolev_constant_quadrature(n, &quad).unwrap(), aubin_talenti(n)) < 1e-10, "n = {n}");
    }
}

/// ∫_{ℍ³₊} (η + (x₁−t)² + |x′|²)^{−3} dx = (π/2) ∫_{−t}^∞ (u² + η)^{−2} du.
fn bulk_oracle_n3(branch: Branch, t: f64) -> f64 {
    let u0 = -t;
    let axis = match branch {
        Branch::Spherical => PI / 4.0 - u0 / (2.0 * (1.0 + u0 * u0)) - u0.atan() / 2.0,
        Branch::Hyperbolic => u0 / (2.0 * (u0 * u0 - 1.0)) - 0.25 * ((u0 + 1.0) / (u0 - 1.0)).ln(),
    };
    0.5 * PI * axis
}

#[test]
fn reduced_integrals_match_closed_forms() {
    let quad = QuadratureSpec::default();
    for (branch, t) in [
        (Branch::Spherical, 3.0),
        (Branch::Spherical, 0.2),
        (Branch::Spherical, -4.0),
        (Branch::Hyperbolic, -1.01),
        (Branch::Hyperbolic, -6.0),
    ] {
        let bulk = bulk_integral(3, branch, t, 6.0, &quad).unwrap();
        assert!(rel(bulk, bulk_oracle_n3(branch, t)) < 1e-11, "{branch} t={t}: {bulk}");
        // ∫_{ℝ²} (a² + ρ²)^{−2} = π/a²
        let a2 = t * t + branch.sign();
        assert!(rel(boundary_integral(3, branch, t).unwrap(), PI / a2) < 1e-13);
    }
}

#[test]
fn hyperbolic_bulk_integral_survives_the_threshold_limit() {
    let quad = QuadratureSpec::default();
    let t = -1.0 - 1e-9;
    let bulk = bulk_integral(3, Branch::Hyperbolic, t, 6.0, &quad).unwrap();
    assert!(rel(bulk, bulk_oracle_n3(Branch::Hyperbolic, t)) < 1e-6);
}

fn fd_residuals(p: &BridgeProfile, x: &[f64]) -> (f64, f64) {
    let ex = p.exponents();
    let u = |y: &[f64]| p.bubble().value(y);
    let h = 1e-4 * (1.0 + x[0].abs());
    let mut lap = 0.0;
    for i in 0..x.len() {
        let (mut a, mut b) = (x.to_vec(), x.to_vec());
        a[i] += h;
        b[i] -= h;
        lap += (u(&a) - 2.0 * u(x) + u(&b)) / (h * h);
    }
    let interior = (-lap - p.lambda * u(x).powf(ex.two_star - 1.0)).abs() / (p.lambda.abs() * u(x).powf(ex.two_star - 1.0));
    let mut y = x.to_vec();
    y[0] = 0.0;
    let mut y1 = y.clone();
    y1[0] = h;
    let mut y2 = y.clone();
    y2[0] = 2.0 * h;
    // One-sided second-order derivative; ∂_ν = −∂₁ on x₁ = 0.
    let d1 = (-3.0 * u(&y) + 4.0 * u(&y1) - u(&y2)) / (2.0 * h);
    let target = p.sigma * u(&y).powf(ex.two_sharp - 1.0);
    let boundary = (d1 - target).abs() / target.abs().max(1e-300);
    (interior, boundary)
}

#[test]
fn profiles_solve_the_euler_lagrange_system() {
    let quad = QuadratureSpec::default();
    for n in [3, 4, 5] {
        for (branch, t) in [(Branch::Spherical, 1.5), (Branch::Spherical, -0.8), (Branch::Hyperbolic, -2.5)] {
            let p = profile_from_shift(n, branch, t, &quad).unwrap();
            for x in [[0.3, 0.2, -0.4, 0.1, 0.0], [1.5, -0.7, 0.2, 0.0, 0.3]] {
                let (i, b) = fd_residuals(&p, &x[..n]);
                assert!(i < 1e-5, "n={n} {branch} t={t} interior {i}");
                assert!(b < 1e-6, "n={n} {branch} t={t} boundary {b}");
            }
        }
    }
}

#[test]
fn energy_identity_uses_the_minus_sign() {
    let quad = QuadratureSpec::default();
    for (branch, t) in [(Branch::Spherical, 0.7), (Branch::Hyperbolic, -1.8)] {
        let p = profile_from_shift(4, branch, t, &quad).unwrap();
        let dirichlet = p.bubble().dirichlet(&quad).unwrap();
        let boundary_term = p.sigma * p.trace.powf(p.exponents().two_sharp);
        assert!(rel(dirichlet, p.lambda - boundary_term) < 1e-10);
        let plus_gap = p.lambda + boundary_term - dirichlet;
        assert!(rel(plus_gap, 2.0 * boundary_term) < 1e-9);
    }
}

#[test]
fn threshold_and_invalid_inputs_are_domain_errors() {
    let quad = QuadratureSpec::default();
    let t_e = escobar_threshold(3, &quad).unwrap();
    let err = solve_profile(3, t_e, &quad).unwrap_err();
    assert_eq!(err.kind(), "DegenerateBridgeError");
    assert!(err.is_domain());
    assert!(matches!(solve_profile(2, 1.0, &quad), Err(BridgeError::Domain(_))));
    assert!(solve_profile(3, -1.0, &quad).is_err());
    assert!(profile_from_shift(3, Branch::Hyperbolic, -0.5, &quad).is_err());
}

#[test]
fn trace_increases_along_the_scan() {
    let quad = QuadratureSpec::default();
    let t_e = escobar_threshold(4, &quad).unwrap();
    for branch in [Branch::Spherical, Branch::Hyperbolic] {
        let scan = scan_branch(4, branch, &quad).unwrap();
        assert_eq!(scan.monotonicity_violations, 0, "{branch}");
        // Spherical shifts run upwards (T falls towards the Sobolev end); hyperbolic shifts run towards −1 (T grows).
        let expected = match branch {
            Branch::Spherical => -1,
            Branch::Hyperbolic => 1,
        };
        assert_eq!(scan.orientation, expected, "{branch}");
        match branch {
            Branch::Spherical => assert!(scan.traces.iter().all(|&x| x < t_e)),
            Branch::Hyperbolic => assert!(scan.traces.iter().all(|&x| x > t_e)),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Above roughly 3.9 T_E in n = 3 the shift sits within 2e−8 of −1 and one
    /// ulp of t moves T by more than 1e−9.
    #[test]
    fn solved_profiles_hit_the_trace_and_pass_invariants(n in 3usize..=5, ratio in 0.1f64..3.5) {
        prop_assume!((ratio - 1.0).abs() > 0.02);
        let quad = QuadratureSpec::default();
        let t_e = escobar_threshold(n, &quad).unwrap();
        let p = solve_profile(n, ratio * t_e, &quad).unwrap();
        prop_assert!(rel(p.trace, ratio * t_e) < 1e-9);
        prop_assert_eq!(p.branch, if ratio < 1.0 { Branch::Spherical } else { Branch::Hyperbolic });
        let checks = p.invariant_checks(&quad).unwrap();
        prop_assert!(all_pass(&checks), "{:?}", checks);
    }

    /// Every admissible u competes in the free-boundary half-space Sobolev
    /// quotient, whose minimum 2^{−2/n}S_n is the half-bubble (t = 0).
    #[test]
    fn phi_squared_lies_above_the_half_space_constant(n in 3usize..=5, ratio in 0.05f64..3.5) {
        prop_assume!((ratio - 1.0).abs() > 0.02);
        let quad = QuadratureSpec::default();
        let t_e = escobar_threshold(n, &quad).unwrap();
        let p = solve_profile(n, ratio * t_e, &quad).unwrap();
        let floor = 2f64.powf(-2.0 / n as f64) * aubin_talenti(n);
        prop_assert!(p.phi_squared() >= floor * (1.0 - 1e-12));
        prop_assert!(p.branch == Branch::Hyperbolic || p.phi_squared() < aubin_talenti(n));
    }
}

#[test]
fn half_bubble_attains_the_half_space_constant() {
    let quad = QuadratureSpec::default();
    for n in [3, 4, 5] {
        let p = profile_from_shift(n, Branch::Spherical, 0.0, &quad).unwrap();
        let floor = 2f64.powf(-2.0 / n as f64) * aubin_talenti(n);
        assert!(rel(p.phi_squared(), floor) < 1e-11, "n = {n}");
    }
}
