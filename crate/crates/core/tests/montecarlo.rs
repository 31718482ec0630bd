use std::f64::consts::PI;

use bridge_core::montecarlo::{mc_oracle, oracle_pairs, McTarget};
use bridge_core::Branch;

#[test]
fn estimates_are_reproducible_per_seed() {
    let a = mc_oracle(3, Branch::Spherical, 0.4, McTarget::Boundary, 50_000, 7).unwrap();
    let b = mc_oracle(3, Branch::Spherical, 0.4, McTarget::Boundary, 50_000, 7).unwrap();
    let c = mc_oracle(3, Branch::Spherical, 0.4, McTarget::Boundary, 50_000, 8).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.estimate, c.estimate);
    assert_eq!(a.samples, 50_000);
}

#[test]
fn boundary_estimate_brackets_the_closed_form() {
    for (branch, t) in [(Branch::Spherical, -1.3), (Branch::Spherical, 2.0), (Branch::Hyperbolic, -1.4)] {
        let mc = mc_oracle(3, branch, t, McTarget::Boundary, 400_000, 11).unwrap();
        // ∫_{ℝ²} (a² + ρ²)^{−2} = π/a²
        let exact = PI / (t * t + branch.sign());
        let z = (mc.estimate - exact).abs() / mc.standard_error;
        assert!(z < 4.0, "{branch} t={t}: z = {z}");
        assert!(mc.standard_error < 1e-2 * exact);
    }
}

#[test]
fn bulk_estimate_brackets_the_closed_form() {
    // ∫_{ℍ³₊} (1 + (x₁ − t)² + |x′|²)^{−3} dx = (π/2)(π/4 + t/(2(1+t²)) + atan(t)/2)
    let t: f64 = 0.6;
    let exact = 0.5 * PI * (PI / 4.0 + t / (2.0 * (1.0 + t * t)) + t.atan() / 2.0);
    let mc = mc_oracle(3, Branch::Spherical, t, McTarget::Bulk { q: 6.0 }, 400_000, 3).unwrap();
    let z = (mc.estimate - exact).abs() / mc.standard_error;
    assert!(z < 4.0, "z = {z}");
}

#[test]
fn invalid_requests_are_rejected() {
    assert!(mc_oracle(2, Branch::Spherical, 0.0, McTarget::Boundary, 100, 1).is_err());
    assert!(mc_oracle(3, Branch::Hyperbolic, -1.0, McTarget::Boundary, 100, 1).is_err());
    assert!(mc_oracle(3, Branch::Spherical, 0.0, McTarget::Boundary, 1, 1).is_err());
    let err = mc_oracle(3, Branch::Hyperbolic, 0.5, McTarget::Boundary, 100, 1).unwrap_err();
    assert!(err.is_domain());
}

#[test]
fn oracle_pairs_alternate_branches_in_range() {
    let pairs = oracle_pairs(10, 42);
    assert_eq!(pairs, oracle_pairs(10, 42));
    for (i, (branch, t)) in pairs.into_iter().enumerate() {
        if i % 2 == 0 {
            assert_eq!(branch, Branch::Spherical);
            assert!((-2.0..3.0).contains(&t));
        } else {
            assert_eq!(branch, Branch::Hyperbolic);
            assert!((-11.0..=-1.1).contains(&t));
        }
    }
}
