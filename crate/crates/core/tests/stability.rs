use std::f64::consts::PI;

use bridge_core::geometry::model_ball_from_profile;
use bridge_core::profile::profile_from_shift;
use bridge_core::quadrature::gauss_legendre;
use bridge_core::report::all_pass;
use bridge_core::spectral::sector_integrals;
use bridge_core::stability::{
    act, act_bubble, lift, stability_sweep, GroupElement, Lab, Perturbation, DEFAULT_EPS, NOISE_FLOOR,
};
use bridge_core::{Branch, BridgeProfile, QuadratureSpec};
use proptest::prelude::*;

fn profile(n: usize, branch: Branch, t: f64) -> BridgeProfile {
    profile_from_shift(n, branch, t, &QuadratureSpec::default()).unwrap()
}

fn random_direction(p: &BridgeProfile, ell: usize, seed: u64) -> Perturbation {
    Perturbation::random(&model_ball_from_profile(p).unwrap(), p, ell, seed).unwrap()
}

#[test]
fn group_action_preserves_the_norms() {
    let quad = QuadratureSpec::default();
    for (n, branch, t) in [(3, Branch::Spherical, 0.4), (4, Branch::Hyperbolic, -1.6), (5, Branch::Spherical, -1.1)] {
        let b = profile(n, branch, t).bubble();
        let mut shift = vec![0.0; n - 1];
        shift[0] = 0.7;
        shift[n - 2] -= 0.2;
        let g = GroupElement::new(1.8, shift).unwrap();
        let moved = act_bubble(&g, &b);
        let (before, after) = (b.norms(&quad).unwrap(), moved.norms(&quad).unwrap());
        assert!((before.0 - after.0).abs() < 1e-10 * before.0);
        assert!((before.1 - after.1).abs() < 1e-12 * before.1);
        assert!((before.2 - after.2).abs() < 1e-12 * before.2);
        // The closed form agrees with the pointwise action.
        let u = |x: &[f64]| b.value(x);
        let gu = act(&g, u);
        for x in [vec![0.3; n], vec![1.1, -0.4, 0.9, 0.0, 2.0][..n].to_vec()] {
            assert!((gu(&x) - moved.value(&x)).abs() < 1e-13 * moved.value(&x));
        }
    }
}

proptest! {
    #[test]
    fn composition_is_the_group_law(
        a in 0.2f64..5.0, b in 0.2f64..5.0, z in -2.0f64..2.0, w in -2.0f64..2.0,
        x0 in 0.0f64..3.0, x1 in -3.0f64..3.0, x2 in -3.0f64..3.0,
    ) {
        let g = GroupElement::new(a, vec![z, -w]).unwrap();
        let h = GroupElement::new(b, vec![w, 0.5 * z]).unwrap();
        let bubble = profile(3, Branch::Spherical, 0.3).bubble();
        let x = [x0, x1, x2];
        let nested = act(&g, act(&h, |y: &[f64]| bubble.value(y)))(&x);
        let composed = act(&g.compose(&h), |y: &[f64]| bubble.value(y))(&x);
        prop_assert!((nested - composed).abs() < 1e-12 * nested.abs());
        let closed = act_bubble(&g, &act_bubble(&h, &bubble)).value(&x);
        prop_assert!((closed - composed).abs() < 1e-12 * closed.abs());
    }
}

#[test]
fn lift_gradient_matches_finite_differences() {
    for (branch, t) in [(Branch::Spherical, 0.6), (Branch::Hyperbolic, -2.0)] {
        let p = profile(4, branch, t);
        let lifted = lift(&p, &random_direction(&p, 2, 5)).unwrap();
        let c = lifted.ball.center_x1;
        for x in [[0.7 * c, 0.3 * c, -0.2 * c, 0.1 * c], [1.6 * c, -0.5 * c, 0.4 * c, 0.2 * c]] {
            let (_, grad) = lifted.eval(&x).unwrap();
            let h = 1e-5 * c;
            for i in 0..4 {
                let (mut a, mut b) = (x, x);
                a[i] += h;
                b[i] -= h;
                let fd = (lifted.eval(&a).unwrap().0 - lifted.eval(&b).unwrap().0) / (2.0 * h);
                let scale = grad.iter().map(|g| g.abs()).fold(0.0, f64::max);
                assert!((fd - grad[i]).abs() < 1e-6 * scale, "{branch} ∂{i}: {fd} vs {}", grad[i]);
            }
        }
    }
}

/// ∫_{ℍ³₊} |∇(Uφ)|² dx computed in the half-space, with x = (r cos a, r sin a · ω).
fn half_space_dirichlet(p: &BridgeProfile, pert: &Perturbation) -> f64 {
    let lifted = lift(p, pert).unwrap();
    let c = lifted.ball.center_x1;
    let rule = gauss_legendre(24);
    let panels = 64;
    let mut total = 0.0;
    for i in 0..panels {
        // r = c·tan(πv/2) on v ∈ (0, 1)
        for (v, wv) in rule.mapped(i as f64 / panels as f64, (i + 1) as f64 / panels as f64) {
            let r = c * (0.5 * PI * v).tan();
            let dr = c * 0.5 * PI / (0.5 * PI * v).cos().powi(2);
            for j in 0..16 {
                for (a, wa) in rule.mapped(0.5 * PI * j as f64 / 16.0, 0.5 * PI * (j + 1) as f64 / 16.0) {
                    let x = [r * a.cos(), r * a.sin(), 0.0];
                    let (_, g) = lifted.eval(&x).unwrap();
                    let rho = r * a.sin();
                    total += wv * wa * dr * r * 2.0 * PI * rho * (g[0] * g[0] + g[1] * g[1]);
                }
            }
        }
    }
    total
}

#[test]
fn transported_norm_is_the_half_space_dirichlet_energy() {
    for (branch, t, ell) in [(Branch::Spherical, 0.5, 2), (Branch::Spherical, -0.9, 0), (Branch::Hyperbolic, -1.7, 3)] {
        let p = profile(3, branch, t);
        let pert = random_direction(&p, ell, 17);
        let ball = model_ball_from_profile(&p).unwrap();
        let n_form = sector_integrals(&ball, &pert.radial).unwrap().n_form(&ball, p.lambda, p.sigma, ell);
        assert!((n_form - 1.0).abs() < 1e-12);
        let direct = half_space_dirichlet(&p, &pert);
        assert!((direct - n_form).abs() < 1e-6, "{branch} t={t} ℓ={ell}: {direct} vs {n_form}");
        let lab = Lab::new(&p, &pert).unwrap();
        assert!((lab.n_form(&lab.perturbed(0.0, 1.0, 0.0)) - n_form).abs() < 1e-9);
    }
}

#[test]
fn lab_quadrature_reproduces_the_constraints() {
    for (n, branch, t) in [(3, Branch::Spherical, 1.0), (5, Branch::Hyperbolic, -1.3)] {
        let p = profile(n, branch, t);
        let lab = Lab::new(&p, &random_direction(&p, 1, 3)).unwrap();
        let (volume, area) = lab.measures();
        assert!((volume - 1.0).abs() < 1e-11, "{volume}");
        let boundary = p.trace.powf(p.exponents().two_sharp);
        assert!((area - boundary).abs() < 1e-11 * boundary, "{area} vs {boundary}");
    }
}

#[test]
fn kernel_lift_is_proportional_to_the_dilation_field() {
    let p = profile(3, Branch::Hyperbolic, -1.5);
    let lifted = lift(&p, &Perturbation::kernel(&model_ball_from_profile(&p).unwrap()).unwrap()).unwrap();
    let b = p.bubble();
    let c = lifted.ball.center_x1;
    let ratios: Vec<f64> = [[0.3, 0.2, 0.1], [1.4, -0.8, 0.3], [2.5, 0.1, -1.2], [0.9, 0.9, 0.9]]
        .iter()
        .map(|y| {
            let x = [y[0] * c, y[1] * c, y[2] * c];
            let (u, g) = b.eval(&x);
            let z0 = 0.5 * u + x.iter().zip(&g).map(|(a, d)| a * d).sum::<f64>();
            lifted.eval(&x).unwrap().0 / z0
        })
        .collect();
    for r in &ratios {
        assert!((r - ratios[0]).abs() < 1e-6 * ratios[0].abs(), "{ratios:?}");
    }
}

#[test]
fn orbit_points_are_recovered_by_the_nearest_point_search() {
    let p = profile(4, Branch::Spherical, 0.8);
    let lab = Lab::new(&p, &random_direction(&p, 2, 9)).unwrap();
    for a in [0.93, 1.0, 1.08] {
        let v = lab.orbit_point(a);
        let defect = lab.constraint_defect(&v).unwrap();
        assert!(defect[0].abs() < 1e-11 && defect[1].abs() < 1e-11);
        assert!(lab.deficit(&v).unwrap().abs() < NOISE_FLOOR);
        let near = lab.nearest_point(&v).unwrap();
        assert!((near.element.scale - a).abs() < 1e-8, "{a}: {}", near.element.scale);
        assert!(near.distance < 1e-6 * p.phi);
    }
    assert!(lab.noise_floor().unwrap() < NOISE_FLOOR);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn projections_satisfy_constraints_and_nonnegative_deficit(
        ell in 0usize..4, seed in any::<u64>(), eps in 1e-3f64..5e-2, spherical in any::<bool>(),
    ) {
        let p = if spherical { profile(3, Branch::Spherical, 0.7) } else { profile(4, Branch::Hyperbolic, -1.8) };
        let lab = Lab::new(&p, &random_direction(&p, ell, seed)).unwrap();
        let proj = lab.project(eps).unwrap();
        prop_assert!(proj.defect_after <= 1e-11);
        let defect = lab.constraint_defect(&proj.function).unwrap();
        prop_assert!(defect[0].abs() <= 1e-11 && defect[1].abs() <= 1e-11);
        prop_assert!(lab.deficit(&proj.function).unwrap() >= -NOISE_FLOOR);
        let near = lab.nearest_point(&proj.function).unwrap();
        prop_assert!(near.distance > 0.0);
    }
}

#[test]
fn sweep_extrapolates_the_quotient_and_passes_checks() {
    let p = profile(3, Branch::Spherical, 0.5);
    let pert = random_direction(&p, 2, 21);
    let report = stability_sweep(&p, &pert, &DEFAULT_EPS).unwrap();
    assert!(all_pass(&report.checks), "{:?}", report.checks);
    assert!((report.fitted_coefficient - report.q_over_n).abs() < 1e-3 * report.q_over_n);
    assert!(report.sweep.iter().all(|r| r.deficit >= -NOISE_FLOOR));
    assert!((report.slopes.defect - 2.0).abs() < 0.1);
}

#[test]
fn sweep_rejects_bad_amplitudes() {
    let p = profile(3, Branch::Spherical, 0.5);
    let pert = random_direction(&p, 2, 1);
    assert!(stability_sweep(&p, &pert, &[0.1, 0.05, 0.01]).unwrap_err().is_domain());
    assert!(stability_sweep(&p, &pert, &[0.1, 0.2, 0.01, 0.001]).is_err());
    assert!(stability_sweep(&p, &pert, &[0.1, 0.05, 0.0, -0.001]).is_err());
    let lab = Lab::new(&p, &pert).unwrap();
    assert!(lab.project(10.0).is_err());
}
