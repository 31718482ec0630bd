use bridge_core::geometry::model_ball_from_profile;
use bridge_core::profile::profile_from_shift;
use bridge_core::spectral::fem::{assemble, Boundary, Pencil};
use bridge_core::spectral::{sector_bottom, spectral_gap, SectorConstraint};
use bridge_core::{Branch, BridgeProfile, ModelBall, QuadratureSpec};
use nalgebra::{DMatrix, DVector, SymmetricEigen};

fn setup(n: usize, branch: Branch, t: f64) -> (BridgeProfile, ModelBall) {
    let p = profile_from_shift(n, branch, t, &QuadratureSpec::default()).unwrap();
    let ball = model_ball_from_profile(&p).unwrap();
    (p, ball)
}

fn dense(rows: Vec<Vec<f64>>) -> DMatrix<f64> {
    let n = rows.len();
    DMatrix::from_fn(n, n, |i, j| rows[i][j])
}

/// Orthonormal basis of c^⊥ (or the identity without a constraint).
fn constraint_basis(pencil: &Pencil) -> DMatrix<f64> {
    let dim = pencil.a.dim();
    match &pencil.constraint {
        None => DMatrix::identity(dim, dim),
        Some(c) => {
            let c = DVector::from_column_slice(c);
            let projector = DMatrix::<f64>::identity(dim, dim) - &c * c.transpose() / c.norm_squared();
            let svd = projector.svd(true, false);
            let u = svd.u.unwrap();
            let keep: Vec<usize> = (0..dim).filter(|&i| svd.singular_values[i] > 0.5).collect();
            DMatrix::from_fn(dim, keep.len(), |i, j| u[(i, keep[j])])
        }
    }
}

/// Number of negative eigenvalues of Pᵀ(A − μB)P: by Sylvester's law, the
/// number of constrained generalized eigenvalues below μ.
fn dense_count_below(pencil: &Pencil, basis: &DMatrix<f64>, mu: f64) -> usize {
    let a = dense(pencil.a.to_dense());
    let b = dense(pencil.b.to_dense());
    let m = basis.transpose() * (a - b * mu) * basis;
    let m = (&m + m.transpose()) * 0.5;
    SymmetricEigen::new(m).eigenvalues.iter().filter(|v| **v < 0.0).count()
}

/// Lowest eigenvalues of the dense projected pencil through a Cholesky reduction.
fn dense_eigenvalues(pencil: &Pencil, basis: &DMatrix<f64>) -> Vec<f64> {
    let a = dense(pencil.a.to_dense());
    let b = dense(pencil.b.to_dense());
    let ap = basis.transpose() * &a * basis;
    let bp = basis.transpose() * &b * basis;
    let l = bp.cholesky().expect("transported norm is positive definite").l();
    let l_inv = l.try_inverse().unwrap();
    let m = &l_inv * ap * l_inv.transpose();
    let m = (&m + m.transpose()) * 0.5;
    let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().cloned().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

#[test]
fn bisection_matches_dense_eigensolve() {
    for (branch, t) in [(Branch::Spherical, 0.8), (Branch::Spherical, -1.2), (Branch::Hyperbolic, -2.0)] {
        for n in [3, 5] {
            let (p, ball) = setup(n, branch, t);
            for (ell, boundary) in [(0, Boundary::ZeroMeanZeroTrace), (0, Boundary::Natural), (1, Boundary::Natural), (3, Boundary::Natural)] {
                let pencil = assemble(&ball, p.lambda, p.sigma, ell, 40, boundary).unwrap();
                let basis = constraint_basis(&pencil);
                assert_eq!(basis.ncols(), pencil.dim());
                let reference = dense_eigenvalues(&pencil, &basis);
                for (k, &expected) in reference.iter().take(5).enumerate() {
                    let got = pencil.eigenvalue(k).unwrap();
                    let tag = format!("n={n} {branch} t={t} ℓ={ell} {boundary:?} k={k}");
                    // The dense count brackets the bisection value exactly.
                    let h = 1e-10 * got.abs().max(1.0);
                    assert!(dense_count_below(&pencil, &basis, got - h) <= k, "{tag}");
                    assert!(dense_count_below(&pencil, &basis, got + h) > k, "{tag}");
                    // The Cholesky route loses digits to the conditioning of B near r = 0.
                    assert!((got - expected).abs() < 1e-7 * got.abs().max(1.0), "{tag}: {got} vs {expected}");
                }
            }
        }
    }
}

fn sphere_value(n: usize, k: usize) -> f64 {
    let (n, k) = (n as f64, k as f64);
    1.0 - n * (n + 2.0) / ((2.0 * k + n - 2.0) * (2.0 * k + n))
}

/// As t → ∞ the ball fills the sphere and sector ℓ ≥ 2 starts at the degree-ℓ
/// harmonic; the ℓ = 1 complement of the kernel starts at degree 2.
#[test]
fn large_shift_recovers_the_sphere_spectrum() {
    for n in [3, 4, 5] {
        let t = 200.0;
        let (p, ball) = setup(n, Branch::Spherical, t);
        let report = spectral_gap(&ball, &p, 6).unwrap();
        for s in &report.per_sector {
            let target = match s.ell {
                0 => continue,
                1 => sphere_value(n, 2),
                l => sphere_value(n, l),
            };
            assert!((s.bottom - target).abs() < 2e-5, "n={n} ℓ={}: {} vs {target}", s.ell, s.bottom);
        }
        let radial = report.per_sector[0].bottom;
        assert!(radial > 0.0 && radial < 1.0 / t, "n={n}: ℓ = 0 bottom {radial}");
    }
}

#[test]
fn kernel_is_the_unconstrained_l1_bottom() {
    for (branch, t) in [(Branch::Spherical, 0.3), (Branch::Hyperbolic, -1.5)] {
        let (p, ball) = setup(4, branch, t);
        let b = sector_bottom(&ball, &p, 1, SectorConstraint::Unconstrained).unwrap();
        assert!(b.value.abs() < 1e-7, "{branch}: {}", b.value);
        // The eigenfunction is proportional to s_κ.
        let f = &b.argmin;
        let scale = f.values.last().unwrap() / ball.s(ball.radius);
        for (r, v) in f.grid.iter().zip(&f.values).step_by(50) {
            assert!((v - scale * ball.s(*r)).abs() < 1e-6 * scale.abs() * ball.s(ball.radius));
        }
    }
}

#[test]
fn hyperbolic_radial_and_orthogonal_sectors_sit_at_the_threshold() {
    let (p, ball) = setup(3, Branch::Hyperbolic, -1.3);
    let report = spectral_gap(&ball, &p, 4).unwrap();
    for s in report.per_sector.iter().filter(|s| s.ell <= 1) {
        assert!(!s.attained);
        assert_eq!(s.bottom, 1.0);
        assert!(s.discrete.extrapolated >= 1.0 - 1e-8);
    }
    assert!(report.per_sector.iter().filter(|s| s.ell >= 2).all(|s| s.attained && s.bottom < 1.0));
}

#[test]
fn report_is_consistent() {
    let (p, ball) = setup(3, Branch::Spherical, 0.5);
    let r = spectral_gap(&ball, &p, 8).unwrap();
    assert_eq!(r.per_sector.len(), 9);
    assert_eq!(r.kernel.dimension, 3);
    let min = r.per_sector.iter().map(|s| s.bottom).fold(f64::INFINITY, f64::min);
    assert_eq!(r.gap, min);
    assert!(r.gap_positive && r.monotone_from_two && r.tail_is_largest);
    assert!(r.checks.iter().all(|c| c.pass), "{:?}", r.checks);
    // Multiplicities of the harmonic sectors on S².
    for s in &r.per_sector {
        assert_eq!(s.multiplicity, 2 * s.ell as u64 + 1);
    }
    assert!(spectral_gap(&ball, &p, 2).is_err());
}
