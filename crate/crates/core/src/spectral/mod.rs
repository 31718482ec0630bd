//! The reduced Robin eigenvalue problem on the model ball.
//!
//! Through the ground-state transform ψ = U·(φ∘F) the second variation of
//! the bridge problem becomes the form
//!
//!   𝒬(φ) = ∫_B |∇φ|² − nκ ∫_B φ² − β ∫_{∂B} φ²,
//!
//! measured against the transported Dirichlet energy
//!
//!   N(φ) = ∫_B |∇φ|² + λ ∫_B φ² − σ ∫_{∂B} φ² = ‖∇ψ‖²_{L²(ℍⁿ₊)}.
//!
//! Both separate over spherical harmonics, so each sector is a radial
//! generalized eigenvalue problem. Because N⁻¹𝒬 is the identity plus a
//! compact operator, every sector's spectrum accumulates at μ = 1; a sector
//! whose form never drops below N has bottom exactly 1, and that bottom is
//! not attained.

pub mod fem;
pub mod forms;
pub mod kernel;
pub mod shooting;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{BridgeError, Result};
use crate::geometry::ModelBall;
use crate::profile::BridgeProfile;
use crate::report::Check;
pub use fem::{Boundary, Extrapolated, Pencil};
pub use forms::{n_form_sector, q_form_sector, sector_integrals, RadialFunction, Sector, SectorIntegrals};
pub use kernel::{kernel_fields, KernelField, KernelFields};
pub use shooting::{shoot, shoot_with, ShootingOptions};

/// Sector bottoms below this are treated as a contradiction with the
/// nonnegativity of the second variation.
pub const NEGATIVITY_TOLERANCE: f64 = 1e-6;
/// Sector bottoms must clear this floor for the gap to count as positive.
pub const POSITIVE_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SectorConstraint {
    Unconstrained,
    /// ∫ f s^{n−1} = 0 and f(R) = 0: the two mean-zero conditions restricted to radial functions.
    ZeroMeanZeroTrace,
    /// N-orthogonal to the kernel profile s_κ.
    KernelOrthogonal,
}

impl SectorConstraint {
    /// The constraint that defines the admissible space in sector ℓ.
    pub fn for_sector(ell: usize) -> Self {
        match ell {
            0 => Self::ZeroMeanZeroTrace,
            1 => Self::KernelOrthogonal,
            _ => Self::Unconstrained,
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            Self::Unconstrained => "none",
            Self::ZeroMeanZeroTrace => "integral f s^(n-1) = 0, f(R) = 0",
            Self::KernelOrthogonal => "N-orthogonal to s_kappa",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralOptions {
    /// Intervals of the coarse grid; the fine grid has twice as many.
    pub intervals: usize,
    pub shooting: ShootingOptions,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self {
            intervals: 2000,
            shooting: ShootingOptions::default(),
        }
    }
}

/// Result of one constrained sector minimization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorBottom {
    pub ell: usize,
    pub constraint: SectorConstraint,
    pub multiplicity: u64,
    /// inf 𝒬_ℓ/N_ℓ over the admissible space.
    pub value: f64,
    /// False when the infimum is the accumulation point 1.
    pub attained: bool,
    /// Lowest discrete constrained eigenvalue on both grids.
    pub discrete: Extrapolated,
    /// The eigenvalue whose eigenfunction is returned: the bottom when
    /// attained, otherwise the largest (least oscillatory) eigenvalue.
    pub representative: Extrapolated,
    /// Shooting eigenvalue refined from the extrapolated representative.
    pub shooting: f64,
    /// |shooting − extrapolated| for the representative.
    pub shooting_agreement: f64,
    /// Rayleigh quotient 𝒬/N of the returned eigenfunction.
    pub argmin_rayleigh: f64,
    pub argmin: RadialFunction,
}

fn constrained_index(ell: usize, constraint: SectorConstraint) -> Result<(Boundary, usize)> {
    match constraint {
        SectorConstraint::Unconstrained => Ok((Boundary::Natural, 0)),
        SectorConstraint::ZeroMeanZeroTrace if ell == 0 => Ok((Boundary::ZeroMeanZeroTrace, 0)),
        // The kernel is the lowest eigenvector, so its N-complement starts at the second eigenvalue.
        SectorConstraint::KernelOrthogonal if ell == 1 => Ok((Boundary::Natural, 1)),
        _ => Err(BridgeError::Domain(format!(
            "constraint {constraint:?} does not apply to sector {ell}"
        ))),
    }
}

/// The `count` lowest constrained discrete eigenvalues of 𝒬_ℓ/N_ℓ on both grids.
pub fn sector_eigenvalues(
    ball: &ModelBall,
    profile: &BridgeProfile,
    ell: usize,
    constraint: SectorConstraint,
    count: usize,
    opts: &SpectralOptions,
) -> Result<Vec<Extrapolated>> {
    let (boundary, k0) = constrained_index(ell, constraint)?;
    let coarse = fem::assemble(ball, profile.lambda, profile.sigma, ell, opts.intervals, boundary)?;
    let fine = fem::assemble(ball, profile.lambda, profile.sigma, ell, 2 * opts.intervals, boundary)?;
    (k0..k0 + count)
        .map(|k| Ok(Extrapolated::new(coarse.eigenvalue(k)?, fine.eigenvalue(k)?)))
        .collect()
}

pub fn sector_bottom(ball: &ModelBall, profile: &BridgeProfile, ell: usize, constraint: SectorConstraint) -> Result<SectorBottom> {
    sector_bottom_with(ball, profile, ell, constraint, &SpectralOptions::default())
}

pub fn sector_bottom_with(
    ball: &ModelBall,
    profile: &BridgeProfile,
    ell: usize,
    constraint: SectorConstraint,
    opts: &SpectralOptions,
) -> Result<SectorBottom> {
    let (boundary, k) = constrained_index(ell, constraint)?;
    let (lambda, sigma) = (profile.lambda, profile.sigma);
    let coarse = fem::assemble(ball, lambda, sigma, ell, opts.intervals, boundary)?;
    let fine = fem::assemble(ball, lambda, sigma, ell, 2 * opts.intervals, boundary)?;
    coarse.check_definite()?;
    fine.check_definite()?;
    let discrete = Extrapolated::new(coarse.eigenvalue(k)?, fine.eigenvalue(k)?);
    let attained = fine.count_below(1.0) > k;
    let representative = if attained {
        discrete
    } else {
        Extrapolated::new(coarse.eigenvalue(coarse.dim() - 1)?, fine.eigenvalue(fine.dim() - 1)?)
    };
    representative.check("sector eigenvalue")?;
    if !attained {
        discrete.check("threshold approach")?;
    }

    let guess = representative.extrapolated;
    let width = 1e-7 * guess.abs().max(1e-3);
    let limit = 1e-2 * (guess - 1.0).abs().max(1e-6);
    let sopts = opts.shooting;
    let (shooting, argmin) = if boundary == Boundary::ZeroMeanZeroTrace {
        let mu = shooting::refine_root(|m| Ok(shooting::secular(ball, m, &sopts)?.0), guess, width, limit)?;
        (mu, shooting::secular(ball, mu, &sopts)?.1)
    } else {
        let mu = shooting::refine_root(|m| Ok(shoot_with(ball, ell, m, &sopts)?.mismatch), guess, width, limit)?;
        (mu, shoot_with(ball, ell, mu, &sopts)?.f)
    };
    let ints = sector_integrals(ball, &argmin)?;
    let nval = ints.n_form(ball, lambda, sigma, ell);
    if !(nval > 0.0) {
        return Err(BridgeError::Transport(format!("eigenfunction has transported norm {nval:e}")));
    }
    let argmin_rayleigh = ints.q_form(ball, ell) / nval;
    // Unit transported norm, positive at the first node.
    let sign = if argmin.values.iter().find(|v| v.abs() > 0.0).copied().unwrap_or(1.0) < 0.0 { -1.0 } else { 1.0 };
    let argmin = argmin.scaled(sign / nval.sqrt());
    Ok(SectorBottom {
        ell,
        constraint,
        multiplicity: Sector::new(ball.n, ell).multiplicity,
        value: if attained { discrete.extrapolated } else { 1.0 },
        attained,
        discrete,
        representative,
        shooting,
        shooting_agreement: (shooting - representative.extrapolated).abs(),
        argmin_rayleigh,
        argmin,
    })
}

/// Per-sector row of a [`SpectralReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorSummary {
    pub ell: usize,
    pub constraint: SectorConstraint,
    pub description: String,
    pub multiplicity: u64,
    pub bottom: f64,
    pub attained: bool,
    pub discrete: Extrapolated,
    pub representative: Extrapolated,
    pub shooting: f64,
    /// |shooting − extrapolated| / max(1, |μ|).
    pub shooting_agreement: f64,
}

impl From<&SectorBottom> for SectorSummary {
    fn from(b: &SectorBottom) -> Self {
        Self {
            ell: b.ell,
            constraint: b.constraint,
            description: b.constraint.describe().to_string(),
            multiplicity: b.multiplicity,
            bottom: b.value,
            attained: b.attained,
            discrete: b.discrete,
            representative: b.representative,
            shooting: b.shooting,
            shooting_agreement: b.shooting_agreement / b.representative.extrapolated.abs().max(1.0),
        }
    }
}

/// The ℓ = 1 kernel seen by shooting at μ = 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelDiagnostics {
    /// Lowest ℓ = 1 value without the orthogonality constraint.
    pub unconstrained_bottom: f64,
    /// Normalized Robin mismatch of the regular ℓ = 1 solution.
    pub shooting_mismatch: f64,
    /// max|f − c·s_κ| / max|f| after matching scales at R.
    pub profile_deviation: f64,
    /// (s′_κ(R)/s_κ(R) − β) / max(|β|, 1).
    pub robin_residual: f64,
    /// Fitted d log f / d log r near the start.
    pub start_slope: f64,
    /// Number of kernel directions: the multiplicity of every sector with a zero bottom.
    pub dimension: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonotoneRow {
    pub ell: usize,
    pub bottom: f64,
    /// bottom(ℓ) > bottom(ℓ − 1); always true for ℓ = 2.
    pub increasing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub ball: ModelBall,
    pub l_max: usize,
    pub per_sector: Vec<SectorSummary>,
    pub kernel: KernelDiagnostics,
    pub kernel_residuals: Vec<f64>,
    /// Λ_T: the least constrained sector bottom.
    pub gap: f64,
    pub gap_sector: usize,
    /// Least bottom among the ℓ = 0 and ℓ ≥ 2 sectors, where no kernel lives.
    pub floor: f64,
    /// Largest discretization or shooting discrepancy over the sectors.
    pub resolution: f64,
    /// Λ_T exceeds ten times the resolution.
    pub gap_positive: bool,
    pub monotonicity: Vec<MonotoneRow>,
    pub monotone_from_two: bool,
    /// The ℓ = l_max bottom is the largest of the computed ℓ ≥ 2 bottoms.
    pub tail_is_largest: bool,
    pub checks: Vec<Check>,
}

/// Fitted log-slope of |f| between the first two nodes of a regular solution.
pub fn start_slope(f: &RadialFunction) -> f64 {
    let (r0, r1) = (f.grid[0], f.grid[1]);
    let (f0, f1) = (f.values[0].abs(), f.values[1].abs());
    (f1.ln() - f0.ln()) / (r1.ln() - r0.ln())
}

/// Bottoms below this count as kernel directions.
const KERNEL_ZERO: f64 = 1e-7;

/// Diagnostics for the ℓ = 1 kernel from the unconstrained ℓ = 1 bottom.
pub fn kernel_diagnostics(ball: &ModelBall, unconstrained: &SectorBottom) -> Result<KernelDiagnostics> {
    let (mismatch, f) = shoot(ball, 1, 0.0)?;
    let c = f.values.last().copied().unwrap_or(0.0) / ball.s(ball.radius);
    let deviation = f
        .grid
        .iter()
        .zip(&f.values)
        .map(|(&r, v)| (v - c * ball.s(r)).abs())
        .fold(0.0, f64::max)
        / f.max_abs();
    Ok(KernelDiagnostics {
        unconstrained_bottom: unconstrained.value,
        shooting_mismatch: mismatch,
        profile_deviation: deviation,
        robin_residual: ball.robin_residual() / ball.beta.abs().max(1.0),
        start_slope: start_slope(&f),
        dimension: if unconstrained.value.abs() < KERNEL_ZERO { unconstrained.multiplicity } else { 0 },
    })
}

pub fn spectral_gap(ball: &ModelBall, profile: &BridgeProfile, l_max: usize) -> Result<SpectralReport> {
    spectral_gap_with(ball, profile, l_max, &SpectralOptions::default())
}

pub fn spectral_gap_with(ball: &ModelBall, profile: &BridgeProfile, l_max: usize, opts: &SpectralOptions) -> Result<SpectralReport> {
    if l_max < 3 {
        return Err(BridgeError::Domain(format!("l_max = {l_max} must be at least 3")));
    }
    let mut tasks: Vec<(usize, SectorConstraint)> = vec![(1, SectorConstraint::Unconstrained)];
    tasks.extend((0..=l_max).map(|l| (l, SectorConstraint::for_sector(l))));
    let bottoms: Vec<SectorBottom> = tasks
        .par_iter()
        .map(|&(l, c)| sector_bottom_with(ball, profile, l, c, opts))
        .collect::<Result<_>>()?;
    let (kernel_bottom, constrained) = bottoms.split_first().expect("nonempty task list");

    for b in constrained {
        if b.value < -NEGATIVITY_TOLERANCE {
            return Err(BridgeError::Negativity {
                ell: b.ell,
                value: b.value,
                constraint: b.constraint.describe().to_string(),
            });
        }
    }
    let per_sector: Vec<SectorSummary> = constrained.iter().map(SectorSummary::from).collect();
    let (gap_sector, gap) = per_sector
        .iter()
        .map(|s| (s.ell, s.bottom))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least one sector");
    let floor = per_sector.iter().filter(|s| s.ell != 1).map(|s| s.bottom).fold(f64::INFINITY, f64::min);
    // Unattained sectors sit exactly at 1 and do not limit the gap.
    let resolution = constrained
        .iter()
        .filter(|b| b.attained)
        .map(|b| (b.discrete.fine - b.discrete.extrapolated).abs() + b.shooting_agreement)
        .fold(0.0, f64::max);

    let mut kernel = kernel_diagnostics(ball, kernel_bottom)?;
    kernel.dimension += per_sector.iter().filter(|s| s.bottom.abs() < KERNEL_ZERO).map(|s| s.multiplicity).sum::<u64>();

    let higher: Vec<&SectorSummary> = per_sector.iter().filter(|s| s.ell >= 2).collect();
    let monotonicity: Vec<MonotoneRow> = higher
        .iter()
        .enumerate()
        .map(|(i, s)| MonotoneRow {
            ell: s.ell,
            bottom: s.bottom,
            increasing: i == 0 || s.bottom > higher[i - 1].bottom,
        })
        .collect();
    let monotone_from_two = monotonicity.iter().all(|m| m.increasing);
    let top = higher.last().map(|s| s.bottom).unwrap_or(f64::NAN);
    let tail_is_largest = higher[..higher.len() - 1].iter().all(|s| s.bottom < top);

    let worst_agreement = per_sector.iter().map(|s| s.shooting_agreement).fold(0.0, f64::max);
    let checks = vec![
        Check::new("kernel_unconstrained_bottom", kernel.unconstrained_bottom, 1e-7),
        Check::new("kernel_shooting_mismatch", kernel.shooting_mismatch, 1e-8),
        Check::new("kernel_profile_deviation", kernel.profile_deviation, 1e-8),
        Check::new("kernel_robin_residual", kernel.robin_residual, 1e-8),
        Check::new("shooting_vs_discrete", worst_agreement, 1e-6),
        Check::at_least("second_variation_floor", gap, -1e-8),
        Check::at_least("gap_above_resolution", gap - 10.0 * resolution, 0.0),
    ];
    Ok(SpectralReport {
        ball: ball.clone(),
        l_max,
        per_sector,
        kernel_residuals: vec![kernel.shooting_mismatch, kernel.profile_deviation, kernel.robin_residual],
        kernel,
        gap,
        gap_sector,
        floor,
        resolution,
        gap_positive: gap > 10.0 * resolution,
        monotonicity,
        monotone_from_two,
        tail_is_largest,
        checks,
    })
}
