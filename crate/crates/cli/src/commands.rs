use bridge_core::geometry::model_ball_from_profile;
use bridge_core::montecarlo::{mc_oracle, oracle_pairs, McTarget};
use bridge_core::profile::{
    boundary_integral, bulk_integral, escobar_bubble, profile_from_shift, sobolev_constant_quadrature, Exponents,
};
use bridge_core::report::{rel_err, Check};
use bridge_core::spectral::{
    kernel_diagnostics, kernel_fields, sector_bottom, sector_eigenvalues, shoot, spectral_gap, start_slope,
    SectorConstraint, SpectralOptions,
};
use bridge_core::stability::{stability_sweep, Perturbation};
use bridge_core::Branch;
use clap::ValueEnum;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, to_value};

use crate::config::RunConfig;
use crate::output::{CommandOutput, Table};

pub fn profile(cfg: &RunConfig) -> anyhow::Result<CommandOutput> {
    let quad = cfg.quadrature()?;
    let (p, resolved) = cfg.profile()?;
    let ball = model_ball_from_profile(&p)?;
    let mut checks = p.invariant_checks(&quad)?;
    checks.push(Check::new(
        "robin_geometric",
        ball.robin_residual() / ball.beta.abs().max(1.0),
        1e-8,
    ));
    let mut table = Table::new(&[
        "n", "branch", "T", "T_over_TE", "t", "C", "lambda", "sigma", "phi_squared", "kappa", "R", "beta",
    ]);
    table.push(vec![
        p.n.into(),
        p.branch.to_string().into(),
        p.trace.into(),
        resolved.t_ratio.into(),
        p.t.into(),
        p.c.into(),
        p.lambda.into(),
        p.sigma.into(),
        p.phi_squared().into(),
        ball.kappa.into(),
        ball.radius.into(),
        ball.beta.into(),
    ]);
    Ok(CommandOutput {
        result: json!({
            "selection": resolved,
            "profile": p,
            "phi_squared": p.phi_squared(),
            "model_ball": ball,
        }),
        table,
        checks,
    })
}

/// Spherical shifts from +50 to −50, then hyperbolic shifts from −50 towards −1.
const SPHERICAL_SHIFTS: [f64; 15] = [50.0, 20.0, 10.0, 5.0, 2.0, 1.0, 0.5, 0.0, -0.5, -1.0, -2.0, -5.0, -10.0, -20.0, -50.0];
const HYPERBOLIC_SHIFTS: [f64; 10] = [-50.0, -20.0, -10.0, -5.0, -2.0, -1.5, -1.2, -1.1, -1.01, -1.001];

#[derive(Serialize)]
struct CurveDiagnostics {
    sobolev_constant: f64,
    escobar_phi_squared: f64,
    sobolev_endpoint_error: f64,
    jump_across_threshold: f64,
    spherical_end_vs_escobar: f64,
    hyperbolic_end_vs_escobar: f64,
    /// Adjacent rows where a column fails to increase, per column.
    monotonicity_violations: Vec<(&'static str, usize)>,
}

pub fn curve(cfg: &RunConfig) -> anyhow::Result<CommandOutput> {
    let quad = cfg.quadrature()?;
    let n = cfg.n;
    let shifts: Vec<(Branch, f64)> = SPHERICAL_SHIFTS
        .iter()
        .map(|&t| (Branch::Spherical, t))
        .chain(HYPERBOLIC_SHIFTS.iter().map(|&t| (Branch::Hyperbolic, t)))
        .collect();
    let rows = shifts
        .par_iter()
        .map(|&(branch, t)| {
            let p = profile_from_shift(n, branch, t, &quad)?;
            let ball = model_ball_from_profile(&p)?;
            Ok((p, ball))
        })
        .collect::<bridge_core::Result<Vec<_>>>()?;

    let mut table = Table::new(&["T", "t", "branch", "phi_squared", "lambda", "sigma", "kappa", "R", "beta"]);
    for (p, b) in &rows {
        table.push(vec![
            p.trace.into(),
            p.t.into(),
            p.branch.to_string().into(),
            p.phi_squared().into(),
            p.lambda.into(),
            p.sigma.into(),
            b.kappa.into(),
            b.radius.into(),
            b.beta.into(),
        ]);
    }

    let s_n = sobolev_constant_quadrature(n, &quad)?;
    let escobar = escobar_bubble(n, &quad)?.dirichlet(&quad)?;
    let phi2: Vec<f64> = rows.iter().map(|(p, _)| p.phi_squared()).collect();
    let last_sph = SPHERICAL_SHIFTS.len() - 1;
    let violations = |f: &dyn Fn(usize) -> f64| (1..rows.len()).filter(|&i| f(i) <= f(i - 1) || f(i).is_nan()).count();
    let diagnostics = CurveDiagnostics {
        sobolev_constant: s_n,
        escobar_phi_squared: escobar,
        sobolev_endpoint_error: rel_err(phi2[0], s_n),
        jump_across_threshold: rel_err(phi2[last_sph + 1], phi2[last_sph]),
        spherical_end_vs_escobar: rel_err(phi2[last_sph], escobar),
        hyperbolic_end_vs_escobar: rel_err(phi2[last_sph + 1], escobar),
        monotonicity_violations: vec![
            ("T", violations(&|i| rows[i].0.trace)),
            ("phi_squared", violations(&|i| phi2[i])),
            ("lambda", violations(&|i| rows[i].0.lambda)),
            ("sigma", violations(&|i| rows[i].0.sigma)),
            ("kappa", violations(&|i| rows[i].1.kappa)),
            ("R", violations(&|i| rows[i].1.radius)),
            ("beta", violations(&|i| rows[i].1.beta)),
        ],
    };
    let checks = vec![
        Check::new("sobolev_endpoint", diagnostics.sobolev_endpoint_error, 1e-2),
        Check::new("continuity_across_threshold", diagnostics.jump_across_threshold, 1e-2),
        Check::new("spherical_end_escobar", diagnostics.spherical_end_vs_escobar, 1e-2),
        Check::new("hyperbolic_end_escobar", diagnostics.hyperbolic_end_vs_escobar, 1e-2),
        Check::new("T_monotone_violations", diagnostics.monotonicity_violations[0].1 as f64, 0.0),
    ];
    Ok(CommandOutput {
        result: json!({ "rows": rows.len(), "diagnostics": diagnostics }),
        table,
        checks,
    })
}

pub fn spectrum(cfg: &RunConfig, count: usize) -> anyhow::Result<CommandOutput> {
    let (p, resolved) = cfg.profile()?;
    let ball = model_ball_from_profile(&p)?;
    let opts = SpectralOptions::default();
    let mut tasks = vec![(1, SectorConstraint::Unconstrained)];
    tasks.extend((0..=cfg.l_max).map(|l| (l, SectorConstraint::for_sector(l))));
    let spectra = tasks
        .par_iter()
        .map(|&(l, c)| sector_eigenvalues(&ball, &p, l, c, count, &opts))
        .collect::<bridge_core::Result<Vec<_>>>()?;

    let mut table = Table::new(&["ell", "constraint", "index", "coarse", "fine", "extrapolated"]);
    let mut sectors = Vec::new();
    for ((l, c), eigs) in tasks.iter().zip(&spectra) {
        for (k, e) in eigs.iter().enumerate() {
            table.push(vec![(*l).into(), c.describe().into(), k.into(), e.coarse.into(), e.fine.into(), e.extrapolated.into()]);
        }
        sectors.push(json!({ "ell": l, "constraint": c, "eigenvalues": eigs }));
    }
    let constrained_min = spectra[1..].iter().map(|e| e[0].extrapolated).fold(f64::INFINITY, f64::min);
    let checks = vec![
        Check::new("kernel_unconstrained_bottom", spectra[0][0].extrapolated, 1e-7),
        Check::at_least("constrained_floor", constrained_min, -1e-8),
    ];
    Ok(CommandOutput {
        result: json!({ "selection": resolved, "count": count, "sectors": sectors }),
        table,
        checks,
    })
}

pub fn gap(cfg: &RunConfig) -> anyhow::Result<CommandOutput> {
    let (p, resolved) = cfg.profile()?;
    let ball = model_ball_from_profile(&p)?;
    let report = spectral_gap(&ball, &p, cfg.l_max)?;
    let mut table = Table::new(&[
        "ell", "constraint", "multiplicity", "bottom", "attained", "coarse", "fine", "extrapolated", "shooting",
        "shooting_agreement",
    ]);
    for s in &report.per_sector {
        table.push(vec![
            s.ell.into(),
            s.description.clone().into(),
            s.multiplicity.into(),
            s.bottom.into(),
            s.attained.into(),
            s.discrete.coarse.into(),
            s.discrete.fine.into(),
            s.discrete.extrapolated.into(),
            s.shooting.into(),
            s.shooting_agreement.into(),
        ]);
    }
    let checks = report.checks.clone();
    Ok(CommandOutput {
        result: json!({ "selection": resolved, "spectral": to_value(&report)? }),
        table,
        checks,
    })
}

pub fn kernel(cfg: &RunConfig) -> anyhow::Result<CommandOutput> {
    let (p, resolved) = cfg.profile()?;
    let ball = model_ball_from_profile(&p)?;
    let fields = kernel_fields(&p, &ball)?;
    let bottom = sector_bottom(&ball, &p, 1, SectorConstraint::Unconstrained)?;
    let diag = kernel_diagnostics(&ball, &bottom)?;

    let mut checks = vec![
        Check::new("kernel_unconstrained_bottom", diag.unconstrained_bottom, 1e-7),
        Check::new("kernel_shooting_mismatch", diag.shooting_mismatch, 1e-8),
        Check::new("kernel_profile_deviation", diag.profile_deviation, 1e-8),
        Check::new("kernel_robin_residual", diag.robin_residual, 1e-8),
        Check::new("kernel_dimension_minus_n", diag.dimension as f64 - p.n as f64, 0.0),
    ];
    for f in &fields.fields {
        checks.push(Check::new(format!("field_{}_spread", f.label), f.spread, 1e-6));
    }
    let mut slopes = Vec::new();
    for ell in 0..=4 {
        let (_, f) = shoot(&ball, ell, 0.0)?;
        let slope = start_slope(&f);
        slopes.push(json!({ "ell": ell, "slope": slope }));
        checks.push(Check::new(format!("frobenius_slope_l{ell}"), slope - ell as f64, 1e-3));
    }
    let mut table = Table::new(&["name", "value", "tolerance", "pass"]);
    for c in &checks {
        table.push(vec![c.name.clone().into(), c.value.into(), c.tolerance.into(), c.pass.into()]);
    }
    Ok(CommandOutput {
        result: json!({
            "selection": resolved,
            "diagnostics": diag,
            "fields": fields.fields,
            "gram_eigenvalues": fields.gram_eigenvalues,
            "gram_condition": fields.gram_condition,
            "frobenius": slopes,
        }),
        table,
        checks,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// The argmin of the sector's constrained Rayleigh quotient.
    Argmin,
    /// A seeded smooth radial profile in the sector.
    Random,
    /// The dilation direction (sector 1, tangent to the orbit).
    Kernel,
}

pub fn stability(cfg: &RunConfig, sector: usize, direction: Direction) -> anyhow::Result<CommandOutput> {
    let (p, resolved) = cfg.profile()?;
    let ball = model_ball_from_profile(&p)?;
    let pert = match direction {
        Direction::Argmin => {
            Perturbation::from_bottom(&sector_bottom(&ball, &p, sector, SectorConstraint::for_sector(sector))?)
        }
        Direction::Random => Perturbation::random(&ball, &p, sector, cfg.seed)?,
        Direction::Kernel => Perturbation::kernel(&ball)?,
    };
    let report = stability_sweep(&p, &pert, &cfg.eps())?;
    let mut table = Table::new(&[
        "eps", "deficit", "distance", "ratio", "defect_before", "defect_after", "correction_norm", "scale",
        "orthogonality",
    ]);
    for r in &report.sweep {
        table.push(vec![
            r.eps.into(),
            r.deficit.into(),
            r.distance.into(),
            r.ratio.into(),
            r.defect_before.into(),
            r.defect_after.into(),
            r.correction_norm.into(),
            r.scale.into(),
            r.orthogonality.into(),
        ]);
    }
    let checks = report.checks.clone();
    Ok(CommandOutput {
        result: json!({ "selection": resolved, "stability": to_value(&report)? }),
        table,
        checks,
    })
}

#[derive(Serialize)]
struct OracleRow {
    branch: Branch,
    t: f64,
    domain: &'static str,
    quadrature: f64,
    monte_carlo: f64,
    standard_error: f64,
    z: f64,
}

pub fn oracle(cfg: &RunConfig, samples: u64, pairs: usize) -> anyhow::Result<CommandOutput> {
    let quad = cfg.quadrature()?;
    let n = cfg.n;
    let two_star = Exponents::new(n).two_star;
    let chosen = match cfg.shift {
        Some(t) => vec![(cfg.branch.into(), t)],
        None => oracle_pairs(pairs, cfg.seed),
    };
    let mut rows = Vec::new();
    for (i, &(branch, t)) in chosen.iter().enumerate() {
        let seed = cfg.seed.wrapping_add(2 * i as u64);
        let bulk_q = bulk_integral(n, branch, t, two_star, &quad)?;
        let bulk_mc = mc_oracle(n, branch, t, McTarget::Bulk { q: two_star }, samples, seed)?;
        let bdy_q = boundary_integral(n, branch, t)?;
        let bdy_mc = mc_oracle(n, branch, t, McTarget::Boundary, samples, seed + 1)?;
        for (domain, q, mc) in [("bulk", bulk_q, bulk_mc), ("boundary", bdy_q, bdy_mc)] {
            rows.push(OracleRow {
                branch,
                t,
                domain,
                quadrature: q,
                monte_carlo: mc.estimate,
                standard_error: mc.standard_error,
                z: (q - mc.estimate).abs() / mc.standard_error,
            });
        }
    }
    let mut table = Table::new(&["branch", "t", "domain", "quadrature", "monte_carlo", "standard_error", "z"]);
    let mut checks = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        table.push(vec![
            r.branch.to_string().into(),
            r.t.into(),
            r.domain.into(),
            r.quadrature.into(),
            r.monte_carlo.into(),
            r.standard_error.into(),
            r.z.into(),
        ]);
        checks.push(Check::new(format!("oracle_{}_{}_z", i / 2, r.domain), r.z, 3.0));
    }
    Ok(CommandOutput {
        result: json!({ "samples": samples, "rows": rows }),
        table,
        checks,
    })
}
