use std::path::PathBuf;

use bridge_core::profile::{escobar_threshold, profile_from_shift, solve_profile};
use bridge_core::quadrature::{QuadratureSpec, Scheme};
use bridge_core::stability::DEFAULT_EPS;
use bridge_core::{Branch, BridgeError, BridgeProfile};
use clap::{Args, ValueEnum};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeArg {
    TanhSinh,
    GaussLegendre,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BranchArg {
    Spherical,
    Hyperbolic,
}

impl From<BranchArg> for Branch {
    fn from(b: BranchArg) -> Self {
        match b {
            BranchArg::Spherical => Branch::Spherical,
            BranchArg::Hyperbolic => Branch::Hyperbolic,
        }
    }
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct RunConfig {
    /// Dimension of the half-space.
    #[arg(long, default_value_t = 3)]
    pub n: usize,

    /// Trace norm as a multiple of the Escobar threshold T_E(n).
    #[arg(long = "T-ratio", group = "selector")]
    pub t_ratio: Option<f64>,

    /// Absolute trace norm T.
    #[arg(long = "T", group = "selector")]
    pub trace: Option<f64>,

    /// Profile shift t; selects the profile directly on --branch.
    #[arg(long = "t", group = "selector", allow_hyphen_values = true)]
    pub shift: Option<f64>,

    /// Branch for --t.
    #[arg(long, value_enum, default_value_t = BranchArg::Spherical)]
    pub branch: BranchArg,

    #[arg(long = "quad-nodes", default_value_t = 1024)]
    pub quad_nodes: usize,

    #[arg(long = "quad-scheme", value_enum, default_value_t = SchemeArg::TanhSinh)]
    pub quad_scheme: SchemeArg,

    #[arg(long = "quad-tail", default_value_t = 4.5)]
    pub quad_tail: f64,

    #[arg(long = "quad-tol", default_value_t = 1e-14)]
    pub quad_tol: f64,

    /// Highest harmonic degree in spectral computations.
    #[arg(long = "l-max", default_value_t = 10)]
    pub l_max: usize,

    /// Perturbation amplitudes for stability sweeps, comma separated and decreasing.
    #[arg(long = "eps-list", value_delimiter = ',', allow_hyphen_values = true)]
    pub eps_list: Option<Vec<f64>>,

    #[arg(long, default_value_t = 20_240_601)]
    pub seed: u64,

    /// Output file; standard output when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

/// The profile selector after resolution.
#[derive(Debug, Clone, Serialize)]
pub struct ResolvedProfile {
    pub n: usize,
    pub selector: &'static str,
    pub t_e: f64,
    pub trace: f64,
    pub t_ratio: f64,
    pub shift: f64,
    pub branch: Branch,
    pub above_escobar: bool,
}

impl RunConfig {
    pub fn quadrature(&self) -> bridge_core::Result<QuadratureSpec> {
        let spec = QuadratureSpec {
            node_count: self.quad_nodes,
            scheme: match self.quad_scheme {
                SchemeArg::TanhSinh => Scheme::TanhSinh,
                SchemeArg::GaussLegendre => Scheme::GaussLegendre,
            },
            tail_cutoff: self.quad_tail,
            tol: self.quad_tol,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn eps(&self) -> Vec<f64> {
        self.eps_list.clone().unwrap_or_else(|| DEFAULT_EPS.to_vec())
    }

    /// Solve for the selected profile.
    pub fn profile(&self) -> bridge_core::Result<(BridgeProfile, ResolvedProfile)> {
        let quad = self.quadrature()?;
        let t_e = escobar_threshold(self.n, &quad)?;
        let (profile, selector) = match (self.t_ratio, self.trace, self.shift) {
            (Some(r), None, None) => (solve_profile(self.n, r * t_e, &quad)?, "T-ratio"),
            (None, Some(t), None) => (solve_profile(self.n, t, &quad)?, "T"),
            (None, None, Some(t)) => (profile_from_shift(self.n, self.branch.into(), t, &quad)?, "t"),
            _ => {
                return Err(BridgeError::Domain(
                    "exactly one of --T-ratio, --T or --t selects the profile".into(),
                ))
            }
        };
        let resolved = ResolvedProfile {
            n: self.n,
            selector,
            t_e,
            trace: profile.trace,
            t_ratio: profile.trace / t_e,
            shift: profile.t,
            branch: profile.branch,
            above_escobar: profile.trace > t_e,
        };
        Ok((profile, resolved))
    }
}

/// The resolved configuration embedded in every output.
#[derive(Debug, Clone, Serialize)]
pub struct ConfigRecord {
    pub n: usize,
    pub t_ratio: Option<f64>,
    #[serde(rename = "T")]
    pub trace: Option<f64>,
    pub t: Option<f64>,
    pub branch: BranchArg,
    pub quadrature: QuadratureSpec,
    pub l_max: usize,
    pub eps_list: Vec<f64>,
    pub seed: u64,
    pub output: Option<String>,
    pub format: Format,
    /// Subcommand-specific flags.
    pub args: serde_json::Value,
}

impl ConfigRecord {
    pub fn new(cfg: &RunConfig, args: serde_json::Value) -> bridge_core::Result<Self> {
        Ok(Self {
            n: cfg.n,
            t_ratio: cfg.t_ratio,
            trace: cfg.trace,
            t: cfg.shift,
            branch: cfg.branch,
            quadrature: cfg.quadrature()?,
            l_max: cfg.l_max,
            eps_list: cfg.eps(),
            seed: cfg.seed,
            output: cfg.output.as_ref().map(|p| p.display().to_string()),
            format: cfg.format,
            args,
        })
    }
}
