use thiserror::Error;

/// Every failure the library can report.
///
/// Variants map one-to-one onto the error kinds named in the CLI's error
/// object; [`BridgeError::kind`] returns that name.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum BridgeError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("isometry error: {0}")]
    Isometry(String),
    #[error("integral error: {0}")]
    Integral(String),
    #[error("T = {t_value} is within {rel_gap:.3e} of the Escobar threshold {t_e}")]
    DegenerateBridge { t_value: f64, t_e: f64, rel_gap: f64 },
    #[error("root bracketing failed for target {target} on [{lo}, {hi}]: {detail}")]
    Root {
        target: f64,
        lo: f64,
        hi: f64,
        detail: String,
    },
    #[error("Euler-Lagrange consistency error: {0}")]
    ElConsistency(String),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("grid error: {0}")]
    Grid(String),
    #[error("negative sector bottom {value:.6e} in sector {ell} ({constraint})")]
    Negativity {
        ell: usize,
        value: f64,
        constraint: String,
    },
    #[error("kernel mismatch: {0}")]
    KernelMismatch(String),
    #[error("projection failed: {message}; defect trace {defects:?}")]
    Projection { message: String, defects: Vec<f64> },
    #[error("nearest point search failed: {0}")]
    NearestPoint(String),
    #[error("deficit {0:.3e} is below the admissible noise floor")]
    Deficit(f64),
}

impl BridgeError {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Domain(_) => "DomainError",
            Self::Geometry(_) => "GeometryError",
            Self::Isometry(_) => "IsometryError",
            Self::Integral(_) => "IntegralError",
            Self::DegenerateBridge { .. } => "DegenerateBridgeError",
            Self::Root { .. } => "RootError",
            Self::ElConsistency(_) => "ELConsistencyError",
            Self::Transport(_) => "TransportError",
            Self::Grid(_) => "GridError",
            Self::Negativity { .. } => "NegativityError",
            Self::KernelMismatch(_) => "KernelMismatchError",
            Self::Projection { .. } => "ProjectionError",
            Self::NearestPoint(_) => "NearestPointError",
            Self::Deficit(_) => "DeficitError",
        }
    }

    /// True for errors caused by the caller's parameters rather than by a numerical failure.
    pub fn is_domain(&self) -> bool {
        matches!(self, Self::Domain(_) | Self::DegenerateBridge { .. })
    }
}

pub type Result<T> = std::result::Result<T, BridgeError>;
