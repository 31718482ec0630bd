//! Numerical laboratory for the bridge problem between the sharp Sobolev
//! and Escobar trace inequalities on the half-space.
//!
//! * [`profile`] solves for the minimizer with a prescribed trace norm.
//! * [`geometry`] maps it to a geodesic ball in a constant-curvature model.
//! * [`spectral`] reduces the second variation to Robin problems per
//!   spherical-harmonic sector and computes the spectral gap.
//! * [`stability`] runs perturbation experiments on the constraint manifold.

// `!(x > 0.0)` is the idiom for rejecting NaN together with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geometry;
pub mod montecarlo;
pub mod ode;
pub mod profile;
pub mod quadrature;
pub mod report;
pub mod special;
pub mod spectral;
pub mod stability;

pub use error::{BridgeError, Result};
pub use geometry::{Branch, ModelBall, ModelPoint};
pub use profile::{BridgeProfile, Exponents};
pub use quadrature::{QuadratureSpec, Scheme};
