//! Simulation, estimation and diagnostics for dynamic panel production
//! models where a quasi-differenced moment admits a second, spurious root.
//!
//! The benchmark process is
//!
//! ```text
//! y_it = alpha + beta x_it + omega_it + eta_it
//! x_it = pi + theta omega_it + kappa_it
//! omega_it = rho_omega omega_it-1 + xi_it
//! kappa_it = rho_x kappa_it-1 + u_it
//! ```
//!
//! and the moment `E[z (y_t - rho y_t-1 - alpha (1 - rho) - beta (x_t - rho x_t-1))] = 0`
//! holds at the truth and at `(alpha - pi/theta, beta + 1/theta, rho_x)`.

pub mod diagnostics;
pub mod error;
pub mod estimate;
pub mod identify;
mod linalg;
pub mod model;
pub mod rng;
pub mod simulate;

pub use error::{Error, Result};
pub use model::{
    forward_map, invert_reduced_form, pseudo_point, BranchSign, InnovationScales, ParamPoint,
    ReducedFormParams, SolutionBranch, StructuralParams,
};
pub use simulate::{draw_panel, DgpSpec, PanelData, Variant, VariantParams};
