//! Analytic maps between the structural benchmark model and its reduced form.
//!
//! The benchmark model is
//!
//! ```text
//! y_t = alpha + beta * x_t + omega_t + eta_t
//! x_t = pi + theta * omega_t + kappa_t
//! omega_t = rho_omega * omega_{t-1} + xi_t
//! kappa_t = rho_x * kappa_{t-1} + u_t
//! ```
//!
//! Projecting `(y_t, x_t)` on `(1, y_{t-1}, x_{t-1})` gives six reduced-form
//! coefficients. The map from the six structural coefficients is two-to-one:
//! the true point and the pseudo point (`beta + 1/theta`, `rho_x`, ...) are
//! observationally equivalent. Everything here is closed form and pure.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The six structural coefficients of the benchmark model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StructuralParams {
    pub beta: f64,
    pub theta: f64,
    pub rho_omega: f64,
    pub rho_x: f64,
    pub alpha: f64,
    pub pi: f64,
}

impl Default for StructuralParams {
    fn default() -> Self {
        Self {
            beta: 0.6,
            theta: 1.0,
            rho_omega: 0.7,
            rho_x: 0.5,
            alpha: 1.0,
            pi: 0.0,
        }
    }
}

/// Standard deviations of the productivity innovation `xi`, the input-factor
/// innovation `u`, and the output measurement error `eta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InnovationScales {
    pub sigma_xi: f64,
    pub sigma_u: f64,
    pub sigma_eta: f64,
}

impl Default for InnovationScales {
    fn default() -> Self {
        Self {
            sigma_xi: 1.0,
            sigma_u: 1.0,
            sigma_eta: 1.0,
        }
    }
}

impl InnovationScales {
    pub fn zero() -> Self {
        Self {
            sigma_xi: 0.0,
            sigma_u: 0.0,
            sigma_eta: 0.0,
        }
    }
}

impl StructuralParams {
    pub fn validate(&self) -> Result<()> {
        check_persistence("rho_omega", self.rho_omega)?;
        check_persistence("rho_x", self.rho_x)?;
        for (name, v) in [
            ("beta", self.beta),
            ("theta", self.theta),
            ("alpha", self.alpha),
            ("pi", self.pi),
        ] {
            if !v.is_finite() {
                return Err(Error::validation(name, "must be finite"));
            }
        }
        Ok(())
    }

    /// The (alpha, beta, rho) triple of the true point.
    pub fn truth_point(&self) -> ParamPoint {
        ParamPoint {
            alpha: self.alpha,
            beta: self.beta,
            rho: self.rho_omega,
        }
    }

    fn max_abs_diff(&self, other: &StructuralParams) -> f64 {
        [
            self.beta - other.beta,
            self.theta - other.theta,
            self.rho_omega - other.rho_omega,
            self.rho_x - other.rho_x,
            self.alpha - other.alpha,
            self.pi - other.pi,
        ]
        .iter()
        .fold(0.0_f64, |acc, d| acc.max(d.abs()))
    }

    /// Largest absolute coefficient difference to `other`.
    pub fn distance(&self, other: &StructuralParams) -> f64 {
        self.max_abs_diff(other)
    }
}

pub(crate) fn check_persistence(name: &str, rho: f64) -> Result<()> {
    if !rho.is_finite() || rho.abs() >= 1.0 {
        return Err(Error::validation(
            name,
            format!("{rho} is not in (-1, 1)"),
        ));
    }
    Ok(())
}

/// Coefficients of the reduced-form system
///
/// ```text
/// y_t = pi_y0 + pi_yy * y_{t-1} + pi_yx * x_{t-1} + e^y_t
/// x_t = pi_x0 + pi_xy * y_{t-1} + pi_xx * x_{t-1} + e^x_t
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedFormParams {
    pub pi_y0: f64,
    pub pi_yy: f64,
    pub pi_yx: f64,
    pub pi_x0: f64,
    pub pi_xy: f64,
    pub pi_xx: f64,
}

impl ReducedFormParams {
    /// `(pi_yy - pi_xx)^2 + 4 pi_yx pi_xy`; equals `(rho_omega - rho_x)^2`
    /// on the image of [`forward_map`].
    pub fn discriminant(&self) -> f64 {
        let d = self.pi_yy - self.pi_xx;
        d * d + 4.0 * self.pi_yx * self.pi_xy
    }

    pub fn as_array(&self) -> [f64; 6] {
        [
            self.pi_y0, self.pi_yy, self.pi_yx, self.pi_x0, self.pi_xy, self.pi_xx,
        ]
    }

    pub const NAMES: [&'static str; 6] = ["pi_y0", "pi_yy", "pi_yx", "pi_x0", "pi_xy", "pi_xx"];

    pub fn max_abs_diff(&self, other: &ReducedFormParams) -> f64 {
        self.as_array()
            .iter()
            .zip(other.as_array())
            .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).abs()))
    }
}

/// A candidate `(alpha, beta, rho)` for the quasi-differenced moment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamPoint {
    pub alpha: f64,
    pub beta: f64,
    pub rho: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchSign {
    Plus,
    Minus,
}

/// One of the two structural solutions of a reduced form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolutionBranch {
    pub params: StructuralParams,
    pub branch_sign: BranchSign,
}

/// Maps structural coefficients to the reduced form.
pub fn forward_map(s: &StructuralParams) -> ReducedFormParams {
    let gap = s.rho_omega - s.rho_x;
    let bt = s.beta * s.theta;
    ReducedFormParams {
        pi_yy: s.rho_omega + bt * gap,
        pi_yx: -s.beta * (1.0 + bt) * gap,
        pi_xy: s.theta * gap,
        pi_xx: s.rho_x - bt * gap,
        pi_y0: s.beta * (1.0 - s.rho_x) * s.pi + ((1.0 - s.rho_omega) - bt * gap) * s.alpha,
        pi_x0: (1.0 - s.rho_x) * s.pi - s.theta * gap * s.alpha,
    }
}

// Relative round-trip guard for the inversion. Absolute 1e-10 is what the
// closed forms achieve on well-conditioned inputs; estimated reduced forms
// can be badly conditioned, so the guard scales with coefficient size.
const ROUND_TRIP_GUARD: f64 = 1e-8;

/// Recovers both structural solutions from a reduced form, plus branch first.
pub fn invert_reduced_form(r: &ReducedFormParams) -> Result<[SolutionBranch; 2]> {
    let disc = r.discriminant();
    if !(disc > 0.0) {
        return Err(Error::DegenerateReducedForm { discriminant: disc });
    }
    if r.pi_xy == 0.0 {
        return Err(Error::NoEndogeneityInformation);
    }
    let root = disc.sqrt();
    let plus = branch(r, r.pi_xy / root, BranchSign::Plus)?;
    let minus = branch(r, -r.pi_xy / root, BranchSign::Minus)?;
    Ok([plus, minus])
}

fn branch(r: &ReducedFormParams, theta: f64, sign: BranchSign) -> Result<SolutionBranch> {
    let sum = r.pi_yy + r.pi_xx;
    let beta = 0.5 * ((r.pi_yy - r.pi_xx) / r.pi_xy - 1.0 / theta);
    let rho_omega = 0.5 * (sum + r.pi_xy / theta);
    let rho_x = 0.5 * (sum - r.pi_xy / theta);

    // Intercepts from the linear system
    //   (1 - rho_x) pi - pi_xy alpha          = pi_x0
    //   beta (1 - rho_x) pi + (1 - pi_yy) alpha = pi_y0
    let a11 = 1.0 - rho_x;
    let a12 = -r.pi_xy;
    let a21 = beta * (1.0 - rho_x);
    let a22 = 1.0 - r.pi_yy;
    let det = a11 * a22 - a12 * a21;
    if det == 0.0 || !det.is_finite() {
        return Err(Error::Domain(format!(
            "intercept system is singular on the {sign:?} branch (rho_x = {rho_x}, rho_omega = {rho_omega})"
        )));
    }
    let pi = (r.pi_x0 * a22 - a12 * r.pi_y0) / det;
    let alpha = (a11 * r.pi_y0 - a21 * r.pi_x0) / det;

    let params = StructuralParams {
        beta,
        theta,
        rho_omega,
        rho_x,
        alpha,
        pi,
    };
    let image = forward_map(&params);
    let scale = r
        .as_array()
        .iter()
        .chain(image.as_array().iter())
        .fold(1.0_f64, |acc, v| acc.max(v.abs()));
    let err = image.max_abs_diff(r);
    if !(err <= ROUND_TRIP_GUARD * scale) {
        return Err(Error::Internal(format!(
            "{sign:?} branch fails the round trip (max error {err:e})"
        )));
    }
    Ok(SolutionBranch {
        params,
        branch_sign: sign,
    })
}

/// The second zero of the quasi-differenced moment:
/// `(alpha - pi/theta, beta + 1/theta, rho_x)`.
pub fn pseudo_point(s: &StructuralParams) -> Result<ParamPoint> {
    if s.theta == 0.0 {
        return Err(Error::UndefinedPseudo);
    }
    Ok(ParamPoint {
        alpha: s.alpha - s.pi / s.theta,
        beta: s.beta + 1.0 / s.theta,
        rho: s.rho_x,
    })
}

/// Residual of the non-identified locus under equal persistence,
/// `(alpha0 - alpha)(1 - rho0) + (beta0 - beta) pi0 (1 - rho0)`.
///
/// Zero exactly when `p` solves the moment condition for a model whose two
/// persistences coincide.
pub fn flat_locus_residual(p: &ParamPoint, s: &StructuralParams) -> Result<f64> {
    if s.rho_omega != s.rho_x {
        return Err(Error::Domain(format!(
            "flat locus needs rho_omega == rho_x (got {} and {})",
            s.rho_omega, s.rho_x
        )));
    }
    if p.rho != s.rho_omega {
        return Err(Error::Domain(format!(
            "flat locus is evaluated at rho = {} (got {})",
            s.rho_omega, p.rho
        )));
    }
    let one_minus = 1.0 - s.rho_omega;
    Ok((s.alpha - p.alpha) * one_minus + (s.beta - p.beta) * s.pi * one_minus)
}
