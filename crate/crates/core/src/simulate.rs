//! Seeded panel generation for the benchmark model and its extensions.
//!
//! Latent states and shocks are kept alongside the observables so tests can
//! check residuals against the innovations that produced them.

use std::fmt::Write as _;

use ndarray::{Array1, Array2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{check_persistence, InnovationScales, StructuralParams};
use crate::rng::{Shock, StreamKey};

/// Periods discarded before the observed window for variants whose initial
/// distribution is not available in closed form.
pub const BURN_IN: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Benchmark,
    FixedEffects,
    MultiInput,
    DynamicInput,
    NonlinearOmegaInput,
    LogisticKappa,
    Ar2Kappa,
    ArmaX,
    ReversedCurvature,
    Predetermined,
}

impl Variant {
    pub const ALL: [Variant; 10] = [
        Variant::Benchmark,
        Variant::FixedEffects,
        Variant::MultiInput,
        Variant::DynamicInput,
        Variant::NonlinearOmegaInput,
        Variant::LogisticKappa,
        Variant::Ar2Kappa,
        Variant::ArmaX,
        Variant::ReversedCurvature,
        Variant::Predetermined,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Variant::Benchmark => "benchmark",
            Variant::FixedEffects => "fixed_effects",
            Variant::MultiInput => "multi_input",
            Variant::DynamicInput => "dynamic_input",
            Variant::NonlinearOmegaInput => "nonlinear_omega_input",
            Variant::LogisticKappa => "logistic_kappa",
            Variant::Ar2Kappa => "ar2_kappa",
            Variant::ArmaX => "arma_x",
            Variant::ReversedCurvature => "reversed_curvature",
            Variant::Predetermined => "predetermined",
        }
    }

    pub fn has_z(&self) -> bool {
        matches!(self, Variant::MultiInput | Variant::DynamicInput)
    }

    fn min_periods(&self) -> usize {
        match self {
            Variant::FixedEffects => 5,
            _ => 4,
        }
    }

    /// Periods simulated before the first stored one.
    fn presample(&self) -> usize {
        match self {
            Variant::LogisticKappa | Variant::ReversedCurvature | Variant::DynamicInput => {
                BURN_IN
            }
            // x_t depends on period t-1 latents.
            Variant::Predetermined => 1,
            _ => 0,
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Parameters used only by some variants.
///
/// * `theta2`: quadratic loading of `omega` in the input rule
///   (`nonlinear_omega_input`) or the slope of the logistic persistence
///   (`logistic_kappa`).
/// * `rho1_x`, `rho2_x`: AR(2) coefficients of `kappa` (`ar2_kappa`).
/// * `sigma_eps`: scale of the i.i.d. input shock (`arma_x`).
/// * `gamma`: output elasticity of the second input `z`.
/// * `theta_*`, `delta_*`: loadings of `x` and `z` on `omega`, `kappa`, and
///   the second market factor in `multi_input`. In `dynamic_input`,
///   `delta_omega` is the response of investment to last period's `omega`.
/// * `rho_z`, `sigma_v`: persistence and innovation scale of the second factor
///   (or of the dynamic input).
/// * `theta_z`: loading of the flexible input on the dynamic input.
/// * `pi_z`: intercept of `z`.
/// * `sigma_alpha_fe`, `sigma_pi_fe`: scales of the firm fixed effects.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VariantParams {
    pub theta2: f64,
    pub rho1_x: f64,
    pub rho2_x: f64,
    pub sigma_eps: f64,
    pub gamma: f64,
    pub theta_omega: f64,
    pub theta_kappa: f64,
    pub theta_wp: f64,
    pub delta_omega: f64,
    pub delta_kappa: f64,
    pub delta_wp: f64,
    pub rho_z: f64,
    pub sigma_v: f64,
    pub theta_z: f64,
    pub pi_z: f64,
    pub sigma_alpha_fe: f64,
    pub sigma_pi_fe: f64,
}

impl Default for VariantParams {
    fn default() -> Self {
        Self {
            theta2: 0.5,
            rho1_x: 0.5,
            rho2_x: 0.4,
            sigma_eps: 1.0,
            gamma: 0.3,
            theta_omega: 1.0,
            theta_kappa: 1.0,
            theta_wp: 0.5,
            delta_omega: 1.0,
            delta_kappa: 0.5,
            delta_wp: 1.0,
            rho_z: 0.3,
            sigma_v: 1.0,
            theta_z: 0.5,
            pi_z: 0.0,
            sigma_alpha_fe: 1.0,
            sigma_pi_fe: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DgpSpec {
    pub variant: Variant,
    pub structural: StructuralParams,
    pub scales: InnovationScales,
    pub ext: VariantParams,
    pub n_firms: usize,
    pub n_periods: usize,
    pub seed: u64,
}

impl Default for DgpSpec {
    fn default() -> Self {
        Self {
            variant: Variant::Benchmark,
            structural: StructuralParams::default(),
            scales: InnovationScales::default(),
            ext: VariantParams::default(),
            n_firms: 40_000,
            n_periods: 5,
            seed: 0,
        }
    }
}

impl DgpSpec {
    pub fn new(variant: Variant) -> Self {
        Self {
            variant,
            ..Self::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_shape(mut self, n_firms: usize, n_periods: usize) -> Self {
        self.n_firms = n_firms;
        self.n_periods = n_periods;
        self
    }

    pub fn n_obs(&self) -> usize {
        self.n_firms * self.n_periods
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.structural;
        let e = &self.ext;
        if self.n_firms == 0 {
            return Err(Error::validation("n_firms", "must be positive"));
        }
        let min = self.variant.min_periods();
        if self.n_periods < min {
            return Err(Error::validation(
                "n_periods",
                format!("{} needs at least {min} periods, got {}", self.variant, self.n_periods),
            ));
        }
        check_persistence("rho_omega", s.rho_omega)?;
        for (name, v) in [
            ("beta", s.beta),
            ("theta", s.theta),
            ("alpha", s.alpha),
            ("pi", s.pi),
        ] {
            if !v.is_finite() {
                return Err(Error::validation(name, "must be finite"));
            }
        }
        for (name, v) in [
            ("sigma_xi", self.scales.sigma_xi),
            ("sigma_u", self.scales.sigma_u),
            ("sigma_eta", self.scales.sigma_eta),
        ] {
            check_scale(name, v)?;
        }
        match self.variant {
            Variant::Ar2Kappa => {
                let (r1, r2) = (e.rho1_x, e.rho2_x);
                if !(0.0..1.0).contains(&r2) {
                    return Err(Error::validation("rho2_x", format!("{r2} is not in [0, 1)")));
                }
                if !(r1 + r2 < 1.0 && r2 - r1 < 1.0) || !r1.is_finite() {
                    return Err(Error::validation(
                        "rho1_x",
                        format!("AR(2) ({r1}, {r2}) is not stationary"),
                    ));
                }
            }
            Variant::LogisticKappa | Variant::ReversedCurvature => {}
            _ => check_persistence("rho_x", s.rho_x)?,
        }
        match self.variant {
            Variant::MultiInput => {
                check_persistence("rho_z", e.rho_z)?;
                check_scale("sigma_v", e.sigma_v)?;
                // The two inputs must not load identically on the factors.
                let det = e.theta_kappa * e.delta_wp - e.theta_wp * e.delta_kappa;
                if det == 0.0 {
                    return Err(Error::validation(
                        "theta_kappa",
                        "input loadings on (kappa, wp) are collinear",
                    ));
                }
            }
            Variant::DynamicInput => {
                check_persistence("rho_z", e.rho_z)?;
                check_scale("sigma_v", e.sigma_v)?;
                if s.theta == 0.0 {
                    return Err(Error::validation("theta", "must be nonzero"));
                }
            }
            Variant::ArmaX => {
                check_scale("sigma_eps", e.sigma_eps)?;
                if s.theta == 0.0 {
                    return Err(Error::validation("theta", "must be nonzero"));
                }
            }
            Variant::FixedEffects => {
                check_scale("sigma_alpha_fe", e.sigma_alpha_fe)?;
                check_scale("sigma_pi_fe", e.sigma_pi_fe)?;
                if s.theta == 0.0 {
                    return Err(Error::validation("theta", "must be nonzero"));
                }
            }
            Variant::LogisticKappa | Variant::NonlinearOmegaInput => {
                if !e.theta2.is_finite() {
                    return Err(Error::validation("theta2", "must be finite"));
                }
                if s.theta == 0.0 {
                    return Err(Error::validation("theta", "must be nonzero"));
                }
            }
            _ => {
                if s.theta == 0.0 {
                    return Err(Error::validation("theta", "must be nonzero"));
                }
            }
        }
        Ok(())
    }
}

fn check_scale(name: &str, v: f64) -> Result<()> {
    if !v.is_finite() || v < 0.0 {
        Err(Error::validation(name, format!("{v} must be a nonnegative real")))
    } else {
        Ok(())
    }
}

/// A draw from the stationary marginal of an AR(1) with innovation scale
/// `sigma`, given a standard normal `draw`.
pub fn stationary_ar1_init(rho: f64, sigma: f64, draw: f64) -> Result<f64> {
    if !rho.is_finite() || rho.abs() >= 1.0 {
        return Err(Error::Domain(format!(
            "stationary AR(1) needs |rho| < 1, got {rho}"
        )));
    }
    Ok(draw * sigma / (1.0 - rho * rho).sqrt())
}

/// A simulated balanced panel, `[n_firms x n_periods]` per series.
///
/// `wp` holds the second market factor for `multi_input` and the deviation of
/// the dynamic input from `pi_z` for `dynamic_input`; zero otherwise. Unused
/// shock series are zero. Shocks at a period whose state came from the
/// initial distribution are stored as zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelData {
    pub y: Array2<f64>,
    pub x: Array2<f64>,
    pub z: Option<Array2<f64>>,
    pub omega: Array2<f64>,
    pub kappa: Array2<f64>,
    pub wp: Array2<f64>,
    pub xi: Array2<f64>,
    pub u: Array2<f64>,
    pub eta: Array2<f64>,
    pub eps: Array2<f64>,
    pub v: Array2<f64>,
    pub fe_alpha: Option<Array1<f64>>,
    pub fe_pi: Option<Array1<f64>>,
    pub spec: DgpSpec,
}

impl PanelData {
    pub fn n_firms(&self) -> usize {
        self.y.nrows()
    }

    pub fn n_periods(&self) -> usize {
        self.y.ncols()
    }

    pub fn n_obs(&self) -> usize {
        self.y.len()
    }

    /// Builds a panel from observables only (no latent information).
    pub fn from_observables(y: Array2<f64>, x: Array2<f64>, z: Option<Array2<f64>>) -> Result<Self> {
        if y.dim() != x.dim() || z.as_ref().is_some_and(|z| z.dim() != y.dim()) {
            return Err(Error::Dimension("y, x and z must share a shape".into()));
        }
        let (n, t) = y.dim();
        let zeros = || Array2::zeros((n, t));
        let variant = if z.is_some() {
            Variant::MultiInput
        } else {
            Variant::Benchmark
        };
        Ok(Self {
            omega: zeros(),
            kappa: zeros(),
            wp: zeros(),
            xi: zeros(),
            u: zeros(),
            eta: zeros(),
            eps: zeros(),
            v: zeros(),
            fe_alpha: None,
            fe_pi: None,
            spec: DgpSpec {
                variant,
                n_firms: n,
                n_periods: t,
                ..DgpSpec::default()
            },
            y,
            x,
            z,
        })
    }

    /// CSV with header `firm,period,y,x[,z],omega,kappa,xi,u,eta[,eps]`.
    /// Firms and periods are zero-based. Values use shortest round-trip
    /// formatting.
    pub fn to_csv(&self) -> String {
        let has_eps = self.spec.variant == Variant::ArmaX;
        let mut out = String::with_capacity(self.n_obs() * 120);
        out.push_str("firm,period,y,x");
        if self.z.is_some() {
            out.push_str(",z");
        }
        out.push_str(",omega,kappa,xi,u,eta");
        if has_eps {
            out.push_str(",eps");
        }
        out.push('\n');
        for i in 0..self.n_firms() {
            for t in 0..self.n_periods() {
                let _ = write!(out, "{i},{t},{},{}", self.y[[i, t]], self.x[[i, t]]);
                if let Some(z) = &self.z {
                    let _ = write!(out, ",{}", z[[i, t]]);
                }
                let _ = write!(
                    out,
                    ",{},{},{},{},{}",
                    self.omega[[i, t]],
                    self.kappa[[i, t]],
                    self.xi[[i, t]],
                    self.u[[i, t]],
                    self.eta[[i, t]]
                );
                if has_eps {
                    let _ = write!(out, ",{}", self.eps[[i, t]]);
                }
                out.push('\n');
            }
        }
        out
    }
}

#[derive(Default)]
struct FirmPath {
    y: Vec<f64>,
    x: Vec<f64>,
    z: Vec<f64>,
    omega: Vec<f64>,
    kappa: Vec<f64>,
    wp: Vec<f64>,
    xi: Vec<f64>,
    u: Vec<f64>,
    eta: Vec<f64>,
    eps: Vec<f64>,
    v: Vec<f64>,
    fe_alpha: f64,
    fe_pi: f64,
}

/// Simulates a panel. Output is a deterministic function of `spec`.
pub fn draw_panel(spec: &DgpSpec) -> Result<PanelData> {
    spec.validate()?;
    let paths: Vec<FirmPath> = (0..spec.n_firms)
        .into_par_iter()
        .map(|i| simulate_firm(spec, i as u64))
        .collect::<Result<_>>()?;

    let (n, t) = (spec.n_firms, spec.n_periods);
    let stack = |f: fn(&FirmPath) -> &Vec<f64>| -> Array2<f64> {
        let mut out = Array2::zeros((n, t));
        for (mut row, p) in out.rows_mut().into_iter().zip(&paths) {
            row.assign(&ndarray::ArrayView1::from(f(p).as_slice()));
        }
        out
    };
    let fixed = spec.variant == Variant::FixedEffects;
    Ok(PanelData {
        y: stack(|p| &p.y),
        x: stack(|p| &p.x),
        z: spec.variant.has_z().then(|| stack(|p| &p.z)),
        omega: stack(|p| &p.omega),
        kappa: stack(|p| &p.kappa),
        wp: stack(|p| &p.wp),
        xi: stack(|p| &p.xi),
        u: stack(|p| &p.u),
        eta: stack(|p| &p.eta),
        eps: stack(|p| &p.eps),
        v: stack(|p| &p.v),
        fe_alpha: fixed.then(|| paths.iter().map(|p| p.fe_alpha).collect()),
        fe_pi: fixed.then(|| paths.iter().map(|p| p.fe_pi).collect()),
        spec: *spec,
    })
}

fn logistic_weight(slope: f64, k: f64) -> f64 {
    let e = (slope * k.abs()).exp();
    e / (1.0 + e)
}

fn simulate_firm(spec: &DgpSpec, firm: u64) -> Result<FirmPath> {
    let s = &spec.structural;
    let e = &spec.ext;
    let sc = &spec.scales;
    let variant = spec.variant;
    let pre = variant.presample();
    let total = pre + spec.n_periods;
    let draw = |period: usize, shock: Shock| {
        StreamKey::new(spec.seed, firm, period as u64, shock).standard_normal()
    };

    // Latent paths over the full simulated window (burn-in included).
    let mut omega = vec![0.0; total];
    let mut kappa = vec![0.0; total];
    let mut wp = vec![0.0; total];
    let mut xi = vec![0.0; total];
    let mut u = vec![0.0; total];
    let mut v = vec![0.0; total];

    omega[0] = stationary_ar1_init(s.rho_omega, sc.sigma_xi, draw(0, Shock::InitOmega))?;
    let mut kappa_start = 1;
    match variant {
        Variant::Ar2Kappa => {
            let (g0, g1) = ar2_autocovariances(e.rho1_x, e.rho2_x, sc.sigma_u);
            kappa[0] = draw(0, Shock::InitKappa) * g0.sqrt();
            let cond_var = (g0 - g1 * g1 / g0).max(0.0);
            kappa[1] = g1 / g0 * kappa[0] + cond_var.sqrt() * draw(1, Shock::InitKappaLag);
            if g0 == 0.0 {
                kappa[1] = 0.0;
            }
            kappa_start = 2;
        }
        Variant::LogisticKappa | Variant::ReversedCurvature => {
            kappa[0] = sc.sigma_u * draw(0, Shock::InitKappa);
        }
        _ => {
            kappa[0] = stationary_ar1_init(s.rho_x, sc.sigma_u, draw(0, Shock::InitKappa))?;
        }
    }
    match variant {
        Variant::MultiInput => {
            wp[0] = stationary_ar1_init(e.rho_z, e.sigma_v, draw(0, Shock::InitWp))?;
        }
        // Burned in from zero.
        Variant::DynamicInput => {}
        _ => {}
    }

    for k in 1..total {
        xi[k] = sc.sigma_xi * draw(k, Shock::Xi);
        omega[k] = s.rho_omega * omega[k - 1] + xi[k];
        if k >= kappa_start {
            u[k] = sc.sigma_u * draw(k, Shock::U);
            let prev = kappa[k - 1];
            kappa[k] = match variant {
                Variant::LogisticKappa => logistic_weight(e.theta2, prev) * prev + u[k],
                Variant::ReversedCurvature => (1.0 - logistic_weight(1.0, prev)) * prev + u[k],
                Variant::Ar2Kappa => e.rho1_x * prev + e.rho2_x * kappa[k - 2] + u[k],
                _ => s.rho_x * prev + u[k],
            };
        }
        match variant {
            Variant::MultiInput => {
                v[k] = e.sigma_v * draw(k, Shock::V);
                wp[k] = e.rho_z * wp[k - 1] + v[k];
            }
            Variant::DynamicInput => {
                v[k] = e.sigma_v * draw(k, Shock::V);
                wp[k] = e.rho_z * wp[k - 1] + e.delta_omega * omega[k - 1] + v[k];
            }
            _ => {}
        }
    }

    let mut path = FirmPath::default();
    let (alpha_i, pi_i) = if variant == Variant::FixedEffects {
        path.fe_alpha = s.alpha + e.sigma_alpha_fe * draw(0, Shock::FixedAlpha);
        path.fe_pi = s.pi + e.sigma_pi_fe * draw(0, Shock::FixedPi);
        (path.fe_alpha, path.fe_pi)
    } else {
        (s.alpha, s.pi)
    };

    for k in pre..total {
        let t = k - pre;
        let eta = sc.sigma_eta * draw(t, Shock::Eta);
        let eps = if variant == Variant::ArmaX {
            e.sigma_eps * draw(t, Shock::Eps)
        } else {
            0.0
        };
        let (w, kap, f) = (omega[k], kappa[k], wp[k]);
        let mut z = 0.0;
        let x = match variant {
            Variant::NonlinearOmegaInput => s.pi + s.theta * w + e.theta2 * (w * w) + kap,
            Variant::ArmaX => s.pi + s.theta * w + kap + eps,
            Variant::MultiInput => {
                z = e.pi_z + e.delta_omega * w + e.delta_kappa * kap + e.delta_wp * f;
                s.pi + e.theta_omega * w + e.theta_kappa * kap + e.theta_wp * f
            }
            Variant::DynamicInput => {
                z = e.pi_z + f;
                s.pi + s.theta * w + e.theta_z * z + kap
            }
            Variant::Predetermined => {
                s.pi + s.theta * s.rho_omega * omega[k - 1] + kappa[k - 1]
            }
            _ => pi_i + s.theta * w + kap,
        };
        let y = if variant.has_z() {
            s.alpha + s.beta * x + e.gamma * z + w + eta
        } else {
            alpha_i + s.beta * x + w + eta
        };
        path.y.push(y);
        path.x.push(x);
        path.z.push(z);
        path.omega.push(w);
        path.kappa.push(kap);
        path.wp.push(f);
        path.xi.push(xi[k]);
        path.u.push(u[k]);
        path.eta.push(eta);
        path.eps.push(eps);
        path.v.push(v[k]);
    }
    Ok(path)
}

/// Variance and first autocovariance of a stationary AR(2).
fn ar2_autocovariances(r1: f64, r2: f64, sigma: f64) -> (f64, f64) {
    let g0 = (1.0 - r2) * sigma * sigma / ((1.0 + r2) * ((1.0 - r2) * (1.0 - r2) - r1 * r1));
    let g1 = r1 * g0 / (1.0 - r2);
    (g0, g1)
}
