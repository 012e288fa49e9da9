//! Objective-curve scans, root and minimum location, the reduced-form
//! two-step estimator with sign-restriction branch selection, and warm
//! starts for estimation under weaker timing assumptions.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{self, InstrumentSpec, RhoFamily};
use crate::model::{invert_reduced_form, BranchSign, ParamPoint, ReducedFormParams, SolutionBranch, StructuralParams};
use crate::simulate::{PanelData, Variant};

/// Evenly spaced grid `lo, lo + step, ..., <= hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Grid {
    pub const fn new(lo: f64, hi: f64, step: f64) -> Self {
        Self { lo, hi, step }
    }

    /// `[0, 2]` in steps of 0.005.
    pub const fn default_beta() -> Self {
        Self::new(0.0, 2.0, 0.005)
    }

    /// `[-0.9, 0.9]` in steps of 0.005.
    pub const fn default_rho() -> Self {
        Self::new(-0.9, 0.9, 0.005)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.step.is_finite()) {
            return Err(Error::validation("grid", "bounds and step must be finite"));
        }
        if self.step <= 0.0 {
            return Err(Error::validation("grid", "step must be positive"));
        }
        if self.hi < self.lo {
            return Err(Error::EmptyGrid);
        }
        if (self.hi - self.lo) / self.step > 1e7 {
            return Err(Error::validation("grid", "more than 10^7 points"));
        }
        Ok(())
    }

    /// Grid points; `lo + k step` computed per index to avoid drift.
    pub fn points(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let n = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize + 1;
        Ok((0..n).map(|k| self.lo + k as f64 * self.step).collect())
    }
}

impl FromStr for Grid {
    type Err = Error;

    /// Parses `lo:hi:step`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let [lo, hi, step] = parts.as_slice() else {
            return Err(Error::validation("grid", format!("expected lo:hi:step, got `{s}`")));
        };
        let num = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::validation("grid", format!("`{v}` is not a number")))
        };
        let g = Grid::new(num(lo)?, num(hi)?, num(step)?);
        g.validate()?;
        Ok(g)
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.lo, self.hi, self.step)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Beta,
    Rho,
}

/// What is evaluated at each grid point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanMode {
    /// [`estimate::concentrate_beta`]: the `x_{t-1}` moment with `(alpha, rho)`
    /// profiled out.
    ConcentratedBeta,
    /// [`estimate::concentrate_rho`]: the first over-identifying moment with the
    /// linear coefficients profiled out.
    ConcentratedRho(RhoFamily),
}

impl ScanMode {
    pub fn axis(&self) -> Axis {
        match self {
            ScanMode::ConcentratedBeta => Axis::Beta,
            ScanMode::ConcentratedRho(_) => Axis::Rho,
        }
    }

    /// Signed moment and its standard error at `v`.
    pub fn evaluate(&self, panel: &PanelData, v: f64) -> Result<(f64, f64)> {
        match *self {
            ScanMode::ConcentratedBeta => {
                let c = estimate::concentrate_beta(panel, v)?;
                Ok((c.moment, c.std_error))
            }
            ScanMode::ConcentratedRho(family) => {
                let c = estimate::concentrate_rho(panel, v, family)?;
                Ok((c.over_id[0], c.over_id_se[0]))
            }
        }
    }
}

/// A refined root of the signed curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Zero {
    pub location: f64,
    /// Curve value at `location`.
    pub value: f64,
    /// Final bracketing interval.
    pub bracket: (f64, f64),
    pub iterations: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Minimum {
    pub location: f64,
    /// Parabola-interpolated `m^2`, floored at zero.
    pub value: f64,
}

/// Signed concentrated moments over a grid, with located zeros and minima.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveCurve {
    pub axis: Axis,
    pub grid: Vec<f64>,
    /// `None` where evaluation failed.
    pub m: Vec<Option<f64>>,
    pub std_errors: Vec<Option<f64>>,
    pub zeros: Vec<Zero>,
    pub minima: Vec<Minimum>,
}

impl ObjectiveCurve {
    /// Builds a curve from precomputed values; zeros and minima are left
    /// empty.
    pub fn from_values(axis: Axis, grid: Vec<f64>, m: Vec<Option<f64>>, std_errors: Vec<Option<f64>>) -> Result<Self> {
        if grid.is_empty() {
            return Err(Error::EmptyGrid);
        }
        if m.len() != grid.len() || std_errors.len() != grid.len() {
            return Err(Error::Dimension("grid and values differ in length".into()));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::validation("grid", "must be strictly increasing"));
        }
        Ok(Self {
            axis,
            grid,
            m,
            std_errors,
            zeros: Vec::new(),
            minima: Vec::new(),
        })
    }

    pub fn objective(&self) -> Vec<Option<f64>> {
        self.m.iter().map(|v| v.map(|m| m * m)).collect()
    }

    /// Median `|m|` over evaluated points.
    pub fn scale(&self) -> f64 {
        let mut a: Vec<f64> = self.m.iter().flatten().map(|v| v.abs()).collect();
        if a.is_empty() {
            return 0.0;
        }
        a.sort_by(f64::total_cmp);
        let k = a.len();
        if k % 2 == 1 {
            a[k / 2]
        } else {
            0.5 * (a[k / 2 - 1] + a[k / 2])
        }
    }

    /// Default zero tolerance: `1e-4` times [`scale`](Self::scale).
    pub fn zero_tol(&self) -> f64 {
        1e-4 * self.scale()
    }

    pub fn span(&self) -> f64 {
        self.grid[self.grid.len() - 1] - self.grid[0]
    }

    /// CSV rows `axis_value,m,objective` (empty fields where missing) followed
    /// by a `#` comment block with zeros and minima. Every `m` is divided by
    /// `rescale` and the objective by its square; pass 1.0 for stored values.
    pub fn to_csv(&self, rescale: f64) -> String {
        let mut out = String::from("axis_value,m,objective\n");
        for (v, m) in self.grid.iter().zip(&self.m) {
            match m {
                Some(m) => {
                    let r = m / rescale;
                    let _ = writeln!(out, "{v},{r},{}", r * r);
                }
                None => {
                    let _ = writeln!(out, "{v},,");
                }
            }
        }
        let axis = match self.axis {
            Axis::Beta => "beta",
            Axis::Rho => "rho",
        };
        let _ = writeln!(out, "# axis: {axis}");
        for z in &self.zeros {
            let _ = writeln!(out, "# zero: {} (m = {:e}, iterations = {})", z.location, z.value, z.iterations);
        }
        for mn in &self.minima {
            let _ = writeln!(out, "# minimum: {} (objective = {:e})", mn.location, mn.value / (rescale * rescale));
        }
        out
    }

    /// Factor that makes `|m|` at `at` equal to one, for plotting several
    /// curves on a common scale. Uses the nearest evaluated grid point.
    pub fn rescale_factor_at(&self, at: f64) -> Option<f64> {
        self.grid
            .iter()
            .zip(&self.m)
            .filter_map(|(v, m)| m.map(|m| ((v - at).abs(), m.abs())))
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .map(|(_, m)| m)
            .filter(|m| *m > 0.0)
    }
}

/// Evaluates `mode` over `grid` (in parallel), then locates zeros and local
/// minima. Failed grid points are stored as missing.
pub fn scan_curve(panel: &PanelData, mode: ScanMode, grid: &Grid) -> Result<ObjectiveCurve> {
    let points = grid.points()?;
    let (lo, hi) = match mode.axis() {
        Axis::Beta => (-1.0, 3.0),
        Axis::Rho => (-1.0, 1.0),
    };
    if points[0] < lo || points[points.len() - 1] > hi || (mode.axis() == Axis::Rho && points[points.len() - 1] >= hi) {
        return Err(Error::validation("grid", format!("must lie within [{lo}, {hi}] for this axis")));
    }
    let evals: Vec<Option<(f64, f64)>> = points.par_iter().map(|&v| mode.evaluate(panel, v).ok()).collect();
    let m = evals.iter().map(|e| e.map(|(m, _)| m)).collect();
    let se = evals.iter().map(|e| e.map(|(_, s)| s)).collect();
    let mut curve = ObjectiveCurve::from_values(mode.axis(), points, m, se)?;
    curve.zeros = find_zeros(&curve, |v| mode.evaluate(panel, v).ok().map(|(m, _)| m));
    curve.minima = find_local_minima(&curve);
    Ok(curve)
}

const MAX_BISECTIONS: u32 = 60;

/// Refines every sign change between adjacent evaluated grid points by
/// bisection on `eval`. A refined point is kept only if `|m|` falls below
/// [`ObjectiveCurve::zero_tol`]; sign changes across a pole fail this test.
pub fn find_zeros(curve: &ObjectiveCurve, eval: impl Fn(f64) -> Option<f64>) -> Vec<Zero> {
    let tol = curve.zero_tol();
    let width_tol = 1e-6 * curve.span();
    let mut zeros = Vec::new();
    for k in 0..curve.grid.len() {
        let Some(mk) = curve.m[k] else { continue };
        if mk == 0.0 {
            zeros.push(Zero {
                location: curve.grid[k],
                value: 0.0,
                bracket: (curve.grid[k], curve.grid[k]),
                iterations: 0,
            });
            continue;
        }
        let Some(Some(mn)) = curve.m.get(k + 1) else { continue };
        if mn == &0.0 || mk.signum() == mn.signum() {
            continue;
        }
        let (mut a, mut b) = (curve.grid[k], curve.grid[k + 1]);
        let mut fa = mk;
        let (mut mid, mut fm) = (0.5 * (a + b), f64::NAN);
        let mut it = 0;
        while it < MAX_BISECTIONS {
            it += 1;
            mid = 0.5 * (a + b);
            let Some(v) = eval(mid) else { break };
            fm = v;
            if fm == 0.0 {
                a = mid;
                b = mid;
                break;
            }
            if fa.signum() == fm.signum() {
                a = mid;
                fa = fm;
            } else {
                b = mid;
            }
            if fm.abs() < tol && b - a < width_tol {
                break;
            }
        }
        if fm.abs() < tol {
            zeros.push(Zero {
                location: mid,
                value: fm,
                bracket: (a, b),
                iterations: it,
            });
        }
    }
    zeros
}

/// Interior grid points whose `m^2` is strictly below both neighbours,
/// refined by the vertex of the parabola through the three points.
pub fn find_local_minima(curve: &ObjectiveCurve) -> Vec<Minimum> {
    let obj = curve.objective();
    let mut out = Vec::new();
    for k in 1..curve.grid.len().saturating_sub(1) {
        let (Some(f0), Some(f1), Some(f2)) = (obj[k - 1], obj[k], obj[k + 1]) else {
            continue;
        };
        if !(f1 < f0 && f1 < f2) {
            continue;
        }
        let (x0, x1, x2) = (curve.grid[k - 1], curve.grid[k], curve.grid[k + 1]);
        let d0 = (f1 - f0) / (x1 - x0);
        let d1 = (f2 - f1) / (x2 - x1);
        let curv = (d1 - d0) / (x2 - x0);
        let (location, value) = if curv > 0.0 {
            // f(x) = f0 + d0 (x - x0) + curv (x - x0)(x - x1)
            let xv = (0.5 * (x0 + x1) - d0 / (2.0 * curv)).clamp(x0, x2);
            let fv = f0 + d0 * (xv - x0) + curv * (xv - x0) * (xv - x1);
            (xv, fv.max(0.0))
        } else {
            (x1, f1)
        };
        out.push(Minimum { location, value });
    }
    out
}

/// Declared sign of `theta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaSign {
    Positive,
    Negative,
}

impl FromStr for ThetaSign {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "positive" | "+" => Ok(ThetaSign::Positive),
            "negative" | "-" => Ok(ThetaSign::Negative),
            _ => Err(Error::validation("sign_theta", format!("expected positive or negative, got `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionRule {
    ThetaPositive,
    ThetaNegative,
    None,
}

impl From<ThetaSign> for SelectionRule {
    fn from(s: ThetaSign) -> Self {
        match s {
            ThetaSign::Positive => SelectionRule::ThetaPositive,
            ThetaSign::Negative => SelectionRule::ThetaNegative,
        }
    }
}

/// Returns `(chosen, rejected)`: the branch whose `theta` has the declared
/// sign, and the other one.
pub fn select_by_sign(branches: &[SolutionBranch; 2], sign: ThetaSign) -> Result<(SolutionBranch, SolutionBranch)> {
    let [a, b] = *branches;
    let (ta, tb) = (a.params.theta, b.params.theta);
    if !(ta * tb < 0.0) {
        return Err(Error::Internal(format!(
            "branches must have opposite-sign theta, got {ta} and {tb}"
        )));
    }
    let a_matches = match sign {
        ThetaSign::Positive => ta > 0.0,
        ThetaSign::Negative => ta < 0.0,
    };
    Ok(if a_matches { (a, b) } else { (b, a) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub chosen: StructuralParams,
    pub rejected: StructuralParams,
    pub chosen_branch: BranchSign,
    pub selection_rule: SelectionRule,
    pub reduced_form: ReducedFormParams,
    /// Method tag.
    pub provenance: String,
}

impl EstimateResult {
    /// `label,beta,theta,rho_omega,rho_x,alpha,pi` with rows `chosen` and
    /// `rejected`, plus a comment line with the selection rule.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("label,beta,theta,rho_omega,rho_x,alpha,pi\n");
        for (label, p) in [("chosen", &self.chosen), ("rejected", &self.rejected)] {
            let _ = writeln!(
                out,
                "{label},{},{},{},{},{},{}",
                p.beta, p.theta, p.rho_omega, p.rho_x, p.alpha, p.pi
            );
        }
        let rule = match self.selection_rule {
            SelectionRule::ThetaPositive => "theta_positive",
            SelectionRule::ThetaNegative => "theta_negative",
            SelectionRule::None => "none",
        };
        let _ = writeln!(out, "# selection_rule: {rule}");
        let _ = writeln!(out, "# method: {}", self.provenance);
        out
    }
}

/// `|pi_xy| / se` below this is read as the equal-persistence locus.
pub const PI_XY_MIN_T: f64 = 3.0;

/// Fits the reduced form by IV, inverts it, and keeps the branch whose
/// `theta` has the declared sign.
///
/// A non-positive discriminant, or a `pi_xy` within [`PI_XY_MIN_T`] standard
/// errors of zero, is reported as [`Error::FlatLocus`]: the data carry no
/// information separating the two branches.
pub fn two_step_estimator(panel: &PanelData, sign: ThetaSign) -> Result<EstimateResult> {
    if panel.n_periods() < 3 {
        return Err(Error::InsufficientPeriods {
            needed: 3,
            available: panel.n_periods(),
        });
    }
    let fit = estimate::fit_reduced_form(panel)?;
    let rf = fit.params;
    let se = fit.x_equation.std_errors[1];
    let t_stat = if se > 0.0 { rf.pi_xy / se } else { f64::INFINITY * rf.pi_xy.signum() };
    let discriminant = rf.discriminant();
    if t_stat.abs() < PI_XY_MIN_T || !(discriminant > 0.0) {
        return Err(Error::FlatLocus {
            pi_xy: rf.pi_xy,
            t_stat,
            discriminant,
        });
    }
    let branches = invert_reduced_form(&rf)?;
    let (chosen, rejected) = select_by_sign(&branches, sign)?;
    Ok(EstimateResult {
        chosen: chosen.params,
        rejected: rejected.params,
        chosen_branch: chosen.branch_sign,
        selection_rule: sign.into(),
        reduced_form: rf,
        provenance: "two_step_reduced_form_iv".into(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WarmStartStrategy {
    /// Over-identified estimate with `x_t` among the instruments.
    PredeterminedStart,
    /// Sign-restricted two-step reduced-form estimate.
    ReducedFormStart,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarmStart {
    pub point: ParamPoint,
    pub strategy: WarmStartStrategy,
    /// Set when the panel's generating variant does not satisfy the
    /// strategy's timing assumption; the point may be biased.
    pub possibly_biased: bool,
    pub note: String,
}

/// Starting point for a local estimation under weaker timing assumptions.
///
/// `predetermined_start` profiles `rho` over `(-0.95, 0.95)` and solves the
/// moment for `(alpha, beta)` by 2SLS with the predetermined instrument set,
/// keeping the `rho` with the smallest J statistic. `reduced_form_start`
/// returns `(alpha, beta, rho_omega)` from [`two_step_estimator`].
pub fn warm_start_pipeline(panel: &PanelData, strategy: WarmStartStrategy, sign: ThetaSign) -> Result<WarmStart> {
    let variant = panel.spec.variant;
    match strategy {
        WarmStartStrategy::ReducedFormStart => {
            let est = two_step_estimator(panel, sign)?;
            let ok = variant == Variant::Benchmark;
            Ok(WarmStart {
                point: est.chosen.truth_point(),
                strategy,
                possibly_biased: !ok,
                note: if ok {
                    "reduced form matches the panel's timing".into()
                } else {
                    format!("reduced form assumes the benchmark process; panel variant is {variant}")
                },
            })
        }
        WarmStartStrategy::PredeterminedStart => {
            let inst = InstrumentSpec::predetermined();
            let profile = |rho: f64| estimate::profile_rho(panel, rho, &inst).ok().map(|p| p.j_statistic);
            let grid = Grid::new(-0.95, 0.95, 0.01).points()?;
            let js: Vec<Option<f64>> = grid.par_iter().map(|&r| profile(r)).collect();
            let (k, _) = js
                .iter()
                .enumerate()
                .filter_map(|(k, j)| j.map(|j| (k, j)))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .ok_or_else(|| Error::Internal("J statistic undefined on the whole rho grid".into()))?;
            // Golden-section refinement inside the neighbouring cells.
            let (mut a, mut b) = (grid[k.saturating_sub(1)], grid[(k + 1).min(grid.len() - 1)]);
            let g = 0.5 * (5f64.sqrt() - 1.0);
            for _ in 0..60 {
                let c = b - g * (b - a);
                let d = a + g * (b - a);
                let (fc, fd) = (profile(c).unwrap_or(f64::INFINITY), profile(d).unwrap_or(f64::INFINITY));
                if fc < fd {
                    b = d;
                } else {
                    a = c;
                }
            }
            let rho = 0.5 * (a + b);
            let fit = estimate::profile_rho(panel, rho, &inst)?;
            let ok = variant == Variant::Predetermined;
            Ok(WarmStart {
                point: fit.point,
                strategy,
                possibly_biased: !ok,
                note: if ok {
                    format!("J = {:.3} at the selected rho", fit.j_statistic)
                } else {
                    format!("x_t is not a valid instrument for panel variant {variant}; J = {:.3}", fit.j_statistic)
                },
            })
        }
    }
}
