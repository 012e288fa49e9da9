//! Moment residuals, the just-identified IV kernel, GMM objective evaluation,
//! and the concentration procedures used to draw objective curves.
//!
//! Observations are pooled over firms and periods. A series "at lag `k`" for
//! a residual starting at period `t0` is the `[n_firms x (T - t0)]` window
//! ending `k` periods early, stacked firm-major.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use ndarray::{s, Array1, Array2, ArrayView2, Zip};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Factored;
use crate::model::{ParamPoint, ReducedFormParams};
use crate::simulate::PanelData;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Series {
    Y,
    X,
    Z,
}

impl Series {
    fn name(&self) -> &'static str {
        match self {
            Series::Y => "y",
            Series::X => "x",
            Series::Z => "z",
        }
    }

    fn matrix<'a>(&self, panel: &'a PanelData) -> Result<&'a Array2<f64>> {
        match self {
            Series::Y => Ok(&panel.y),
            Series::X => Ok(&panel.x),
            Series::Z => panel.z.as_ref().ok_or(Error::MissingInput("z")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Source {
    Const,
    Lag { series: Series, lag: usize },
}

/// One instrument column, optionally rescaled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Instrument {
    pub source: Source,
    pub scale: f64,
}

impl Instrument {
    pub const fn constant() -> Self {
        Self {
            source: Source::Const,
            scale: 1.0,
        }
    }

    pub const fn lag(series: Series, lag: usize) -> Self {
        Self {
            source: Source::Lag { series, lag },
            scale: 1.0,
        }
    }

    pub fn name(&self) -> String {
        let base = match self.source {
            Source::Const => "1".to_string(),
            Source::Lag { series, lag: 0 } => format!("{}_t", series.name()),
            Source::Lag { series, lag } => format!("{}_{{t-{lag}}}", series.name()),
        };
        if self.scale == 1.0 {
            base
        } else {
            format!("{}*{base}", self.scale)
        }
    }

    fn max_lag(&self) -> usize {
        match self.source {
            Source::Const => 0,
            Source::Lag { lag, .. } => lag,
        }
    }

    fn column(&self, panel: &PanelData, t0: usize) -> Result<Array1<f64>> {
        let mut col = match self.source {
            Source::Const => Array1::ones(panel.n_firms() * (panel.n_periods() - t0)),
            Source::Lag { series, lag } => stacked(series.matrix(panel)?, t0, lag),
        };
        if self.scale != 1.0 {
            col *= self.scale;
        }
        Ok(col)
    }
}

/// A named instrument set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstrumentSpec {
    pub instruments: Vec<Instrument>,
}

impl InstrumentSpec {
    /// `{1, x_{t-1}, x_{t-2}, y_{t-2}}`. `y_{t-1}` is excluded: it carries
    /// `eta_{t-1}`, which also enters the quasi-differenced residual.
    pub fn benchmark() -> Self {
        Self {
            instruments: vec![
                Instrument::constant(),
                Instrument::lag(Series::X, 1),
                Instrument::lag(Series::X, 2),
                Instrument::lag(Series::Y, 2),
            ],
        }
    }

    /// `{1, x_{t-2}, x_{t-3}, y_{t-3}}` for the double-differenced moment.
    pub fn fixed_effects() -> Self {
        Self {
            instruments: vec![
                Instrument::constant(),
                Instrument::lag(Series::X, 2),
                Instrument::lag(Series::X, 3),
                Instrument::lag(Series::Y, 3),
            ],
        }
    }

    /// Benchmark set plus `x_t`, valid when inputs are chosen a period early.
    pub fn predetermined() -> Self {
        let mut spec = Self::benchmark();
        spec.instruments.push(Instrument::lag(Series::X, 0));
        spec
    }

    /// `{x_{t-1}}` alone.
    pub fn concentrated_beta() -> Self {
        Self {
            instruments: vec![Instrument::lag(Series::X, 1)],
        }
    }

    /// Benchmark set extended with lags of `z`.
    pub fn multi_input() -> Self {
        let mut spec = Self::benchmark();
        spec.instruments.push(Instrument::lag(Series::Z, 1));
        spec.instruments.push(Instrument::lag(Series::Z, 2));
        spec
    }

    pub fn names(&self) -> Vec<String> {
        self.instruments.iter().map(Instrument::name).collect()
    }

    pub fn max_lag(&self) -> usize {
        self.instruments.iter().map(Instrument::max_lag).max().unwrap_or(0)
    }

    /// Same set with instrument `k` multiplied by `factor`.
    pub fn scaled(mut self, k: usize, factor: f64) -> Self {
        self.instruments[k].scale *= factor;
        self
    }
}

/// Window of `m` for periods `t0..T`, shifted back by `lag`.
fn window(m: &Array2<f64>, t0: usize, lag: usize) -> ArrayView2<'_, f64> {
    let t = m.ncols();
    m.slice(s![.., t0 - lag..t - lag])
}

/// Firm-major stack of [`window`].
fn stacked(m: &Array2<f64>, t0: usize, lag: usize) -> Array1<f64> {
    window(m, t0, lag).iter().copied().collect()
}

fn require_periods(panel: &PanelData, t0: usize) -> Result<()> {
    if t0 >= panel.n_periods() {
        return Err(Error::InsufficientPeriods {
            needed: t0 + 1,
            available: panel.n_periods(),
        });
    }
    Ok(())
}

/// Residuals for periods `first_period..T` (zero-based), one row per firm.
#[derive(Debug, Clone, PartialEq)]
pub struct Residuals {
    pub first_period: usize,
    pub values: Array2<f64>,
}

impl Residuals {
    /// Firm-major stack restricted to periods `t0..T`.
    fn stacked_from(&self, t0: usize) -> Array1<f64> {
        self.values
            .slice(s![.., t0 - self.first_period..])
            .iter()
            .copied()
            .collect()
    }
}

/// `(y_t - rho y_{t-1}) - alpha (1 - rho) - beta (x_t - rho x_{t-1})`.
pub fn quasi_diff_residual(panel: &PanelData, p: &ParamPoint) -> Result<Residuals> {
    require_periods(panel, 1)?;
    let (y, x) = (&panel.y, &panel.x);
    let c = p.alpha * (1.0 - p.rho);
    let mut out = Array2::zeros((panel.n_firms(), panel.n_periods() - 1));
    Zip::from(&mut out)
        .and(window(y, 1, 0))
        .and(window(y, 1, 1))
        .and(window(x, 1, 0))
        .and(window(x, 1, 1))
        .for_each(|r, &yt, &y1, &xt, &x1| {
            *r = (yt - p.rho * y1) - c - p.beta * (xt - p.rho * x1);
        });
    Ok(Residuals {
        first_period: 1,
        values: out,
    })
}

/// `(D y_t - D y_{t-1}) - beta (D x_t - D x_{t-1})` with `D a_t = a_t - rho a_{t-1}`.
pub fn double_diff_residual(panel: &PanelData, beta: f64, rho: f64) -> Result<Residuals> {
    require_periods(panel, 2)?;
    let qd = |m: &Array2<f64>, lag: usize| &window(m, 2, lag) - &(&window(m, 2, lag + 1) * rho);
    let dy = &qd(&panel.y, 0) - &qd(&panel.y, 1);
    let dx = &qd(&panel.x, 0) - &qd(&panel.x, 1);
    let out = dy - dx * beta;
    Ok(Residuals {
        first_period: 2,
        values: out,
    })
}

/// Two-input quasi-differenced residual.
pub fn multi_input_residual(
    panel: &PanelData,
    alpha: f64,
    beta: f64,
    gamma: f64,
    rho: f64,
) -> Result<Residuals> {
    let z = panel.z.as_ref().ok_or(Error::MissingInput("z"))?;
    require_periods(panel, 1)?;
    let c = alpha * (1.0 - rho);
    let qd = |m: &Array2<f64>| &window(m, 1, 0) - &(&window(m, 1, 1) * rho);
    let out = qd(&panel.y) - c - qd(&panel.x) * beta - qd(z) * gamma;
    Ok(Residuals {
        first_period: 1,
        values: out,
    })
}

/// Residual family and the parameters it is evaluated at.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "family")]
pub enum MomentFamily {
    QuasiDiff(ParamPoint),
    DoubleDiff {
        beta: f64,
        rho: f64,
    },
    MultiInput {
        alpha: f64,
        beta: f64,
        gamma: f64,
        rho: f64,
    },
}

impl MomentFamily {
    pub fn residuals(&self, panel: &PanelData) -> Result<Residuals> {
        match *self {
            MomentFamily::QuasiDiff(p) => quasi_diff_residual(panel, &p),
            MomentFamily::DoubleDiff { beta, rho } => double_diff_residual(panel, beta, rho),
            MomentFamily::MultiInput {
                alpha,
                beta,
                gamma,
                rho,
            } => multi_input_residual(panel, alpha, beta, gamma, rho),
        }
    }
}

/// Result of a just-identified IV fit.
#[derive(Debug, Clone, PartialEq)]
pub struct IvFit {
    pub coefficients: Vec<f64>,
    /// Homoskedastic large-sample standard errors.
    pub std_errors: Vec<f64>,
    pub residuals: Array1<f64>,
    pub n_obs: usize,
    /// `Z'X / n`.
    pub zx: DMatrix<f64>,
    /// `Z'Z / n`.
    pub zz: DMatrix<f64>,
    /// `X'X / n`.
    pub xx: DMatrix<f64>,
    pub names: Vec<String>,
}

impl IvFit {
    /// `name,value` rows: coefficients, their standard errors, and `n_obs`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("name,value\n");
        for (i, (c, se)) in self.coefficients.iter().zip(&self.std_errors).enumerate() {
            let name = self.names.get(i).cloned().unwrap_or_else(|| format!("b{i}"));
            let _ = writeln!(out, "{name},{c}");
            let _ = writeln!(out, "se[{name}],{se}");
        }
        let _ = writeln!(out, "n_obs,{}", self.n_obs);
        out
    }
}

fn cross(a: &[Array1<f64>], b: &[Array1<f64>], n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(a.len(), b.len(), |i, j| a[i].dot(&b[j]) / n as f64)
}

/// Just-identified IV: `(Z'X)^{-1} Z'y`. Columns are passed as separate
/// vectors; `instruments.len()` must equal `regressors.len()`.
pub fn two_sls(
    dep: &Array1<f64>,
    regressors: &[Array1<f64>],
    instruments: &[Array1<f64>],
) -> Result<IvFit> {
    let k = regressors.len();
    if instruments.len() != k || k == 0 {
        return Err(Error::Dimension(format!(
            "just-identified IV needs as many instruments as regressors ({} vs {k})",
            instruments.len()
        )));
    }
    let n = dep.len();
    if regressors.iter().chain(instruments).any(|c| c.len() != n) {
        return Err(Error::Dimension("column lengths differ".into()));
    }
    if n <= k {
        return Err(Error::Dimension(format!("{n} observations for {k} coefficients")));
    }
    let zx = cross(instruments, regressors, n);
    let zz = cross(instruments, instruments, n);
    let xx = cross(regressors, regressors, n);
    let zy = DVector::from_iterator(k, instruments.iter().map(|z| z.dot(dep) / n as f64));
    let factored = Factored::new(&zx)?;
    let coef = factored.solve(&zy);

    let mut residuals = dep.clone();
    for (col, b) in regressors.iter().zip(coef.iter()) {
        residuals.scaled_add(-b, col);
    }
    let sigma2 = residuals.dot(&residuals) / (n - k) as f64;
    let inv = factored.inverse();
    let cov = &inv * &zz * inv.transpose() * (sigma2 / n as f64);
    let std_errors = (0..k).map(|i| cov[(i, i)].max(0.0).sqrt()).collect();

    Ok(IvFit {
        coefficients: coef.iter().copied().collect(),
        std_errors,
        residuals,
        n_obs: n,
        zx,
        zz,
        xx,
        names: Vec::new(),
    })
}

/// Moment `(1/n) sum extra * e` for the residual `e` of a just-identified fit,
/// with a standard error that accounts for the fitted coefficients.
fn post_fit_moment(
    fit: &IvFit,
    extra: &Array1<f64>,
    regressors: &[Array1<f64>],
    instruments: &[Array1<f64>],
) -> Result<(f64, f64)> {
    let n = fit.n_obs as f64;
    let e = &fit.residuals;
    let m = extra.dot(e) / n;
    // Influence: e_i (extra_i - h' z_i) with h' = (extra'X/n) (Z'X/n)^{-1}.
    let g = DVector::from_iterator(regressors.len(), regressors.iter().map(|x| extra.dot(x) / n));
    let factored = Factored::new(&fit.zx.transpose())?;
    let h = factored.solve(&g);
    let mut adj = extra.clone();
    for (z, hk) in instruments.iter().zip(h.iter()) {
        adj.scaled_add(-hk, z);
    }
    let phi = &adj * e;
    let mean = phi.sum() / n;
    let var = (phi.dot(&phi) / n - mean * mean).max(0.0);
    Ok((m, (var / n).sqrt()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Weighting {
    Identity,
    /// Inverse outer product of the moments at a first-stage point.
    TwoStep { first_stage: MomentFamily },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightingKind {
    Identity,
    TwoStep,
}

/// Sample moments, their standard errors, and the quadratic-form objective.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentReport {
    pub names: Vec<String>,
    pub moments: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub objective: f64,
    pub weighting: WeightingKind,
    pub n_obs: usize,
}

impl MomentReport {
    pub fn standardized(&self) -> Vec<f64> {
        self.moments
            .iter()
            .zip(&self.std_errors)
            .map(|(m, se)| m / se)
            .collect()
    }

    /// Largest `|m_k| / se_k` over moments with a nonzero standard error.
    pub fn max_abs_standardized(&self) -> f64 {
        self.moments
            .iter()
            .zip(&self.std_errors)
            .filter(|(_, se)| **se > 0.0)
            .map(|(m, se)| (m / se).abs())
            .fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("name,value\n");
        for (name, m) in self.names.iter().zip(&self.moments) {
            let _ = writeln!(out, "{name},{m}");
        }
        for (name, se) in self.names.iter().zip(&self.std_errors) {
            let _ = writeln!(out, "se[{name}],{se}");
        }
        let _ = writeln!(out, "objective,{}", self.objective);
        let _ = writeln!(out, "n_obs,{}", self.n_obs);
        out
    }
}

/// Per-observation moment contributions `z_k * r` on a common window.
fn moment_contributions(
    panel: &PanelData,
    family: &MomentFamily,
    instruments: &InstrumentSpec,
) -> Result<(Vec<Array1<f64>>, usize)> {
    let res = family.residuals(panel)?;
    let t0 = res.first_period.max(instruments.max_lag());
    require_periods(panel, t0)?;
    let r = res.stacked_from(t0);
    let n = r.len();
    let g = instruments
        .instruments
        .iter()
        .map(|inst| Ok(inst.column(panel, t0)? * &r))
        .collect::<Result<Vec<_>>>()?;
    Ok((g, n))
}

/// Evaluates `m = (1/n) sum z r` and `m' W m`.
pub fn gmm_objective(
    panel: &PanelData,
    family: &MomentFamily,
    instruments: &InstrumentSpec,
    weighting: &Weighting,
) -> Result<MomentReport> {
    let (g, n) = moment_contributions(panel, family, instruments)?;
    let nf = n as f64;
    let moments: Vec<f64> = g.iter().map(|gk| gk.sum() / nf).collect();
    let std_errors = g
        .iter()
        .zip(&moments)
        .map(|(gk, m)| ((gk.dot(gk) / nf - m * m).max(0.0) / nf).sqrt())
        .collect();
    let mv = DVector::from_column_slice(&moments);
    let (objective, kind) = match weighting {
        Weighting::Identity => (mv.dot(&mv), WeightingKind::Identity),
        Weighting::TwoStep { first_stage } => {
            let (g1, n1) = moment_contributions(panel, first_stage, instruments)?;
            let s = cross(&g1, &g1, n1);
            let w = Factored::new(&s)?.inverse();
            ((mv.transpose() * w * &mv)[(0, 0)], WeightingKind::TwoStep)
        }
    };
    Ok(MomentReport {
        names: instruments.names(),
        moments,
        std_errors,
        objective,
        weighting: kind,
        n_obs: n,
    })
}

/// Reduced-form system fitted by IV, with the two underlying fits.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedFormFit {
    pub params: ReducedFormParams,
    pub y_equation: IvFit,
    pub x_equation: IvFit,
}

/// Regresses `y_t` and `x_t` on `{1, y_{t-1}, x_{t-1}}` with instruments
/// `{1, y_{t-2}, x_{t-1}}`, pooling periods `t >= 2` (zero-based).
pub fn fit_reduced_form(panel: &PanelData) -> Result<ReducedFormFit> {
    let t0 = 2;
    require_periods(panel, t0)?;
    let (y, x) = (&panel.y, &panel.x);
    let ones = Array1::ones(panel.n_firms() * (panel.n_periods() - t0));
    let regressors = [ones.clone(), stacked(y, t0, 1), stacked(x, t0, 1)];
    let instruments = [ones, stacked(y, t0, 2), stacked(x, t0, 1)];
    let names = |lhs: &str| {
        vec![
            format!("pi_{lhs}0"),
            format!("pi_{lhs}y"),
            format!("pi_{lhs}x"),
        ]
    };
    let mut fy = two_sls(&stacked(y, t0, 0), &regressors, &instruments)?;
    fy.names = names("y");
    let mut fx = two_sls(&stacked(x, t0, 0), &regressors, &instruments)?;
    fx.names = names("x");
    let params = ReducedFormParams {
        pi_y0: fy.coefficients[0],
        pi_yy: fy.coefficients[1],
        pi_yx: fy.coefficients[2],
        pi_x0: fx.coefficients[0],
        pi_xy: fx.coefficients[1],
        pi_xx: fx.coefficients[2],
    };
    Ok(ReducedFormFit {
        params,
        y_equation: fy,
        x_equation: fx,
    })
}

/// Outcome of concentrating `(alpha, rho)` out at a candidate `beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConcentratedBeta {
    pub beta: f64,
    pub alpha: f64,
    pub rho: f64,
    /// `(1/n) sum x_{t-1} e_t`.
    pub moment: f64,
    pub std_error: f64,
    pub n_obs: usize,
}

/// Concentrates `(alpha, rho)` out of the quasi-differenced moment.
///
/// With `w_t = y_t - beta x_t`, fits `w_t = c + rho w_{t-1}` using
/// `{1, w_{t-2}}` as instruments, sets `alpha = c / (1 - rho)`, and returns
/// the single moment `(1/n) sum x_{t-1} [(y_t - rho y_{t-1}) - alpha (1 - rho)
/// - beta (x_t - rho x_{t-1})]`.
pub fn concentrate_beta(panel: &PanelData, beta: f64) -> Result<ConcentratedBeta> {
    let t0 = 2;
    require_periods(panel, t0)?;
    let w = &panel.y - &(&panel.x * beta);
    let n = panel.n_firms() * (panel.n_periods() - t0);
    let ones = Array1::ones(n);
    let regressors = [ones.clone(), stacked(&w, t0, 1)];
    let instruments = [ones, stacked(&w, t0, 2)];
    let fit = two_sls(&stacked(&w, t0, 0), &regressors, &instruments)?;
    let (c, rho) = (fit.coefficients[0], fit.coefficients[1]);
    let x1 = stacked(&panel.x, t0, 1);
    let (moment, std_error) = post_fit_moment(&fit, &x1, &regressors, &instruments)?;
    Ok(ConcentratedBeta {
        beta,
        alpha: c / (1.0 - rho),
        rho,
        moment,
        std_error,
        n_obs: n,
    })
}

/// Which linear model is solved at a fixed `rho`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhoFamily {
    /// `(alpha, beta)` from instruments `{1, x_{t-1}}`; over-identifying
    /// `{y_{t-2}, x_{t-2}}`.
    Benchmark,
    /// `(alpha, beta, gamma)` from `{1, x_{t-1}, z_{t-1}}`; over-identifying
    /// `{y_{t-2}, x_{t-2}, z_{t-2}}`.
    MultiInput,
}

/// Outcome of solving the linear part of the moment at a candidate `rho`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcentratedRho {
    pub rho: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: Option<f64>,
    /// Over-identifying moments in the family's order; the first one is the
    /// curve value.
    pub over_id_names: Vec<String>,
    pub over_id: Vec<f64>,
    pub over_id_se: Vec<f64>,
    pub n_obs: usize,
}

/// Solves the moment for its linear coefficients at `rho` and reports the
/// remaining over-identifying moments.
pub fn concentrate_rho(panel: &PanelData, rho: f64, family: RhoFamily) -> Result<ConcentratedRho> {
    let t0 = 2;
    require_periods(panel, t0)?;
    let diff = |m: &Array2<f64>| stacked(m, t0, 0) - &(stacked(m, t0, 1) * rho);
    let n = panel.n_firms() * (panel.n_periods() - t0);
    let ones = Array1::ones(n);
    let dep = diff(&panel.y);
    let mut regressors = vec![ones.clone(), diff(&panel.x)];
    let mut instruments = vec![ones, stacked(&panel.x, t0, 1)];
    let mut extra = vec![Instrument::lag(Series::Y, 2), Instrument::lag(Series::X, 2)];
    if family == RhoFamily::MultiInput {
        let z = panel.z.as_ref().ok_or(Error::MissingInput("z"))?;
        regressors.push(diff(z));
        instruments.push(stacked(z, t0, 1));
        extra.push(Instrument::lag(Series::Z, 2));
    }
    let fit = two_sls(&dep, &regressors, &instruments)?;
    let mut over_id = Vec::with_capacity(extra.len());
    let mut over_id_se = Vec::with_capacity(extra.len());
    for inst in &extra {
        let col = inst.column(panel, t0)?;
        let (m, se) = post_fit_moment(&fit, &col, &regressors, &instruments)?;
        over_id.push(m);
        over_id_se.push(se);
    }
    Ok(ConcentratedRho {
        rho,
        alpha: fit.coefficients[0] / (1.0 - rho),
        beta: fit.coefficients[1],
        gamma: fit.coefficients.get(2).copied(),
        over_id_names: extra.iter().map(Instrument::name).collect(),
        over_id,
        over_id_se,
        n_obs: n,
    })
}

/// Quasi-differenced moment solved for `(alpha, beta)` at a fixed `rho` by
/// two-stage least squares on an arbitrary (possibly over-identifying)
/// instrument set.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfiledRho {
    pub point: ParamPoint,
    /// `n m' S^{-1} m` with the homoskedastic `S = sigma^2 Z'Z / n`; zero when
    /// just identified.
    pub j_statistic: f64,
    pub n_obs: usize,
}

pub fn profile_rho(panel: &PanelData, rho: f64, instruments: &InstrumentSpec) -> Result<ProfiledRho> {
    let t0 = instruments.max_lag().max(1);
    require_periods(panel, t0)?;
    let diff = |m: &Array2<f64>| stacked(m, t0, 0) - &(stacked(m, t0, 1) * rho);
    let dep = diff(&panel.y);
    let n = dep.len();
    let regressors = [Array1::ones(n), diff(&panel.x)];
    let z = instruments
        .instruments
        .iter()
        .map(|inst| inst.column(panel, t0))
        .collect::<Result<Vec<_>>>()?;
    if z.len() < regressors.len() {
        return Err(Error::Dimension(format!(
            "{} instruments for {} coefficients",
            z.len(),
            regressors.len()
        )));
    }
    let zx = cross(&z, &regressors, n);
    let zz = cross(&z, &z, n);
    let zy = DVector::from_iterator(z.len(), z.iter().map(|c| c.dot(&dep) / n as f64));
    let w = Factored::new(&zz)?.inverse();
    let a = zx.transpose() * &w * &zx;
    let b = zx.transpose() * &w * &zy;
    let coef = Factored::new(&a)?.solve(&b);

    let mut e = dep;
    for (col, c) in regressors.iter().zip(coef.iter()) {
        e.scaled_add(-c, col);
    }
    let sigma2 = e.dot(&e) / n as f64;
    let m = DVector::from_iterator(z.len(), z.iter().map(|c| c.dot(&e) / n as f64));
    let j_statistic = if sigma2 > 0.0 {
        n as f64 * (m.transpose() * &w * &m)[(0, 0)] / sigma2
    } else {
        0.0
    };
    Ok(ProfiledRho {
        point: ParamPoint {
            alpha: coef[0] / (1.0 - rho),
            beta: coef[1],
            rho,
        },
        j_statistic,
        n_obs: n,
    })
}
