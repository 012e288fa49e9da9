//! Ex-post checks that tell a true solution from a pseudo-solution, and that
//! warn when the data sit on the equal-persistence locus.
//!
//! Every check is a pure function of its inputs and returns a
//! [`DiagnosticReport`] carrying the rule that produced the verdict.

use std::fmt;

use ndarray::{s, Array1, Zip};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::estimate::two_sls;
use crate::identify::{ObjectiveCurve, ThetaSign};
use crate::model::ParamPoint;
use crate::simulate::PanelData;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    ConsistentWithTruth,
    PseudoSuspected,
    Inconclusive,
    EqualRhoWarning,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::ConsistentWithTruth => "consistent_with_truth",
            Verdict::PseudoSuspected => "pseudo_suspected",
            Verdict::Inconclusive => "inconclusive",
            Verdict::EqualRhoWarning => "equal_rho_warning",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticReport {
    pub name: String,
    pub statistic: f64,
    pub standard_error: f64,
    pub verdict: Verdict,
    pub rule_applied: String,
}

impl DiagnosticReport {
    /// `statistic / standard_error`, `NaN` when undefined.
    pub fn t_stat(&self) -> f64 {
        if self.standard_error > 0.0 {
            self.statistic / self.standard_error
        } else {
            f64::NAN
        }
    }

    pub const CSV_HEADER: &'static str = "check,statistic,standard_error,verdict,rule";

    /// One CSV row matching [`CSV_HEADER`](Self::CSV_HEADER); the rule is quoted.
    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},\"{}\"",
            self.name,
            self.statistic,
            self.standard_error,
            self.verdict.as_str(),
            self.rule_applied.replace('"', "\"\"")
        )
    }
}

impl fmt::Display for DiagnosticReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: statistic = {:.6}, se = {:.6} -> {} ({})",
            self.name,
            self.statistic,
            self.standard_error,
            self.verdict.as_str(),
            self.rule_applied
        )
    }
}

/// Verdict thresholds, in standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    /// Sign tests flag a contradiction beyond this many standard errors.
    pub sign: f64,
    /// AR-order test: `|t|` above this supports distinct persistences.
    pub ar_reject: f64,
    /// AR-order test: `|t|` below this warns of equal persistence.
    pub ar_accept: f64,
    /// Flatness guard: largest standardized `|m|` below this warns.
    pub flatness: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            sign: 3.0,
            ar_reject: 4.0,
            ar_accept: 2.0,
            flatness: 3.0,
        }
    }
}

/// `e_it = y_it - alpha - beta x_it`, flattened.
fn composite_residual(panel: &PanelData, p: &ParamPoint) -> Array1<f64> {
    let mut e = Array1::zeros(panel.n_obs());
    Zip::from(&mut e)
        .and(panel.y.view().into_shape_with_order(panel.n_obs()).expect("contiguous"))
        .and(panel.x.view().into_shape_with_order(panel.n_obs()).expect("contiguous"))
        .for_each(|e, &y, &x| *e = y - p.alpha - p.beta * x);
    e
}

/// Sign of the `x`-residual correlation versus the declared sign of `theta`.
///
/// At the truth the residual is `omega + eta`, which moves with `x` in the
/// direction of `theta`; at the pseudo point it is `eta - kappa / theta`, which
/// moves against it. The standard error is `1/sqrt(n)`.
pub fn residual_sign_test(panel: &PanelData, p: &ParamPoint, sign: ThetaSign) -> DiagnosticReport {
    residual_sign_test_with(panel, p, sign, &Thresholds::default())
}

pub fn residual_sign_test_with(panel: &PanelData, p: &ParamPoint, sign: ThetaSign, th: &Thresholds) -> DiagnosticReport {
    let e = composite_residual(panel, p);
    let x = panel.x.iter().copied().collect::<Array1<f64>>();
    let n = e.len() as f64;
    let (mx, me) = (x.sum() / n, e.sum() / n);
    let (mut sxx, mut see, mut sxe) = (0.0, 0.0, 0.0);
    for (xi, ei) in x.iter().zip(e.iter()) {
        let (dx, de) = (xi - mx, ei - me);
        sxx += dx * dx;
        see += de * de;
        sxe += dx * de;
    }
    let se = 1.0 / n.sqrt();
    let name = "residual_sign".to_string();
    let scale = (sxx * see).sqrt();
    // Treat variation at rounding level as none.
    if !(scale > 1e-12 * n) {
        return DiagnosticReport {
            name,
            statistic: f64::NAN,
            standard_error: se,
            verdict: Verdict::Inconclusive,
            rule_applied: "correlation undefined: zero variance in x or residual".into(),
        };
    }
    let corr = sxe / scale;
    let signed = match sign {
        ThetaSign::Positive => corr,
        ThetaSign::Negative => -corr,
    };
    let verdict = if signed < -th.sign * se {
        Verdict::PseudoSuspected
    } else if signed > th.sign * se {
        Verdict::ConsistentWithTruth
    } else {
        Verdict::Inconclusive
    };
    DiagnosticReport {
        name,
        statistic: corr,
        standard_error: se,
        verdict,
        rule_applied: format!(
            "corr(x, y - alpha - beta x) against declared theta sign; contradiction beyond {} se flags pseudo",
            th.sign
        ),
    }
}

/// `(1/n) sum x_it (y_it - alpha - beta x_it) >= 0`, a one-sided necessary
/// condition for a positive `theta`.
pub fn moment_inequality(panel: &PanelData, p: &ParamPoint) -> DiagnosticReport {
    moment_inequality_with(panel, p, &Thresholds::default())
}

pub fn moment_inequality_with(panel: &PanelData, p: &ParamPoint, th: &Thresholds) -> DiagnosticReport {
    let e = composite_residual(panel, p);
    let g: Array1<f64> = panel.x.iter().zip(e.iter()).map(|(x, e)| x * e).collect();
    let n = g.len() as f64;
    let mean = g.sum() / n;
    let var = (g.dot(&g) / n - mean * mean).max(0.0);
    let se = (var / n).sqrt();
    let verdict = if mean < -th.sign * se {
        Verdict::PseudoSuspected
    } else if mean > th.sign * se {
        Verdict::ConsistentWithTruth
    } else {
        Verdict::Inconclusive
    };
    DiagnosticReport {
        name: "moment_inequality".into(),
        statistic: mean,
        standard_error: se,
        verdict,
        rule_applied: format!(
            "E[x (y - alpha - beta x)] >= 0 for theta > 0; below -{} se flags pseudo (one-sided check)",
            th.sign
        ),
    }
}

/// Pooled OLS of `x_t` on `{1, x_{t-1}, x_{t-2}}`; reports the second-lag
/// coefficient. Distinct persistences make `x` an ARMA(2,1); equal ones make
/// it an exact AR(1).
pub fn ar_order_test(panel: &PanelData) -> Result<DiagnosticReport> {
    ar_order_test_with(panel, &Thresholds::default())
}

pub fn ar_order_test_with(panel: &PanelData, th: &Thresholds) -> Result<DiagnosticReport> {
    let t = panel.n_periods();
    if t < 3 {
        return Err(crate::error::Error::InsufficientPeriods { needed: 3, available: t });
    }
    let x = &panel.x;
    let col = |lag: usize| x.slice(s![.., 2 - lag..t - lag]).iter().copied().collect::<Array1<f64>>();
    let dep = col(0);
    let regs = [Array1::ones(dep.len()), col(1), col(2)];
    let fit = two_sls(&dep, &regs, &regs)?;
    let (b2, se) = (fit.coefficients[2], fit.std_errors[2]);
    let ts = (b2 / se).abs();
    let verdict = if ts > th.ar_reject {
        Verdict::ConsistentWithTruth
    } else if ts < th.ar_accept {
        Verdict::EqualRhoWarning
    } else {
        Verdict::Inconclusive
    };
    Ok(DiagnosticReport {
        name: "ar_order".into(),
        statistic: b2,
        standard_error: se,
        verdict,
        rule_applied: format!(
            "second-lag coefficient of x: |t| > {} supports distinct persistences; |t| < {} warns of equal persistence",
            th.ar_reject, th.ar_accept
        ),
    })
}

/// Largest standardized `|m|` over a scanned curve. A curve that never
/// leaves sampling noise carries no information on the scanned parameter.
pub fn flatness_guard(curve: &ObjectiveCurve) -> DiagnosticReport {
    flatness_guard_with(curve, &Thresholds::default())
}

pub fn flatness_guard_with(curve: &ObjectiveCurve, th: &Thresholds) -> DiagnosticReport {
    let mut stat = 0.0_f64;
    let mut se_at = f64::NAN;
    for (m, se) in curve.m.iter().zip(&curve.std_errors) {
        if let (Some(m), Some(se)) = (m, se) {
            if *se > 0.0 && (m / se).abs() > stat {
                stat = (m / se).abs();
                se_at = *se;
            }
        }
    }
    DiagnosticReport {
        name: "flatness".into(),
        statistic: stat,
        standard_error: se_at,
        verdict: if stat < th.flatness {
            Verdict::EqualRhoWarning
        } else {
            Verdict::Inconclusive
        },
        rule_applied: format!(
            "max over grid of |m| / se(m); below {} warns of the equal-persistence flat locus",
            th.flatness
        ),
    }
}
