//! Named sub-model grids for the five extension figures.
//!
//! Each preset starts from the configured DGP (shape, seed, structural
//! parameters, scales) and changes only the variant and the swept parameter.

use std::fmt::Write as _;

use pseudo_id::identify::{scan_curve, Grid, ObjectiveCurve, ScanMode};
use pseudo_id::simulate::{draw_panel, DgpSpec, Variant};
use rayon::prelude::*;

use crate::error::CliError;
use crate::output::Artifacts;

/// Curves are plotted on a common scale: `|m|` is one at this beta.
pub const RESCALE_AT: f64 = 0.0;

pub struct SubModel {
    pub label: String,
    pub spec: DgpSpec,
}

fn sub(base: &DgpSpec, variant: Variant, label: String, f: impl FnOnce(&mut DgpSpec)) -> SubModel {
    let mut spec = DgpSpec { variant, ..*base };
    f(&mut spec);
    SubModel { label, spec }
}

pub fn preset(which: u8, base: &DgpSpec) -> Result<Vec<SubModel>, CliError> {
    let bench = || sub(base, Variant::Benchmark, "benchmark".into(), |_| {});
    let out = match which {
        // theta2 = 0 is the benchmark input rule.
        1 => [0.0, 0.5, 1.0]
            .iter()
            .map(|&v| sub(base, Variant::NonlinearOmegaInput, format!("theta2_{v}"), |s| s.ext.theta2 = v))
            .collect(),
        2 => std::iter::once(bench())
            .chain([0.5, 0.75].iter().map(|&v| {
                sub(base, Variant::LogisticKappa, format!("theta2_{v}"), |s| s.ext.theta2 = v)
            }))
            .collect(),
        3 => std::iter::once(bench())
            .chain([0.02, 0.1, 0.2, 0.3, 0.4, 0.5].iter().map(|&v| {
                sub(base, Variant::Ar2Kappa, format!("rho2_x_{v}"), |s| {
                    s.ext.rho1_x = 0.5;
                    s.ext.rho2_x = v;
                })
            }))
            .collect(),
        // sigma_eps = 0 is the benchmark.
        4 => (0..=10)
            .map(|k| {
                let v = k as f64 / 10.0;
                sub(base, Variant::ArmaX, format!("sigma_eps_{v}"), |s| s.ext.sigma_eps = v)
            })
            .collect(),
        5 => vec![bench(), sub(base, Variant::ReversedCurvature, "reversed_curvature".into(), |_| {})],
        _ => return Err(CliError::config(format!("figure.which must be 1..5, got {which}"))),
    };
    Ok(out)
}

enum Outcome {
    Curve(ObjectiveCurve),
    Rejected(String),
}

/// Scans every sub-model concurrently. Sub-models that fail validation are
/// listed as rejected in the summary; any other failure aborts the run.
pub fn run(which: u8, base: &DgpSpec, grid: &Grid, artifacts: &mut Artifacts) -> Result<(), CliError> {
    let models = preset(which, base)?;
    let outcomes: Vec<Result<Outcome, CliError>> = models
        .par_iter()
        .map(|m| {
            if let Err(e) = m.spec.validate() {
                return Ok(Outcome::Rejected(e.to_string()));
            }
            let panel = draw_panel(&m.spec).map_err(|e| CliError::core("simulate", e))?;
            scan_curve(&panel, ScanMode::ConcentratedBeta, grid)
                .map(Outcome::Curve)
                .map_err(|e| CliError::core("identify", e))
        })
        .collect();

    let mut summary = String::from("curve,kind,location,value,note\n");
    for (m, outcome) in models.iter().zip(outcomes) {
        match outcome? {
            Outcome::Curve(c) => {
                let scale = c.rescale_factor_at(RESCALE_AT).unwrap_or(1.0);
                artifacts.add(format!("fig{which}_{}.csv", m.label), c.to_csv(scale));
                for z in &c.zeros {
                    let _ = writeln!(summary, "{},zero,{},{},", m.label, z.location, z.value);
                }
                for mn in &c.minima {
                    let _ = writeln!(summary, "{},minimum,{},{},", m.label, mn.location, mn.value);
                }
                if c.zeros.is_empty() {
                    let _ = writeln!(summary, "{},no_zero,,,", m.label);
                }
            }
            Outcome::Rejected(reason) => {
                let _ = writeln!(summary, "{},rejected,,,\"{}\"", m.label, reason.replace('"', "\"\""));
            }
        }
    }
    artifacts.add(format!("fig{which}_summary.csv"), summary);
    Ok(())
}
