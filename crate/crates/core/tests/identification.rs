//! Curve scans, the sign-restricted two-step estimator, warm starts, and the
//! diagnostics on simulated panels.

use pseudo_id::diagnostics::*;
use pseudo_id::identify::*;
use pseudo_id::model::{forward_map, invert_reduced_form, pseudo_point, InnovationScales};
use pseudo_id::simulate::{draw_panel, DgpSpec, PanelData, Variant};
use pseudo_id::{Error, StructuralParams};

fn bench(seed: u64) -> PanelData {
    draw_panel(&DgpSpec::new(Variant::Benchmark).with_seed(seed)).unwrap()
}

fn equal_rho(seed: u64) -> PanelData {
    let mut spec = DgpSpec::new(Variant::Benchmark).with_seed(seed);
    spec.structural.rho_omega = 0.5;
    draw_panel(&spec).unwrap()
}

#[test]
fn benchmark_curve_has_a_zero_pair_in_order() {
    let c = scan_curve(&bench(3), ScanMode::ConcentratedBeta, &Grid::default_beta()).unwrap();
    assert_eq!(c.zeros.len(), 2, "{:?}", c.zeros);
    let (a, b) = (c.zeros[0].location, c.zeros[1].location);
    assert!((a - 0.6).abs() < 0.1 && (b - 1.6).abs() < 0.1, "{a} {b}");
    for z in &c.zeros {
        assert!(z.value.abs() < c.zero_tol());
        assert!(z.bracket.1 - z.bracket.0 < 1e-6 * c.span());
    }
    // Zeros of m are minima of m^2.
    for z in &c.zeros {
        assert!(c.minima.iter().any(|m| (m.location - z.location).abs() < 0.01));
    }
    assert_ne!(flatness_guard(&c).verdict, Verdict::EqualRhoWarning);
    let csv = c.to_csv(1.0);
    assert!(csv.starts_with("axis_value,m,objective\n0,"));
    assert_eq!(csv.lines().filter(|l| l.starts_with("# zero:")).count(), 2);
}

#[test]
fn negative_theta_puts_the_pseudo_zero_below_the_truth() {
    let mut spec = DgpSpec::new(Variant::Benchmark).with_seed(5);
    spec.structural.theta = -1.0;
    let p = draw_panel(&spec).unwrap();
    let c = scan_curve(&p, ScanMode::ConcentratedBeta, &Grid::new(-1.0, 1.5, 0.005)).unwrap();
    let z: Vec<f64> = c.zeros.iter().map(|z| z.location).collect();
    assert_eq!(z.len(), 2, "{z:?}");
    // Pseudo at beta + 1/theta = -0.4 lies below the truth.
    assert!((z[0] + 0.4).abs() < 0.1 && (z[1] - 0.6).abs() < 0.1, "{z:?}");
}

#[test]
fn equal_rho_curve_is_flat() {
    let c = scan_curve(&equal_rho(0), ScanMode::ConcentratedBeta, &Grid::default_beta()).unwrap();
    let r = flatness_guard(&c);
    assert_eq!(r.verdict, Verdict::EqualRhoWarning, "{r}");
    assert!(r.statistic < 3.0);
}

#[test]
fn scan_rejects_bad_grids() {
    let p = draw_panel(&DgpSpec::new(Variant::Benchmark).with_shape(500, 5)).unwrap();
    assert_eq!(
        scan_curve(&p, ScanMode::ConcentratedBeta, &Grid::new(1.0, 0.0, 0.1)),
        Err(Error::EmptyGrid)
    );
    assert!(scan_curve(&p, ScanMode::ConcentratedBeta, &Grid::new(-2.0, 0.0, 0.1)).is_err());
    let rho = ScanMode::ConcentratedRho(pseudo_id::estimate::RhoFamily::Benchmark);
    assert!(scan_curve(&p, rho, &Grid::new(-0.5, 1.0, 0.1)).is_err());
}

#[test]
fn failed_grid_points_are_missing_not_fatal() {
    let mut spec = DgpSpec::new(Variant::Benchmark).with_shape(200, 5);
    spec.scales = InnovationScales::zero();
    let p = draw_panel(&spec).unwrap();
    let c = scan_curve(&p, ScanMode::ConcentratedBeta, &Grid::new(0.0, 1.0, 0.25)).unwrap();
    assert!(c.m.iter().all(Option::is_none));
    assert!(c.zeros.is_empty());
}

#[test]
fn two_step_selects_by_sign_and_swaps() {
    let p = bench(0);
    let pos = two_step_estimator(&p, ThetaSign::Positive).unwrap();
    let neg = two_step_estimator(&p, ThetaSign::Negative).unwrap();
    assert!(pos.chosen.theta > 0.0 && pos.rejected.theta < 0.0);
    assert!((pos.chosen.beta - 0.6).abs() < 0.1 && (pos.rejected.beta - 1.6).abs() < 0.1, "{pos:?}");
    assert_eq!(pos.chosen, neg.rejected);
    assert_eq!(pos.rejected, neg.chosen);
    assert_eq!(pos.selection_rule, SelectionRule::ThetaPositive);
    let csv = pos.to_csv();
    assert!(csv.starts_with("label,beta,theta,rho_omega,rho_x,alpha,pi\nchosen,"));
    assert!(csv.contains("# selection_rule: theta_positive"));
}

#[test]
fn two_step_flags_the_equal_rho_locus() {
    let err = two_step_estimator(&equal_rho(1), ThetaSign::Positive).unwrap_err();
    assert!(matches!(err, Error::FlatLocus { .. }), "{err:?}");
}

#[test]
fn observationally_equivalent_branches() {
    let s = StructuralParams::default();
    let branches = invert_reduced_form(&forward_map(&s)).unwrap();
    let other = branches.iter().find(|b| b.params.theta < 0.0).unwrap().params;
    assert!(forward_map(&other).max_abs_diff(&forward_map(&s)) < 1e-12);

    // Data generated at the other branch estimate the same reduced form; the
    // coefficients do not depend on the innovation scales.
    let mut spec = DgpSpec::new(Variant::Benchmark).with_seed(2);
    spec.structural = other;
    let p = draw_panel(&spec).unwrap();
    let fit = pseudo_id::estimate::fit_reduced_form(&p).unwrap();
    let se: Vec<f64> = fit.y_equation.std_errors.iter().chain(&fit.x_equation.std_errors).copied().collect();
    for (k, (g, w)) in fit.params.as_array().iter().zip(forward_map(&s).as_array()).enumerate() {
        assert!((g - w).abs() < 4.0 * se[k], "coefficient {k}: {g} vs {w}, se {}", se[k]);
    }
    let est = two_step_estimator(&p, ThetaSign::Positive).unwrap();
    assert!(est.chosen.beta < est.rejected.beta);
}

#[test]
fn warm_starts() {
    let p = bench(0);
    let w = warm_start_pipeline(&p, WarmStartStrategy::ReducedFormStart, ThetaSign::Positive).unwrap();
    assert!(!w.possibly_biased);
    assert!((w.point.beta - 0.6).abs() < 0.1 && (w.point.rho - 0.7).abs() < 0.1, "{w:?}");
    assert!((w.point.alpha - 1.0).abs() < 0.3, "{w:?}");

    let pre = draw_panel(&DgpSpec::new(Variant::Predetermined)).unwrap();
    let w = warm_start_pipeline(&pre, WarmStartStrategy::PredeterminedStart, ThetaSign::Positive).unwrap();
    assert!(!w.possibly_biased);
    let d = (w.point.beta - 0.6).abs().max((w.point.rho - 0.7).abs());
    assert!(d < 0.05, "{w:?}");

    let w = warm_start_pipeline(&p, WarmStartStrategy::PredeterminedStart, ThetaSign::Positive).unwrap();
    assert!(w.possibly_biased, "{w:?}");
}

#[test]
fn sign_test_and_moment_inequality_separate_the_solutions() {
    let p = bench(0);
    let s = p.spec.structural;
    let pseudo = pseudo_point(&s).unwrap();
    let t = residual_sign_test(&p, &s.truth_point(), ThetaSign::Positive);
    let q = residual_sign_test(&p, &pseudo, ThetaSign::Positive);
    assert_eq!(t.verdict, Verdict::ConsistentWithTruth, "{t}");
    assert_eq!(q.verdict, Verdict::PseudoSuspected, "{q}");
    // Population correlations: cov(x, omega) / sd and -var(kappa) / sd.
    let (var_w, var_k): (f64, f64) = (1.0 / (1.0 - 0.49), 1.0 / (1.0 - 0.25));
    let sd_x = (var_w + var_k).sqrt();
    let want_t = var_w / (sd_x * (var_w + 1.0).sqrt());
    let want_q = -var_k / (sd_x * (var_k + 1.0).sqrt());
    assert!((t.statistic - want_t).abs() < 0.01, "{} vs {want_t}", t.statistic);
    assert!((q.statistic - want_q).abs() < 0.01, "{} vs {want_q}", q.statistic);

    let mt = moment_inequality(&p, &s.truth_point());
    let mq = moment_inequality(&p, &pseudo);
    assert!(mt.statistic > 0.0 && mq.statistic < 0.0);
    assert_eq!(mq.verdict, Verdict::PseudoSuspected);
}

#[test]
fn ar_order_test_on_both_regimes() {
    let r = ar_order_test(&bench(0)).unwrap();
    assert!(r.statistic > 0.0);
    let e = ar_order_test(&equal_rho(0)).unwrap();
    assert_eq!(e.verdict, Verdict::EqualRhoWarning, "{e}");
    // Reports are pure functions of their inputs.
    assert_eq!(e, ar_order_test(&equal_rho(0)).unwrap());
}
