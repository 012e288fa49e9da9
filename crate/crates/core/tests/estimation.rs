//! Large-sample behaviour of the estimation layer at the 200,000-observation
//! desk scale.

use pseudo_id::estimate::*;
use pseudo_id::model::{forward_map, pseudo_point, InnovationScales};
use pseudo_id::simulate::{draw_panel, DgpSpec, PanelData, Variant};

fn bench(seed: u64) -> PanelData {
    draw_panel(&DgpSpec::new(Variant::Benchmark).with_seed(seed)).unwrap()
}

#[test]
fn reduced_form_close_to_population_map() {
    let p = bench(0);
    let fit = fit_reduced_form(&p).unwrap();
    let want = forward_map(&p.spec.structural);
    let se: Vec<f64> = fit.y_equation.std_errors.iter().chain(&fit.x_equation.std_errors).copied().collect();
    let got = fit.params.as_array();
    for (k, (g, w)) in got.iter().zip(want.as_array()).enumerate() {
        assert!((g - w).abs() < 4.0 * se[k], "{}: {g} vs {w} (se {})", pseudo_id::ReducedFormParams::NAMES[k], se[k]);
    }
    assert!(fit.params.max_abs_diff(&want) < 0.05);
    assert!(fit.y_equation.to_csv().contains("pi_yy,"));
}

#[test]
fn reduced_form_error_shrinks_at_root_n() {
    let truth = forward_map(&DgpSpec::default().structural);
    let sizes = [2_000usize, 8_000, 32_000];
    let mut rms = Vec::new();
    for &n_firms in &sizes {
        let mut acc = 0.0;
        let reps = 12;
        for seed in 0..reps {
            let spec = DgpSpec::new(Variant::Benchmark).with_shape(n_firms, 5).with_seed(100 + seed);
            let est = fit_reduced_form(&draw_panel(&spec).unwrap()).unwrap().params;
            acc += est
                .as_array()
                .iter()
                .zip(truth.as_array())
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>();
        }
        rms.push((acc / reps as f64).sqrt());
    }
    // Observation counts 10^4, 4*10^4, 1.6*10^5.
    let x: Vec<f64> = sizes.iter().map(|n| ((n * 5) as f64).ln()).collect();
    let y: Vec<f64> = rms.iter().map(|r| r.ln()).collect();
    let (mx, my) = (x.iter().sum::<f64>() / 3.0, y.iter().sum::<f64>() / 3.0);
    let slope = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>()
        / x.iter().map(|a| (a - mx).powi(2)).sum::<f64>();
    assert!((slope + 0.5).abs() <= 0.15, "log-log slope {slope}, rms {rms:?}");
}

#[test]
fn without_measurement_error_ols_and_iv_agree() {
    let mut spec = DgpSpec::new(Variant::Benchmark).with_seed(4);
    spec.scales.sigma_eta = 0.0;
    let p = draw_panel(&spec).unwrap();
    let iv = fit_reduced_form(&p).unwrap();
    // OLS on the same regressors.
    let (n, t) = (p.n_firms(), p.n_periods());
    let col = |m: &ndarray::Array2<f64>, lag: usize| -> ndarray::Array1<f64> {
        m.slice(ndarray::s![.., 2 - lag..t - lag]).iter().copied().collect()
    };
    let regs = [ndarray::Array1::ones(n * (t - 2)), col(&p.y, 1), col(&p.x, 1)];
    let ols = two_sls(&col(&p.y, 0), &regs, &regs).unwrap();
    for k in 0..3 {
        let d = (ols.coefficients[k] - iv.y_equation.coefficients[k]).abs();
        let se = iv.y_equation.std_errors[k];
        assert!(d < 4.0 * se, "coefficient {k}: ols {} iv {} se {se}", ols.coefficients[k], iv.y_equation.coefficients[k]);
    }
}

#[test]
fn benchmark_moments_vanish_at_both_solutions() {
    for seed in 0..20 {
        let p = bench(seed);
        let s = p.spec.structural;
        for point in [s.truth_point(), pseudo_point(&s).unwrap()] {
            let rep = gmm_objective(&p, &MomentFamily::QuasiDiff(point), &InstrumentSpec::benchmark(), &Weighting::Identity)
                .unwrap();
            let worst = rep.max_abs_standardized();
            assert!(worst < 4.0, "seed {seed} point {point:?}: {:?}", rep.standardized());
            let bound: f64 = rep.std_errors.iter().map(|s| s * s).sum();
            assert!(rep.objective < 10.0 * 16.0 * bound);
        }
    }
}

#[test]
fn predetermined_instrument_rejects_pseudo_point() {
    let p = draw_panel(&DgpSpec::new(Variant::Predetermined)).unwrap();
    let s = p.spec.structural;
    let at = |pt| {
        gmm_objective(&p, &MomentFamily::QuasiDiff(pt), &InstrumentSpec::predetermined(), &Weighting::Identity)
            .unwrap()
            .max_abs_standardized()
    };
    assert!(at(pseudo_point(&s).unwrap()) > 5.0);
    assert!(at(s.truth_point()) < 4.0);
}

#[test]
fn concentrated_beta_profiles_the_right_persistence() {
    let p = bench(0);
    let s = p.spec.structural;
    let at_truth = concentrate_beta(&p, s.beta).unwrap();
    assert!((at_truth.rho - s.rho_omega).abs() < 0.01, "{at_truth:?}");
    assert!((at_truth.moment / at_truth.std_error).abs() < 4.0);
    let at_pseudo = concentrate_beta(&p, s.beta + 1.0 / s.theta).unwrap();
    assert!((at_pseudo.rho - s.rho_x).abs() < 0.01, "{at_pseudo:?}");
    assert!((at_pseudo.moment / at_pseudo.std_error).abs() < 4.0);
    // Away from both: clearly nonzero.
    let mid = concentrate_beta(&p, 1.1).unwrap();
    assert!((mid.moment / mid.std_error).abs() > 5.0, "{mid:?}");
}

#[test]
fn concentrated_rho_benchmark_branches() {
    let p = bench(0);
    let s = p.spec.structural;
    let a = concentrate_rho(&p, s.rho_omega, RhoFamily::Benchmark).unwrap();
    assert!((a.beta - s.beta).abs() < 0.1, "{a:?}");
    assert!((a.over_id[0] / a.over_id_se[0]).abs() < 4.0);
    let b = concentrate_rho(&p, s.rho_x, RhoFamily::Benchmark).unwrap();
    assert!((b.beta - (s.beta + 1.0 / s.theta)).abs() < 0.1, "{b:?}");
    assert!((b.over_id[0] / b.over_id_se[0]).abs() < 4.0);
    assert_eq!(a.over_id_names, ["y_{t-2}", "x_{t-2}"]);
    assert_eq!(a.gamma, None);
}

#[test]
fn multi_input_off_solution_moments_are_large() {
    let p = draw_panel(&DgpSpec::new(Variant::MultiInput)).unwrap();
    for rho in [-0.5, 0.0, 0.15, 0.85] {
        let c = concentrate_rho(&p, rho, RhoFamily::MultiInput).unwrap();
        let t = (c.over_id[0] / c.over_id_se[0]).abs();
        assert!(t > 5.0, "rho {rho}: t {t}");
    }
    let curve = pseudo_id::identify::scan_curve(
        &p,
        pseudo_id::identify::ScanMode::ConcentratedRho(RhoFamily::MultiInput),
        &pseudo_id::identify::Grid::default_rho(),
    )
    .unwrap();
    assert_eq!(curve.zeros.len(), 3, "{:?}", curve.zeros);
    let c = concentrate_rho(&p, 0.7, RhoFamily::MultiInput).unwrap();
    assert!((c.gamma.unwrap() - p.spec.ext.gamma).abs() < 0.1, "{c:?}");
    assert!(concentrate_rho(&bench(0), 0.7, RhoFamily::MultiInput).is_err());
}

#[test]
fn fixed_effects_moments_small_at_both_points() {
    let p = draw_panel(&DgpSpec::new(Variant::FixedEffects)).unwrap();
    let s = p.spec.structural;
    for (beta, rho) in [(s.beta, s.rho_omega), (s.beta + 1.0 / s.theta, s.rho_x)] {
        let rep = gmm_objective(
            &p,
            &MomentFamily::DoubleDiff { beta, rho },
            &InstrumentSpec::fixed_effects(),
            &Weighting::Identity,
        )
        .unwrap();
        assert!(rep.max_abs_standardized() < 4.0, "{:?}", rep.standardized());
    }
    // The quasi-differenced moment is not valid with fixed effects.
    let rep = gmm_objective(
        &p,
        &MomentFamily::QuasiDiff(s.truth_point()),
        &InstrumentSpec::benchmark(),
        &Weighting::Identity,
    )
    .unwrap();
    assert!(rep.max_abs_standardized() > 5.0);
}

#[test]
fn zero_noise_panel_has_zero_residual_and_rank_errors() {
    let mut spec = DgpSpec::new(Variant::Benchmark).with_shape(100, 5);
    spec.scales = InnovationScales::zero();
    let p = draw_panel(&spec).unwrap();
    assert!(p.x.iter().all(|&x| x == spec.structural.pi));
    let r = quasi_diff_residual(&p, &spec.structural.truth_point()).unwrap();
    assert!(r.values.iter().all(|v| *v == 0.0));
    assert!(fit_reduced_form(&p).is_err());
}
