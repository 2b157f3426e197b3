use super::*;
use crate::estimator::l2d_plugin;
use crate::points::Density;
use proptest::prelude::*;

#[test]
fn design_truths() {
    let g = make_design("gaussian").unwrap();
    assert!((g.true_psi - 0.24960).abs() < 1e-5);
    assert_eq!(make_design("triangle").unwrap().true_psi, 0.375);
    assert_eq!(make_design("Uniform").unwrap().true_psi, 0.2);
    assert!(matches!(
        make_design("cauchy"),
        Err(Error::UnknownDesign(_))
    ));
}

#[test]
fn truths_match_quadrature() {
    for kind in DesignKind::ALL {
        let d = SimDesign::new(kind);
        let psi = l2d_plugin(&d.truth_pair().unwrap()).unwrap();
        assert!((psi - d.true_psi).abs() < 1e-3, "{kind}: {psi}");
    }
}

#[test]
fn triangle_truth_by_fine_quadrature() {
    // independent million-point midpoint rule
    let d = SimDesign::new(DesignKind::Triangle);
    let m = 1_000_000;
    let (lo, hi) = (-1.0, 1.5);
    let h = (hi - lo) / m as f64;
    let total: f64 = (0..m)
        .map(|i| {
            let x = lo + (i as f64 + 0.5) * h;
            (d.p1.pdf(x) - d.p0.pdf(x)).powi(2) * h
        })
        .sum();
    assert!((total - 0.375).abs() < 1e-9);
}

#[test]
fn uniform_efficiency_bound() {
    let b = SimDesign::new(DesignKind::Uniform)
        .efficiency_bound()
        .unwrap();
    assert!((b - 1.44).abs() < 1e-3, "{b}");
}

#[test]
fn sampler_support_symmetry_and_determinism() {
    let u = SimDesign::new(DesignKind::Uniform);
    let data = sample_design(&u, 2000, 1).unwrap();
    let x0 = data.arm_points(Arm::Zero);
    assert!(x0.coords().iter().all(|v| (0.0..=1.0).contains(v)));
    let x1 = data.arm_points(Arm::One);
    assert!(x1.coords().iter().all(|v| (0.1..=1.1).contains(v)));
    assert_eq!(data.n0(), 2000);
    assert_eq!(data.n1(), 2000);

    let t = SimDesign::new(DesignKind::Triangle);
    let data = sample_design(&t, 100_000, 2).unwrap();
    let (m0, _) = mean_sd(data.arm_points(Arm::Zero).coords());
    let (m1, _) = mean_sd(data.arm_points(Arm::One).coords());
    assert!(m0.abs() < 0.01);
    assert!((m1 - 0.5).abs() < 0.01);

    assert_eq!(
        sample_design(&t, 50, 9).unwrap(),
        sample_design(&t, 50, 9).unwrap()
    );
    assert_ne!(
        sample_design(&t, 50, 9).unwrap(),
        sample_design(&t, 50, 10).unwrap()
    );
}

#[test]
fn sampler_marginals_match_cdf() {
    for kind in DesignKind::ALL {
        let d = SimDesign::new(kind);
        let data = sample_design(&d, 100_000, 77).unwrap();
        for arm in [Arm::Zero, Arm::One] {
            let mut x = data.arm_points(arm).coords().to_vec();
            x.sort_by(f64::total_cmp);
            let dens = d.density(arm);
            let m = x.len() as f64;
            let ks = x
                .iter()
                .enumerate()
                .map(|(i, &v)| {
                    let f = dens.cdf(v);
                    (f - i as f64 / m).abs().max((f - (i + 1) as f64 / m).abs())
                })
                .fold(0.0, f64::max);
            assert!(ks < 0.01, "{kind} arm {arm}: KS {ks}");
        }
    }
}

#[test]
fn null_sampler_uses_arm_zero_density() {
    let d = SimDesign::new(DesignKind::Uniform);
    let data = sample_null(&d, 500, 4).unwrap();
    assert!(data
        .points()
        .coords()
        .iter()
        .all(|v| (0.0..=1.0).contains(v)));
    assert_eq!(data.n1(), 500);
}

#[test]
fn seeds_depend_on_every_coordinate() {
    let base = replicate_seed(7, DesignKind::Gaussian, Scenario::Alternative, 100, 3);
    assert_eq!(
        base,
        replicate_seed(7, DesignKind::Gaussian, Scenario::Alternative, 100, 3)
    );
    for other in [
        replicate_seed(8, DesignKind::Gaussian, Scenario::Alternative, 100, 3),
        replicate_seed(7, DesignKind::Uniform, Scenario::Alternative, 100, 3),
        replicate_seed(7, DesignKind::Gaussian, Scenario::Null, 100, 3),
        replicate_seed(7, DesignKind::Gaussian, Scenario::Alternative, 200, 3),
        replicate_seed(7, DesignKind::Gaussian, Scenario::Alternative, 100, 4),
    ] {
        assert_ne!(base, other);
    }
}

fn synthetic_cell(psi: &[f64], se: f64) -> CellRun {
    CellRun {
        design: DesignKind::Uniform,
        scenario: Scenario::Alternative,
        n: 100,
        seed_base: 0,
        outcomes: psi
            .iter()
            .map(|&p| ReplicateOutcome {
                psi_kernel: p,
                psi_tmle: p,
                se_kernel: se,
                se_tmle: se,
                rounds: 1,
                criterion_met: true,
            })
            .collect(),
        failures: vec![],
    }
}

#[test]
fn full_coverage_when_every_interval_contains_truth() {
    let cell = synthetic_cell(&[0.19, 0.2, 0.21, 0.2], 0.1);
    let r = SimResult::summarize(&cell, Method::Tmle, 0.2, 1.44, 0.95).unwrap();
    assert_eq!(r.coverage_sample, 1.0);
    assert_eq!(r.coverage_oracle, 1.0);
    assert_eq!(r.mean_rounds, 1.0);
    let k = SimResult::summarize(&cell, Method::Kernel, 0.2, 1.44, 0.95).unwrap();
    assert_eq!(k.mean_rounds, 0.0);

    let none = SimResult::summarize(
        &synthetic_cell(&[0.5, 0.6], 0.01),
        Method::Tmle,
        0.2,
        1.44,
        0.95,
    )
    .unwrap();
    assert_eq!(none.coverage_sample, 0.0);
    assert!(
        SimResult::summarize(&synthetic_cell(&[0.5], 0.01), Method::Tmle, 0.2, 1.44, 0.95).is_err()
    );
}

#[test]
fn small_ladder_runs() {
    let d = SimDesign::new(DesignKind::Uniform);
    let cfg = LadderConfig {
        n_values: vec![50, 100],
        replicates: 6,
        master_seed: 3,
        ..LadderConfig::default()
    };
    let res = run_ladder(&d, &cfg).unwrap();
    assert_eq!(res.len(), 4);
    assert_eq!(res[0].method, Method::Kernel);
    assert_eq!(res[1].method, Method::Tmle);
    for r in &res {
        assert_eq!(r.failures, 0);
        assert_eq!(r.replicates, 6);
        assert!((r.efficiency_bound - 1.44).abs() < 1e-3);
        assert!((0.0..=1.0).contains(&r.coverage_oracle));
        assert!((0.0..=1.0).contains(&r.coverage_sample));
        assert!(r.mse_times_n >= r.var_times_n - 1e-12);
    }
    assert_eq!(res, run_ladder(&d, &cfg).unwrap());

    let mut csv = Vec::new();
    write_results_csv(&res, &mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with(
        "design,method,n,R,coverage_oracle,coverage_sample,mse_n,var_n,eff_bound,mean_rounds\n"
    ));
    assert_eq!(text.lines().count(), 5);
    let svg = render_design_svg(DesignKind::Uniform, &res, 0.95);
    assert_eq!(svg.matches("<polyline").count(), 8);

    assert!(run_ladder(
        &d,
        &LadderConfig {
            n_values: vec![],
            ..cfg.clone()
        }
    )
    .is_err());
    assert!(run_ladder(
        &d,
        &LadderConfig {
            replicates: 1,
            ..cfg
        }
    )
    .is_err());
}

#[test]
fn analytic_eval_matches_pdf() {
    let d = SimDesign::new(DesignKind::Gaussian);
    let v = d.p1.eval(&PointSet::from_1d(vec![0.5])).unwrap();
    assert!((v[0] - 1.0 / (0.5 * (2.0 * std::f64::consts::PI).sqrt())).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn mse_dominates_variance(psi in proptest::collection::vec(0.0f64..1.0, 2..40), truth in 0.0f64..1.0) {
        let r = SimResult::summarize(&synthetic_cell(&psi, 0.05), Method::Kernel, truth, 1.0, 0.95).unwrap();
        prop_assert!(r.mse_times_n >= r.var_times_n - 1e-9 * (1.0 + r.var_times_n));
    }
}
