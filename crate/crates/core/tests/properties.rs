use std::f64::consts::TAU;
use std::fs;
use std::sync::Arc;

use num_complex::Complex64;
use proptest::prelude::*;
use vekua_core::boundary::{collocation_fit, CONDITION_LIMIT};
use vekua_core::conductivity::{
    builtin_field, generating_sequence, BoundaryCondition, FnCondition, LimitingC1, YStripC2,
};
use vekua_core::experiments::{
    pair_positivity_error, run_case, solve, strip_interpolation_error, total_error_from_csv,
    ExperimentConfig, LinearCombination, Solution,
};
use vekua_core::formal_powers::{build_formal_powers, Coefficient, QuadratureConfig, Retention};
use vekua_core::geometry::{arc_length_weights, build_angle_set, build_radial_grid, unit_disk};

fn small_solution(case: &str, n: usize) -> Solution {
    solve(&ExperimentConfig::new(case, n, 60, 48)).unwrap()
}

fn second_condition() -> Arc<dyn BoundaryCondition> {
    Arc::new(FnCondition {
        name: "quadratic",
        f: |x, y| x * x - 0.5 * x * y + y,
    })
}

fn refit(sol: &Solution, bc: &dyn BoundaryCondition) -> vekua_core::boundary::CollocationFit {
    let domain = sol.case.domain.as_ref();
    collocation_fit(&sol.basis, bc, domain, &sol.collocation, CONDITION_LIMIT).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fit_is_linear_in_the_boundary_condition(c1 in -5.0f64..5.0, c2 in -5.0f64..5.0, n in 2usize..8) {
        let sol = small_solution("exponential", n);
        let u1 = sol.case.boundary_condition.clone();
        let u2 = second_condition();
        let f1 = refit(&sol, u1.as_ref());
        let f2 = refit(&sol, u2.as_ref());
        let mix = LinearCombination { terms: vec![(c1, u1), (c2, u2)] };
        let f = refit(&sol, &mix);
        let scale = 1.0 + f1.alpha.iter().chain(&f2.alpha).fold(0.0f64, |m, v| m.max(v.abs())) * 10.0;
        for k in 0..f.alpha.len() {
            let want = c1 * f1.alpha[k] + c2 * f2.alpha[k];
            prop_assert!((f.alpha[k] - want).abs() <= 1e-11 * scale, "k={} {} vs {}", k, f.alpha[k], want);
        }
    }

    #[test]
    fn scaling_the_condition_scales_alpha_and_error(lambda in -100.0f64..100.0, n in 2usize..8) {
        prop_assume!(lambda.abs() > 1e-3);
        let sol = small_solution("lorentzian", n);
        let scaled = LinearCombination { terms: vec![(lambda, sol.case.boundary_condition.clone())] };
        let f = refit(&sol, &scaled);
        for (a, b) in f.alpha.iter().zip(&sol.fit.alpha) {
            prop_assert!((a - lambda * b).abs() <= 1e-12 * (lambda * b).abs().max(lambda.abs()));
        }
        let want = lambda.abs() * sol.fit.total_error;
        prop_assert!((f.total_error - want).abs() <= 1e-12 * want.max(1e-300));
    }

    #[test]
    fn power_of_two_scaling_is_exact(k in -6i32..6, n in 2usize..6) {
        let lambda = -(2f64.powi(k));
        let sol = small_solution("polynomial", n);
        let scaled = LinearCombination { terms: vec![(lambda, sol.case.boundary_condition.clone())] };
        let f = refit(&sol, &scaled);
        for (a, b) in f.alpha.iter().zip(&sol.fit.alpha) {
            prop_assert_eq!(*a, lambda * b);
        }
        prop_assert_eq!(f.total_error, lambda.abs() * sol.fit.total_error);
    }

    #[test]
    fn basis_is_orthonormal(n in 1usize..10, extra in 0usize..30, case_idx in 0usize..4) {
        let case = ["exponential", "polynomial", "lorentzian", "sinusoidal"][case_idx];
        let sol = solve(&ExperimentConfig::new(case, n, 40, 2 * n + 1 + extra)).unwrap();
        let gram = sol.basis.gram();
        for (i, row) in gram.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((v - want).abs() <= 1e-8, "gram[{}][{}] = {}", i, j, v);
            }
        }
    }

    #[test]
    fn fit_interpolates_at_collocation_angles(n in 1usize..10, case_idx in 0usize..3) {
        let case = ["exponential", "separable_lorentzian", "concentric_disks"][case_idx];
        let sol = solve(&ExperimentConfig::new(case, n, 50, 64)).unwrap();
        let domain = sol.case.domain.as_ref();
        for &w in &sol.fit.collocation_angles {
            let fit: f64 = (0..sol.basis.len()).map(|k| sol.fit.alpha[k] * sol.basis.eval(k, w)).sum();
            let z = domain.boundary_point(w);
            let target = sol.case.boundary_condition.value(z.re, z.im);
            prop_assert!((fit - target).abs() <= 1e-9, "at {}: {} vs {}", w, fit, target);
        }
    }

    #[test]
    fn generating_pairs_are_normalized(alpha in -3.0f64..3.0, theta in 0.0f64..TAU, ystrip in any::<bool>()) {
        let disk = unit_disk();
        let field = builtin_field("exponential", alpha, disk.as_ref()).unwrap();
        let grids = vec![build_radial_grid(disk.as_ref(), theta, 64, &[]).unwrap()];
        let seq = if ystrip {
            generating_sequence(&YStripC2 { field }, &grids).unwrap()
        } else {
            generating_sequence(&LimitingC1 { field }, &grids).unwrap()
        };
        prop_assert!(pair_positivity_error(&seq) <= 1e-12);
    }

    #[test]
    fn powers_vanish_at_the_centre_and_are_real_linear(
        alpha in 0.1f64..2.0, theta in 0.0f64..TAU, re in -2.0f64..2.0, im in -2.0f64..2.0,
    ) {
        let disk = unit_disk();
        let field = builtin_field("lorentzian", alpha, disk.as_ref()).unwrap();
        let grids = vec![build_radial_grid(disk.as_ref(), theta, 80, &[]).unwrap()];
        let seq = generating_sequence(&LimitingC1 { field }, &grids).unwrap();
        let t = build_formal_powers(&seq, &grids, 6, &QuadratureConfig::default(), Retention::Full).unwrap();
        let a = Complex64::new(re, im);
        for n in 1..=6 {
            for c in Coefficient::BOTH {
                prop_assert_eq!(t.value(0, 0, c, n, 0).unwrap(), Complex64::new(0.0, 0.0));
            }
            for p in [1, 40, 80] {
                let direct = t.combined(0, 0, a, n, p).unwrap();
                let split = t.value(0, 0, Coefficient::One, n, p).unwrap() * re
                    + t.value(0, 0, Coefficient::I, n, p).unwrap() * im;
                prop_assert!((direct - split).norm() <= 1e-12 * (1.0 + split.norm()));
            }
        }
    }

    #[test]
    fn weights_sum_to_the_perimeter(q in 16usize..400) {
        let disk = unit_disk();
        let angles = build_angle_set(q, &[]).unwrap();
        let total: f64 = arc_length_weights(disk.as_ref(), &angles).iter().sum();
        let chord = 2.0 * q as f64 * (std::f64::consts::PI / q as f64).sin();
        prop_assert!((total - chord).abs() <= 1e-12);
        prop_assert!(total <= TAU && TAU - total <= 30.0 / (q * q) as f64);
    }

    #[test]
    fn doubling_strips_reduces_the_interpolation_error(k in 50usize..400) {
        let disk = unit_disk();
        let field = builtin_field("separable_lorentzian", 0.1, disk.as_ref()).unwrap();
        let coarse = strip_interpolation_error(field.as_ref(), disk.as_ref(), k).unwrap();
        let fine = strip_interpolation_error(field.as_ref(), disk.as_ref(), 2 * k).unwrap();
        prop_assert!(fine < coarse, "K={}: {} -> {}", k, coarse, fine);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn identical_configs_write_identical_files(n in 2usize..8, case_idx in 0usize..3) {
        let case = ["exponential", "offcenter_disk", "beaked_square"][case_idx];
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let mut config = ExperimentConfig::new(case, n, 50, 40);
        config.out = Some(a.path().to_path_buf());
        run_case(&config).unwrap();
        config.out = Some(b.path().to_path_buf());
        run_case(&config).unwrap();
        for file in ["residual.csv"] {
            prop_assert_eq!(fs::read(a.path().join(file)).unwrap(), fs::read(b.path().join(file)).unwrap());
        }
        let strip_out = |dir: &std::path::Path| {
            let mut v: serde_json::Value =
                serde_json::from_slice(&fs::read(dir.join("report.json")).unwrap()).unwrap();
            v["config"]["out"] = serde_json::Value::Null;
            v
        };
        prop_assert_eq!(strip_out(a.path()), strip_out(b.path()));
    }

    #[test]
    fn emitted_error_is_recomputable_from_the_csv(n in 1usize..10, case_idx in 0usize..4) {
        let case = ["sinusoidal", "square_inclusion", "beaked_lorentzian", "polynomial"][case_idx];
        let dir = tempfile::tempdir().unwrap();
        let mut config = ExperimentConfig::new(case, n, 40, 30);
        config.out = Some(dir.path().to_path_buf());
        let run = run_case(&config).unwrap();
        let csv = fs::read_to_string(dir.path().join("residual.csv")).unwrap();
        let e = total_error_from_csv(&csv).unwrap();
        prop_assert!((e - run.report.total_error).abs() <= 1e-12, "{} vs {}", e, run.report.total_error);
        prop_assert!(run.report.total_error >= 0.0);
    }
}
