//! Acceptance gate: one test per criterion, each printing a single
//! pass/fail line. Run with `cargo test --test acceptance -- --nocapture`
//! to see the lines.

use affeq::affine::{AffineMap, MapKind};
use affeq::harness::{check_exact_class, check_weak_naturality, search_counterexample, Algorithm};
use affeq::integrators::suite::{action_pair as integrator_actions, IntegratorSuite, MethodFamily};
use affeq::integrators::{builtin_methods, method_by_name, rk_step, ButcherTableau, VectorField};
use affeq::interpolation::suite::{action_pair as interpolation_actions, SchemeFamily};
use affeq::interpolation::{bernstein_weights, bezier_curve, bspline_basis, builtin_schemes};
use affeq::quadrature::suite::action_pair as quadrature_actions;
use affeq::quadrature::{builtin_rules, QuadDatum};
use affeq::registry::{ClassFilter, Registry, SuiteConfig, SuiteRunner};
use affeq::rng::RngStream;
use affeq::simplex::suite::{action_pair as simplex_actions, NelderMead};
use affeq::simplex::{nm_iterate, NmParams, Objective, PointSet};
use nalgebra::{dvector, DVector};
use std::sync::Arc;
use std::time::Instant;

const SEED: u64 = 42;

fn criterion(number: u32, label: &str, body: impl FnOnce() -> Result<(), String>) {
    match body() {
        Ok(()) => println!("criterion {number} ({label}): pass"),
        Err(message) => {
            println!("criterion {number} ({label}): FAIL - {message}");
            panic!("criterion {number} failed: {message}");
        }
    }
}

fn run_suite(runner: &dyn SuiteRunner, cfg: &SuiteConfig) -> Result<(), String> {
    let reports = runner.run(cfg).map_err(|e| e.to_string())?;
    for r in &reports {
        if !r.passed() {
            return Err(format!(
                "{}: max residual {:.3e} > tol {:.1e} ({} violations)",
                r.suite,
                r.max_residual,
                r.tolerance,
                r.violations.len()
            ));
        }
    }
    Ok(())
}

#[test]
fn criterion_1_bijective_equivariance() {
    criterion(1, "bijective equivariance, all suites", || {
        let start = Instant::now();
        let registry = Registry::with_builtin();
        let cfg = SuiteConfig {
            classes: vec![ClassFilter::Bijective],
            trials: Some(200),
            seed: SEED,
            ..SuiteConfig::default()
        };
        for runner in registry.iter() {
            run_suite(runner, &cfg)?;
        }
        let elapsed = start.elapsed().as_secs_f64();
        if elapsed > 60.0 {
            return Err(format!("runtime {elapsed:.1}s exceeds the 60s budget"));
        }
        Ok(())
    });
}

#[test]
fn criterion_2_weak_naturality_integrators() {
    criterion(2, "weak naturality for Euler/Heun/RK4", || {
        let cfg = SuiteConfig {
            classes: vec![ClassFilter::Injective, ClassFilter::Surjective],
            trials: Some(200),
            seed: SEED,
            ..SuiteConfig::default()
        };
        run_suite(&IntegratorSuite, &cfg)
    });
}

#[test]
fn criterion_3_divmod_discrimination() {
    criterion(3, "divmod cross-dimension counterexample", || {
        let actions = integrator_actions();
        let family = MethodFamily(method_by_name("divmod").expect("divmod registered"));

        let fixture: serde_json::Value = serde_json::from_str(include_str!(
            "fixtures/divmod_witness.json"
        ))
        .map_err(|e| e.to_string())?;
        let budget = fixture["budget"].as_u64().unwrap();
        let seed = fixture["seed"].as_u64().unwrap();
        let pinned_trial = fixture["trial_index"].as_u64().unwrap();
        let pinned_residual = fixture["residual"].as_f64().unwrap();

        let witness =
            search_counterexample(&family, &actions, MapKind::Injective, (1, 2), budget, 1e-8, seed)
                .map_err(|e| e.to_string())?
                .ok_or("no counterexample found within the budget")?;
        if witness.residual < 1e-3 {
            return Err(format!("witness residual {:.3e} < 1e-3", witness.residual));
        }
        // Replay: the pinned witness must reproduce exactly.
        if witness.trial_index != pinned_trial {
            return Err(format!(
                "witness moved: trial {} != pinned {pinned_trial}",
                witness.trial_index
            ));
        }
        let drift = (witness.residual - pinned_residual).abs() / pinned_residual;
        if drift > 1e-9 {
            return Err(format!(
                "witness residual {:.17e} drifted from pinned {:.17e}",
                witness.residual, pinned_residual
            ));
        }
        Ok(())
    });
}

#[test]
fn criterion_4_interpolation_exact_naturality() {
    criterion(4, "interpolation naturality is an equality", || {
        for scheme in builtin_schemes() {
            let actions = interpolation_actions(scheme.min_points());
            let family = SchemeFamily(scheme);
            for (kind, dims) in [
                (MapKind::Invertible, (2usize, 2usize)),
                (MapKind::Injective, (2, 3)),
                (MapKind::Surjective, (3, 2)),
                (MapKind::RankDeficient, (2, 2)),
            ] {
                let report =
                    check_exact_class(&family, &actions, kind, dims, 200, 1e-10, SEED)
                        .map_err(|e| e.to_string())?;
                if !report.passed() {
                    return Err(format!(
                        "{}: max residual {:.3e}",
                        report.suite, report.max_residual
                    ));
                }
            }
        }
        Ok(())
    });
}

#[test]
fn criterion_5_structural_invariants() {
    criterion(5, "structural invariants", || {
        // Partition of unity for Bernstein and B-spline bases.
        for n in 2..=8 {
            for i in 0..=40 {
                let t = i as f64 / 40.0;
                let s: f64 = bernstein_weights(n, t).iter().sum();
                if (s - 1.0).abs() > 1e-12 {
                    return Err(format!("Bernstein sum {s} at n={n}, t={t}"));
                }
                if n >= 4 {
                    let s: f64 = bspline_basis(n, t).iter().sum();
                    if (s - 1.0).abs() > 1e-12 {
                        return Err(format!("B-spline sum {s} at n={n}, t={t}"));
                    }
                }
            }
        }

        // Nelder-Mead affine-combination closure: points on the plane
        // z = x + y stay on it.
        let plane = |x: f64, y: f64| dvector![x, y, x + y];
        let set = PointSet::new(
            3,
            vec![
                plane(0.0, 0.0),
                plane(1.0, 0.2),
                plane(-0.5, 1.0),
                plane(0.3, -0.7),
            ],
        );
        let phi = Objective::new(
            3,
            Arc::new(|x: &DVector<f64>| (x[0] - 1.0).powi(2) + (x[1] + 0.5).powi(2)),
        );
        let out = nm_iterate(&phi, &set, &NmParams::default(), 10);
        for p in out.points.points() {
            if (p[2] - (p[0] + p[1])).abs() > 1e-12 {
                return Err(format!("simplex point left the plane: {p}"));
            }
        }

        // Divergence is similarity-invariant under affine conjugation.
        let mut rng = RngStream::new(SEED).trial(0);
        let a = affeq::affine::random_map(MapKind::Invertible, 3, 3, &mut rng)
            .map_err(|e| e.to_string())?;
        let f1 = affeq::integrators::fields::random_field(3, &mut rng);
        let f2 = affeq::integrators::fields::field_pushforward(&a, &f1)
            .map_err(|e| e.to_string())?;
        for x in affeq::integrators::fields::probe_points(3, 20) {
            let gap = (f2.divergence(&a.apply(&x)) - f1.divergence(&x)).abs();
            if gap > 1e-9 {
                return Err(format!("divergence gap {gap:.3e} at {x}"));
            }
        }

        // Identity morphism: residual exactly zero for every algorithm.
        let quad_actions = quadrature_actions();
        for rule in builtin_rules() {
            let report = check_weak_naturality(
                &rule,
                &quad_actions,
                &AffineMap::identity(1),
                20,
                1e-12,
                SEED,
            )
            .map_err(|e| e.to_string())?;
            if report.max_residual != 0.0 {
                return Err(format!("{}: identity residual nonzero", report.suite));
            }
        }
        let int_actions = integrator_actions();
        for method in builtin_methods() {
            let family = MethodFamily(method);
            let report = check_weak_naturality(
                &family,
                &int_actions,
                &AffineMap::identity(2),
                20,
                1e-12,
                SEED,
            )
            .map_err(|e| e.to_string())?;
            if report.max_residual != 0.0 {
                return Err(format!("{}: identity residual nonzero", report.suite));
            }
        }
        for scheme in builtin_schemes() {
            let actions = interpolation_actions(scheme.min_points());
            let family = SchemeFamily(scheme);
            let report = check_weak_naturality(
                &family,
                &actions,
                &AffineMap::identity(2),
                20,
                1e-12,
                SEED,
            )
            .map_err(|e| e.to_string())?;
            if report.max_residual != 0.0 {
                return Err(format!("{}: identity residual nonzero", report.suite));
            }
        }
        for variant in [NelderMead::single_step(), NelderMead::iterated()] {
            let actions = simplex_actions(if variant.name() == "nm-step" { 1 } else { 10 });
            let report = check_weak_naturality(
                &variant,
                &actions,
                &AffineMap::identity(2),
                20,
                1e-12,
                SEED,
            )
            .map_err(|e| e.to_string())?;
            if report.max_residual != 0.0 {
                return Err(format!("{}: identity residual nonzero", report.suite));
            }
        }
        Ok(())
    });
}

#[test]
fn criterion_6_oracle_equivalence() {
    criterion(6, "oracle equivalence", || {
        // Gauss-Legendre exactness degrees against antiderivatives.
        let (alpha, beta) = (-0.3, 1.7);
        for (k, rule) in [(2usize, 2usize * 2 - 1), (3, 5), (5, 9)] {
            let gauss = affeq::quadrature::QuadratureRule::gauss_legendre(k);
            for degree in 0..=rule {
                let d = degree as i32;
                let datum = QuadDatum::new(alpha, beta, Arc::new(move |x: f64| x.powi(d)));
                let exact = (beta.powi(d + 1) - alpha.powi(d + 1)) / f64::from(d + 1);
                let got = gauss.integrate(&datum);
                let rel = (got - exact).abs() / (1.0 + exact.abs());
                if rel > 1e-12 {
                    return Err(format!(
                        "gauss{k} on x^{degree}: {got} vs {exact} (rel {rel:.3e})"
                    ));
                }
            }
        }

        // RK4 one step on x' = x against the truncated exponential series.
        let field = VectorField::linear(nalgebra::DMatrix::identity(1, 1));
        let h = 0.1;
        let got = rk_step(&ButcherTableau::rk4(), &field, &dvector![1.0], h)
            .map_err(|e| e.to_string())?;
        let series = 1.0 + h + h * h / 2.0 + h * h * h / 6.0 + h * h * h * h / 24.0;
        if (got[0] - series).abs() > 1e-14 {
            return Err(format!("rk4 step {:.17} vs series {series:.17}", got[0]));
        }

        // Bezier midpoint against the Bernstein expansion.
        let p = affeq::interpolation::ControlPoints::new(
            2,
            vec![dvector![0.0, 0.0], dvector![1.0, 2.0], dvector![2.0, 0.0]],
        );
        let c = bezier_curve(&p);
        let weights = bernstein_weights(3, 0.5);
        let mut oracle = DVector::zeros(2);
        for (w, pt) in weights.iter().zip(p.points()) {
            oracle += *w * pt;
        }
        if (c.eval(0.5) - oracle).norm() > 1e-12 {
            return Err("Bezier midpoint disagrees with the Bernstein oracle".to_owned());
        }
        Ok(())
    });
}

#[test]
fn criterion_7_determinism_and_exit_codes() {
    criterion(7, "determinism and exit codes", || {
        let bin = env!("CARGO_BIN_EXE_affeq");
        let run = |args: &[&str]| {
            std::process::Command::new(bin)
                .args(args)
                .output()
                .map_err(|e| e.to_string())
        };

        let flags = [
            "check", "--suite", "quadrature", "--trials", "20", "--seed", "42",
        ];
        let first = run(&flags)?;
        let second = run(&flags)?;
        if first.status.code() != Some(0) {
            return Err(format!("passing run exited {:?}", first.status.code()));
        }
        if first.stdout != second.stdout {
            return Err("repeated runs produced different reports".to_owned());
        }

        let failing = run(&[
            "check",
            "--suite",
            "integrators",
            "--classes",
            "injective",
            "--algorithms",
            "divmod",
            "--dims",
            "1:2",
            "--trials",
            "5",
            "--seed",
            "42",
        ])?;
        if failing.status.code() != Some(1) {
            return Err(format!(
                "violating run exited {:?}, expected 1",
                failing.status.code()
            ));
        }

        let erroring = run(&["check", "--suite", "no-such-suite"])?;
        if erroring.status.code() != Some(2) {
            return Err(format!(
                "erroring run exited {:?}, expected 2",
                erroring.status.code()
            ));
        }
        Ok(())
    });
}
