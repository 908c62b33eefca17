//! Harness wiring for the integrator suites.
//!
//! A datum is a vector field together with a step size (the step size
//! transforms trivially under the affine actions); the computation is the
//! one-step map, compared on fixed probe points in the ball of radius 2.

use super::fields::{
    field_membership_residual, field_pushforward, probe_points, random_field,
    related_field_injective, related_field_surjective,
};
use super::{builtin_methods, OneStepMethod, VectorField};
use crate::affine::{mixed_invertible_map, MapClass, MapKind};
use crate::harness::{
    check_bijective, check_weak_class, ActionPair, Algorithm, EquivarianceReport, HarnessError,
    RelatedPair,
};
use crate::registry::{prefix_reports, ClassFilter, SuiteConfig, SuiteRunner};
use nalgebra::DVector;
use rand::Rng;
use std::sync::Arc;

pub const DEFAULT_TOLERANCE: f64 = 1e-8;
pub const BIJECTIVE_DIMS: [(usize, usize); 3] = [(1, 1), (2, 2), (3, 3)];
pub const INJECTIVE_DIMS: [(usize, usize); 3] = [(1, 2), (2, 3), (2, 5)];
pub const SURJECTIVE_DIMS: [(usize, usize); 3] = [(2, 1), (3, 2), (5, 2)];
pub const STEP_SIZES: [f64; 3] = [0.01, 0.1, 1.0];

/// A vector field plus the step size for the trial.
#[derive(Clone)]
pub struct IntDatum {
    pub field: VectorField,
    pub h: f64,
}

/// The one-step map produced by a method on a given datum.
#[derive(Clone)]
pub struct StepMap {
    pub dim: usize,
    map: Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>,
}

impl StepMap {
    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        (self.map)(x)
    }
}

/// One integrator viewed as a dimension-indexed algorithm family.
pub struct MethodFamily(pub Arc<dyn OneStepMethod>);

impl Algorithm<IntDatum, StepMap> for MethodFamily {
    fn name(&self) -> String {
        self.0.name().to_owned()
    }

    fn supports_dim(&self, dim: usize) -> bool {
        dim >= 1
    }

    fn evaluate(&self, dim: usize, datum: &IntDatum) -> StepMap {
        let method = self.0.clone();
        let field = datum.field.clone();
        let h = datum.h;
        StepMap {
            dim,
            map: Arc::new(move |x| method.step(&field, x, h)),
        }
    }
}

pub fn action_pair() -> ActionPair<IntDatum, StepMap> {
    ActionPair {
        data_pushforward: Some(Box::new(|a, d: &IntDatum| IntDatum {
            field: field_pushforward(a, &d.field).expect("invertible map in pushforward"),
            h: d.h,
        })),
        comp_pushforward: None,
        comp_distance: None,
        sample_datum: Box::new(|dim, rng| IntDatum {
            field: random_field(dim, rng),
            h: STEP_SIZES[rng.gen_range(0..STEP_SIZES.len())],
        }),
        sample_bijective_map: Box::new(|dim, trial, rng| mixed_invertible_map(dim, trial, rng)),
        data_pair_generator: Box::new(|a, rng| {
            let h = STEP_SIZES[rng.gen_range(0..STEP_SIZES.len())];
            let (m, n) = (a.domain_dim(), a.codomain_dim());
            let (lo, hi) = match a.classify() {
                MapClass::Bijective => {
                    let f1 = random_field(m, rng);
                    let f2 = field_pushforward(a, &f1).map_err(|e| e.to_string())?;
                    (f1, f2)
                }
                MapClass::Injective => {
                    let f1 = random_field(m, rng);
                    let f2 =
                        related_field_injective(a, &f1, None, rng).map_err(|e| e.to_string())?;
                    (f1, f2)
                }
                MapClass::Surjective => {
                    let f2 = random_field(n, rng);
                    let f1 =
                        related_field_surjective(a, &f2, None, rng).map_err(|e| e.to_string())?;
                    (f1, f2)
                }
                MapClass::Neither => {
                    return Err("integrator data relation needs an injective or surjective map"
                        .to_owned())
                }
            };
            Ok(RelatedPair {
                dim_m: m,
                dim_n: n,
                datum_lo: IntDatum { field: lo, h },
                datum_hi: IntDatum { field: hi, h },
                via: a.clone(),
            })
        }),
        membership_residual: Box::new(|a, lo, hi| {
            let step_gap = (lo.h - hi.h).abs();
            field_membership_residual(a, &lo.field, &hi.field).max(step_gap)
        }),
        // Float analysis: the pseudo-inverse round trip inside the related
        // fields amplifies rounding by the condition bound, which can reach
        // ~1e-12 at the cap; 1e-11 keeps the postcondition check sharp
        // without spurious generation failures.
        membership_tol: 1e-11,
        comp_residual: Box::new(|a, c1, c2| {
            probe_points(a.domain_dim(), 20)
                .iter()
                .map(|x| (c2.apply(&a.apply(x)) - a.apply(&c1.apply(x))).norm())
                .fold(0.0, f64::max)
        }),
        describe_datum: Box::new(|d| format!("field on R^{}, h={}", d.field.dim(), d.h)),
    }
}

fn default_roster(class: ClassFilter) -> Vec<&'static str> {
    match class {
        // divmod is bijectively equivariant but not a cross-dimension
        // natural transformation; it joins the weak suites only when
        // requested by name.
        ClassFilter::Bijective => vec!["euler", "heun", "rk4", "divmod"],
        ClassFilter::Injective | ClassFilter::Surjective => vec!["euler", "heun", "rk4"],
    }
}

fn selected_methods(cfg: &SuiteConfig, class: ClassFilter) -> Vec<Arc<dyn OneStepMethod>> {
    builtin_methods()
        .into_iter()
        .filter(|m| match &cfg.algorithms {
            Some(list) => list.iter().any(|n| n == m.name()),
            None => default_roster(class).contains(&m.name()),
        })
        .collect()
}

pub struct IntegratorSuite;

impl SuiteRunner for IntegratorSuite {
    fn name(&self) -> &'static str {
        "integrators"
    }

    fn run(&self, cfg: &SuiteConfig) -> Result<Vec<EquivarianceReport>, HarnessError> {
        let actions = action_pair();
        let tol = cfg.tolerance.unwrap_or(DEFAULT_TOLERANCE);
        let mut reports = Vec::new();

        if cfg.wants_class(ClassFilter::Bijective) {
            for method in selected_methods(cfg, ClassFilter::Bijective) {
                let family = MethodFamily(method);
                for (m, _) in cfg.dims_for(&BIJECTIVE_DIMS, |m, n| m == n) {
                    reports.push(check_bijective(
                        &family,
                        &actions,
                        m,
                        cfg.trials(),
                        tol,
                        cfg.seed,
                    )?);
                }
            }
        }
        for (class, kind, defaults, consistent) in [
            (
                ClassFilter::Injective,
                MapKind::Injective,
                &INJECTIVE_DIMS,
                (|m: usize, n: usize| m < n) as fn(usize, usize) -> bool,
            ),
            (
                ClassFilter::Surjective,
                MapKind::Surjective,
                &SURJECTIVE_DIMS,
                (|m: usize, n: usize| m > n) as fn(usize, usize) -> bool,
            ),
        ] {
            if !cfg.wants_class(class) {
                continue;
            }
            for method in selected_methods(cfg, class) {
                let family = MethodFamily(method);
                for dims in cfg.dims_for(defaults.as_slice(), consistent) {
                    reports.push(check_weak_class(
                        &family,
                        &actions,
                        kind,
                        dims,
                        cfg.trials(),
                        tol,
                        cfg.seed,
                    )?);
                }
            }
        }
        prefix_reports(self.name(), &mut reports);
        Ok(reports)
    }
}

/// Integrate both sides of a descending (surjective) pair and report the
/// trajectories plus the maximum deviation of the projected high-dimensional
/// path from the low-dimensional one.
pub struct DescentDemo {
    pub high_trajectory: Vec<DVector<f64>>,
    pub low_trajectory: Vec<DVector<f64>>,
    pub projected: Vec<DVector<f64>>,
    pub max_deviation: f64,
}

pub fn run_descent_demo(
    method: &dyn OneStepMethod,
    dims: (usize, usize),
    steps: usize,
    h: f64,
    seed: u64,
) -> Result<DescentDemo, HarnessError> {
    let (m, n) = dims;
    let mut rng = crate::rng::RngStream::new(seed).trial(0);
    let a = crate::affine::random_map(MapKind::Surjective, m, n, &mut rng)?;
    let f2 = random_field(n, &mut rng);
    let f1 = related_field_surjective(&a, &f2, None, &mut rng)
        .expect("surjective map by construction");
    let x0 = DVector::from_fn(m, |_, _| rng.gen_range(-1.0..1.0));
    let y0 = a.apply(&x0);

    let mut high = vec![x0];
    let mut low = vec![y0];
    for _ in 0..steps {
        let x = method.step(&f1, high.last().expect("nonempty"), h);
        let y = method.step(&f2, low.last().expect("nonempty"), h);
        high.push(x);
        low.push(y);
    }
    let projected: Vec<DVector<f64>> = high.iter().map(|x| a.apply(x)).collect();
    let max_deviation = projected
        .iter()
        .zip(&low)
        .map(|(p, y)| (p - y).norm())
        .fold(0.0, f64::max);
    Ok(DescentDemo {
        high_trajectory: high,
        low_trajectory: low,
        projected,
        max_deviation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::affine::AffineMap;
    use crate::harness::{check_weak_naturality, search_counterexample};

    #[test]
    fn euler_bijective_suite_passes() {
        let actions = action_pair();
        let family = MethodFamily(super::super::method_by_name("euler").unwrap());
        let report = check_bijective(&family, &actions, 2, 50, 1e-8, 7).unwrap();
        assert!(report.passed(), "max residual {}", report.max_residual);
    }

    #[test]
    fn identity_map_residual_is_exactly_zero() {
        let actions = action_pair();
        for method in builtin_methods() {
            let family = MethodFamily(method);
            let report = check_weak_naturality(
                &family,
                &actions,
                &AffineMap::identity(2),
                20,
                1e-12,
                3,
            )
            .unwrap();
            assert_eq!(report.max_residual, 0.0, "{}", family.name());
        }
    }

    #[test]
    fn rk4_injective_and_surjective_suites_pass() {
        let actions = action_pair();
        let family = MethodFamily(super::super::method_by_name("rk4").unwrap());
        for (kind, dims) in [
            (MapKind::Injective, (1usize, 2usize)),
            (MapKind::Surjective, (3, 2)),
        ] {
            let report =
                check_weak_class(&family, &actions, kind, dims, 50, 1e-8, 11).unwrap();
            assert!(
                report.passed(),
                "{kind:?} {dims:?}: max residual {}",
                report.max_residual
            );
        }
    }

    #[test]
    fn divmod_passes_bijective_but_fails_injective() {
        let actions = action_pair();
        let family = MethodFamily(super::super::method_by_name("divmod").unwrap());
        let report = check_bijective(&family, &actions, 2, 50, 1e-8, 19).unwrap();
        assert!(report.passed(), "max residual {}", report.max_residual);
        let witness = search_counterexample(
            &family,
            &actions,
            MapKind::Injective,
            (1, 2),
            500,
            1e-8,
            42,
        )
        .unwrap();
        let w = witness.expect("divmod should fail the injective relation");
        assert!(w.residual >= 1e-3, "residual {}", w.residual);
    }

    #[test]
    fn descent_demo_deviation_is_small() {
        let rk4 = super::super::method_by_name("rk4").unwrap();
        let demo = run_descent_demo(rk4.as_ref(), (2, 1), 100, 0.01, 5).unwrap();
        assert!(demo.max_deviation <= 1e-8, "deviation {}", demo.max_deviation);
        assert_eq!(demo.high_trajectory.len(), 101);
    }
}
