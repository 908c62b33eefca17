//! Interpolation and spline schemes with the diagonal point action and the
//! post-composition curve action.
//!
//! All three schemes evaluate affine combinations of the control points
//! (weights summing to one), which is the structural reason they commute
//! with every affine map, invertible or not: the data and computation
//! actions are both graphs, and naturality holds as an equality.

use crate::affine::AffineMap;
use nalgebra::DVector;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum InterpolationError {
    #[error("need at least {needed} control points for {scheme}, got {got}")]
    TooFewPoints {
        scheme: &'static str,
        needed: usize,
        got: usize,
    },
}

/// An ordered list of control points in `R^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlPoints {
    dim: usize,
    points: Vec<DVector<f64>>,
}

impl ControlPoints {
    pub fn new(dim: usize, points: Vec<DVector<f64>>) -> Self {
        assert!(points.len() >= 2, "need at least two control points");
        assert!(points.iter().all(|p| p.len() == dim));
        Self { dim, points }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn points(&self) -> &[DVector<f64>] {
        &self.points
    }
}

/// A parametric curve on `[0, 1]` in `R^d`.
#[derive(Clone)]
pub struct Curve {
    dim: usize,
    eval: Arc<dyn Fn(f64) -> DVector<f64> + Send + Sync>,
}

impl Curve {
    pub fn new(dim: usize, eval: Arc<dyn Fn(f64) -> DVector<f64> + Send + Sync>) -> Self {
        Self { dim, eval }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, t: f64) -> DVector<f64> {
        (self.eval)(t)
    }
}

/// Uniform interpolation nodes `t_i = i / (n - 1)` on `[0, 1]`.
pub fn uniform_nodes(n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
}

/// Polynomial interpolation of degree `n - 1` through the points at
/// uniform nodes, evaluated by the barycentric formula.
pub fn lagrange_curve(p: &ControlPoints) -> Curve {
    let nodes = uniform_nodes(p.len());
    // Barycentric weights for uniform nodes: w_i = (-1)^i C(n-1, i).
    let mut weights = vec![1.0f64; p.len()];
    for i in 1..p.len() {
        weights[i] = -weights[i - 1] * (p.len() - i) as f64 / i as f64;
    }
    let points = p.points().to_vec();
    let dim = p.dim();
    Curve::new(
        dim,
        Arc::new(move |t| {
            for (i, &ti) in nodes.iter().enumerate() {
                if (t - ti).abs() < 1e-13 {
                    return points[i].clone();
                }
            }
            let mut numerator = DVector::zeros(dim);
            let mut denominator = 0.0;
            for i in 0..points.len() {
                let w = weights[i] / (t - nodes[i]);
                numerator += w * &points[i];
                denominator += w;
            }
            numerator / denominator
        }),
    )
}

/// Bernstein basis values of degree `n - 1` at `t`.
pub fn bernstein_weights(n: usize, t: f64) -> Vec<f64> {
    let degree = n - 1;
    let mut binom = vec![1.0f64; n];
    for i in 1..n {
        binom[i] = binom[i - 1] * (degree - i + 1) as f64 / i as f64;
    }
    (0..n)
        .map(|i| binom[i] * t.powi(i as i32) * (1.0 - t).powi((degree - i) as i32))
        .collect()
}

/// Bezier curve through de Casteljau evaluation.
pub fn bezier_curve(p: &ControlPoints) -> Curve {
    let points = p.points().to_vec();
    Curve::new(
        p.dim(),
        Arc::new(move |t| {
            let mut layer = points.clone();
            while layer.len() > 1 {
                layer = layer
                    .windows(2)
                    .map(|w| (1.0 - t) * &w[0] + t * &w[1])
                    .collect();
            }
            layer.pop().expect("nonempty control polygon")
        }),
    )
}

/// Clamped uniform knot vector for a cubic B-spline with `n` control
/// points: four zeros, `n - 4` interior knots, four ones.
pub fn clamped_uniform_knots(n: usize) -> Vec<f64> {
    let mut knots = vec![0.0; 4];
    let spans = (n - 3) as f64;
    knots.extend((1..n - 3).map(|i| i as f64 / spans));
    knots.extend([1.0; 4]);
    knots
}

/// Cox-de Boor basis values `N_{i,3}(t)` for all `n` control points.
pub fn bspline_basis(n: usize, t: f64) -> Vec<f64> {
    let knots = clamped_uniform_knots(n);
    let order = 4;
    // Degree-0 seed; the closed end of the domain goes to the last
    // nontrivial interval.
    let m = knots.len() - 1;
    let mut basis: Vec<f64> = (0..m)
        .map(|i| {
            let closes = knots[i + 1] >= 1.0;
            let inside = (knots[i] <= t && t < knots[i + 1])
                || (closes && knots[i] < knots[i + 1] && t >= 1.0);
            if inside {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    for p in 1..order {
        for i in 0..m - p {
            let left = {
                let den = knots[i + p] - knots[i];
                if den > 0.0 {
                    (t - knots[i]) / den * basis[i]
                } else {
                    0.0
                }
            };
            let right = {
                let den = knots[i + p + 1] - knots[i + 1];
                if den > 0.0 {
                    (knots[i + p + 1] - t) / den * basis[i + 1]
                } else {
                    0.0
                }
            };
            basis[i] = left + right;
        }
    }
    basis.truncate(n);
    basis
}

/// Cubic B-spline with clamped uniform knots, evaluated by the de Boor
/// recurrence.
pub fn bspline_curve(p: &ControlPoints) -> Result<Curve, InterpolationError> {
    if p.len() < 4 {
        return Err(InterpolationError::TooFewPoints {
            scheme: "cubic B-spline",
            needed: 4,
            got: p.len(),
        });
    }
    let n = p.len();
    let knots = clamped_uniform_knots(n);
    let points = p.points().to_vec();
    let degree = 3usize;
    Ok(Curve::new(
        p.dim(),
        Arc::new(move |t| {
            // Knot span: largest k in [degree, n-1] with knots[k] <= t.
            let mut span = degree;
            while span + 1 < n && knots[span + 1] <= t {
                span += 1;
            }
            let mut d: Vec<DVector<f64>> =
                (0..=degree).map(|j| points[j + span - degree].clone()).collect();
            for r in 1..=degree {
                for j in (r..=degree).rev() {
                    let i = j + span - degree;
                    let den = knots[i + degree - r + 1] - knots[i];
                    let alpha = if den > 0.0 { (t - knots[i]) / den } else { 0.0 };
                    d[j] = (1.0 - alpha) * &d[j - 1] + alpha * &d[j];
                }
            }
            d.pop().expect("nonempty de Boor triangle")
        }),
    ))
}

/// Diagonal point action: apply `a` to every control point; `a` need not
/// be invertible.
pub fn points_action(a: &AffineMap, p: &ControlPoints) -> ControlPoints {
    assert_eq!(a.domain_dim(), p.dim());
    ControlPoints::new(
        a.codomain_dim(),
        p.points().iter().map(|x| a.apply(x)).collect(),
    )
}

/// Curve action: post-composition with `a`.
pub fn curve_action(a: &AffineMap, c: &Curve) -> Curve {
    assert_eq!(a.domain_dim(), c.dim());
    let a = a.clone();
    let inner = c.clone();
    Curve::new(a.codomain_dim(), Arc::new(move |t| a.apply(&inner.eval(t))))
}

/// An interchangeable interpolation strategy.
pub trait CurveScheme: Send + Sync {
    fn name(&self) -> &'static str;
    fn min_points(&self) -> usize {
        2
    }
    fn curve(&self, p: &ControlPoints) -> Result<Curve, InterpolationError>;
}

pub struct Lagrange;

impl CurveScheme for Lagrange {
    fn name(&self) -> &'static str {
        "lagrange"
    }

    fn curve(&self, p: &ControlPoints) -> Result<Curve, InterpolationError> {
        Ok(lagrange_curve(p))
    }
}

pub struct Bezier;

impl CurveScheme for Bezier {
    fn name(&self) -> &'static str {
        "bezier"
    }

    fn curve(&self, p: &ControlPoints) -> Result<Curve, InterpolationError> {
        Ok(bezier_curve(p))
    }
}

pub struct CubicBSpline;

impl CurveScheme for CubicBSpline {
    fn name(&self) -> &'static str {
        "bspline"
    }

    fn min_points(&self) -> usize {
        4
    }

    fn curve(&self, p: &ControlPoints) -> Result<Curve, InterpolationError> {
        bspline_curve(p)
    }
}

pub fn builtin_schemes() -> Vec<Arc<dyn CurveScheme>> {
    vec![Arc::new(Lagrange), Arc::new(Bezier), Arc::new(CubicBSpline)]
}

pub mod suite {
    //! Harness wiring: curves compared on a fixed 50-point parameter grid.

    use super::*;
    use crate::affine::{mixed_invertible_map, MapKind};
    use crate::harness::{
        check_bijective, check_exact_class, ActionPair, Algorithm, EquivarianceReport,
        HarnessError, RelatedPair,
    };
    use crate::registry::{prefix_reports, ClassFilter, SuiteConfig, SuiteRunner};
    use rand::Rng;

    pub const DEFAULT_TOLERANCE: f64 = 1e-10;
    pub const GRID_SIZE: usize = 50;
    pub const BIJECTIVE_DIMS: [(usize, usize); 3] = [(1, 1), (2, 2), (3, 3)];
    pub const INJECTIVE_DIMS: [(usize, usize); 2] = [(1, 2), (2, 3)];
    pub const SURJECTIVE_DIMS: [(usize, usize); 2] = [(2, 1), (3, 2)];
    pub const DEGENERATE_DIMS: [(usize, usize); 2] = [(2, 2), (3, 2)];

    pub fn parameter_grid() -> Vec<f64> {
        (0..GRID_SIZE)
            .map(|i| i as f64 / (GRID_SIZE - 1) as f64)
            .collect()
    }

    pub struct SchemeFamily(pub Arc<dyn CurveScheme>);

    impl Algorithm<ControlPoints, Curve> for SchemeFamily {
        fn name(&self) -> String {
            self.0.name().to_owned()
        }

        fn supports_dim(&self, dim: usize) -> bool {
            dim >= 1
        }

        fn evaluate(&self, _dim: usize, datum: &ControlPoints) -> Curve {
            self.0
                .curve(datum)
                .expect("samplers respect the scheme's minimum point count")
        }
    }

    fn curve_distance(x: &Curve, y: &Curve) -> f64 {
        parameter_grid()
            .iter()
            .map(|&t| (x.eval(t) - y.eval(t)).norm())
            .fold(0.0, f64::max)
    }

    pub fn action_pair(min_points: usize) -> ActionPair<ControlPoints, Curve> {
        ActionPair {
            data_pushforward: Some(Box::new(|a, p: &ControlPoints| points_action(a, p))),
            comp_pushforward: Some(Box::new(|a, c: &Curve| curve_action(a, c))),
            comp_distance: Some(Box::new(curve_distance)),
            sample_datum: Box::new(move |dim, rng| {
                let n = rng.gen_range(min_points..=8);
                ControlPoints::new(
                    dim,
                    (0..n)
                        .map(|_| DVector::from_fn(dim, |_, _| rng.gen_range(-2.0..2.0)))
                        .collect(),
                )
            }),
            sample_bijective_map: Box::new(|dim, trial, rng| {
                mixed_invertible_map(dim, trial, rng)
            }),
            data_pair_generator: Box::new(move |a, rng| {
                let n = rng.gen_range(min_points..=8);
                let lo = ControlPoints::new(
                    a.domain_dim(),
                    (0..n)
                        .map(|_| {
                            DVector::from_fn(a.domain_dim(), |_, _| rng.gen_range(-2.0..2.0))
                        })
                        .collect(),
                );
                let hi = points_action(a, &lo);
                Ok(RelatedPair {
                    dim_m: a.domain_dim(),
                    dim_n: a.codomain_dim(),
                    datum_lo: lo,
                    datum_hi: hi,
                    via: a.clone(),
                })
            }),
            membership_residual: Box::new(|a, lo, hi| {
                lo.points()
                    .iter()
                    .zip(hi.points())
                    .map(|(x, y)| (y - a.apply(x)).norm())
                    .fold(0.0, f64::max)
            }),
            membership_tol: 1e-12,
            comp_residual: Box::new(|a, c1, c2| {
                parameter_grid()
                    .iter()
                    .map(|&t| (c2.eval(t) - a.apply(&c1.eval(t))).norm())
                    .fold(0.0, f64::max)
            }),
            describe_datum: Box::new(|p| format!("{} points in R^{}", p.len(), p.dim())),
        }
    }

    pub struct InterpolationSuite;

    impl SuiteRunner for InterpolationSuite {
        fn name(&self) -> &'static str {
            "interpolation"
        }

        fn run(&self, cfg: &SuiteConfig) -> Result<Vec<EquivarianceReport>, HarnessError> {
            let tol = cfg.tolerance.unwrap_or(DEFAULT_TOLERANCE);
            let mut reports = Vec::new();
            for scheme in builtin_schemes() {
                if !cfg.wants_algorithm(scheme.name()) {
                    continue;
                }
                let actions = action_pair(scheme.min_points());
                let family = SchemeFamily(scheme);
                if cfg.wants_class(ClassFilter::Bijective) {
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
                if cfg.wants_class(ClassFilter::Injective) {
                    for dims in cfg.dims_for(&INJECTIVE_DIMS, |m, n| m < n) {
                        reports.push(check_exact_class(
                            &family,
                            &actions,
                            MapKind::Injective,
                            dims,
                            cfg.trials(),
                            tol,
                            cfg.seed,
                        )?);
                    }
                }
                if cfg.wants_class(ClassFilter::Surjective) {
                    for dims in cfg.dims_for(&SURJECTIVE_DIMS, |m, n| m > n) {
                        reports.push(check_exact_class(
                            &family,
                            &actions,
                            MapKind::Surjective,
                            dims,
                            cfg.trials(),
                            tol,
                            cfg.seed,
                        )?);
                    }
                }
                // Rank-deficient maps round out the full sweep: naturality
                // for these schemes is an equality over the whole affine
                // category, not just its subcategories.
                if cfg.all_classes() {
                    for dims in cfg.dims_for(&DEGENERATE_DIMS, |_, _| true) {
                        reports.push(check_exact_class(
                            &family,
                            &actions,
                            MapKind::RankDeficient,
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
}
