//! One-dimensional quadrature rules and their `Aff(1)` action pair.
//!
//! A datum is an oriented interval with a continuous integrand,
//! `(alpha, beta, f)` with `alpha < beta`. The data action of an invertible
//! scalar affine map moves the endpoints diagonally and pre-composes the
//! integrand with the inverse map; the computation action scales the value
//! by the tangent. Orientation-reversing maps are absorbed by normalizing
//! the endpoint order and comparing against `|tangent|` times the value,
//! the standard sign convention for reversed integration bounds. This
//! example is defined over `Aff(1)` only, so the suite runs bijective
//! checks exclusively.

use crate::affine::{mixed_invertible_map, AffineError, AffineMap};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

pub type Integrand = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// An interval together with an integrand; endpoints ordered.
#[derive(Clone)]
pub struct QuadDatum {
    pub alpha: f64,
    pub beta: f64,
    pub integrand: Integrand,
}

impl QuadDatum {
    pub fn new(alpha: f64, beta: f64, integrand: Integrand) -> Self {
        assert!(alpha < beta, "interval endpoints must satisfy alpha < beta");
        Self {
            alpha,
            beta,
            integrand,
        }
    }
}

/// Nodes and weights on the reference interval `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    name: String,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn new(name: impl Into<String>, nodes: Vec<f64>, weights: Vec<f64>) -> Self {
        assert_eq!(nodes.len(), weights.len());
        assert!(
            nodes.iter().all(|&t| (0.0..=1.0).contains(&t)),
            "nodes must lie in [0, 1]"
        );
        let total: f64 = weights.iter().sum();
        assert!(
            (total - 1.0).abs() <= 1e-14,
            "weights must sum to 1 (exactness on constants)"
        );
        Self {
            name: name.into(),
            nodes,
            weights,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn midpoint() -> Self {
        Self::new("midpoint", vec![0.5], vec![1.0])
    }

    pub fn trapezoid() -> Self {
        Self::new("trapezoid", vec![0.0, 1.0], vec![0.5, 0.5])
    }

    pub fn simpson() -> Self {
        Self::new(
            "simpson",
            vec![0.0, 0.5, 1.0],
            vec![1.0 / 6.0, 4.0 / 6.0, 1.0 / 6.0],
        )
    }

    /// Gauss-Legendre rule with `k` in `{2, 3, 5}` points, mapped from the
    /// standard `[-1, 1]` nodes.
    pub fn gauss_legendre(k: usize) -> Self {
        let (nodes, weights): (Vec<f64>, Vec<f64>) = match k {
            2 => {
                let x = 1.0 / 3.0f64.sqrt();
                (vec![-x, x], vec![1.0, 1.0])
            }
            3 => {
                let x = (3.0f64 / 5.0).sqrt();
                (vec![-x, 0.0, x], vec![5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])
            }
            5 => (
                vec![
                    -0.906_179_845_938_664,
                    -0.538_469_310_105_683_1,
                    0.0,
                    0.538_469_310_105_683_1,
                    0.906_179_845_938_664,
                ],
                vec![
                    0.236_926_885_056_189_08,
                    0.478_628_670_499_366_47,
                    0.568_888_888_888_888_9,
                    0.478_628_670_499_366_47,
                    0.236_926_885_056_189_08,
                ],
            ),
            other => panic!("unsupported Gauss-Legendre point count {other}"),
        };
        Self::new(
            format!("gauss{k}"),
            nodes.into_iter().map(|x| (x + 1.0) / 2.0).collect(),
            weights.into_iter().map(|w| w / 2.0).collect(),
        )
    }

    /// `(beta - alpha) * sum_i w_i f(alpha + (beta - alpha) t_i)`.
    pub fn integrate(&self, d: &QuadDatum) -> f64 {
        let len = d.beta - d.alpha;
        let sum: f64 = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * (d.integrand)(d.alpha + len * t))
            .sum();
        len * sum
    }
}

/// Every rule the suite ships.
pub fn builtin_rules() -> Vec<QuadratureRule> {
    vec![
        QuadratureRule::midpoint(),
        QuadratureRule::trapezoid(),
        QuadratureRule::simpson(),
        QuadratureRule::gauss_legendre(2),
        QuadratureRule::gauss_legendre(3),
        QuadratureRule::gauss_legendre(5),
    ]
}

/// The data action: endpoints move diagonally, the integrand pre-composes
/// with the inverse map; endpoint order is re-normalized when the tangent
/// is negative.
pub fn quad_data_action(a: &AffineMap, d: &QuadDatum) -> Result<QuadDatum, AffineError> {
    assert_eq!(a.domain_dim(), 1);
    assert_eq!(a.codomain_dim(), 1);
    let inv = a.invert()?;
    let (inv_lin, inv_tr) = (inv.linear()[(0, 0)], inv.translation()[0]);
    let p = a.apply1(d.alpha);
    let q = a.apply1(d.beta);
    let (alpha, beta) = if p <= q { (p, q) } else { (q, p) };
    let f = d.integrand.clone();
    Ok(QuadDatum::new(
        alpha,
        beta,
        Arc::new(move |y| f(inv_lin * y + inv_tr)),
    ))
}

/// The computation action: multiply by the (signed) tangent.
pub fn quad_comp_action(a: &AffineMap, v: f64) -> f64 {
    assert_eq!(a.domain_dim(), 1);
    assert_eq!(a.codomain_dim(), 1);
    a.tangent()[(0, 0)] * v
}

/// Relative equivariance residual for a pair of quadrature values.
///
/// The datum normalization flips the endpoint order under a negative
/// tangent, so the value computed on the normalized datum corresponds to
/// `|tangent|` times the original one.
pub fn quad_comp_residual(a: &AffineMap, v_lo: f64, v_hi: f64) -> f64 {
    let scaled = a.tangent()[(0, 0)].abs() * v_lo;
    (v_hi - scaled).abs() / (1.0 + scaled.abs())
}

/// A random smooth test integrand: a quartic polynomial plus a sinusoid.
pub fn sample_integrand(rng: &mut ChaCha8Rng) -> Integrand {
    let coeffs: [f64; 5] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
    let amp = rng.gen_range(-1.0..1.0);
    let freq = rng.gen_range(0.5..2.0);
    let phase = rng.gen_range(-3.0..3.0);
    Arc::new(move |x| {
        let poly = coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, &c| acc * x + c);
        poly + amp * (freq * x + phase).sin()
    })
}

pub fn sample_datum(rng: &mut ChaCha8Rng) -> QuadDatum {
    let alpha = rng.gen_range(-2.0..1.0);
    let len = rng.gen_range(0.5..3.0);
    QuadDatum::new(alpha, alpha + len, sample_integrand(rng))
}

/// Invertible scalar maps with `|tangent|` in `[0.1, 10]`, so inverse
/// amplification stays bounded at the suite tolerance.
pub fn sample_scalar_map(trial: u64, rng: &mut ChaCha8Rng) -> AffineMap {
    loop {
        let a = mixed_invertible_map(1, trial, rng);
        let t = a.tangent()[(0, 0)].abs();
        if (0.1..=10.0).contains(&t) {
            return a;
        }
    }
}

pub mod suite {
    //! Harness wiring: each rule is an algorithm family over dimension 1.

    use super::*;
    use crate::harness::{check_bijective, ActionPair, Algorithm, EquivarianceReport, HarnessError, RelatedPair};
    use crate::registry::{prefix_reports, ClassFilter, SuiteConfig, SuiteRunner};

    pub const DEFAULT_TOLERANCE: f64 = 1e-12;

    impl Algorithm<QuadDatum, f64> for QuadratureRule {
        fn name(&self) -> String {
            self.name().to_owned()
        }

        fn supports_dim(&self, dim: usize) -> bool {
            dim == 1
        }

        fn evaluate(&self, _dim: usize, datum: &QuadDatum) -> f64 {
            self.integrate(datum)
        }
    }

    pub fn action_pair() -> ActionPair<QuadDatum, f64> {
        ActionPair {
            data_pushforward: Some(Box::new(|a, d| {
                quad_data_action(a, d).expect("invertible map in quadrature action")
            })),
            comp_pushforward: Some(Box::new(|a, &v| quad_comp_action(a, v))),
            sample_datum: Box::new(|_dim, rng| sample_datum(rng)),
            sample_bijective_map: Box::new(|_dim, trial, rng| sample_scalar_map(trial, rng)),
            data_pair_generator: Box::new(|a, rng| {
                if a.domain_dim() != 1 || a.codomain_dim() != 1 {
                    return Err("quadrature data action is defined over Aff(1) only".into());
                }
                let lo = sample_datum(rng);
                let hi = quad_data_action(a, &lo).map_err(|e| e.to_string())?;
                Ok(RelatedPair {
                    dim_m: 1,
                    dim_n: 1,
                    datum_lo: lo,
                    datum_hi: hi,
                    via: a.clone(),
                })
            }),
            membership_residual: Box::new(|a, lo, hi| {
                let pushed = match quad_data_action(a, lo) {
                    Ok(p) => p,
                    Err(_) => return f64::INFINITY,
                };
                let endpoints = (pushed.alpha - hi.alpha)
                    .abs()
                    .max((pushed.beta - hi.beta).abs());
                let len = hi.beta - hi.alpha;
                let values = (0..8)
                    .map(|i| {
                        let y = hi.alpha + len * (i as f64 + 0.5) / 8.0;
                        ((pushed.integrand)(y) - (hi.integrand)(y)).abs()
                    })
                    .fold(0.0f64, f64::max);
                endpoints.max(values)
            }),
            membership_tol: 1e-10,
            comp_residual: Box::new(|a, &v_lo, &v_hi| quad_comp_residual(a, v_lo, v_hi)),
            comp_distance: Some(Box::new(|&x: &f64, &y: &f64| {
                (x - y).abs() / (1.0 + x.abs())
            })),
            describe_datum: Box::new(|d| format!("interval [{:.6}, {:.6}]", d.alpha, d.beta)),
        }
    }

    pub struct QuadratureSuite;

    impl SuiteRunner for QuadratureSuite {
        fn name(&self) -> &'static str {
            "quadrature"
        }

        fn run(&self, cfg: &SuiteConfig) -> Result<Vec<EquivarianceReport>, HarnessError> {
            let mut reports = Vec::new();
            // Only the bijective class: the paper's quadrature functor is
            // defined over Aff(1) alone.
            if !cfg.wants_class(ClassFilter::Bijective) {
                return Ok(reports);
            }
            let actions = action_pair();
            let tol = cfg.tolerance.unwrap_or(DEFAULT_TOLERANCE);
            for rule in builtin_rules() {
                if !cfg.wants_algorithm(rule.name()) {
                    continue;
                }
                reports.push(check_bijective(
                    &rule,
                    &actions,
                    1,
                    cfg.trials(),
                    tol,
                    cfg.seed,
                )?);
            }
            prefix_reports(self.name(), &mut reports);
            Ok(reports)
        }
    }
}
