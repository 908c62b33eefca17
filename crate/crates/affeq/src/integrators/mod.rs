//! One-step ODE integrators and their affine actions.
//!
//! Ships forward Euler, Heun and classical RK4 (via Butcher tableaux), and
//! the divergence-modified Euler method `x -> x + h f(x)(1 + div f(x))`,
//! which is bijectively affine equivariant but fails the cross-dimension
//! relations. The [`fields`] submodule holds the vector-field pushforward
//! and the related-pair generators for injective and surjective maps.

pub mod fields;
pub mod suite;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;
use thiserror::Error;

pub type FieldEval = Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;
pub type FieldJacobian = Arc<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>;

#[derive(Debug, Error)]
pub enum IntegratorError {
    #[error("field dimension {field} does not match state dimension {state}")]
    DimensionMismatch { field: usize, state: usize },
    #[error("analytic jacobian disagrees with finite differences at probe {probe}: max entry error {error:.3e}")]
    JacobianMismatch { probe: usize, error: f64 },
    #[error("tableau `{0}` is implicit; only explicit methods are supported")]
    ImplicitTableau(String),
    #[error("map is not {expected} (class {found})")]
    WrongMapClass {
        expected: &'static str,
        found: &'static str,
    },
    #[error(transparent)]
    Affine(#[from] crate::affine::AffineError),
}

/// A dimension-tagged smooth vector field with an optional analytic
/// Jacobian.
#[derive(Clone)]
pub struct VectorField {
    dim: usize,
    eval: FieldEval,
    jacobian: Option<FieldJacobian>,
}

impl VectorField {
    pub fn new(dim: usize, eval: FieldEval) -> Self {
        Self {
            dim,
            eval,
            jacobian: None,
        }
    }

    /// Attach an analytic Jacobian, validating it against central finite
    /// differences at 10 fixed pseudorandom probe points.
    pub fn with_jacobian(
        dim: usize,
        eval: FieldEval,
        jacobian: FieldJacobian,
    ) -> Result<Self, IntegratorError> {
        let field = Self {
            dim,
            eval,
            jacobian: Some(jacobian),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0x4a41_434f_4249_414e);
        for probe in 0..10 {
            let x = DVector::from_fn(dim, |_, _| rng.gen_range(-2.0..2.0));
            let analytic = field.jacobian_at(&x);
            let fd = finite_difference_jacobian(&field.eval, &x);
            let error = (&analytic - &fd).abs().max();
            if error > 1e-5 {
                return Err(IntegratorError::JacobianMismatch { probe, error });
            }
        }
        Ok(field)
    }

    /// Attach a Jacobian known exact by construction (e.g. a chain rule
    /// on an already-validated field).
    pub fn with_jacobian_unchecked(dim: usize, eval: FieldEval, jacobian: FieldJacobian) -> Self {
        Self {
            dim,
            eval,
            jacobian: Some(jacobian),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn has_analytic_jacobian(&self) -> bool {
        self.jacobian.is_some()
    }

    pub fn eval(&self, x: &DVector<f64>) -> DVector<f64> {
        debug_assert_eq!(x.len(), self.dim);
        (self.eval)(x)
    }

    /// Analytic Jacobian when present, otherwise central differences.
    pub fn jacobian_at(&self, x: &DVector<f64>) -> DMatrix<f64> {
        match &self.jacobian {
            Some(j) => j(x),
            None => finite_difference_jacobian(&self.eval, x),
        }
    }

    /// Trace of the Jacobian.
    pub fn divergence(&self, x: &DVector<f64>) -> f64 {
        self.jacobian_at(x).trace()
    }

    pub fn zero(dim: usize) -> Self {
        Self::with_jacobian_unchecked(
            dim,
            Arc::new(move |_| DVector::zeros(dim)),
            Arc::new(move |_| DMatrix::zeros(dim, dim)),
        )
    }

    /// The linear field `x -> M x`.
    pub fn linear(matrix: DMatrix<f64>) -> Self {
        let dim = matrix.nrows();
        assert_eq!(matrix.ncols(), dim);
        let m = matrix.clone();
        Self::with_jacobian_unchecked(
            dim,
            Arc::new(move |x| &m * x),
            Arc::new(move |_| matrix.clone()),
        )
    }
}

/// Central-difference Jacobian with per-coordinate step
/// `cbrt(machine epsilon) * max(1, |x_i|)`.
pub fn finite_difference_jacobian(eval: &FieldEval, x: &DVector<f64>) -> DMatrix<f64> {
    let dim = x.len();
    let base_step = f64::EPSILON.cbrt();
    let mut jac = DMatrix::zeros(eval(x).len(), dim);
    for i in 0..dim {
        let delta = base_step * x[i].abs().max(1.0);
        let mut hi = x.clone();
        let mut lo = x.clone();
        hi[i] += delta;
        lo[i] -= delta;
        let diff = (eval(&hi) - eval(&lo)) / (2.0 * delta);
        jac.set_column(i, &diff);
    }
    jac
}

/// Divergence of a field at a point (analytic trace when available,
/// finite differences otherwise).
pub fn divergence(f: &VectorField, x: &DVector<f64>) -> f64 {
    f.divergence(x)
}

/// An explicit Runge-Kutta tableau.
#[derive(Debug, Clone, PartialEq)]
pub struct ButcherTableau {
    name: String,
    matrix: DMatrix<f64>,
    weights: DVector<f64>,
    nodes: DVector<f64>,
}

impl ButcherTableau {
    pub fn new(
        name: impl Into<String>,
        matrix: DMatrix<f64>,
        weights: DVector<f64>,
        nodes: DVector<f64>,
    ) -> Self {
        let s = weights.len();
        assert_eq!(matrix.nrows(), s);
        assert_eq!(matrix.ncols(), s);
        assert_eq!(nodes.len(), s);
        assert!(
            (weights.sum() - 1.0).abs() <= 1e-14,
            "weights must sum to 1"
        );
        for i in 0..s {
            let row_sum: f64 = (0..s).map(|j| matrix[(i, j)]).sum();
            assert!(
                (nodes[i] - row_sum).abs() <= 1e-14,
                "nodes must satisfy the row-sum condition"
            );
        }
        Self {
            name: name.into(),
            matrix,
            weights,
            nodes,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn stages(&self) -> usize {
        self.weights.len()
    }

    pub fn is_explicit(&self) -> bool {
        let s = self.stages();
        (0..s).all(|i| (i..s).all(|j| self.matrix[(i, j)] == 0.0))
    }

    pub fn heun() -> Self {
        Self::new(
            "heun",
            DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0]),
            DVector::from_vec(vec![0.5, 0.5]),
            DVector::from_vec(vec![0.0, 1.0]),
        )
    }

    pub fn rk4() -> Self {
        Self::new(
            "rk4",
            DMatrix::from_row_slice(
                4,
                4,
                &[
                    0.0, 0.0, 0.0, 0.0, //
                    0.5, 0.0, 0.0, 0.0, //
                    0.0, 0.5, 0.0, 0.0, //
                    0.0, 0.0, 1.0, 0.0,
                ],
            ),
            DVector::from_vec(vec![1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0]),
            DVector::from_vec(vec![0.0, 0.5, 0.5, 1.0]),
        )
    }
}

/// One step of a numerical integrator; `step(f, x, 0) = x` exactly.
pub trait OneStepMethod: Send + Sync {
    fn name(&self) -> &str;
    fn step(&self, f: &VectorField, x: &DVector<f64>, h: f64) -> DVector<f64>;
}

/// `x + h f(x)`.
pub fn euler_step(f: &VectorField, x: &DVector<f64>, h: f64) -> DVector<f64> {
    assert_eq!(
        f.dim(),
        x.len(),
        "field dimension must match the state dimension"
    );
    x + h * f.eval(x)
}

/// Standard explicit Runge-Kutta update.
pub fn rk_step(
    tableau: &ButcherTableau,
    f: &VectorField,
    x: &DVector<f64>,
    h: f64,
) -> Result<DVector<f64>, IntegratorError> {
    if !tableau.is_explicit() {
        return Err(IntegratorError::ImplicitTableau(tableau.name().to_owned()));
    }
    if f.dim() != x.len() {
        return Err(IntegratorError::DimensionMismatch {
            field: f.dim(),
            state: x.len(),
        });
    }
    let s = tableau.stages();
    let mut stages: Vec<DVector<f64>> = Vec::with_capacity(s);
    for i in 0..s {
        let mut xi = x.clone();
        for (j, k) in stages.iter().enumerate() {
            let a = tableau.matrix[(i, j)];
            if a != 0.0 {
                xi += h * a * k;
            }
        }
        stages.push(f.eval(&xi));
    }
    let mut out = x.clone();
    for (i, k) in stages.iter().enumerate() {
        out += h * tableau.weights[i] * k;
    }
    Ok(out)
}

/// `x + h f(x)(1 + div f(x))` — the increment map of the divergence-
/// modified Euler method.
pub fn divmod_step(f: &VectorField, x: &DVector<f64>, h: f64) -> DVector<f64> {
    let v = f.eval(x);
    let d = f.divergence(x);
    x + h * (1.0 + d) * v
}

pub struct ForwardEuler;

impl OneStepMethod for ForwardEuler {
    fn name(&self) -> &str {
        "euler"
    }

    fn step(&self, f: &VectorField, x: &DVector<f64>, h: f64) -> DVector<f64> {
        euler_step(f, x, h)
    }
}

pub struct RungeKutta {
    tableau: ButcherTableau,
}

impl RungeKutta {
    pub fn new(tableau: ButcherTableau) -> Result<Self, IntegratorError> {
        if !tableau.is_explicit() {
            return Err(IntegratorError::ImplicitTableau(tableau.name().to_owned()));
        }
        Ok(Self { tableau })
    }
}

impl OneStepMethod for RungeKutta {
    fn name(&self) -> &str {
        self.tableau.name()
    }

    fn step(&self, f: &VectorField, x: &DVector<f64>, h: f64) -> DVector<f64> {
        rk_step(&self.tableau, f, x, h).expect("explicit tableau validated at construction")
    }
}

pub struct DivergenceModifiedEuler;

impl OneStepMethod for DivergenceModifiedEuler {
    fn name(&self) -> &str {
        "divmod"
    }

    fn step(&self, f: &VectorField, x: &DVector<f64>, h: f64) -> DVector<f64> {
        divmod_step(f, x, h)
    }
}

/// All shipped methods, registered by name.
pub fn builtin_methods() -> Vec<Arc<dyn OneStepMethod>> {
    vec![
        Arc::new(ForwardEuler),
        Arc::new(RungeKutta::new(ButcherTableau::heun()).expect("heun is explicit")),
        Arc::new(RungeKutta::new(ButcherTableau::rk4()).expect("rk4 is explicit")),
        Arc::new(DivergenceModifiedEuler),
    ]
}

pub fn method_by_name(name: &str) -> Option<Arc<dyn OneStepMethod>> {
    builtin_methods().into_iter().find(|m| m.name() == name)
}
