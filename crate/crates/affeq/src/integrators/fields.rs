//! Vector-field actions and cross-dimension related-pair generators.
//!
//! The bijective action is the pushforward `a . f = T a . f . a^-1`.
//! Across dimensions the data relation is `f2 . a = T a . f1`; the
//! generators construct a related partner explicitly (the relation has a
//! measure-zero graph, so rejection sampling would never terminate): the
//! injective case extends a low-dimensional field off the image of `a`
//! with a modulation that vanishes exactly on it, the surjective case
//! lifts a low-dimensional field through a right inverse plus an arbitrary
//! kernel component.

use super::{IntegratorError, OneStepMethod, VectorField};
use crate::affine::{AffineMap, MapClass};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

/// `a . f = T a . f . a^-1` for invertible `a`; the Jacobian, when
/// analytic, is propagated by the chain rule.
pub fn field_pushforward(a: &AffineMap, f: &VectorField) -> Result<VectorField, IntegratorError> {
    if a.domain_dim() != f.dim() {
        return Err(IntegratorError::DimensionMismatch {
            field: f.dim(),
            state: a.domain_dim(),
        });
    }
    let inv = a.invert()?;
    let tangent = a.tangent().clone();
    let dim = f.dim();
    let eval = {
        let f = f.clone();
        let inv = inv.clone();
        let tangent = tangent.clone();
        Arc::new(move |y: &DVector<f64>| &tangent * f.eval(&inv.apply(y)))
    };
    if f.has_analytic_jacobian() {
        let tangent_inv = inv.tangent().clone();
        let f = f.clone();
        let jacobian = Arc::new(move |y: &DVector<f64>| {
            &tangent * f.jacobian_at(&inv.apply(y)) * &tangent_inv
        });
        Ok(VectorField::with_jacobian_unchecked(dim, eval, jacobian))
    } else {
        Ok(VectorField::new(dim, eval))
    }
}

/// A random smooth bounded field with analytic Jacobian:
/// `f(x) = M x + c + sum_k u_k sin(w_k . x + p_k)`.
pub fn random_field(dim: usize, rng: &mut ChaCha8Rng) -> VectorField {
    let m = DMatrix::from_fn(dim, dim, |_, _| rng.gen_range(-1.0..1.0));
    let c = DVector::from_fn(dim, |_, _| rng.gen_range(-1.0..1.0));
    let terms: Vec<(DVector<f64>, DVector<f64>, f64)> = (0..2)
        .map(|_| {
            let amp = DVector::from_fn(dim, |_, _| rng.gen_range(-1.0..1.0));
            let freq = DVector::from_fn(dim, |_, _| rng.gen_range(-1.0..1.0));
            let phase = rng.gen_range(-3.0..3.0);
            (amp, freq, phase)
        })
        .collect();
    let eval = {
        let (m, c, terms) = (m.clone(), c.clone(), terms.clone());
        Arc::new(move |x: &DVector<f64>| {
            let mut out = &m * x + &c;
            for (amp, freq, phase) in &terms {
                out += amp * (freq.dot(x) + phase).sin();
            }
            out
        })
    };
    let jacobian = Arc::new(move |x: &DVector<f64>| {
        let mut jac = m.clone();
        for (amp, freq, phase) in &terms {
            jac += amp * freq.transpose() * (freq.dot(x) + phase).cos();
        }
        jac
    });
    VectorField::with_jacobian_unchecked(dim, eval, jacobian)
}

/// A smooth bounded matrix-valued modulation `G(y) = B0 + sin(w.y + p) B1`.
fn random_matrix_modulation(
    rows: usize,
    cols: usize,
    rng: &mut ChaCha8Rng,
) -> Arc<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync> {
    let b0 = DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0));
    let b1 = DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0));
    let w = DVector::from_fn(cols, |_, _| rng.gen_range(-1.0..1.0));
    let p = rng.gen_range(-3.0..3.0);
    Arc::new(move |y: &DVector<f64>| &b0 + (w.dot(y) + p).sin() * &b1)
}

/// For injective `a` in `Hom(m, n)`, a field on `R^n` related to `f1`:
/// on the image it is forced by the relation, off the image it carries a
/// modulated component that vanishes exactly on the image.
pub fn related_field_injective(
    a: &AffineMap,
    f1: &VectorField,
    transverse: Option<&VectorField>,
    rng: &mut ChaCha8Rng,
) -> Result<VectorField, IntegratorError> {
    let class = a.classify();
    if !matches!(class, MapClass::Injective | MapClass::Bijective) {
        return Err(IntegratorError::WrongMapClass {
            expected: "injective",
            found: class.as_str(),
        });
    }
    let n = a.codomain_dim();
    let left = a
        .pseudo_inverses()
        .left
        .expect("injective maps have a left inverse");
    let tangent = a.tangent().clone();
    let a = a.clone();
    let f1 = f1.clone();
    let eval: super::FieldEval = match transverse {
        None => {
            let modulation = random_matrix_modulation(n, n, rng);
            Arc::new(move |y: &DVector<f64>| {
                let x = left.apply(y);
                let residual = y - a.apply(&x);
                &tangent * f1.eval(&x) + modulation(y) * residual
            })
        }
        Some(t) => {
            // Rank-one modulation derived from the transverse field; still
            // vanishes exactly on the image.
            let t = t.clone();
            Arc::new(move |y: &DVector<f64>| {
                let x = left.apply(y);
                let residual = y - a.apply(&x);
                let weight = residual.norm_squared() / (1.0 + residual.norm_squared());
                &tangent * f1.eval(&x) + weight * t.eval(y)
            })
        }
    };
    Ok(VectorField::new(n, eval))
}

/// For surjective `a` in `Hom(m, n)`, a field on `R^m` that descends to
/// `f2`: a right-inverse lift plus a component in the kernel of `T a`.
pub fn related_field_surjective(
    a: &AffineMap,
    f2: &VectorField,
    kernel_part: Option<&VectorField>,
    rng: &mut ChaCha8Rng,
) -> Result<VectorField, IntegratorError> {
    let class = a.classify();
    if !matches!(class, MapClass::Surjective | MapClass::Bijective) {
        return Err(IntegratorError::WrongMapClass {
            expected: "surjective",
            found: class.as_str(),
        });
    }
    let m = a.domain_dim();
    let section = a
        .pseudo_inverses()
        .right
        .expect("surjective maps have a right inverse")
        .tangent()
        .clone();
    let kernel = a.kernel_basis();
    let a = a.clone();
    let f2 = f2.clone();
    let eval: super::FieldEval = if kernel.ncols() == 0 {
        Arc::new(move |x: &DVector<f64>| &section * f2.eval(&a.apply(x)))
    } else {
        match kernel_part {
            None => {
                let modulation = random_matrix_modulation(kernel.ncols(), m, rng);
                Arc::new(move |x: &DVector<f64>| {
                    &section * f2.eval(&a.apply(x)) + &kernel * (modulation(x) * x)
                })
            }
            Some(k) => {
                let k = k.clone();
                let projector = &kernel * kernel.transpose();
                Arc::new(move |x: &DVector<f64>| {
                    &section * f2.eval(&a.apply(x)) + &projector * k.eval(x)
                })
            }
        }
    };
    Ok(VectorField::new(m, eval))
}

/// Fixed probe points in the ball of radius 2, derived from the dimension
/// alone so residuals are reproducible.
pub fn probe_points(dim: usize, count: usize) -> Vec<DVector<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5052_4f42_4553_0000 ^ dim as u64);
    let mut points = Vec::with_capacity(count);
    while points.len() < count {
        let x = DVector::from_fn(dim, |_, _| rng.gen_range(-2.0..2.0));
        if x.norm() <= 2.0 {
            points.push(x);
        }
    }
    points
}

/// Membership residual for the data relation `f2 . a = T a . f1`,
/// sampled at probe points in the low-dimensional space.
pub fn field_membership_residual(a: &AffineMap, f1: &VectorField, f2: &VectorField) -> f64 {
    probe_points(a.domain_dim(), 20)
        .iter()
        .map(|x| (f2.eval(&a.apply(x)) - a.tangent() * f1.eval(x)).norm())
        .fold(0.0, f64::max)
}

/// Computation-relation residual: `max_x |step(f2, a x, h) - a(step(f1, x, h))|`
/// over the probe points.
pub fn comp_residual_integrator(
    a: &AffineMap,
    method: &dyn OneStepMethod,
    f1: &VectorField,
    f2: &VectorField,
    h: f64,
    probes: &[DVector<f64>],
) -> f64 {
    probes
        .iter()
        .map(|x| {
            let hi = method.step(f2, &a.apply(x), h);
            let lo = a.apply(&method.step(f1, x, h));
            (hi - lo).norm()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::affine::{random_map, MapKind};
    use crate::integrators::method_by_name;
    use crate::rng::RngStream;
    use approx::assert_abs_diff_eq;
    use nalgebra::{dmatrix, dvector};

    #[test]
    fn pushforward_by_identity_is_pointwise_identical() {
        let mut rng = RngStream::new(1).trial(0);
        let f = random_field(2, &mut rng);
        let g = field_pushforward(&AffineMap::identity(2), &f).unwrap();
        for x in probe_points(2, 10) {
            assert_eq!(f.eval(&x), g.eval(&x));
        }
    }

    #[test]
    fn pushforward_scalar_example() {
        // f(x) = x under a(x) = 2x + 1 becomes y -> y - 1.
        let f = VectorField::linear(dmatrix![1.0]);
        let a = AffineMap::new(dmatrix![2.0], dvector![1.0]);
        let g = field_pushforward(&a, &f).unwrap();
        for y in [-1.0, 0.0, 0.5, 2.0] {
            assert_abs_diff_eq!(g.eval(&dvector![y])[0], y - 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn pushforward_preserves_divergence_at_corresponding_points() {
        let mut rng = RngStream::new(77).trial(0);
        for trial in 0..10u64 {
            let mut trng = RngStream::new(77).trial(trial);
            let f = random_field(3, &mut trng);
            let a = crate::affine::mixed_invertible_map(3, trial, &mut rng);
            let g = field_pushforward(&a, &f).unwrap();
            for x in probe_points(3, 5) {
                let lhs = g.divergence(&a.apply(&x));
                let rhs = f.divergence(&x);
                assert!((lhs - rhs).abs() <= 1e-9, "trial {trial}: {lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn related_injective_identity_reduces_to_same_field() {
        let mut rng = RngStream::new(3).trial(0);
        let f1 = random_field(2, &mut rng);
        let f2 =
            related_field_injective(&AffineMap::identity(2), &f1, None, &mut rng).unwrap();
        for x in probe_points(2, 10) {
            assert_eq!(f1.eval(&x), f2.eval(&x));
        }
    }

    #[test]
    fn related_injective_axis_embedding() {
        // a: x -> (x, 0) with f1(x) = x; on the axis f2(x, 0) = (x, 0).
        let a = AffineMap::new(dmatrix![1.0; 0.0], dvector![0.0, 0.0]);
        let f1 = VectorField::linear(dmatrix![1.0]);
        let mut rng = RngStream::new(4).trial(0);
        let f2 = related_field_injective(&a, &f1, None, &mut rng).unwrap();
        for x in [-1.0, 0.0, 0.7] {
            let v = f2.eval(&dvector![x, 0.0]);
            assert_abs_diff_eq!(v[0], x, epsilon = 1e-12);
            assert_abs_diff_eq!(v[1], 0.0, epsilon = 1e-12);
        }
        assert!(field_membership_residual(&a, &f1, &f2) <= 1e-12);
    }

    #[test]
    fn related_injective_membership_with_modulation() {
        let mut rng = RngStream::new(6).trial(2);
        let a = random_map(MapKind::Injective, 2, 4, &mut rng).unwrap();
        let f1 = random_field(2, &mut rng);
        let f2 = related_field_injective(&a, &f1, None, &mut rng).unwrap();
        assert!(field_membership_residual(&a, &f1, &f2) <= 1e-12);
        // Off the image, the modulated field is not the bare extension.
        let bare = {
            let left = a.pseudo_inverses().left.unwrap();
            let (a, f1) = (a.clone(), f1.clone());
            move |y: &DVector<f64>| {
                let x = left.apply(y);
                a.tangent() * f1.eval(&x)
            }
        };
        let off_image = dvector![1.3, -0.4, 0.9, 0.2];
        assert!((f2.eval(&off_image) - bare(&off_image)).norm() > 1e-6);
    }

    #[test]
    fn related_surjective_identity_forces_zero_kernel_part() {
        let mut rng = RngStream::new(9).trial(0);
        let f2 = random_field(2, &mut rng);
        let f1 =
            related_field_surjective(&AffineMap::identity(2), &f2, None, &mut rng).unwrap();
        for x in probe_points(2, 10) {
            assert_abs_diff_eq!(f1.eval(&x), f2.eval(&x), epsilon = 1e-13);
        }
    }

    #[test]
    fn related_surjective_projection_is_triangular() {
        // a: (x, y) -> x with f2(x) = x gives the triangular system
        // x' = x, y' = k(x, y).
        let a = AffineMap::new(dmatrix![1.0, 0.0], dvector![0.0]);
        let f2 = VectorField::linear(dmatrix![1.0]);
        let mut rng = RngStream::new(10).trial(0);
        let f1 = related_field_surjective(&a, &f2, None, &mut rng).unwrap();
        for x in probe_points(2, 10) {
            assert_abs_diff_eq!(f1.eval(&x)[0], x[0], epsilon = 1e-13);
        }
        assert!(field_membership_residual(&a, &f1, &f2) <= 1e-12);
    }

    #[test]
    fn related_surjective_membership_with_random_kernel() {
        let mut rng = RngStream::new(12).trial(5);
        let a = random_map(MapKind::Surjective, 5, 2, &mut rng).unwrap();
        let f2 = random_field(2, &mut rng);
        let f1 = related_field_surjective(&a, &f2, None, &mut rng).unwrap();
        assert!(field_membership_residual(&a, &f1, &f2) <= 1e-12);
    }

    #[test]
    fn rk4_commutes_with_surjective_projection() {
        let a = AffineMap::new(dmatrix![1.0, 0.0], dvector![0.0]);
        let f2 = VectorField::linear(dmatrix![1.0]);
        let mut rng = RngStream::new(13).trial(0);
        let f1 = related_field_surjective(&a, &f2, None, &mut rng).unwrap();
        let rk4 = method_by_name("rk4").unwrap();
        let probes = probe_points(2, 20);
        let r = comp_residual_integrator(&a, rk4.as_ref(), &f1, &f2, 0.1, &probes);
        assert!(r <= 1e-9, "residual {r}");
    }

    #[test]
    fn identity_comp_residual_is_exactly_zero() {
        let mut rng = RngStream::new(14).trial(0);
        let f = random_field(2, &mut rng);
        let id = AffineMap::identity(2);
        for method in crate::integrators::builtin_methods() {
            let r = comp_residual_integrator(
                &id,
                method.as_ref(),
                &f,
                &f,
                0.1,
                &probe_points(2, 10),
            );
            assert_eq!(r, 0.0, "{}", method.name());
        }
    }
}
