//! Affine maps between spaces of arbitrary dimensions.
//!
//! An [`AffineMap`] is a morphism in `Hom(m, n)`: a linear part `A` (an
//! `n x m` matrix) together with a translation `b`, acting by
//! `x -> A x + b`. The module also classifies maps by numerical rank,
//! builds affine one-sided inverses, and generates the random
//! transformation families used by the suites (translations, anisotropic
//! scalings, rotations, shears, general invertible / injective /
//! surjective maps).

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Relative tolerance for numerical rank decisions, against the largest
/// singular value.
pub const RANK_TOL: f64 = 1e-10;

/// Condition-number cap on generated maps; residual tolerances elsewhere
/// assume this amplification bound.
pub const MAX_CONDITION: f64 = 100.0;

#[derive(Debug, Error)]
pub enum AffineError {
    #[error("dimension mismatch: map expects input of length {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("map in Hom({domain},{codomain}) is not invertible ({reason})")]
    NotInvertible {
        domain: usize,
        codomain: usize,
        reason: &'static str,
    },
    #[error("map kind {kind:?} is inconsistent with dimensions ({m},{n})")]
    InconsistentKind { kind: MapKind, m: usize, n: usize },
}

/// Classification of an affine map by the numerical rank of its linear part.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapClass {
    Bijective,
    Injective,
    Surjective,
    Neither,
}

impl MapClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            MapClass::Bijective => "bijective",
            MapClass::Injective => "injective",
            MapClass::Surjective => "surjective",
            MapClass::Neither => "neither",
        }
    }
}

impl std::fmt::Display for MapClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Transformation families for random map generation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapKind {
    Invertible,
    Injective,
    Surjective,
    Translation,
    Scaling,
    Rotation,
    Shear,
    /// Rank-deficient map (rank `min(m,n) - 1`), in no subcategory.
    RankDeficient,
}

/// An affine map `x -> A x + b` from `R^m` to `R^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    linear: DMatrix<f64>,
    translation: DVector<f64>,
}

impl AffineMap {
    /// Construct from a linear part and translation.
    ///
    /// Panics if the translation length does not match the row count of the
    /// linear part; that is a construction-site programming error.
    pub fn new(linear: DMatrix<f64>, translation: DVector<f64>) -> Self {
        assert_eq!(
            linear.nrows(),
            translation.len(),
            "translation length must equal the codomain dimension"
        );
        Self {
            linear,
            translation,
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(DMatrix::identity(dim, dim), DVector::zeros(dim))
    }

    pub fn domain_dim(&self) -> usize {
        self.linear.ncols()
    }

    pub fn codomain_dim(&self) -> usize {
        self.linear.nrows()
    }

    pub fn linear(&self) -> &DMatrix<f64> {
        &self.linear
    }

    pub fn translation(&self) -> &DVector<f64> {
        &self.translation
    }

    /// The tangent map `T a := A`; independent of the translation.
    pub fn tangent(&self) -> &DMatrix<f64> {
        &self.linear
    }

    /// `A x + b`, checking the input length.
    pub fn try_apply(&self, x: &DVector<f64>) -> Result<DVector<f64>, AffineError> {
        if x.len() != self.domain_dim() {
            return Err(AffineError::DimensionMismatch {
                expected: self.domain_dim(),
                got: x.len(),
            });
        }
        Ok(&self.linear * x + &self.translation)
    }

    /// `A x + b`; panics on a dimension mismatch.
    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        self.try_apply(x).expect("affine map applied to wrong dimension")
    }

    /// Scalar convenience for maps in `Hom(1,1)`.
    pub fn apply1(&self, x: f64) -> f64 {
        assert_eq!(self.domain_dim(), 1);
        assert_eq!(self.codomain_dim(), 1);
        self.linear[(0, 0)] * x + self.translation[0]
    }

    /// `self . inner`, the map `x -> self(inner(x))`.
    pub fn try_compose(&self, inner: &AffineMap) -> Result<AffineMap, AffineError> {
        if self.domain_dim() != inner.codomain_dim() {
            return Err(AffineError::DimensionMismatch {
                expected: self.domain_dim(),
                got: inner.codomain_dim(),
            });
        }
        Ok(AffineMap::new(
            &self.linear * &inner.linear,
            &self.linear * &inner.translation + &self.translation,
        ))
    }

    pub fn compose(&self, inner: &AffineMap) -> AffineMap {
        self.try_compose(inner).expect("composed maps with mismatched dimensions")
    }

    pub fn singular_values(&self) -> Vec<f64> {
        if self.linear.is_empty() {
            return Vec::new();
        }
        let mut sv: Vec<f64> = self
            .linear
            .clone()
            .svd(false, false)
            .singular_values
            .iter()
            .copied()
            .collect();
        sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
        sv
    }

    /// Numerical rank, at [`RANK_TOL`] relative to the largest singular value.
    pub fn rank(&self) -> usize {
        let sv = self.singular_values();
        let largest = sv.first().copied().unwrap_or(0.0);
        if largest == 0.0 {
            return 0;
        }
        sv.iter().filter(|&&s| s > RANK_TOL * largest).count()
    }

    pub fn classify(&self) -> MapClass {
        let (m, n) = (self.domain_dim(), self.codomain_dim());
        let r = self.rank();
        match (r == m, r == n) {
            (true, true) => MapClass::Bijective,
            (true, false) => MapClass::Injective,
            (false, true) => MapClass::Surjective,
            (false, false) => MapClass::Neither,
        }
    }

    /// Condition number of the linear part (largest over smallest singular
    /// value); infinite for rank-deficient maps.
    pub fn condition(&self) -> f64 {
        let sv = self.singular_values();
        match (sv.first(), sv.last()) {
            (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
            _ => f64::INFINITY,
        }
    }

    /// The inverse map of a nonsingular square affine map.
    pub fn invert(&self) -> Result<AffineMap, AffineError> {
        let (m, n) = (self.domain_dim(), self.codomain_dim());
        if m != n {
            return Err(AffineError::NotInvertible {
                domain: m,
                codomain: n,
                reason: "shape",
            });
        }
        let sv = self.singular_values();
        let singular = match (sv.first(), sv.last()) {
            (Some(&hi), Some(&lo)) => lo <= RANK_TOL * hi,
            _ => true,
        };
        if singular {
            return Err(AffineError::NotInvertible {
                domain: m,
                codomain: n,
                reason: "rank",
            });
        }
        let inv = self
            .linear
            .clone()
            .try_inverse()
            .ok_or(AffineError::NotInvertible {
                domain: m,
                codomain: n,
                reason: "rank",
            })?;
        let translation = -(&inv * &self.translation);
        Ok(AffineMap::new(inv, translation))
    }

    /// Affine one-sided inverses.
    ///
    /// For an injective map the `left` branch satisfies `left(a(x)) = x`;
    /// for a surjective map the `right` branch satisfies `a(right(y)) = y`.
    /// Both are built from the Moore-Penrose inverse of the linear part with
    /// the translation chosen so the affine (not just linear) round trip
    /// holds.
    pub fn pseudo_inverses(&self) -> PseudoInverses {
        let class = self.classify();
        let pinv_map = || {
            let sv = self.singular_values();
            let eps = RANK_TOL * sv.first().copied().unwrap_or(1.0);
            let pinv = self
                .linear
                .clone()
                .pseudo_inverse(eps)
                .expect("SVD-based pseudo-inverse");
            let translation = -(&pinv * &self.translation);
            AffineMap::new(pinv, translation)
        };
        PseudoInverses {
            left: matches!(class, MapClass::Injective | MapClass::Bijective)
                .then(&pinv_map),
            right: matches!(class, MapClass::Surjective | MapClass::Bijective)
                .then(&pinv_map),
        }
    }

    /// Kernel basis of the linear part: columns spanning `ker A`.
    pub fn kernel_basis(&self) -> DMatrix<f64> {
        let m = self.domain_dim();
        let r = self.rank();
        if r == m {
            return DMatrix::zeros(m, 0);
        }
        // The thin SVD of a wide matrix has no null-space rows, so take the
        // kernel from the eigenvectors of A^T A with the smallest
        // eigenvalues instead; there are exactly m - rank of them.
        let gram = self.linear.transpose() * &self.linear;
        let eigen = nalgebra::SymmetricEigen::new(gram);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&i, &j| {
            eigen.eigenvalues[i]
                .partial_cmp(&eigen.eigenvalues[j])
                .expect("finite eigenvalues")
        });
        let cols: Vec<DVector<f64>> = order[..m - r]
            .iter()
            .map(|&i| eigen.eigenvectors.column(i).into_owned())
            .collect();
        DMatrix::from_columns(&cols)
    }
}

/// One-sided affine inverses of a map, when its class admits them.
pub struct PseudoInverses {
    pub left: Option<AffineMap>,
    pub right: Option<AffineMap>,
}

fn uniform_vec(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.gen_range(lo..hi))
}

fn uniform_mat(rng: &mut ChaCha8Rng, r: usize, c: usize, lo: f64, hi: f64) -> DMatrix<f64> {
    // Row-major fill so the draw order is independent of the storage layout.
    let mut m = DMatrix::zeros(r, c);
    for i in 0..r {
        for j in 0..c {
            m[(i, j)] = rng.gen_range(lo..hi);
        }
    }
    m
}

fn condition_of(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    let hi = sv.iter().cloned().fold(0.0f64, f64::max);
    let lo = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if lo > 0.0 {
        hi / lo
    } else {
        f64::INFINITY
    }
}

fn random_orthogonal(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<f64> {
    let qr = uniform_mat(rng, d, d, -1.0, 1.0).qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            for i in 0..d {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    if q.determinant() < 0.0 {
        for i in 0..d {
            q[(i, 0)] = -q[(i, 0)];
        }
    }
    q
}

/// Draw a random affine map of the requested family.
///
/// Entries are bounded in `[-2, 2]`; families with a square factor resample
/// until its condition number is at most [`MAX_CONDITION`].
pub fn random_map(
    kind: MapKind,
    m: usize,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Result<AffineMap, AffineError> {
    let consistent = match kind {
        MapKind::Invertible
        | MapKind::Translation
        | MapKind::Scaling
        | MapKind::Rotation
        | MapKind::Shear => m == n,
        MapKind::Injective => m <= n,
        MapKind::Surjective => m >= n,
        MapKind::RankDeficient => m >= 1 && n >= 1,
    };
    if !consistent || m == 0 || n == 0 {
        return Err(AffineError::InconsistentKind { kind, m, n });
    }

    let linear = match kind {
        MapKind::Translation => DMatrix::identity(n, m),
        MapKind::Scaling => {
            DMatrix::from_diagonal(&uniform_vec(rng, m, 0.5, 2.0))
        }
        MapKind::Rotation => random_orthogonal(rng, m),
        MapKind::Shear => loop {
            let mut s = DMatrix::identity(m, m);
            for i in 0..m {
                for j in (i + 1)..m {
                    s[(i, j)] = rng.gen_range(-1.0..1.0);
                }
            }
            if condition_of(&s) <= MAX_CONDITION {
                break s;
            }
        },
        MapKind::Invertible | MapKind::Injective | MapKind::Surjective => loop {
            let c = uniform_mat(rng, n, m, -2.0, 2.0);
            if condition_of(&c) <= MAX_CONDITION {
                break c;
            }
        },
        MapKind::RankDeficient => {
            let r = m.min(n) - 1;
            if r == 0 {
                DMatrix::zeros(n, m)
            } else {
                loop {
                    let b = uniform_mat(rng, n, r, -2.0, 2.0);
                    let c = uniform_mat(rng, r, m, -2.0, 2.0);
                    if condition_of(&b) <= MAX_CONDITION && condition_of(&c) <= MAX_CONDITION {
                        break b * c;
                    }
                }
            }
        }
    };
    let translation = uniform_vec(rng, n, -2.0, 2.0);
    Ok(AffineMap::new(linear, translation))
}

/// The invertible families cycled by the bijective suites.
pub const INVERTIBLE_FAMILIES: [MapKind; 5] = [
    MapKind::Translation,
    MapKind::Scaling,
    MapKind::Rotation,
    MapKind::Shear,
    MapKind::Invertible,
];

/// Draw an invertible map, cycling through the named transformation
/// families by trial index.
pub fn mixed_invertible_map(d: usize, trial: u64, rng: &mut ChaCha8Rng) -> AffineMap {
    let kind = INVERTIBLE_FAMILIES[(trial % INVERTIBLE_FAMILIES.len() as u64) as usize];
    random_map(kind, d, d, rng).expect("square kinds are consistent")
}
