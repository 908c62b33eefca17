//! The relation harness.
//!
//! Data and computation actions are represented as relations: either graphs
//! (pushforward functions) or sampled related pairs together with a
//! membership residual. The harness checks, at sampled data, that every
//! Data-related pair is mapped by the algorithm family to a Comp-related
//! pair, and aggregates the residuals into a report with counterexample
//! witnesses. The inclusion is checked in exactly that orientation; the
//! converse is never tested.

use crate::affine::{random_map, AffineMap, MapKind};
use crate::rng::RngStream;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("algorithm `{algorithm}` does not support dimension {dim}")]
    UnsupportedDimension { algorithm: String, dim: usize },
    #[error("related-pair generation failed at trial {trial}: {message}")]
    Generation { trial: u64, message: String },
    #[error("action pair has no {side} pushforward (required for {check})")]
    MissingPushforward {
        side: &'static str,
        check: &'static str,
    },
    #[error(transparent)]
    Affine(#[from] crate::affine::AffineError),
}

/// A dimension-indexed algorithm family: for each supported dimension it
/// maps a datum to a computation. Evaluation must be deterministic.
pub trait Algorithm<D, C>: Send + Sync {
    fn name(&self) -> String;
    fn supports_dim(&self, dim: usize) -> bool;
    fn evaluate(&self, dim: usize, datum: &D) -> C;
}

/// A sampled element of a `Data(a)` relation: a low-dimensional datum and a
/// high-dimensional datum related through `via`.
pub struct RelatedPair<D> {
    pub dim_m: usize,
    pub dim_n: usize,
    pub datum_lo: D,
    pub datum_hi: D,
    pub via: AffineMap,
}

type DataPush<D> = Box<dyn Fn(&AffineMap, &D) -> D + Send + Sync>;
type CompPush<C> = Box<dyn Fn(&AffineMap, &C) -> C + Send + Sync>;
type DatumSampler<D> = Box<dyn Fn(usize, &mut ChaCha8Rng) -> D + Send + Sync>;
type MapSampler = Box<dyn Fn(usize, u64, &mut ChaCha8Rng) -> AffineMap + Send + Sync>;
type PairGenerator<D> =
    Box<dyn Fn(&AffineMap, &mut ChaCha8Rng) -> Result<RelatedPair<D>, String> + Send + Sync>;
type MembershipResidual<D> = Box<dyn Fn(&AffineMap, &D, &D) -> f64 + Send + Sync>;
type CompResidual<C> = Box<dyn Fn(&AffineMap, &C, &C) -> f64 + Send + Sync>;
type CompDistance<C> = Box<dyn Fn(&C, &C) -> f64 + Send + Sync>;
type DatumDescriber<D> = Box<dyn Fn(&D) -> String + Send + Sync>;

/// How one suite's functor actions are realized on concrete data.
///
/// `comp_residual(a, c1, c2)` is zero (up to sampling) exactly on members
/// of the `Comp(a)` relation; when `data_pushforward` is present the data
/// action is a graph and the generator produces `(d, pushforward(a, d))`
/// pairs.
pub struct ActionPair<D, C> {
    pub data_pushforward: Option<DataPush<D>>,
    pub comp_pushforward: Option<CompPush<C>>,
    pub sample_datum: DatumSampler<D>,
    pub sample_bijective_map: MapSampler,
    pub data_pair_generator: PairGenerator<D>,
    pub membership_residual: MembershipResidual<D>,
    pub membership_tol: f64,
    pub comp_residual: CompResidual<C>,
    pub comp_distance: Option<CompDistance<C>>,
    pub describe_datum: DatumDescriber<D>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ViolationRecord {
    pub trial_index: u64,
    pub residual: f64,
    pub map_class: String,
    pub witness_summary: String,
}

/// Outcome of a seeded suite run.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EquivarianceReport {
    pub suite: String,
    pub seed: u64,
    pub trials: u64,
    pub tolerance: f64,
    pub max_residual: f64,
    pub violations: Vec<ViolationRecord>,
}

impl EquivarianceReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization")
    }
}

/// A pinned counterexample from a randomized search.
#[derive(Debug, Clone)]
pub struct Witness {
    pub trial_index: u64,
    pub residual: f64,
    pub map: AffineMap,
    pub summary: String,
}

struct Accumulator {
    tolerance: f64,
    max_residual: f64,
    violations: Vec<ViolationRecord>,
}

impl Accumulator {
    fn new(tolerance: f64) -> Self {
        Self {
            tolerance,
            max_residual: 0.0,
            violations: Vec::new(),
        }
    }

    fn record(&mut self, trial: u64, residual: f64, map: &AffineMap, summary: String) {
        if residual > self.max_residual || residual.is_nan() {
            self.max_residual = residual;
        }
        if !(residual <= self.tolerance) {
            self.violations.push(ViolationRecord {
                trial_index: trial,
                residual,
                map_class: map.classify().as_str().to_owned(),
                witness_summary: summary,
            });
        }
    }

    fn finish(self, suite: String, seed: u64, trials: u64) -> EquivarianceReport {
        EquivarianceReport {
            suite,
            seed,
            trials,
            tolerance: self.tolerance,
            max_residual: self.max_residual,
            violations: self.violations,
        }
    }
}

fn summarize_map(a: &AffineMap) -> String {
    let lin: Vec<String> = a
        .linear()
        .row_iter()
        .map(|row| {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.6e}")).collect();
            format!("[{}]", cells.join(", "))
        })
        .collect();
    let tr: Vec<String> = a.translation().iter().map(|v| format!("{v:.6e}")).collect();
    format!(
        "a in Hom({},{}): linear=[{}] translation=[{}]",
        a.domain_dim(),
        a.codomain_dim(),
        lin.join(", "),
        tr.join(", ")
    )
}

fn check_support<D, C>(
    alg: &dyn Algorithm<D, C>,
    dim: usize,
) -> Result<(), HarnessError> {
    if alg.supports_dim(dim) {
        Ok(())
    } else {
        Err(HarnessError::UnsupportedDimension {
            algorithm: alg.name(),
            dim,
        })
    }
}

/// Bijective equivariance within one dimension: per trial an invertible map
/// is drawn (mixing the translation / scaling / rotation / shear / general
/// invertible families), a datum is drawn, and the residual between
/// `Alg(Data(a)(d))` and the `Comp(a)`-image of `Alg(d)` is recorded.
pub fn check_bijective<D, C>(
    alg: &dyn Algorithm<D, C>,
    actions: &ActionPair<D, C>,
    dim: usize,
    trials: u64,
    tol: f64,
    seed: u64,
) -> Result<EquivarianceReport, HarnessError> {
    check_support(alg, dim)?;
    let push = actions
        .data_pushforward
        .as_ref()
        .ok_or(HarnessError::MissingPushforward {
            side: "data",
            check: "check_bijective",
        })?;
    let stream = RngStream::new(seed);
    let mut acc = Accumulator::new(tol);
    for trial in 0..trials {
        let mut rng = stream.trial(trial);
        let a = (actions.sample_bijective_map)(dim, trial, &mut rng);
        let d0 = (actions.sample_datum)(dim, &mut rng);
        let d1 = push(&a, &d0);
        let c0 = alg.evaluate(dim, &d0);
        let c1 = alg.evaluate(dim, &d1);
        let residual = (actions.comp_residual)(&a, &c0, &c1);
        let summary = format!("{}; {}", summarize_map(&a), (actions.describe_datum)(&d0));
        acc.record(trial, residual, &a, summary);
    }
    Ok(acc.finish(
        format!("{}/bijective/d={dim}", alg.name()),
        seed,
        trials,
    ))
}

fn weak_trial<D, C>(
    alg: &dyn Algorithm<D, C>,
    actions: &ActionPair<D, C>,
    a: &AffineMap,
    trial: u64,
    rng: &mut ChaCha8Rng,
    acc: &mut Accumulator,
) -> Result<(), HarnessError> {
    let pair = (actions.data_pair_generator)(a, rng).map_err(|message| {
        HarnessError::Generation { trial, message }
    })?;
    // Re-verify the generator postcondition before computing the residual:
    // the harness never reports a violation for a pair outside Data(a).
    let membership = (actions.membership_residual)(a, &pair.datum_lo, &pair.datum_hi);
    if !(membership <= actions.membership_tol) {
        return Err(HarnessError::Generation {
            trial,
            message: format!(
                "generated pair fails Data(a) membership: residual {membership:.3e} > {:.3e}",
                actions.membership_tol
            ),
        });
    }
    let c1 = alg.evaluate(pair.dim_m, &pair.datum_lo);
    let c2 = alg.evaluate(pair.dim_n, &pair.datum_hi);
    let residual = (actions.comp_residual)(a, &c1, &c2);
    let summary = format!(
        "{}; {}",
        summarize_map(a),
        (actions.describe_datum)(&pair.datum_lo)
    );
    acc.record(trial, residual, a, summary);
    Ok(())
}

/// Weak naturality at a fixed affine map: every generated `Data(a)`-related
/// pair must map to a `Comp(a)`-related pair.
pub fn check_weak_naturality<D, C>(
    alg: &dyn Algorithm<D, C>,
    actions: &ActionPair<D, C>,
    a: &AffineMap,
    trials: u64,
    tol: f64,
    seed: u64,
) -> Result<EquivarianceReport, HarnessError> {
    check_support(alg, a.domain_dim())?;
    check_support(alg, a.codomain_dim())?;
    let stream = RngStream::new(seed);
    let mut acc = Accumulator::new(tol);
    for trial in 0..trials {
        let mut rng = stream.trial(trial);
        weak_trial(alg, actions, a, trial, &mut rng, &mut acc)?;
    }
    Ok(acc.finish(
        format!(
            "{}/weak/{}({},{})",
            alg.name(),
            a.classify(),
            a.domain_dim(),
            a.codomain_dim()
        ),
        seed,
        trials,
    ))
}

/// Weak naturality over a whole map family: a fresh map of the requested
/// kind is drawn per trial.
pub fn check_weak_class<D, C>(
    alg: &dyn Algorithm<D, C>,
    actions: &ActionPair<D, C>,
    kind: MapKind,
    dims: (usize, usize),
    trials: u64,
    tol: f64,
    seed: u64,
) -> Result<EquivarianceReport, HarnessError> {
    let (m, n) = dims;
    check_support(alg, m)?;
    check_support(alg, n)?;
    let stream = RngStream::new(seed);
    let mut acc = Accumulator::new(tol);
    for trial in 0..trials {
        let mut rng = stream.trial(trial);
        let a = random_map(kind, m, n, &mut rng)?;
        weak_trial(alg, actions, &a, trial, &mut rng, &mut acc)?;
    }
    Ok(acc.finish(
        format!("{}/{kind:?}/({m},{n})", alg.name()).to_lowercase(),
        seed,
        trials,
    ))
}

fn exact_trial<D, C>(
    alg: &dyn Algorithm<D, C>,
    actions: &ActionPair<D, C>,
    a: &AffineMap,
    trial: u64,
    rng: &mut ChaCha8Rng,
    acc: &mut Accumulator,
) -> Result<(), HarnessError> {
    let data_push = actions
        .data_pushforward
        .as_ref()
        .ok_or(HarnessError::MissingPushforward {
            side: "data",
            check: "check_exact_naturality",
        })?;
    let comp_push = actions
        .comp_pushforward
        .as_ref()
        .ok_or(HarnessError::MissingPushforward {
            side: "comp",
            check: "check_exact_naturality",
        })?;
    let distance = actions
        .comp_distance
        .as_ref()
        .ok_or(HarnessError::MissingPushforward {
            side: "comp distance",
            check: "check_exact_naturality",
        })?;
    let d0 = (actions.sample_datum)(a.domain_dim(), rng);
    let d1 = data_push(a, &d0);
    let c0 = alg.evaluate(a.domain_dim(), &d0);
    let c1 = alg.evaluate(a.codomain_dim(), &d1);
    // Both composite orders: the inclusion residual, and the distance of
    // Comp(a)(Alg(d)) from Alg(Data(a)(d)).
    let inclusion = (actions.comp_residual)(a, &c0, &c1);
    let equality = distance(&comp_push(a, &c0), &c1);
    let residual = inclusion.max(equality);
    let summary = format!("{}; {}", summarize_map(a), (actions.describe_datum)(&d0));
    acc.record(trial, residual, a, summary);
    Ok(())
}

/// Exact naturality (equality of graphs, not just inclusion) at a fixed
/// affine map; requires both the data and computation actions to be graphs.
pub fn check_exact_naturality<D, C>(
    alg: &dyn Algorithm<D, C>,
    actions: &ActionPair<D, C>,
    a: &AffineMap,
    trials: u64,
    tol: f64,
    seed: u64,
) -> Result<EquivarianceReport, HarnessError> {
    check_support(alg, a.domain_dim())?;
    check_support(alg, a.codomain_dim())?;
    let stream = RngStream::new(seed);
    let mut acc = Accumulator::new(tol);
    for trial in 0..trials {
        let mut rng = stream.trial(trial);
        exact_trial(alg, actions, a, trial, &mut rng, &mut acc)?;
    }
    Ok(acc.finish(
        format!(
            "{}/exact/{}({},{})",
            alg.name(),
            a.classify(),
            a.domain_dim(),
            a.codomain_dim()
        ),
        seed,
        trials,
    ))
}

/// Exact naturality over a map family drawn per trial.
pub fn check_exact_class<D, C>(
    alg: &dyn Algorithm<D, C>,
    actions: &ActionPair<D, C>,
    kind: MapKind,
    dims: (usize, usize),
    trials: u64,
    tol: f64,
    seed: u64,
) -> Result<EquivarianceReport, HarnessError> {
    let (m, n) = dims;
    check_support(alg, m)?;
    check_support(alg, n)?;
    let stream = RngStream::new(seed);
    let mut acc = Accumulator::new(tol);
    for trial in 0..trials {
        let mut rng = stream.trial(trial);
        let a = random_map(kind, m, n, &mut rng)?;
        exact_trial(alg, actions, &a, trial, &mut rng, &mut acc)?;
    }
    Ok(acc.finish(
        format!("{}/exact-{kind:?}/({m},{n})", alg.name()).to_lowercase(),
        seed,
        trials,
    ))
}

/// Randomized search for a weak-naturality counterexample.
///
/// Runs up to `budget` trials over maps of the given kind; returns the
/// first trial whose residual exceeds `tol * 100` (the pinning threshold
/// separating structural failure from float noise), or `None`.
pub fn search_counterexample<D, C>(
    alg: &dyn Algorithm<D, C>,
    actions: &ActionPair<D, C>,
    kind: MapKind,
    dims: (usize, usize),
    budget: u64,
    tol: f64,
    seed: u64,
) -> Result<Option<Witness>, HarnessError> {
    let (m, n) = dims;
    check_support(alg, m)?;
    check_support(alg, n)?;
    let threshold = tol * 100.0;
    let stream = RngStream::new(seed);
    for trial in 0..budget {
        let mut rng = stream.trial(trial);
        let a = random_map(kind, m, n, &mut rng)?;
        let pair = (actions.data_pair_generator)(&a, &mut rng)
            .map_err(|message| HarnessError::Generation { trial, message })?;
        let membership = (actions.membership_residual)(&a, &pair.datum_lo, &pair.datum_hi);
        if !(membership <= actions.membership_tol) {
            return Err(HarnessError::Generation {
                trial,
                message: format!("pair outside Data(a): membership residual {membership:.3e}"),
            });
        }
        let c1 = alg.evaluate(pair.dim_m, &pair.datum_lo);
        let c2 = alg.evaluate(pair.dim_n, &pair.datum_hi);
        let residual = (actions.comp_residual)(&a, &c1, &c2);
        if residual > threshold {
            return Ok(Some(Witness {
                trial_index: trial,
                residual,
                map: a.clone(),
                summary: format!(
                    "{}; {}",
                    summarize_map(&a),
                    (actions.describe_datum)(&pair.datum_lo)
                ),
            }));
        }
    }
    Ok(None)
}
