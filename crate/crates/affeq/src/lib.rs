//! Conformance harness for affine equivariance of numerical algorithms.
//!
//! The harness checks whether dimension-indexed families of algorithms
//! (quadrature rules, one-step ODE integrators, interpolation schemes, the
//! Nelder-Mead simplex method) commute with affine maps between spaces of
//! arbitrary dimensions: bijective equivariance within a fixed dimension,
//! and the cross-dimension injective/surjective relations checked as
//! sampled relation-membership residuals.

pub mod affine;
pub mod harness;
pub mod integrators;
pub mod interpolation;
pub mod quadrature;
pub mod registry;
pub mod rng;
pub mod simplex;
