//! Runtime registry of conformance suites.
//!
//! Each suite (quadrature, integrators, interpolation, simplex) is a
//! strategy behind the [`SuiteRunner`] trait, registered by name and
//! selected from configuration. Algorithms inside a suite are likewise
//! looked up by name, so new variants can be registered without touching
//! the harness.

use crate::harness::{EquivarianceReport, HarnessError};
use crate::integrators::suite::IntegratorSuite;
use crate::interpolation::suite::InterpolationSuite;
use crate::quadrature::suite::QuadratureSuite;
use crate::simplex::suite::SimplexSuite;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassFilter {
    Bijective,
    Injective,
    Surjective,
}

impl ClassFilter {
    pub const ALL: [ClassFilter; 3] = [
        ClassFilter::Bijective,
        ClassFilter::Injective,
        ClassFilter::Surjective,
    ];

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "bijective" => Some(ClassFilter::Bijective),
            "injective" => Some(ClassFilter::Injective),
            "surjective" => Some(ClassFilter::Surjective),
            _ => None,
        }
    }
}

/// Configuration for one suite run. Unset fields fall back to per-suite
/// defaults (trials 200; tolerances and dimension lists as documented by
/// each suite).
#[derive(Default)]
pub struct SuiteConfig {
    /// Empty means all classes.
    pub classes: Vec<ClassFilter>,
    /// Override of the per-class dimension pairs; entries inconsistent
    /// with a class (e.g. m > n for injective) are skipped for that class.
    pub dims: Option<Vec<(usize, usize)>>,
    pub trials: Option<u64>,
    pub tolerance: Option<f64>,
    pub seed: u64,
    /// Restrict to the named algorithms; `None` runs each suite's default
    /// roster.
    pub algorithms: Option<Vec<String>>,
}

impl SuiteConfig {
    pub fn seeded(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn trials(&self) -> u64 {
        self.trials.unwrap_or(200)
    }

    pub fn wants_class(&self, class: ClassFilter) -> bool {
        self.classes.is_empty() || self.classes.contains(&class)
    }

    /// True when no class filter was given, i.e. the full default sweep.
    pub fn all_classes(&self) -> bool {
        self.classes.is_empty() || ClassFilter::ALL.iter().all(|c| self.classes.contains(c))
    }

    pub fn wants_algorithm(&self, name: &str) -> bool {
        match &self.algorithms {
            None => true,
            Some(list) => list.iter().any(|n| n == name),
        }
    }

    /// Explicitly requested algorithms that the default roster would skip.
    pub fn algorithm_explicitly_requested(&self, name: &str) -> bool {
        matches!(&self.algorithms, Some(list) if list.iter().any(|n| n == name))
    }

    /// Dimension pairs for a class: the configured list filtered by the
    /// class's consistency predicate, or the given defaults.
    pub fn dims_for(
        &self,
        defaults: &[(usize, usize)],
        consistent: impl Fn(usize, usize) -> bool,
    ) -> Vec<(usize, usize)> {
        match &self.dims {
            None => defaults.to_vec(),
            Some(list) => list
                .iter()
                .copied()
                .filter(|&(m, n)| consistent(m, n))
                .collect(),
        }
    }
}

pub trait SuiteRunner: Send + Sync {
    fn name(&self) -> &'static str;
    fn run(&self, cfg: &SuiteConfig) -> Result<Vec<EquivarianceReport>, HarnessError>;
}

/// Prefix every report label with the suite name.
pub fn prefix_reports(suite: &str, reports: &mut [EquivarianceReport]) {
    for r in reports {
        r.suite = format!("{suite}/{}", r.suite);
    }
}

pub struct Registry {
    runners: Vec<Box<dyn SuiteRunner>>,
}

impl Registry {
    pub fn with_builtin() -> Self {
        Self {
            runners: vec![
                Box::new(QuadratureSuite),
                Box::new(IntegratorSuite),
                Box::new(InterpolationSuite),
                Box::new(SimplexSuite),
            ],
        }
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.runners.iter().map(|r| r.name()).collect()
    }

    pub fn get(&self, name: &str) -> Option<&dyn SuiteRunner> {
        self.runners
            .iter()
            .find(|r| r.name() == name)
            .map(|r| r.as_ref())
    }

    pub fn iter(&self) -> impl Iterator<Item = &dyn SuiteRunner> {
        self.runners.iter().map(|r| r.as_ref())
    }
}
