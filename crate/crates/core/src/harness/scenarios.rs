//! Type-I error, coverage and unit-expectation experiments.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Mutex;

use rand::Rng;
use serde::Serialize;

use super::{replicate, MeanEstimate, RateEstimate, SimConfig};
use crate::data::{DataSplit, Dataset};
use crate::em::EmConfig;
use crate::error::{Error, Result};
use crate::family::{Constraint, Family, Params};
use crate::split::{
    crossfit_lrt, log_split_statistic, powered_split_lrt, relaxed_split_lrt, split_lrt, universal_lrt,
    universal_set_contains, Estimator, Mle, SplitScheme, TestOutcome,
};

/// A data-generating distribution lying in the null of a test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NullScenario {
    /// `H0: μ = 0` for `N(μ, 1)`, data from `N(0, 1)`.
    GaussianSimple,
    /// `H0: μ ≤ 0` for `N(μ, 1)`, data from the boundary `N(0, 1)`.
    GaussianComposite,
    /// One unit-scale Gaussian against a two-component unit-scale mixture,
    /// data from `N(0, 1)`.
    Mixture,
    /// `H0: θ = 1` for `Uniform(0, θ]`, data from `Uniform(0, 1]`.
    Uniform,
}

impl NullScenario {
    pub const ALL: [NullScenario; 4] =
        [NullScenario::GaussianSimple, NullScenario::GaussianComposite, NullScenario::Mixture, NullScenario::Uniform];

    pub fn name(&self) -> &'static str {
        match self {
            NullScenario::GaussianSimple => "gaussian-simple",
            NullScenario::GaussianComposite => "gaussian-composite",
            NullScenario::Mixture => "mixture",
            NullScenario::Uniform => "uniform",
        }
    }

    pub fn truth(&self) -> Params {
        match self {
            NullScenario::Uniform => Params::UniformScale { theta: 1.0 },
            _ => Params::Gaussian { mean: 0.0, sigma: 1.0 },
        }
    }

    pub fn null(&self) -> Mle {
        match self {
            NullScenario::GaussianSimple => Mle::constrained(
                Family::Gaussian { sigma: 1.0 },
                Constraint::FixedPoint(Params::Gaussian { mean: 0.0, sigma: 1.0 }),
            ),
            NullScenario::GaussianComposite => {
                Mle::constrained(Family::Gaussian { sigma: 1.0 }, Constraint::MeanAtMost(0.0))
            }
            NullScenario::Mixture => Mle::full(Family::unit_mixture(1)),
            NullScenario::Uniform => {
                Mle::constrained(Family::UniformScale, Constraint::FixedPoint(Params::UniformScale { theta: 1.0 }))
            }
        }
    }

    pub fn alt(&self, em: &EmConfig) -> Mle {
        let family = match self {
            NullScenario::GaussianSimple | NullScenario::GaussianComposite => Family::Gaussian { sigma: 1.0 },
            NullScenario::Mixture => Family::unit_mixture(2),
            NullScenario::Uniform => Family::UniformScale,
        };
        Mle::full(family).with_em(em.clone())
    }
}

impl FromStr for NullScenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        NullScenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown scenario `{s}`")))
    }
}

/// Which universal test to run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum LrtVariant {
    Split,
    Crossfit,
    KFold(usize),
    /// `b` random K-fold partitions.
    Subsample {
        k: usize,
        b: usize,
    },
    /// Split test on the likelihood raised to `η`.
    Powered(f64),
    /// Null maximum replaced by the maximum over the alternative model on
    /// `D0`, which contains the null and so bounds its maximum.
    Relaxed,
}

impl LrtVariant {
    /// The five variants checked by the type-I acceptance run.
    pub fn standard() -> Vec<LrtVariant> {
        vec![
            LrtVariant::Split,
            LrtVariant::Crossfit,
            LrtVariant::KFold(5),
            LrtVariant::Powered(0.5),
            LrtVariant::Relaxed,
        ]
    }

    pub fn run<R: Rng + ?Sized>(
        &self,
        data: &Dataset,
        split: &DataSplit,
        null: &Mle,
        alt: &dyn Estimator,
        alpha: f64,
        rng: &mut R,
    ) -> Result<TestOutcome> {
        match *self {
            LrtVariant::Split => split_lrt(data, split, null, alt, alpha),
            LrtVariant::Crossfit => crossfit_lrt(data, split, null, alt, alpha),
            LrtVariant::KFold(k) => universal_lrt(data, split, &SplitScheme::KFold(k), null, alt, 1.0, alpha),
            LrtVariant::Subsample { k, b } => {
                let scheme = SplitScheme::Subsample { k, b, seed: rng.random() };
                universal_lrt(data, split, &scheme, null, alt, 1.0, alpha)
            }
            LrtVariant::Powered(eta) => powered_split_lrt(data, split, null, alt, eta, alpha),
            LrtVariant::Relaxed => {
                let null_max = null.estimate(data, &split.d0)?.log_likelihood(data, &split.d0)?;
                let alt_max = alt.estimate(data, &split.d0)?.log_likelihood(data, &split.d0)?;
                relaxed_split_lrt(data, split, null_max.max(alt_max), alt, alpha)
            }
        }
    }
}

impl fmt::Display for LrtVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LrtVariant::Split => write!(f, "split"),
            LrtVariant::Crossfit => write!(f, "crossfit"),
            LrtVariant::KFold(k) => write!(f, "kfold:{k}"),
            LrtVariant::Subsample { k, b } => write!(f, "subsample:{k}:{b}"),
            LrtVariant::Powered(eta) => write!(f, "powered:{eta}"),
            LrtVariant::Relaxed => write!(f, "relaxed"),
        }
    }
}

impl FromStr for LrtVariant {
    type Err = Error;

    /// Parses `split`, `crossfit`, `kfold:K`, `subsample:K:B`, `powered:ETA`
    /// or `relaxed`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::invalid(format!("unknown test variant `{s}`"));
        let parts: Vec<&str> = s.split(':').collect();
        let int = |p: &str| p.parse::<usize>().map_err(|_| bad());
        match parts.as_slice() {
            ["split"] => Ok(LrtVariant::Split),
            ["crossfit"] => Ok(LrtVariant::Crossfit),
            ["relaxed"] => Ok(LrtVariant::Relaxed),
            ["kfold", k] => Ok(LrtVariant::KFold(int(k)?)),
            ["subsample", k, b] => Ok(LrtVariant::Subsample { k: int(k)?, b: int(b)? }),
            ["powered", eta] => Ok(LrtVariant::Powered(eta.parse().map_err(|_| bad())?)),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariantRate {
    pub scenario: NullScenario,
    pub variant: LrtVariant,
    pub rejection: RateEstimate,
}

/// Rejection rate of each variant on data drawn from `scenario`'s truth.
/// All variants see the same datasets.
pub fn simulate_type1(
    scenario: NullScenario,
    variants: &[LrtVariant],
    cfg: &SimConfig,
    em: &EmConfig,
) -> Result<Vec<VariantRate>> {
    cfg.validate()?;
    let truth = scenario.truth();
    let (null, alt) = (scenario.null(), scenario.alt(em));
    let split = DataSplit::first_half(cfg.n)?;
    let rejections = replicate(cfg.reps, cfg.seed, cfg.threads, |rng| {
        let data = truth.sample(cfg.n, rng)?;
        // Variants refit the alternative on the same index sets; mixture fits dominate the cost.
        let alt = Memoized::new(&alt);
        variants
            .iter()
            .map(|v| Ok(v.run(&data, &split, &null, &alt, cfg.alpha, rng)?.reject))
            .collect::<Result<Vec<bool>>>()
    })?;
    Ok(variants
        .iter()
        .enumerate()
        .map(|(i, &variant)| VariantRate {
            scenario,
            variant,
            rejection: RateEstimate::from_hits(rejections.iter().filter(|r| r[i]).count(), cfg.reps),
        })
        .collect())
}

/// Caches fits by index set for one dataset.
struct Memoized<'a> {
    inner: &'a Mle,
    fits: Mutex<HashMap<Vec<usize>, Params>>,
}

impl<'a> Memoized<'a> {
    fn new(inner: &'a Mle) -> Self {
        Self { inner, fits: Mutex::new(HashMap::new()) }
    }
}

impl Estimator for Memoized<'_> {
    fn estimate(&self, data: &Dataset, idx: &[usize]) -> Result<Params> {
        if let Some(p) = self.fits.lock().unwrap().get(idx) {
            return Ok(p.clone());
        }
        let p = self.inner.estimate(data, idx)?;
        self.fits.lock().unwrap().insert(idx.to_vec(), p.clone());
        Ok(p)
    }
}

/// Families for the coverage experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CoverageFamily {
    /// `N(θ, 1)` with `θ* = 0`.
    Gaussian,
    /// `Uniform(0, θ]` with `θ* = 1`.
    Uniform,
}

impl CoverageFamily {
    fn family(&self) -> Family {
        match self {
            CoverageFamily::Gaussian => Family::Gaussian { sigma: 1.0 },
            CoverageFamily::Uniform => Family::UniformScale,
        }
    }

    fn truth(&self) -> Params {
        match self {
            CoverageFamily::Gaussian => Params::Gaussian { mean: 0.0, sigma: 1.0 },
            CoverageFamily::Uniform => Params::UniformScale { theta: 1.0 },
        }
    }
}

/// Frequency with which the universal set contains the true parameter.
pub fn simulate_coverage(family: CoverageFamily, scheme: &SplitScheme, cfg: &SimConfig) -> Result<RateEstimate> {
    cfg.validate()?;
    let truth = family.truth();
    let estimator = Mle::full(family.family());
    let split = DataSplit::first_half(cfg.n)?;
    let covered = replicate(cfg.reps, cfg.seed, cfg.threads, |rng| {
        let data = truth.sample(cfg.n, rng)?;
        universal_set_contains(&truth, &data, &split, &estimator, cfg.alpha, scheme)
    })?;
    Ok(RateEstimate::from_flags(&covered))
}

/// Sample mean of the split statistic `T(θ*)` for `N(θ, 1)` data, `θ* = 0`.
/// Its expectation is exactly one.
pub fn expectation_bound(cfg: &SimConfig) -> Result<MeanEstimate> {
    cfg.validate()?;
    let truth = Params::Gaussian { mean: 0.0, sigma: 1.0 };
    let family = Family::Gaussian { sigma: 1.0 };
    let split = DataSplit::first_half(cfg.n)?;
    let values = replicate(cfg.reps, cfg.seed, cfg.threads, |rng| {
        let data = truth.sample(cfg.n, rng)?;
        let theta1 = family.fit(&data, &split.d1, &Constraint::Full)?;
        Ok(log_split_statistic(&truth, &theta1, &data, &split.d0)?.exp())
    })?;
    Ok(MeanEstimate::from_values(&values))
}
