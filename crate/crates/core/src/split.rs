//! Split-sample likelihood-ratio inference.
//!
//! For an estimate `θ̂₁` fit on `D1`, the split statistic
//! `T(θ) = L₀(θ̂₁) / L₀(θ)` evaluated on `D0` satisfies `E_θ*[T(θ*)] ≤ 1`, so
//! `{θ : T(θ) ≤ 1/α}` is a finite-sample `1 − α` confidence set and replacing
//! `L₀(θ)` by the null maximum gives a level-`α` test. Averages of such
//! statistics (crossfit, K-fold, repeated subsampling) keep the same bound
//! whatever their dependence. Everything here is computed in log space.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::data::{DataSplit, Dataset};
use crate::em::EmConfig;
use crate::error::{check_alpha, Error, Result};
use crate::family::{Constraint, Family, Params, ProfileTarget};
use crate::numeric::log_mean_exp;

/// Result of a universal test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestOutcome {
    /// Log of the (possibly averaged) likelihood-ratio statistic.
    pub log_statistic: f64,
    /// `ln(1/α)`.
    pub log_threshold: f64,
    pub reject: bool,
    /// `min(1, 1/statistic)`, a valid p-value by Markov's inequality.
    pub p_bound: f64,
}

impl TestOutcome {
    pub fn new(log_statistic: f64, alpha: f64) -> Self {
        let log_threshold = (1.0 / alpha).ln();
        Self {
            log_statistic,
            log_threshold,
            reject: log_statistic > log_threshold,
            p_bound: (-log_statistic).exp().min(1.0),
        }
    }
}

/// Anything that maps a subsample to a parameter estimate. `θ̂₁` may be any
/// function of `D1`: an MLE, a Bayes estimate, a robust estimate.
pub trait Estimator: Sync {
    fn estimate(&self, data: &Dataset, idx: &[usize]) -> Result<Params>;
}

impl<F> Estimator for F
where
    F: Fn(&Dataset, &[usize]) -> Result<Params> + Sync,
{
    fn estimate(&self, data: &Dataset, idx: &[usize]) -> Result<Params> {
        self(data, idx)
    }
}

/// (Constrained) maximum-likelihood estimator. With a constraint it
/// describes a null hypothesis `Θ₀`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mle {
    pub family: Family,
    pub constraint: Constraint,
    pub em: EmConfig,
}

impl Mle {
    pub fn full(family: Family) -> Self {
        Self { family, constraint: Constraint::Full, em: EmConfig::default() }
    }

    pub fn constrained(family: Family, constraint: Constraint) -> Self {
        Self { family, constraint, em: EmConfig::default() }
    }

    pub fn with_em(mut self, em: EmConfig) -> Self {
        self.em = em;
        self
    }
}

impl Estimator for Mle {
    fn estimate(&self, data: &Dataset, idx: &[usize]) -> Result<Params> {
        self.family.fit_with(data, idx, &self.constraint, &self.em)
    }
}

/// How the sample is divided into evaluation and estimation parts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SplitScheme {
    SingleSplit,
    /// Average of the split statistic and its role-swapped twin.
    Crossfit,
    /// K folds of the split's indices (in split order); each fold is evaluated
    /// against an estimate fit on the other `K − 1`.
    KFold(usize),
    /// `b` independent random K-fold partitions drawn from `seed`.
    Subsample {
        k: usize,
        b: usize,
        seed: u64,
    },
}

/// One evaluation/estimation pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub eval: Vec<usize>,
    pub fit: Vec<usize>,
}

impl SplitScheme {
    pub fn folds(&self, split: &DataSplit) -> Result<Vec<Fold>> {
        match *self {
            SplitScheme::SingleSplit => Ok(vec![Fold { eval: split.d0.clone(), fit: split.d1.clone() }]),
            SplitScheme::Crossfit => Ok(vec![
                Fold { eval: split.d0.clone(), fit: split.d1.clone() },
                Fold { eval: split.d1.clone(), fit: split.d0.clone() },
            ]),
            SplitScheme::KFold(k) => {
                let idx = split.indices();
                check_folds(k, idx.len())?;
                Ok(kfold(&idx, k))
            }
            SplitScheme::Subsample { k, b, seed } => {
                let mut idx = split.indices();
                check_folds(k, idx.len())?;
                if b == 0 {
                    return Err(Error::invalid("subsampling needs at least one repetition"));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut folds = Vec::with_capacity(k * b);
                for _ in 0..b {
                    idx.shuffle(&mut rng);
                    folds.extend(kfold(&idx, k));
                }
                Ok(folds)
            }
        }
    }
}

fn check_folds(k: usize, n: usize) -> Result<()> {
    if k < 2 || k > n {
        return Err(Error::invalid(format!("fold count must satisfy 2 <= K <= n = {n}, got {k}")));
    }
    Ok(())
}

fn kfold(idx: &[usize], k: usize) -> Vec<Fold> {
    let n = idx.len();
    let bounds: Vec<usize> = (0..=k).map(|j| j * n / k).collect();
    (0..k)
        .map(|j| {
            let (a, b) = (bounds[j], bounds[j + 1]);
            let fit = idx[..a].iter().chain(&idx[b..]).copied().collect();
            Fold { eval: idx[a..b].to_vec(), fit }
        })
        .collect()
}

/// `log(num) − log(den)` over extended reals. A vanishing numerator gives −∞,
/// a vanishing denominator +∞; both vanishing is an error.
pub fn log_ratio(log_num: f64, log_den: f64) -> Result<f64> {
    match (log_num == f64::NEG_INFINITY, log_den == f64::NEG_INFINITY) {
        (true, true) => Err(Error::DegenerateStatistic("numerator and denominator likelihoods are both zero".into())),
        (true, false) => Ok(f64::NEG_INFINITY),
        (false, true) => Ok(f64::INFINITY),
        (false, false) => Ok(log_num - log_den),
    }
}

/// `log T(θ) = log L₀(θ̂₁) − log L₀(θ)` on `d0`.
pub fn log_split_statistic(theta: &Params, theta1: &Params, data: &Dataset, d0: &[usize]) -> Result<f64> {
    log_ratio(theta1.log_likelihood(data, d0)?, theta.log_likelihood(data, d0)?)
}

/// `η · log T(θ)`: the split statistic of the powered likelihood `L^η`.
pub fn powered_log_statistic(eta: f64, theta: &Params, theta1: &Params, data: &Dataset, d0: &[usize]) -> Result<f64> {
    check_eta(eta)?;
    Ok(scale_log(eta, log_split_statistic(theta, theta1, data, d0)?))
}

fn check_eta(eta: f64) -> Result<()> {
    if eta > 0.0 && eta <= 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("power must lie in (0, 1], got {eta}")))
    }
}

fn scale_log(eta: f64, x: f64) -> f64 {
    if x.is_infinite() {
        x
    } else {
        eta * x
    }
}

/// Log of the arithmetic mean of the statistics whose logs are `log_terms`.
pub fn averaged_log_statistic(log_terms: &[f64]) -> Result<f64> {
    if log_terms.is_empty() {
        return Err(Error::invalid("cannot average an empty list of statistics"));
    }
    Ok(log_mean_exp(log_terms))
}

/// Combines per-fold log statistics according to the scheme.
fn combine(scheme: &SplitScheme, terms: &[f64]) -> Result<f64> {
    if matches!(scheme, SplitScheme::Crossfit) && terms.iter().all(|&t| t == f64::NEG_INFINITY) {
        return Err(Error::DegenerateStatistic("both crossfit statistics are zero".into()));
    }
    averaged_log_statistic(terms)
}

/// Log of the scheme-averaged split statistic `T̄(θ)`.
pub fn universal_log_statistic(
    theta: &Params,
    data: &Dataset,
    split: &DataSplit,
    estimator: &dyn Estimator,
    scheme: &SplitScheme,
) -> Result<f64> {
    let terms = scheme
        .folds(split)?
        .iter()
        .map(|fold| {
            let theta1 = estimator.estimate(data, &fold.fit)?;
            log_split_statistic(theta, &theta1, data, &fold.eval)
        })
        .collect::<Result<Vec<_>>>()?;
    combine(scheme, &terms)
}

/// Membership of `θ` in the universal confidence set `{θ : T̄(θ) ≤ 1/α}`.
pub fn universal_set_contains(
    theta: &Params,
    data: &Dataset,
    split: &DataSplit,
    estimator: &dyn Estimator,
    alpha: f64,
    scheme: &SplitScheme,
) -> Result<bool> {
    check_alpha(alpha)?;
    Ok(universal_log_statistic(theta, data, split, estimator, scheme)? <= (1.0 / alpha).ln())
}

/// Universal LRT under any scheme: each fold contributes
/// `η · [log L_eval(θ̂₁) − log L_eval(θ̂₀)]` with `θ̂₀` the null MLE on the
/// evaluation part and `θ̂₁ = alt(fit part)`.
pub fn universal_lrt(
    data: &Dataset,
    split: &DataSplit,
    scheme: &SplitScheme,
    null: &Mle,
    alt: &dyn Estimator,
    eta: f64,
    alpha: f64,
) -> Result<TestOutcome> {
    check_alpha(alpha)?;
    check_eta(eta)?;
    let terms = scheme
        .folds(split)?
        .iter()
        .map(|fold| {
            let theta1 = alt.estimate(data, &fold.fit)?;
            let theta0 = null.estimate(data, &fold.eval)?;
            let t = log_ratio(theta1.log_likelihood(data, &fold.eval)?, theta0.log_likelihood(data, &fold.eval)?)?;
            Ok(scale_log(eta, t))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TestOutcome::new(combine(scheme, &terms)?, alpha))
}

/// Split LRT: reject when `U_n = L₀(θ̂₁)/L₀(θ̂₀) > 1/α`.
pub fn split_lrt(
    data: &Dataset,
    split: &DataSplit,
    null: &Mle,
    alt: &dyn Estimator,
    alpha: f64,
) -> Result<TestOutcome> {
    universal_lrt(data, split, &SplitScheme::SingleSplit, null, alt, 1.0, alpha)
}

/// Crossfit LRT: reject when `W_n = (U_n + U_n^swap)/2 > 1/α`.
pub fn crossfit_lrt(
    data: &Dataset,
    split: &DataSplit,
    null: &Mle,
    alt: &dyn Estimator,
    alpha: f64,
) -> Result<TestOutcome> {
    universal_lrt(data, split, &SplitScheme::Crossfit, null, alt, 1.0, alpha)
}

/// Split LRT on the powered likelihood `L^η`, `0 < η ≤ 1`.
pub fn powered_split_lrt(
    data: &Dataset,
    split: &DataSplit,
    null: &Mle,
    alt: &dyn Estimator,
    eta: f64,
    alpha: f64,
) -> Result<TestOutcome> {
    universal_lrt(data, split, &SplitScheme::SingleSplit, null, alt, eta, alpha)
}

/// Split LRT with the null maximum replaced by an upper bound.
///
/// The caller guarantees `log_f0_max ≥ max_{θ∈Θ₀} log L₀(θ)`; the statistic
/// `log L₀(θ̂₁) − log_f0_max` is then never larger than `log U_n`.
pub fn relaxed_split_lrt(
    data: &Dataset,
    split: &DataSplit,
    log_f0_max: f64,
    alt: &dyn Estimator,
    alpha: f64,
) -> Result<TestOutcome> {
    check_alpha(alpha)?;
    if log_f0_max.is_nan() {
        return Err(Error::invalid("relaxed null bound is NaN"));
    }
    let theta1 = alt.estimate(data, &split.d1)?;
    let log_t = log_ratio(theta1.log_likelihood(data, &split.d0)?, log_f0_max)?;
    Ok(TestOutcome::new(log_t, alpha))
}

/// `log L₀†(ψ) = sup_{θ : g(θ) = ψ} log L₀(θ)` on `idx`.
pub fn profile_log_likelihood(
    family: &Family,
    target: ProfileTarget,
    psi: f64,
    data: &Dataset,
    idx: &[usize],
) -> Result<f64> {
    let theta = family.fit(data, idx, &Constraint::FixedValue { target, value: psi })?;
    theta.log_likelihood(data, idx)
}

/// Membership of `ψ` in the profile set `{ψ : L₀(θ̂₁)/L₀†(ψ) ≤ 1/α}`.
pub fn profile_set_contains(
    psi: f64,
    target: ProfileTarget,
    family: &Family,
    data: &Dataset,
    split: &DataSplit,
    estimator: &dyn Estimator,
    alpha: f64,
) -> Result<bool> {
    check_alpha(alpha)?;
    let theta1 = estimator.estimate(data, &split.d1)?;
    let num = theta1.log_likelihood(data, &split.d0)?;
    let den = profile_log_likelihood(family, target, psi, data, &split.d0)?;
    Ok(log_ratio(num, den)? <= (1.0 / alpha).ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo <= hi {
            Ok(Self { lo, hi })
        } else {
            Err(Error::invalid(format!("interval endpoints out of order: [{lo}, {hi}]")))
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Closed-form universal set for `N_d(θ, I_d)` with `θ̂₁ = Ȳ₁`:
/// the ball `‖θ − Ȳ₀‖² ≤ (2/m) ln(1/α) + ‖Ȳ₀ − Ȳ₁‖²` for halves of size `m`
/// (total sample size `n = 2m`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaussianRegion {
    pub center: Vec<f64>,
    pub squared_radius: f64,
}

impl GaussianRegion {
    pub fn contains(&self, theta: &[f64]) -> bool {
        squared_distance(theta, &self.center) <= self.squared_radius
    }
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn check_positive_alpha(alpha: f64, max: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= max {
        Ok(())
    } else {
        Err(Error::invalid(format!("alpha must lie in (0, {max}], got {alpha}")))
    }
}

pub fn gaussian_region(data: &Dataset, split: &DataSplit, alpha: f64) -> Result<GaussianRegion> {
    check_positive_alpha(alpha, 1.0)?;
    if !split.is_balanced() {
        return Err(Error::invalid(format!(
            "closed-form region needs equal halves, got {} and {}",
            split.d0.len(),
            split.d1.len()
        )));
    }
    let family = Family::MvnIdentity { d: data.dim() };
    let mean_of = |idx: &[usize]| -> Result<Vec<f64>> {
        match family.fit(data, idx, &Constraint::Full)? {
            Params::MvnIdentity { mean } => Ok(mean),
            _ => unreachable!(),
        }
    };
    let y0 = mean_of(&split.d0)?;
    let y1 = mean_of(&split.d1)?;
    let m = split.d0.len() as f64;
    let squared_radius = 2.0 / m * (1.0 / alpha).ln() + squared_distance(&y0, &y1);
    Ok(GaussianRegion { center: y0, squared_radius })
}

/// Both readings of the uniform crossfit interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UniformCrossfitInterval {
    /// `[θ̂_small, θ̂_large (2/α)^{1/n}]` with `θ̂_small ≤ θ̂_large` the two half-maxima.
    pub literal: Interval,
    /// `[max of all data, θ̂_large (2/α)^{1/n}]`: the part with positive likelihood.
    pub support_constrained: Interval,
}

fn positive_maximum(data: &Dataset, idx: &[usize]) -> Result<f64> {
    let ys = data.scalars_at(idx)?;
    if ys.iter().any(|&y| y <= 0.0) {
        return Err(Error::invalid("uniform-scale observations must be positive"));
    }
    Ok(ys.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

/// Crossfit interval for `Uniform(0, θ]` from halves of `n` points each.
/// Valid for `0 < α ≤ 2`.
pub fn uniform_crossfit_interval(data: &Dataset, split: &DataSplit, alpha: f64) -> Result<UniformCrossfitInterval> {
    check_positive_alpha(alpha, 2.0)?;
    if !split.is_balanced() {
        return Err(Error::invalid("uniform crossfit interval needs equal halves"));
    }
    let a = positive_maximum(data, &split.d0)?;
    let b = positive_maximum(data, &split.d1)?;
    let (small, large) = if a <= b { (a, b) } else { (b, a) };
    let n = split.d0.len() as f64;
    let hi = large * (2.0 / alpha).powf(1.0 / n);
    Ok(UniformCrossfitInterval { literal: Interval::new(small, hi)?, support_constrained: Interval::new(large, hi)? })
}

/// Exact pivotal interval `[θ̂, θ̂ (1/α)^{1/N}]`, `θ̂` the maximum of all `N` points.
pub fn uniform_classical_interval(data: &Dataset, alpha: f64) -> Result<Interval> {
    check_positive_alpha(alpha, 1.0)?;
    let theta = positive_maximum(data, &data.all_indices())?;
    let n = data.len() as f64;
    Interval::new(theta, theta * (1.0 / alpha).powf(1.0 / n))
}

/// Grid-and-bisection search range for one-dimensional universal sets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SetSearch {
    pub lo: f64,
    pub hi: f64,
    pub grid: usize,
    pub tol: f64,
}

impl SetSearch {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi, grid: 10_000, tol: 1e-10 }
    }
}

/// Hull of the one-dimensional universal set over `search`, or `None` when no
/// grid point is contained.
///
/// The set is scanned on an even grid and both extreme boundaries are then
/// refined by bisection to `search.tol`. An endpoint equal to the search
/// bound means the set may extend past it.
pub fn universal_interval_1d(
    param_of: &dyn Fn(f64) -> Params,
    data: &Dataset,
    split: &DataSplit,
    estimator: &dyn Estimator,
    alpha: f64,
    scheme: &SplitScheme,
    search: &SetSearch,
) -> Result<Option<Interval>> {
    check_alpha(alpha)?;
    if search.lo.partial_cmp(&search.hi) != Some(std::cmp::Ordering::Less) || search.grid < 2 {
        return Err(Error::invalid("search range must satisfy lo < hi with at least 2 grid points"));
    }
    let threshold = (1.0 / alpha).ln();
    let folds = scheme.folds(split)?;
    let estimates = folds.iter().map(|f| estimator.estimate(data, &f.fit)).collect::<Result<Vec<_>>>()?;
    let inside = |x: f64| -> Result<bool> {
        let theta = param_of(x);
        let terms = folds
            .iter()
            .zip(&estimates)
            .map(|(f, t1)| log_split_statistic(&theta, t1, data, &f.eval))
            .collect::<Result<Vec<_>>>()?;
        Ok(combine(scheme, &terms)? <= threshold)
    };
    let step = (search.hi - search.lo) / (search.grid - 1) as f64;
    let xs: Vec<f64> = (0..search.grid).map(|i| search.lo + step * i as f64).collect();
    let flags = xs.iter().map(|&x| inside(x)).collect::<Result<Vec<_>>>()?;
    let (Some(first), Some(last)) = (flags.iter().position(|&f| f), flags.iter().rposition(|&f| f)) else {
        return Ok(None);
    };
    let refine = |mut in_x: f64, mut out_x: f64| -> Result<f64> {
        while (in_x - out_x).abs() > search.tol {
            let mid = 0.5 * (in_x + out_x);
            if inside(mid)? {
                in_x = mid;
            } else {
                out_x = mid;
            }
        }
        Ok(in_x)
    };
    let lo = if first == 0 { xs[0] } else { refine(xs[first], xs[first - 1])? };
    let hi = if last + 1 == xs.len() { xs[last] } else { refine(xs[last], xs[last + 1])? };
    Ok(Some(Interval::new(lo, hi)?))
}
