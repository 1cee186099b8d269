//! Power of the universal mixture test against a parametric bootstrap.
//!
//! Data come from `½ N(−μ, 1) + ½ N(μ, 1)`; `μ = 0` is the null of one
//! unit-scale Gaussian against a two-component unit-scale mixture.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{replicate, RateEstimate, SimConfig};
use crate::data::{DataSplit, Dataset};
use crate::em::{em_fit_mixture, EmConfig};
use crate::error::{check_alpha, Error, Result};
use crate::family::{Family, MixtureParams, Params};
use crate::split::{split_lrt, Mle};

/// EM settings for bootstrap refits: one quantile-initialized run with a
/// loose tolerance. Every bootstrap sample needs two fits, so the full
/// settings would dominate the runtime.
pub fn bootstrap_em() -> EmConfig {
    EmConfig { restarts: 1, tol: 1e-4, max_iter: 200, ..EmConfig::default() }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BootstrapOutcome {
    /// `2 [log L(θ̂_{k1}) − log L(θ̂_{k0})]`, floored at zero since the models
    /// are nested.
    pub lrs: f64,
    /// `(1 + #{b : LRS_b ≥ LRS}) / (B + 1)`.
    pub p_value: f64,
    pub reject: bool,
}

/// Bootstrap LRT of `k0` against `k1` unit-scale components.
pub fn bootstrap_mixture_lrt(
    data: &Dataset,
    k0: usize,
    k1: usize,
    b: usize,
    alpha: f64,
    seed: u64,
) -> Result<BootstrapOutcome> {
    bootstrap_mixture_lrt_with(data, k0, k1, Some(1.0), b, alpha, seed, &bootstrap_em())
}

#[allow(clippy::too_many_arguments)]
pub fn bootstrap_mixture_lrt_with(
    data: &Dataset,
    k0: usize,
    k1: usize,
    sigma: Option<f64>,
    b: usize,
    alpha: f64,
    seed: u64,
    em: &EmConfig,
) -> Result<BootstrapOutcome> {
    check_alpha(alpha)?;
    if b < 100 {
        return Err(Error::invalid(format!("bootstrap needs at least 100 draws, got {b}")));
    }
    if k0 > k1 {
        return Err(Error::invalid("null component count exceeds the alternative's"));
    }
    let values = data.scalars_at(&data.all_indices())?;
    if k0 == k1 {
        return Ok(BootstrapOutcome { lrs: 0.0, p_value: 1.0, reject: false });
    }
    let lrs_of = |ys: &[f64]| -> Result<(f64, MixtureParams)> {
        let null = em_fit_mixture(ys, k0, sigma, em)?;
        let alt = em_fit_mixture(ys, k1, sigma, em)?;
        Ok((2.0 * (alt.log_likelihood - null.log_likelihood).max(0.0), null.params))
    };
    let (lrs, null_fit) = lrs_of(&values)?;
    let null_fit = Params::Mixture(null_fit);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut exceed = 0;
    for _ in 0..b {
        let boot = null_fit.sample(values.len(), &mut rng)?;
        if lrs_of(boot.values())?.0 >= lrs {
            exceed += 1;
        }
    }
    let p_value = (1 + exceed) as f64 / (b + 1) as f64;
    Ok(BootstrapOutcome { lrs, p_value, reject: p_value <= alpha })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerConfig {
    pub mus: Vec<f64>,
    /// Bootstrap draws per replication; `None` skips the bootstrap test.
    pub bootstrap_draws: Option<usize>,
    /// EM settings of the universal test's alternative fit.
    pub em: EmConfig,
    pub bootstrap_em: EmConfig,
}

impl Default for PowerConfig {
    fn default() -> Self {
        Self {
            mus: (0..=12).map(|i| i as f64 * 0.25).collect(),
            bootstrap_draws: Some(200),
            em: EmConfig::default(),
            bootstrap_em: bootstrap_em(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerPoint {
    pub mu: f64,
    pub universal: RateEstimate,
    pub bootstrap: Option<RateEstimate>,
}

/// Seed for grid point `i`, so adding points leaves earlier ones unchanged.
fn grid_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_add(0x9e37_79b9_7f4a_7c15u64.wrapping_mul(i as u64 + 1))
}

pub fn simulate_power_curve(power: &PowerConfig, cfg: &SimConfig) -> Result<Vec<PowerPoint>> {
    cfg.validate()?;
    if power.mus.iter().any(|mu| !(mu.is_finite() && *mu >= 0.0)) {
        return Err(Error::invalid("power grid needs finite μ ≥ 0"));
    }
    let null = Mle::full(Family::unit_mixture(1));
    let alt = Mle::full(Family::unit_mixture(2)).with_em(power.em.clone());
    let split = DataSplit::first_half(cfg.n)?;
    power
        .mus
        .iter()
        .enumerate()
        .map(|(i, &mu)| {
            let truth = Params::Mixture(MixtureParams::equal_weights(vec![-mu, mu], 1.0)?);
            let results = replicate(cfg.reps, grid_seed(cfg.seed, i), cfg.threads, |rng| {
                let data = truth.sample(cfg.n, rng)?;
                let universal = split_lrt(&data, &split, &null, &alt, cfg.alpha)?.reject;
                let bootstrap = match power.bootstrap_draws {
                    Some(b) => Some(
                        bootstrap_mixture_lrt_with(
                            &data,
                            1,
                            2,
                            Some(1.0),
                            b,
                            cfg.alpha,
                            rng.random(),
                            &power.bootstrap_em,
                        )?
                        .reject,
                    ),
                    None => None,
                };
                Ok((universal, bootstrap))
            })?;
            let universal: Vec<bool> = results.iter().map(|r| r.0).collect();
            let bootstrap = power
                .bootstrap_draws
                .map(|_| RateEstimate::from_flags(&results.iter().map(|r| r.1 == Some(true)).collect::<Vec<_>>()));
            Ok(PowerPoint { mu, universal: RateEstimate::from_flags(&universal), bootstrap })
        })
        .collect()
}
