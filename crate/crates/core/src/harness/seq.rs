//! Crossing rate of the running-MLE test and simultaneous coverage of its
//! confidence sequence for the Gaussian mean.

use serde::{Deserialize, Serialize};

use super::{replicate, RateEstimate};
use crate::error::{check_alpha, Error, Result};
use crate::family::{Constraint, Family, Params};
use crate::sequential::MartingaleState;
use crate::split::Mle;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeqConfig {
    /// Mean of the `N(μ, 1)` stream; the null is `μ = 0`.
    pub mu: f64,
    pub horizon: usize,
    pub alpha: f64,
    pub burn_in: usize,
    pub reps: usize,
    pub seed: u64,
    pub threads: usize,
}

impl Default for SeqConfig {
    fn default() -> Self {
        Self { mu: 0.0, horizon: 1000, alpha: 0.1, burn_in: 1, reps: 2000, seed: 0, threads: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeqReport {
    pub horizon: usize,
    pub alpha: f64,
    /// Fraction of streams with `M_t > 1/α` for some `t ≤ T`.
    pub crossing: RateEstimate,
    /// Fraction of streams whose confidence sequence contains the true mean
    /// at every `t ≤ T`.
    pub coverage: RateEstimate,
}

pub fn seq_crossing_experiment(cfg: &SeqConfig) -> Result<SeqReport> {
    check_alpha(cfg.alpha)?;
    if cfg.reps == 0 || cfg.threads == 0 {
        return Err(Error::invalid("replications and threads must be positive"));
    }
    if !cfg.mu.is_finite() {
        return Err(Error::invalid("stream mean must be finite"));
    }
    let family = Family::Gaussian { sigma: 1.0 };
    let origin = Params::Gaussian { mean: 0.0, sigma: 1.0 };
    let truth = Params::Gaussian { mean: cfg.mu, sigma: 1.0 };
    let null = Mle::constrained(family.clone(), Constraint::FixedPoint(origin.clone()));
    let threshold = (1.0 / cfg.alpha).ln();
    let outcomes = replicate(cfg.reps, cfg.seed, cfg.threads, |rng| {
        let mut state = MartingaleState::new(family.clone(), null.clone(), origin.clone(), cfg.burn_in)?;
        let mut crossed = false;
        let mut covered = true;
        let mut y = Vec::with_capacity(1);
        for _ in 0..cfg.horizon {
            y.clear();
            truth.draw_into(rng, &mut y);
            state.update(&y)?;
            crossed |= state.log_m() > threshold;
            covered &= state.log_ratio_at(&truth)? <= threshold;
        }
        Ok((crossed, covered))
    })?;
    let crossing: Vec<bool> = outcomes.iter().map(|o| o.0).collect();
    let coverage: Vec<bool> = outcomes.iter().map(|o| o.1).collect();
    Ok(SeqReport {
        horizon: cfg.horizon,
        alpha: cfg.alpha,
        crossing: RateEstimate::from_flags(&crossing),
        coverage: RateEstimate::from_flags(&coverage),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_horizon_never_crosses() {
        let r = seq_crossing_experiment(&SeqConfig { horizon: 0, reps: 10, ..SeqConfig::default() }).unwrap();
        assert_eq!(r.crossing.rate, 0.0);
        assert_eq!(r.coverage.rate, 1.0);
    }

    #[test]
    fn strong_alternative_crosses() {
        let cfg = SeqConfig { mu: 1.0, horizon: 200, reps: 50, ..SeqConfig::default() };
        let r = seq_crossing_experiment(&cfg).unwrap();
        assert_eq!(r.crossing.rate, 1.0);
        assert_eq!(r, seq_crossing_experiment(&SeqConfig { threads: 2, ..cfg }).unwrap());
    }
}
