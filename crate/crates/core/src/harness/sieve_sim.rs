//! Frequency of each selected level in the mixture sieve.

use serde::Serialize;

use super::{replicate, RateEstimate, SimConfig};
use crate::data::DataSplit;
use crate::em::EmConfig;
use crate::error::{Error, Result};
use crate::family::{Family, Params};
use crate::sieve::select_model_with;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SieveReport {
    pub true_level: usize,
    /// `counts[j − 1]` replications selected level `j`; the last entry is the
    /// all-rejected sentinel `j_max + 1`.
    pub counts: Vec<usize>,
    /// Frequency of `ĵ > true_level`.
    pub overshoot: RateEstimate,
    /// Frequency of `ĵ = true_level`.
    pub exact: RateEstimate,
}

pub fn sieve_experiment(
    truth: &Params,
    true_level: usize,
    levels: &[Family],
    j_max: usize,
    cfg: &SimConfig,
    em: &EmConfig,
) -> Result<SieveReport> {
    cfg.validate()?;
    if true_level == 0 {
        return Err(Error::invalid("levels are numbered from 1"));
    }
    let split = DataSplit::first_half(cfg.n)?;
    let picks = replicate(cfg.reps, cfg.seed, cfg.threads, |rng| {
        let data = truth.sample(cfg.n, rng)?;
        Ok(select_model_with(&data, &split, levels, cfg.alpha, j_max, em)?.j_hat)
    })?;
    let top = j_max.min(levels.len().saturating_sub(1)) + 1;
    let mut counts = vec![0; top];
    for &j in &picks {
        counts[j - 1] += 1;
    }
    Ok(SieveReport {
        true_level,
        counts,
        overshoot: RateEstimate::from_hits(picks.iter().filter(|&&j| j > true_level).count(), cfg.reps),
        exact: RateEstimate::from_hits(picks.iter().filter(|&&j| j == true_level).count(), cfg.reps),
    })
}
