//! Sieve model selection by repeated split likelihood-ratio tests.
//!
//! For nested families `P_1 ⊂ P_2 ⊂ …`, level `j` is tested against `j+1`
//! with the split statistic
//!
//! ```text
//! Σ_{i ∈ D0} log p̂_{j+1}(Y_i) − log p̂_j(Y_i)
//! ```
//!
//! where `p̂_j` is the level-`j` MLE on `D0` and `p̂_{j+1}` is the level-`j+1`
//! MLE on `D1`. The selected level is the first one not rejected. An error can
//! only happen once the true level is reached, so no multiplicity correction
//! is needed. One split is reused for every level.

use serde::Serialize;

use crate::data::{DataSplit, Dataset};
use crate::em::EmConfig;
use crate::error::{check_alpha, Error, Result};
use crate::family::{Constraint, Family};
use crate::split::log_ratio;

pub const DEFAULT_J_MAX: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SieveResult {
    /// Selected level (1-based). Equals `levels_tested + 1` when every test
    /// rejected.
    pub j_hat: usize,
    /// Log statistic of each test performed, level 1 first.
    pub log_statistics: Vec<f64>,
    pub levels_tested: usize,
}

impl SieveResult {
    /// True when every tested level was rejected.
    pub fn exhausted(&self) -> bool {
        self.j_hat > self.levels_tested
    }
}

/// `k`-component mixtures for `k = 1..=k_max`.
pub fn mixture_sieve(k_max: usize, sigma: Option<f64>) -> Vec<Family> {
    (1..=k_max).map(|k| Family::Mixture { k, sigma }).collect()
}

/// Runs the sieve with the default EM settings.
pub fn select_model(
    data: &Dataset,
    split: &DataSplit,
    levels: &[Family],
    alpha: f64,
    j_max: usize,
) -> Result<SieveResult> {
    select_model_with(data, split, levels, alpha, j_max, &EmConfig::default())
}

/// Tests levels `1..=min(j_max, levels.len() − 1)` in order and stops at the
/// first non-rejection. Ties at the threshold do not reject.
pub fn select_model_with(
    data: &Dataset,
    split: &DataSplit,
    levels: &[Family],
    alpha: f64,
    j_max: usize,
    em: &EmConfig,
) -> Result<SieveResult> {
    check_alpha(alpha)?;
    if j_max == 0 {
        return Err(Error::invalid("j_max must be at least 1"));
    }
    if levels.len() < 2 {
        return Err(Error::invalid("a sieve needs at least two nested levels"));
    }
    let last = j_max.min(levels.len() - 1);
    let threshold = (1.0 / alpha).ln();
    let at_level = |level: usize| move |e: Error| Error::Level { level, source: Box::new(e) };

    let mut log_statistics = Vec::with_capacity(last);
    for j in 1..=last {
        let null = levels[j - 1].fit_with(data, &split.d0, &Constraint::Full, em).map_err(at_level(j))?;
        let alt = levels[j].fit_with(data, &split.d1, &Constraint::Full, em).map_err(at_level(j + 1))?;
        let log_num = alt.log_likelihood(data, &split.d0).map_err(at_level(j + 1))?;
        let log_den = null.log_likelihood(data, &split.d0).map_err(at_level(j))?;
        let stat = log_ratio(log_num, log_den).map_err(at_level(j))?;
        log_statistics.push(stat);
        if stat <= threshold {
            return Ok(SieveResult { j_hat: j, log_statistics, levels_tested: j });
        }
    }
    Ok(SieveResult { j_hat: last + 1, log_statistics, levels_tested: last })
}
