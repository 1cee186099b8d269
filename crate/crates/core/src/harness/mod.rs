//! Monte Carlo experiments for the finite-sample guarantees.
//!
//! Every replication owns a ChaCha8 stream derived from `(seed, replication
//! index)`, so results do not depend on the thread count or on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_alpha, Error, Result};

mod power;
mod radius;
mod scenarios;
mod seq;
mod sieve_sim;

pub use power::{
    bootstrap_em, bootstrap_mixture_lrt, bootstrap_mixture_lrt_with, simulate_power_curve, BootstrapOutcome,
    PowerConfig, PowerPoint,
};
pub use radius::{radius_experiment, RadiusReport};
pub use scenarios::{
    expectation_bound, simulate_coverage, simulate_type1, CoverageFamily, LrtVariant, NullScenario, VariantRate,
};
pub use seq::{seq_crossing_experiment, SeqConfig, SeqReport};
pub use sieve_sim::{sieve_experiment, SieveReport};

/// Settings shared by every experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Total sample size per replication (both halves).
    pub n: usize,
    pub alpha: f64,
    pub reps: usize,
    pub seed: u64,
    pub threads: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { n: 200, alpha: 0.1, reps: 1000, seed: 0, threads: 1 }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if self.reps == 0 {
            return Err(Error::invalid("need at least one replication"));
        }
        if self.n < 2 {
            return Err(Error::invalid("sample size must be at least 2"));
        }
        if self.threads == 0 {
            return Err(Error::invalid("thread count must be at least 1"));
        }
        Ok(())
    }
}

/// Random stream for replication `rep`.
pub fn rep_rng(seed: u64, rep: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep as u64);
    rng
}

/// Runs `f` once per replication and returns the results in replication
/// order, whatever the thread count.
pub fn replicate<T, F>(reps: usize, seed: u64, threads: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng) -> Result<T> + Sync,
{
    let run = |rep: usize| f(&mut rep_rng(seed, rep));
    if threads <= 1 {
        return (0..reps).map(run).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    pool.install(|| (0..reps).into_par_iter().map(run).collect())
}

/// Binomial proportion with its standard error `√(r(1−r)/R)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateEstimate {
    pub hits: usize,
    pub reps: usize,
    pub rate: f64,
    pub se: f64,
}

impl RateEstimate {
    pub fn from_hits(hits: usize, reps: usize) -> Self {
        if reps == 0 {
            return Self { hits, reps, rate: 0.0, se: 0.0 };
        }
        let rate = hits as f64 / reps as f64;
        Self { hits, reps, rate, se: (rate * (1.0 - rate) / reps as f64).sqrt() }
    }

    pub fn from_flags(flags: &[bool]) -> Self {
        Self::from_hits(flags.iter().filter(|&&f| f).count(), flags.len())
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub se: f64,
    pub reps: usize,
}

impl MeanEstimate {
    pub fn from_values(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = if xs.len() > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
        Self { mean, se: (var / n).sqrt(), reps: xs.len() }
    }
}
