//! Expectation-maximization for univariate Gaussian mixtures.
//!
//! Each run records its log-likelihood trace. The M-step is the exact
//! constrained maximizer of the expected complete-data log-likelihood (weights
//! floored at [`WEIGHT_FLOOR`], scales at [`SIGMA_MIN`]), so every trace is
//! nondecreasing up to rounding.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{floored_sd, mean, MixtureParams, SIGMA_MIN, WEIGHT_FLOOR};
use crate::numeric::LN_2PI;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmConfig {
    /// Number of initializations; the first is quantile-based, the rest are
    /// k-means++ seeded from the data points.
    pub restarts: usize,
    /// Stop once the log-likelihood gain of an iteration falls below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Seed for the random initializations.
    pub seed: u64,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self { restarts: 10, tol: 1e-8, max_iter: 500, seed: 0x5eed }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmRun {
    pub params: MixtureParams,
    pub log_likelihood: f64,
    /// Log-likelihood before each M-step, ending at the returned parameters.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Best of `cfg.restarts` EM runs for a `k`-component mixture.
///
/// `sigma = Some(s)` fixes every component scale to `s`.
pub fn em_fit_mixture(values: &[f64], k: usize, sigma: Option<f64>, cfg: &EmConfig) -> Result<EmRun> {
    if k == 0 {
        return Err(Error::invalid("mixture needs at least one component"));
    }
    if values.len() < k {
        return Err(Error::invalid(format!("{} observations cannot support {k} mixture components", values.len())));
    }
    if let Some(s) = sigma {
        if !(s.is_finite() && s >= SIGMA_MIN) {
            return Err(Error::invalid(format!("fixed mixture scale must be at least {SIGMA_MIN}")));
        }
    }
    if k as f64 * WEIGHT_FLOOR >= 1.0 {
        return Err(Error::invalid("too many components for the weight floor"));
    }

    if k == 1 {
        let mu = mean(values);
        let s = sigma.unwrap_or_else(|| floored_sd(values, mu));
        let params = MixtureParams { weights: vec![1.0], means: vec![mu], sigmas: vec![s] };
        let ll = values.iter().map(|&y| params.log_density(y)).sum();
        return Ok(EmRun { params, log_likelihood: ll, trace: vec![ll], iterations: 0, converged: true });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut best: Option<EmRun> = None;
    for r in 0..cfg.restarts.max(1) {
        let init = if r == 0 { quantile_init(values, k, sigma) } else { kmeanspp_init(values, k, sigma, &mut rng) };
        let run = em_run(values, init, sigma, cfg);
        if best.as_ref().is_none_or(|b| run.log_likelihood > b.log_likelihood) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn start_scale(values: &[f64], sigma: Option<f64>) -> f64 {
    sigma.unwrap_or_else(|| floored_sd(values, mean(values)))
}

fn quantile_init(values: &[f64], k: usize, sigma: Option<f64>) -> MixtureParams {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let means = (0..k)
        .map(|j| {
            let pos = ((j as f64 + 0.5) / k as f64 * n as f64) as usize;
            sorted[pos.min(n - 1)]
        })
        .collect();
    let s = start_scale(values, sigma);
    MixtureParams { weights: vec![1.0 / k as f64; k], means, sigmas: vec![s; k] }
}

fn kmeanspp_init<R: Rng>(values: &[f64], k: usize, sigma: Option<f64>, rng: &mut R) -> MixtureParams {
    let n = values.len();
    let mut centers = vec![values[index::sample(rng, n, 1).index(0)]];
    let mut d2: Vec<f64> = values.iter().map(|y| (y - centers[0]).powi(2)).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, w) in d2.iter().enumerate() {
                if u < *w {
                    chosen = i;
                    break;
                }
                u -= w;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        let c = values[pick];
        centers.push(c);
        for (d, y) in d2.iter_mut().zip(values) {
            *d = d.min((y - c).powi(2));
        }
    }
    let s = start_scale(values, sigma);
    MixtureParams { weights: vec![1.0 / k as f64; k], means: centers, sigmas: vec![s; k] }
}

/// A single EM run from `init`.
pub fn em_run(values: &[f64], init: MixtureParams, sigma: Option<f64>, cfg: &EmConfig) -> EmRun {
    let k = init.len();
    let mut params = init;
    let mut resp = vec![0.0; values.len() * k];
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    loop {
        let ll = e_step(values, &params, &mut resp);
        if let Some(&prev) = trace.last() {
            if ll - prev < cfg.tol {
                converged = true;
            }
        }
        trace.push(ll);
        if converged || iterations >= cfg.max_iter {
            break;
        }
        m_step(values, &resp, sigma, &mut params);
        iterations += 1;
    }
    let log_likelihood = *trace.last().unwrap();
    EmRun { params, log_likelihood, trace, iterations, converged }
}

/// Fills responsibilities and returns the log-likelihood at `params`.
fn e_step(values: &[f64], params: &MixtureParams, resp: &mut [f64]) -> f64 {
    let k = params.len();
    // log w_j φ(y; μ_j, σ_j) = a_j + b_j y − c_j y²
    let mut a = Vec::with_capacity(k);
    let mut b = Vec::with_capacity(k);
    let mut c = Vec::with_capacity(k);
    for j in 0..k {
        let (w, mu, s) = (params.weights[j], params.means[j], params.sigmas[j]);
        let prec = 1.0 / (s * s);
        a.push(w.ln() - s.ln() - 0.5 * LN_2PI - 0.5 * mu * mu * prec);
        b.push(mu * prec);
        c.push(0.5 * prec);
    }
    let mut ll = 0.0;
    for (&y, r) in values.iter().zip(resp.chunks_exact_mut(k)) {
        let mut top = 0;
        for j in 0..k {
            r[j] = a[j] + y * (b[j] - c[j] * y);
            if r[j] > r[top] {
                top = j;
            }
        }
        let max = r[top];
        let mut sum = 1.0;
        for (j, v) in r.iter_mut().enumerate() {
            if j != top {
                *v = (*v - max).exp();
                sum += *v;
            }
        }
        r[top] = 1.0;
        let inv = 1.0 / sum;
        for v in r.iter_mut() {
            *v *= inv;
        }
        ll += max + sum.ln();
    }
    ll
}

fn m_step(values: &[f64], resp: &[f64], sigma: Option<f64>, params: &mut MixtureParams) {
    let k = params.len();
    let mut counts = vec![0.0; k];
    let mut sums = vec![0.0; k];
    for (y, r) in values.iter().zip(resp.chunks_exact(k)) {
        for j in 0..k {
            counts[j] += r[j];
            sums[j] += r[j] * y;
        }
    }
    for j in 0..k {
        if counts[j] > f64::MIN_POSITIVE {
            params.means[j] = sums[j] / counts[j];
        }
    }
    match sigma {
        Some(s) => params.sigmas.iter_mut().for_each(|v| *v = s),
        None => {
            let mut ss = vec![0.0; k];
            for (y, r) in values.iter().zip(resp.chunks_exact(k)) {
                for j in 0..k {
                    let d = y - params.means[j];
                    ss[j] += r[j] * d * d;
                }
            }
            for j in 0..k {
                if counts[j] > f64::MIN_POSITIVE {
                    params.sigmas[j] = (ss[j] / counts[j]).max(SIGMA_MIN * SIGMA_MIN).sqrt();
                }
            }
        }
    }
    params.weights = floored_weights(&counts, WEIGHT_FLOOR);
}

/// Maximizer of `Σ c_j ln w_j` over the simplex with `w_j ≥ floor`.
fn floored_weights(counts: &[f64], floor: f64) -> Vec<f64> {
    let k = counts.len();
    let mut pinned = vec![false; k];
    loop {
        let n_pinned = pinned.iter().filter(|&&p| p).count();
        let free_mass = 1.0 - n_pinned as f64 * floor;
        let free_total: f64 = counts.iter().zip(&pinned).filter(|(_, &p)| !p).map(|(c, _)| c).sum();
        let w: Vec<f64> = counts
            .iter()
            .zip(&pinned)
            .map(|(c, &p)| {
                if p {
                    floor
                } else if free_total > 0.0 {
                    free_mass * c / free_total
                } else {
                    free_mass / (k - n_pinned) as f64
                }
            })
            .collect();
        let mut changed = false;
        for j in 0..k {
            if !pinned[j] && w[j] < floor {
                pinned[j] = true;
                changed = true;
            }
        }
        if !changed {
            return w;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{sample_from, Params};

    #[test]
    fn single_component_reduces_to_gaussian_mle() {
        let ys = [1.0, 2.0, 4.0, 7.0];
        let fit = em_fit_mixture(&ys, 1, None, &EmConfig::default()).unwrap();
        let mu = 3.5;
        let sd = ((2.5f64.powi(2) + 1.5f64.powi(2) + 0.25 + 3.5f64.powi(2)) / 4.0).sqrt();
        assert!((fit.params.means[0] - mu).abs() < 1e-12);
        assert!((fit.params.sigmas[0] - sd).abs() < 1e-12);
        let fixed = em_fit_mixture(&ys, 1, Some(1.0), &EmConfig::default()).unwrap();
        assert_eq!(fixed.params.sigmas, vec![1.0]);
    }

    #[test]
    fn recovers_separated_means() {
        let truth = Params::Mixture(MixtureParams::equal_weights(vec![-2.0, 2.0], 1.0).unwrap());
        let data = sample_from(&truth, 2000, 17).unwrap();
        let fit = em_fit_mixture(data.values(), 2, Some(1.0), &EmConfig::default()).unwrap();
        let mut means = fit.params.means.clone();
        means.sort_by(f64::total_cmp);
        assert!((means[0] + 2.0).abs() < 0.15 && (means[1] - 2.0).abs() < 0.15, "{means:?}");
    }

    #[test]
    fn trace_is_nondecreasing() {
        let truth = Params::Mixture(MixtureParams::new(vec![0.3, 0.7], vec![-1.0, 1.5], vec![0.5, 1.2]).unwrap());
        let data = sample_from(&truth, 300, 5).unwrap();
        let cfg = EmConfig { restarts: 1, ..EmConfig::default() };
        for k in 2..=4 {
            let run = em_fit_mixture(data.values(), k, None, &cfg).unwrap();
            for w in run.trace.windows(2) {
                assert!(w[1] >= w[0] - 1e-8, "k={k}: {} -> {}", w[0], w[1]);
            }
        }
    }

    #[test]
    fn floored_weights_satisfy_bounds() {
        let w = floored_weights(&[0.0, 5.0, 5.0], 1e-6);
        assert_eq!(w[0], 1e-6);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((w[1] - w[2]).abs() < 1e-15);
        let w = floored_weights(&[1.0, 3.0], 1e-6);
        assert!((w[0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn invalid_requests() {
        assert!(em_fit_mixture(&[1.0], 2, None, &EmConfig::default()).is_err());
        assert!(em_fit_mixture(&[1.0, 2.0], 0, None, &EmConfig::default()).is_err());
        assert!(em_fit_mixture(&[1.0, 2.0], 2, Some(0.0), &EmConfig::default()).is_err());
    }
}
