//! Running-MLE sequential likelihood-ratio test.
//!
//! ```text
//! M_t = Π_{i ≤ t} p_{θ̂_{1,i−1}}(Y_i) / Π_{i ≤ t} p_{θ̂_{0,t}}(Y_i)
//! ```
//!
//! The numerator plugs in an estimate built from strictly earlier data, the
//! denominator is the null maximum likelihood of the current prefix. Under the
//! null `M_t` is dominated by a nonnegative martingale with unit start, so by
//! Ville's inequality `P(∃t : M_t > 1/α) ≤ α`, `1/M_t` and its running minimum
//! are anytime-valid p-values, and `{θ : R_t(θ) ≤ 1/α}` is a confidence
//! sequence.
//!
//! During burn-in (`t ≤ t₀`) observations only feed the estimator and
//! `M_t = 1`; both products then run over `i = t₀+1..t`.
//!
//! Gaussian, MVN and uniform families update in O(1) from sufficient
//! statistics; mixtures keep the observations and refit.

use crate::data::Dataset;
use crate::em::EmConfig;
use crate::error::{check_alpha, Error, Result};
use crate::family::{Constraint, Family, Params, ProfileTarget, SIGMA_MIN};
use crate::numeric::LN_2PI;
use crate::split::{log_ratio, Mle};

/// How the numerator estimate evolves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlugIn {
    /// `θ̂_{1,t}` = full-model MLE on the first `t` observations.
    RunningMle,
    /// Keep the initial estimate forever.
    Frozen,
}

/// Running sums for one stream of observations.
#[derive(Debug, Clone)]
struct RunningStats {
    n: usize,
    mean: Vec<f64>,
    /// `Σ ‖y − ȳ‖²`.
    m2: f64,
    min: f64,
    max: f64,
    raw: Option<Vec<f64>>,
}

impl RunningStats {
    fn new(dim: usize, keep_raw: bool) -> Self {
        Self {
            n: 0,
            mean: vec![0.0; dim],
            m2: 0.0,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
            raw: keep_raw.then(Vec::new),
        }
    }

    fn push(&mut self, y: &[f64]) {
        self.n += 1;
        let n = self.n as f64;
        for (m, &v) in self.mean.iter_mut().zip(y) {
            let delta = v - *m;
            *m += delta / n;
            self.m2 += delta * (v - *m);
        }
        self.min = self.min.min(y[0]);
        self.max = self.max.max(y[0]);
        if let Some(raw) = &mut self.raw {
            raw.extend_from_slice(y);
        }
    }

    fn dataset(&self) -> Result<Dataset> {
        let raw = self.raw.as_ref().expect("raw observations are kept for families without a fast path");
        Dataset::new(self.mean.len(), raw.clone())
    }

    fn log_likelihood(&self, params: &Params) -> Result<f64> {
        if self.n == 0 {
            return Ok(0.0);
        }
        let n = self.n as f64;
        match params {
            Params::Gaussian { mean, sigma } => {
                let ss = self.m2 + n * (self.mean[0] - mean).powi(2);
                Ok(-n * (0.5 * LN_2PI + sigma.ln()) - 0.5 * ss / (sigma * sigma))
            }
            Params::UniformScale { theta } => {
                if self.min > 0.0 && self.max <= *theta {
                    Ok(-n * theta.ln())
                } else {
                    Ok(f64::NEG_INFINITY)
                }
            }
            Params::MvnIdentity { mean } => {
                let d = mean.len() as f64;
                let gap: f64 = self.mean.iter().zip(mean).map(|(a, b)| (a - b) * (a - b)).sum();
                Ok(-0.5 * n * d * LN_2PI - 0.5 * (self.m2 + n * gap))
            }
            Params::Mixture(_) => params.log_likelihood_all(&self.dataset()?),
        }
    }

    /// Constrained MLE from the running sums; mixtures refit on the raw data.
    fn fit(&self, family: &Family, constraint: &Constraint, em: &EmConfig) -> Result<Params> {
        let n = self.n as f64;
        let ybar = self.mean[0];
        let sd_at = |mu: f64| (self.m2 / n + (ybar - mu).powi(2)).max(SIGMA_MIN * SIGMA_MIN).sqrt();
        match (family, constraint) {
            (_, Constraint::FixedPoint(p)) => {
                family.check_params(p)?;
                Ok(p.clone())
            }
            (Family::Gaussian { sigma }, Constraint::Full) => Ok(Params::Gaussian { mean: ybar, sigma: *sigma }),
            (Family::Gaussian { sigma }, Constraint::MeanAtMost(c)) => {
                Ok(Params::Gaussian { mean: ybar.min(*c), sigma: *sigma })
            }
            (Family::Gaussian { sigma }, Constraint::FixedValue { target: ProfileTarget::Mean, value }) => {
                Ok(Params::Gaussian { mean: *value, sigma: *sigma })
            }
            (Family::GaussianUnknownVar, Constraint::Full) => Ok(Params::Gaussian { mean: ybar, sigma: sd_at(ybar) }),
            (Family::GaussianUnknownVar, Constraint::MeanAtMost(c)) => {
                let mu = ybar.min(*c);
                Ok(Params::Gaussian { mean: mu, sigma: sd_at(mu) })
            }
            (Family::GaussianUnknownVar, Constraint::FixedValue { target: ProfileTarget::Mean, value }) => {
                Ok(Params::Gaussian { mean: *value, sigma: sd_at(*value) })
            }
            (Family::UniformScale, Constraint::Full) if self.max > 0.0 => Ok(Params::UniformScale { theta: self.max }),
            (Family::UniformScale, Constraint::MeanAtMost(c)) if self.max > 0.0 && *c > 0.0 => {
                Ok(Params::UniformScale { theta: self.max.min(2.0 * c) })
            }
            (Family::MvnIdentity { .. }, Constraint::Full) => Ok(Params::MvnIdentity { mean: self.mean.clone() }),
            (Family::MvnIdentity { .. }, Constraint::MeanAtMost(c)) => {
                Ok(Params::MvnIdentity { mean: self.mean.iter().map(|m| m.min(*c)).collect() })
            }
            (Family::Mixture { .. }, _) => {
                let data = self.dataset()?;
                family.fit_with(&data, &data.all_indices(), constraint, em)
            }
            _ => Err(Error::invalid(format!(
                "constraint {constraint:?} is not supported for sequential {:?}",
                family.tag()
            ))),
        }
    }
}

/// State of a running-MLE sequential test.
#[derive(Debug, Clone)]
pub struct MartingaleState {
    alt: Family,
    null: Mle,
    plug_in: PlugIn,
    burn_in: usize,
    t: usize,
    seen: RunningStats,
    window: RunningStats,
    theta1: Params,
    null_fit: Option<Params>,
    log_numerator: f64,
    log_m: f64,
    p_min: f64,
}

impl MartingaleState {
    /// Fresh state with `M_0 = 1`. `theta1_init` is the numerator estimate
    /// `θ̂_{1,0}` used before any data arrive.
    pub fn new(alt: Family, null: Mle, theta1_init: Params, burn_in: usize) -> Result<Self> {
        alt.check_params(&theta1_init)?;
        if alt.dim() != null.family.dim() {
            return Err(Error::invalid("null and alternative families have different dimensions"));
        }
        let keep_raw = matches!(alt, Family::Mixture { .. }) || matches!(null.family, Family::Mixture { .. });
        let dim = alt.dim();
        Ok(Self {
            alt,
            null,
            plug_in: PlugIn::RunningMle,
            burn_in,
            t: 0,
            seen: RunningStats::new(dim, keep_raw),
            window: RunningStats::new(dim, keep_raw),
            theta1: theta1_init,
            null_fit: None,
            log_numerator: 0.0,
            log_m: 0.0,
            p_min: 1.0,
        })
    }

    pub fn with_plug_in(mut self, plug_in: PlugIn) -> Self {
        self.plug_in = plug_in;
        self
    }

    /// Consumes one observation.
    pub fn update(&mut self, y: &[f64]) -> Result<()> {
        if y.len() != self.alt.dim() {
            return Err(Error::invalid(format!("observation has dimension {}, expected {}", y.len(), self.alt.dim())));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("observation must be finite"));
        }
        // Work on copies so a failed update leaves the state untouched.
        let t = self.t + 1;
        let mut seen = self.seen.clone();
        seen.push(y);
        let mut step = None;
        if t > self.burn_in {
            // Numerator uses θ̂_{1,t−1}, fixed before y is seen.
            let log_numerator = self.log_numerator + self.theta1.log_density_unchecked(y);
            let mut window = self.window.clone();
            window.push(y);
            let theta0 = window.fit(&self.null.family, &self.null.constraint, &self.null.em)?;
            let log_m = log_ratio(log_numerator, window.log_likelihood(&theta0)?)?;
            step = Some((log_numerator, window, theta0, log_m));
        }
        let theta1 = match self.plug_in {
            PlugIn::RunningMle => seen.fit(&self.alt, &Constraint::Full, &self.null.em)?,
            PlugIn::Frozen => self.theta1.clone(),
        };

        self.t = t;
        self.seen = seen;
        self.theta1 = theta1;
        if let Some((log_numerator, window, theta0, log_m)) = step {
            self.log_numerator = log_numerator;
            self.window = window;
            self.null_fit = Some(theta0);
            self.log_m = log_m;
            self.p_min = self.p_min.min(self.p_value());
        }
        Ok(())
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn burn_in(&self) -> usize {
        self.burn_in
    }

    pub fn log_m(&self) -> f64 {
        self.log_m
    }

    /// `Σ_{t₀ < i ≤ t} log p_{θ̂_{1,i−1}}(Y_i)`.
    pub fn log_numerator(&self) -> f64 {
        self.log_numerator
    }

    /// Current numerator estimate `θ̂_{1,t}`.
    pub fn theta1(&self) -> &Params {
        &self.theta1
    }

    /// Null MLE `θ̂_{0,t}` after the last post-burn-in update.
    pub fn null_fit(&self) -> Option<&Params> {
        self.null_fit.as_ref()
    }

    fn p_value(&self) -> f64 {
        (-self.log_m).exp().min(1.0)
    }

    /// True once `M_t > 1/α`.
    pub fn should_stop(&self, alpha: f64) -> Result<bool> {
        check_alpha(alpha)?;
        Ok(self.log_m > (1.0 / alpha).ln())
    }

    /// `(p_t, p̄_t) = (min(1, 1/M_t), min_{s ≤ t} p_s)`.
    pub fn anytime_p(&self) -> (f64, f64) {
        (self.p_value(), self.p_min)
    }

    /// `log R_t(θ)`: the running-MLE likelihood ratio against a fixed `θ`.
    /// At the true parameter this is the oracle martingale `log L_t`.
    pub fn log_ratio_at(&self, theta: &Params) -> Result<f64> {
        if self.t <= self.burn_in {
            return Ok(0.0);
        }
        if theta.dim() != self.alt.dim() {
            return Err(Error::invalid("parameter dimension does not match the stream"));
        }
        theta.validate()?;
        log_ratio(self.log_numerator, self.window.log_likelihood(theta)?)
    }

    /// Membership of `θ` in the confidence sequence `C_t = {θ : R_t(θ) ≤ 1/α}`.
    pub fn confseq_contains(&self, theta: &Params, alpha: f64) -> Result<bool> {
        check_alpha(alpha)?;
        Ok(self.log_ratio_at(theta)? <= (1.0 / alpha).ln())
    }
}

/// Tracks `C_t` and the running intersection `C̄_t = ∩_{s ≤ t} C_s` on a fixed
/// parameter grid.
#[derive(Debug, Clone)]
pub struct ConfSeqTracker {
    grid: Vec<Params>,
    current: Vec<bool>,
    running: Vec<bool>,
    alpha: f64,
}

impl ConfSeqTracker {
    pub fn new(grid: Vec<Params>, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if grid.is_empty() {
            return Err(Error::invalid("confidence-sequence grid must be nonempty"));
        }
        for p in &grid {
            p.validate()?;
        }
        let n = grid.len();
        Ok(Self { grid, current: vec![true; n], running: vec![true; n], alpha })
    }

    /// Re-evaluates every grid point against the current state.
    pub fn observe(&mut self, state: &MartingaleState) -> Result<()> {
        for (i, theta) in self.grid.iter().enumerate() {
            let inside = state.confseq_contains(theta, self.alpha)?;
            self.current[i] = inside;
            self.running[i] &= inside;
        }
        Ok(())
    }

    pub fn grid(&self) -> &[Params] {
        &self.grid
    }

    /// Membership flags of `C_t`.
    pub fn current(&self) -> &[bool] {
        &self.current
    }

    /// Membership flags of `C̄_t`.
    pub fn running(&self) -> &[bool] {
        &self.running
    }
}
