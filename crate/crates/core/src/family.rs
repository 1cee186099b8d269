//! Parametric families over which every split procedure is generic.
//!
//! A [`Family`] knows how to fit itself (optionally under a [`Constraint`]);
//! the fitted [`Params`] are self-describing and evaluate densities on their
//! own, so numerator and denominator of a likelihood ratio may come from
//! different families (e.g. a one-component null against a two-component
//! alternative).
//!
//! All likelihood arithmetic is done in log space.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::em::{em_fit_mixture, EmConfig};
use crate::error::{Error, Result};
use crate::numeric::{log_sum_exp, LN_2PI};

/// Lower bound on every fitted scale. Mixture likelihoods are unbounded without it.
pub const SIGMA_MIN: f64 = 1e-3;

/// Lower bound on mixture weights inside EM.
pub const WEIGHT_FLOOR: f64 = 1e-6;

const WEIGHT_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FamilyTag {
    Gaussian,
    GaussianUnknownVar,
    MixtureK,
    UniformScale,
    MvnIdentity,
}

/// A statistical model `{P_θ : θ ∈ Θ}`.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// `N(μ, σ²)` with known `σ`.
    Gaussian { sigma: f64 },
    /// `N(μ, σ²)` with both parameters free, `σ ≥ SIGMA_MIN`.
    GaussianUnknownVar,
    /// `k`-component univariate Gaussian mixture. With `sigma = Some(s)` every
    /// component has the fixed scale `s`; otherwise scales are free (floored).
    Mixture { k: usize, sigma: Option<f64> },
    /// Uniform on `(0, θ]`.
    UniformScale,
    /// `N_d(μ, I_d)`.
    MvnIdentity { d: usize },
}

impl Family {
    pub fn tag(&self) -> FamilyTag {
        match self {
            Family::Gaussian { .. } => FamilyTag::Gaussian,
            Family::GaussianUnknownVar => FamilyTag::GaussianUnknownVar,
            Family::Mixture { .. } => FamilyTag::MixtureK,
            Family::UniformScale => FamilyTag::UniformScale,
            Family::MvnIdentity { .. } => FamilyTag::MvnIdentity,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Family::MvnIdentity { d } => *d,
            _ => 1,
        }
    }

    /// Two-component mixture with unit scales, the mixture design used in the
    /// power study.
    pub fn unit_mixture(k: usize) -> Self {
        Family::Mixture { k, sigma: Some(1.0) }
    }

    fn check_data(&self, data: &Dataset, idx: &[usize]) -> Result<()> {
        if data.dim() != self.dim() {
            return Err(Error::invalid(format!(
                "family expects dimension {}, data has dimension {}",
                self.dim(),
                data.dim()
            )));
        }
        data.check_indices(idx)
    }

    /// Maximum-likelihood fit on `data[idx]` subject to `constraint`.
    pub fn fit(&self, data: &Dataset, idx: &[usize], constraint: &Constraint) -> Result<Params> {
        self.fit_with(data, idx, constraint, &EmConfig::default())
    }

    pub fn fit_with(&self, data: &Dataset, idx: &[usize], constraint: &Constraint, em: &EmConfig) -> Result<Params> {
        self.check_data(data, idx)?;
        match constraint {
            Constraint::Full => self.fit_full(data, idx, em),
            Constraint::FixedPoint(p) => {
                self.check_params(p)?;
                Ok(p.clone())
            }
            Constraint::MeanAtMost(c) => self.fit_mean_at_most(data, idx, *c),
            Constraint::MixtureComponents(k) => match self {
                Family::Mixture { sigma, .. } => {
                    let values = data.scalars_at(idx)?;
                    Ok(Params::Mixture(em_fit_mixture(&values, *k, *sigma, em)?.params))
                }
                _ => Err(Error::invalid("component-count constraint requires a mixture family")),
            },
            Constraint::FixedValue { target, value } => self.fit_profile(data, idx, *target, *value),
        }
    }

    fn fit_full(&self, data: &Dataset, idx: &[usize], em: &EmConfig) -> Result<Params> {
        match self {
            Family::Gaussian { sigma } => {
                let ys = data.scalars_at(idx)?;
                Ok(Params::Gaussian { mean: mean(&ys), sigma: *sigma })
            }
            Family::GaussianUnknownVar => {
                let ys = data.scalars_at(idx)?;
                let mu = mean(&ys);
                Ok(Params::Gaussian { mean: mu, sigma: floored_sd(&ys, mu) })
            }
            Family::Mixture { k, sigma } => {
                let values = data.scalars_at(idx)?;
                Ok(Params::Mixture(em_fit_mixture(&values, *k, *sigma, em)?.params))
            }
            Family::UniformScale => {
                let ys = data.scalars_at(idx)?;
                let max = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                if max <= 0.0 {
                    return Err(Error::invalid("uniform-scale data must contain a positive value"));
                }
                Ok(Params::UniformScale { theta: max })
            }
            Family::MvnIdentity { d } => {
                let mut m = vec![0.0; *d];
                for &i in idx {
                    for (acc, v) in m.iter_mut().zip(data.row(i)) {
                        *acc += v;
                    }
                }
                let n = idx.len() as f64;
                m.iter_mut().for_each(|v| *v /= n);
                Ok(Params::MvnIdentity { mean: m })
            }
        }
    }

    fn fit_mean_at_most(&self, data: &Dataset, idx: &[usize], c: f64) -> Result<Params> {
        if !c.is_finite() {
            return Err(Error::invalid("mean bound must be finite"));
        }
        match self {
            Family::Gaussian { sigma } => {
                let ys = data.scalars_at(idx)?;
                Ok(Params::Gaussian { mean: mean(&ys).min(c), sigma: *sigma })
            }
            Family::GaussianUnknownVar => {
                let ys = data.scalars_at(idx)?;
                let mu = mean(&ys).min(c);
                Ok(Params::Gaussian { mean: mu, sigma: floored_sd(&ys, mu) })
            }
            Family::MvnIdentity { .. } => {
                // The identity-covariance likelihood separates across coordinates.
                let Params::MvnIdentity { mean } = self.fit_full(data, idx, &EmConfig::default())? else {
                    unreachable!()
                };
                Ok(Params::MvnIdentity { mean: mean.into_iter().map(|m| m.min(c)).collect() })
            }
            Family::UniformScale => {
                // Mean θ/2 ≤ c, i.e. θ ≤ 2c. If the data exceed 2c every null
                // member has zero likelihood and 2c is returned as a maximizer.
                if c <= 0.0 {
                    return Err(Error::invalid("uniform mean bound must be positive"));
                }
                let Params::UniformScale { theta } = self.fit_full(data, idx, &EmConfig::default())? else {
                    unreachable!()
                };
                Ok(Params::UniformScale { theta: theta.min(2.0 * c) })
            }
            Family::Mixture { .. } => Err(Error::invalid("mean-at-most constraint is not defined for mixtures")),
        }
    }

    fn fit_profile(&self, data: &Dataset, idx: &[usize], target: ProfileTarget, value: f64) -> Result<Params> {
        if !value.is_finite() {
            return Err(Error::invalid("profile value must be finite"));
        }
        match (self, target) {
            (Family::Gaussian { sigma }, ProfileTarget::Mean) => Ok(Params::Gaussian { mean: value, sigma: *sigma }),
            (Family::GaussianUnknownVar, ProfileTarget::Mean) => {
                let ys = data.scalars_at(idx)?;
                Ok(Params::Gaussian { mean: value, sigma: floored_sd(&ys, value) })
            }
            (family, target) => {
                Err(Error::NotImplemented(format!("profile likelihood of {target:?} for {:?}", family.tag())))
            }
        }
    }

    /// Checks that `params` is a valid member of this family.
    pub fn check_params(&self, params: &Params) -> Result<()> {
        params.validate()?;
        let ok = match (self, params) {
            (Family::Gaussian { sigma }, Params::Gaussian { sigma: s, .. }) => s == sigma,
            (Family::GaussianUnknownVar, Params::Gaussian { .. }) => true,
            (Family::Mixture { k, sigma }, Params::Mixture(m)) => {
                m.len() == *k && sigma.is_none_or(|s| m.sigmas.iter().all(|&x| x == s))
            }
            (Family::UniformScale, Params::UniformScale { .. }) => true,
            (Family::MvnIdentity { d }, Params::MvnIdentity { mean }) => mean.len() == *d,
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("parameters {params:?} do not belong to {self:?}")))
        }
    }
}

/// Scalar functional `g(θ)` for profile likelihoods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProfileTarget {
    Mean,
}

/// The parameter subset over which a likelihood is maximized.
#[derive(Debug, Clone, PartialEq)]
pub enum Constraint {
    Full,
    FixedPoint(Params),
    MeanAtMost(f64),
    MixtureComponents(usize),
    FixedValue { target: ProfileTarget, value: f64 },
}

/// A fitted or user-specified parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Params {
    Gaussian { mean: f64, sigma: f64 },
    Mixture(MixtureParams),
    UniformScale { theta: f64 },
    MvnIdentity { mean: Vec<f64> },
}

/// Weights, means and scales of a univariate Gaussian mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureParams {
    pub weights: Vec<f64>,
    pub means: Vec<f64>,
    pub sigmas: Vec<f64>,
}

impl MixtureParams {
    pub fn new(weights: Vec<f64>, means: Vec<f64>, sigmas: Vec<f64>) -> Result<Self> {
        let m = Self { weights, means, sigmas };
        Params::Mixture(m.clone()).validate()?;
        Ok(m)
    }

    /// Equal-weight mixture with a common scale.
    pub fn equal_weights(means: Vec<f64>, sigma: f64) -> Result<Self> {
        let k = means.len();
        Self::new(vec![1.0 / k as f64; k], means, vec![sigma; k])
    }

    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }

    pub fn log_density(&self, y: f64) -> f64 {
        let terms: Vec<f64> = self
            .weights
            .iter()
            .zip(&self.means)
            .zip(&self.sigmas)
            .map(|((w, m), s)| w.ln() + gaussian_log_density(y, *m, *s))
            .collect();
        log_sum_exp(&terms)
    }
}

pub(crate) fn gaussian_log_density(y: f64, mean: f64, sigma: f64) -> f64 {
    let z = (y - mean) / sigma;
    -0.5 * LN_2PI - sigma.ln() - 0.5 * z * z
}

impl Params {
    pub fn dim(&self) -> usize {
        match self {
            Params::MvnIdentity { mean } => mean.len(),
            _ => 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::invalid(msg));
        match self {
            Params::Gaussian { mean, sigma } => {
                if !mean.is_finite() {
                    return fail(format!("Gaussian mean must be finite, got {mean}"));
                }
                if !(sigma.is_finite() && *sigma >= SIGMA_MIN) {
                    return fail(format!("Gaussian scale must be at least {SIGMA_MIN}, got {sigma}"));
                }
            }
            Params::Mixture(m) => {
                let k = m.weights.len();
                if k == 0 || m.means.len() != k || m.sigmas.len() != k {
                    return fail("mixture blocks must be nonempty and of equal length".into());
                }
                if m.weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
                    return fail("mixture weights must be positive".into());
                }
                let total: f64 = m.weights.iter().sum();
                if (total - 1.0).abs() > WEIGHT_SUM_TOL {
                    return fail(format!("mixture weights must sum to 1, got {total}"));
                }
                if m.means.iter().any(|v| !v.is_finite()) {
                    return fail("mixture means must be finite".into());
                }
                if m.sigmas.iter().any(|s| !(s.is_finite() && *s >= SIGMA_MIN)) {
                    return fail(format!("mixture scales must be at least {SIGMA_MIN}"));
                }
            }
            Params::UniformScale { theta } => {
                if !(theta.is_finite() && *theta > 0.0) {
                    return fail(format!("uniform scale must be positive, got {theta}"));
                }
            }
            Params::MvnIdentity { mean } => {
                if mean.is_empty() || mean.iter().any(|v| !v.is_finite()) {
                    return fail("MVN mean must be a nonempty finite vector".into());
                }
            }
        }
        Ok(())
    }

    /// Natural-log density at `y`; −∞ outside the support.
    pub fn log_density(&self, y: &[f64]) -> Result<f64> {
        if y.len() != self.dim() {
            return Err(Error::invalid(format!(
                "observation has dimension {}, parameters expect {}",
                y.len(),
                self.dim()
            )));
        }
        Ok(self.log_density_unchecked(y))
    }

    pub(crate) fn log_density_unchecked(&self, y: &[f64]) -> f64 {
        match self {
            Params::Gaussian { mean, sigma } => gaussian_log_density(y[0], *mean, *sigma),
            Params::Mixture(m) => m.log_density(y[0]),
            Params::UniformScale { theta } => {
                if y[0] > 0.0 && y[0] <= *theta {
                    -theta.ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            Params::MvnIdentity { mean } => {
                let sq: f64 = y.iter().zip(mean).map(|(a, b)| (a - b) * (a - b)).sum();
                -0.5 * (mean.len() as f64) * LN_2PI - 0.5 * sq
            }
        }
    }

    /// `Σ_{i ∈ idx} log p_θ(Y_i)`, short-circuiting to −∞ on a support violation.
    pub fn log_likelihood(&self, data: &Dataset, idx: &[usize]) -> Result<f64> {
        if data.dim() != self.dim() {
            return Err(Error::invalid(format!("data has dimension {}, parameters expect {}", data.dim(), self.dim())));
        }
        data.check_indices(idx)?;
        let mut total = 0.0;
        for &i in idx {
            let lp = self.log_density_unchecked(data.row(i));
            if lp == f64::NEG_INFINITY {
                return Ok(f64::NEG_INFINITY);
            }
            total += lp;
        }
        Ok(total)
    }

    pub fn log_likelihood_all(&self, data: &Dataset) -> Result<f64> {
        self.log_likelihood(data, &data.all_indices())
    }

    /// Draws one observation, appending it to `out`.
    pub fn draw_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut Vec<f64>) {
        match self {
            Params::Gaussian { mean, sigma } => {
                let z: f64 = StandardNormal.sample(rng);
                out.push(mean + sigma * z);
            }
            Params::Mixture(m) => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut j = m.len() - 1;
                for (c, w) in m.weights.iter().enumerate() {
                    acc += w;
                    if u < acc {
                        j = c;
                        break;
                    }
                }
                let z: f64 = StandardNormal.sample(rng);
                out.push(m.means[j] + m.sigmas[j] * z);
            }
            Params::UniformScale { theta } => {
                // 1 - U lies in (0, 1].
                let u: f64 = rng.random();
                out.push(theta * (1.0 - u));
            }
            Params::MvnIdentity { mean } => {
                for m in mean {
                    let z: f64 = StandardNormal.sample(rng);
                    out.push(m + z);
                }
            }
        }
    }

    /// `n` i.i.d. draws from `P_θ`.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Dataset> {
        self.validate()?;
        if n == 0 {
            return Err(Error::invalid("sample size must be at least 1"));
        }
        let mut values = Vec::with_capacity(n * self.dim());
        for _ in 0..n {
            self.draw_into(rng, &mut values);
        }
        Dataset::new(self.dim(), values)
    }
}

/// `n` i.i.d. draws from `P_θ`, deterministic in `seed`.
pub fn sample_from(params: &Params, n: usize, seed: u64) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    params.sample(n, &mut rng)
}

pub(crate) fn mean(ys: &[f64]) -> f64 {
    ys.iter().sum::<f64>() / ys.len() as f64
}

/// `sqrt(mean((y - mu)²))` floored at `SIGMA_MIN`.
pub(crate) fn floored_sd(ys: &[f64], mu: f64) -> f64 {
    let ms = ys.iter().map(|y| (y - mu) * (y - mu)).sum::<f64>() / ys.len() as f64;
    ms.max(SIGMA_MIN * SIGMA_MIN).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn log_density_examples() {
        let std = Params::Gaussian { mean: 0.0, sigma: 1.0 };
        assert!(close(std.log_density(&[0.0]).unwrap(), -0.918_938_53, 1e-8));

        let unif = Params::UniformScale { theta: 2.0 };
        assert_eq!(unif.log_density(&[3.0]).unwrap(), f64::NEG_INFINITY);
        assert_eq!(unif.log_density(&[0.0]).unwrap(), f64::NEG_INFINITY);
        assert!(close(unif.log_density(&[2.0]).unwrap(), -(2f64.ln()), 1e-15));

        // ½φ(1) + ½φ(1) = φ(1).
        let mix = Params::Mixture(MixtureParams::equal_weights(vec![-1.0, 1.0], 1.0).unwrap());
        assert!(close(mix.log_density(&[0.0]).unwrap(), -1.418_938_53, 1e-8));

        assert!(std.log_density(&[0.0, 1.0]).is_err());
    }

    #[test]
    fn log_likelihood_examples() {
        let std = Params::Gaussian { mean: 0.0, sigma: 1.0 };
        let zeros = Dataset::scalar(vec![0.0, 0.0]).unwrap();
        assert!(close(std.log_likelihood_all(&zeros).unwrap(), -2.0 * HALF_LN_2PI, 1e-12));

        let unif = Params::UniformScale { theta: 1.0 };
        let d = Dataset::scalar(vec![0.5, 1.5]).unwrap();
        assert_eq!(unif.log_likelihood_all(&d).unwrap(), f64::NEG_INFINITY);

        let d = Dataset::scalar(vec![1.0, 3.0]).unwrap();
        assert!(close(std.log_likelihood_all(&d).unwrap(), -2.0 * HALF_LN_2PI - 5.0, 1e-12));

        assert!(std.log_likelihood(&d, &[]).is_err());
        assert!(std.log_likelihood(&d, &[2]).is_err());
    }

    #[test]
    fn fit_mle_examples() {
        let g = Family::Gaussian { sigma: 1.0 };
        let d = Dataset::scalar(vec![1.0, 2.0, 3.0]).unwrap();
        let idx = d.all_indices();
        assert_eq!(g.fit(&d, &idx, &Constraint::Full).unwrap(), Params::Gaussian { mean: 2.0, sigma: 1.0 });

        let u = Dataset::scalar(vec![0.3, 0.9, 0.5]).unwrap();
        assert_eq!(
            Family::UniformScale.fit(&u, &u.all_indices(), &Constraint::Full).unwrap(),
            Params::UniformScale { theta: 0.9 }
        );

        let d = Dataset::scalar(vec![1.0, 2.0]).unwrap();
        let fit = g.fit(&d, &d.all_indices(), &Constraint::MeanAtMost(0.0)).unwrap();
        assert_eq!(fit, Params::Gaussian { mean: 0.0, sigma: 1.0 });

        // Variance floor on constant data.
        let c = Dataset::scalar(vec![4.0, 4.0, 4.0]).unwrap();
        let fit = Family::GaussianUnknownVar.fit(&c, &c.all_indices(), &Constraint::Full).unwrap();
        assert_eq!(fit, Params::Gaussian { mean: 4.0, sigma: SIGMA_MIN });
    }

    #[test]
    fn fit_rejects_infeasible_or_mismatched_constraints() {
        let d = Dataset::scalar(vec![1.0, 2.0]).unwrap();
        let idx = d.all_indices();
        let g = Family::Gaussian { sigma: 1.0 };
        assert!(g.fit(&d, &idx, &Constraint::MixtureComponents(2)).is_err());
        assert!(g.fit(&d, &idx, &Constraint::FixedPoint(Params::UniformScale { theta: 1.0 })).is_err());
        assert!(g.fit(&d, &idx, &Constraint::FixedPoint(Params::Gaussian { mean: 0.0, sigma: 2.0 })).is_err());
        assert!(Family::unit_mixture(2).fit(&d, &idx, &Constraint::MeanAtMost(0.0)).is_err());
        assert!(matches!(
            Family::UniformScale.fit(&d, &idx, &Constraint::FixedValue { target: ProfileTarget::Mean, value: 1.0 }),
            Err(Error::NotImplemented(_))
        ));
        let mvn = Dataset::from_rows(&[vec![1.0, 2.0]]).unwrap();
        assert!(g.fit(&mvn, &[0], &Constraint::Full).is_err());
    }

    #[test]
    fn uniform_mean_bound_caps_theta() {
        let d = Dataset::scalar(vec![0.2, 0.7]).unwrap();
        let idx = d.all_indices();
        let f = Family::UniformScale;
        assert_eq!(f.fit(&d, &idx, &Constraint::MeanAtMost(1.0)).unwrap(), Params::UniformScale { theta: 0.7 });
        let capped = f.fit(&d, &idx, &Constraint::MeanAtMost(0.25)).unwrap();
        assert_eq!(capped, Params::UniformScale { theta: 0.5 });
        assert_eq!(capped.log_likelihood(&d, &idx).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn mvn_mean_at_most_is_coordinatewise() {
        let d = Dataset::from_rows(&[vec![1.0, -1.0], vec![3.0, -3.0]]).unwrap();
        let fit = Family::MvnIdentity { d: 2 }.fit(&d, &[0, 1], &Constraint::MeanAtMost(0.5)).unwrap();
        assert_eq!(fit, Params::MvnIdentity { mean: vec![0.5, -2.0] });
    }

    #[test]
    fn param_validation() {
        assert!(Params::Gaussian { mean: 0.0, sigma: 1e-4 }.validate().is_err());
        assert!(Params::UniformScale { theta: 0.0 }.validate().is_err());
        assert!(MixtureParams::new(vec![0.5, 0.6], vec![0.0, 1.0], vec![1.0, 1.0]).is_err());
        assert!(MixtureParams::new(vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn sampling_support_and_determinism() {
        let u = Params::UniformScale { theta: 1.0 };
        let d = sample_from(&u, 10_000, 11).unwrap();
        assert!(d.values().iter().all(|&v| v > 0.0 && v <= 1.0));
        assert_eq!(sample_from(&u, 50, 4).unwrap(), sample_from(&u, 50, 4).unwrap());
        assert_ne!(sample_from(&u, 50, 4).unwrap(), sample_from(&u, 50, 5).unwrap());
        assert!(sample_from(&u, 0, 1).is_err());
    }

    #[test]
    fn gaussian_sample_mean_within_clt_band() {
        let n = 100_000;
        let d = sample_from(&Params::Gaussian { mean: 0.0, sigma: 1.0 }, n, 2024).unwrap();
        let m = mean(d.values());
        assert!(m.abs() < 4.0 / (n as f64).sqrt(), "sample mean {m}");
    }
}
