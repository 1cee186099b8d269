//! Squared radius of the split region for `N_d(θ, I)` against the classical
//! chi-square ball.
//!
//! With halves of `m` points and `n = 2m`, the split region has squared
//! radius `(2/m) ln(1/α) + ‖Ȳ0 − Ȳ1‖²`, whose mean is `(4 ln(1/α) + 4d)/n`;
//! the classical region has fixed squared radius `c_{α,d}/n`.

use serde::Serialize;

use super::{replicate, MeanEstimate};
use crate::data::DataSplit;
use crate::error::{Error, Result};
use crate::family::Params;
use crate::numeric::chi_square_upper_quantile;
use crate::split::gaussian_region;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadiusReport {
    pub d: usize,
    pub n: usize,
    pub alpha: f64,
    pub emp_mean_r2: f64,
    pub se: f64,
    pub theory_r2: f64,
    pub classical_r2: f64,
    pub ratio_to_classical: f64,
}

/// Monte Carlo mean squared radius at `θ = 0`. Accepts `0 < α ≤ 1`.
pub fn radius_experiment(
    d: usize,
    m: usize,
    alpha: f64,
    reps: usize,
    seed: u64,
    threads: usize,
) -> Result<RadiusReport> {
    if d == 0 || m == 0 || reps == 0 {
        return Err(Error::invalid("dimension, half size and replications must be positive"));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::invalid(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    let n = 2 * m;
    let truth = Params::MvnIdentity { mean: vec![0.0; d] };
    let split = DataSplit::first_half(n)?;
    let r2 = replicate(reps, seed, threads, |rng| {
        let data = truth.sample(n, rng)?;
        Ok(gaussian_region(&data, &split, alpha)?.squared_radius)
    })?;
    let emp = MeanEstimate::from_values(&r2);
    let nf = n as f64;
    let theory_r2 = (4.0 * (1.0 / alpha).ln() + 4.0 * d as f64) / nf;
    let classical_r2 = if alpha < 1.0 { chi_square_upper_quantile(alpha, d as f64)? / nf } else { 0.0 };
    Ok(RadiusReport {
        d,
        n,
        alpha,
        emp_mean_r2: emp.mean,
        se: emp.se,
        theory_r2,
        classical_r2,
        ratio_to_classical: emp.mean / classical_r2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theory_value_and_reproducibility() {
        let a = radius_experiment(10, 50, 0.1, 200, 7, 1).unwrap();
        assert!((a.theory_r2 - 0.49210340371976186).abs() < 1e-14);
        assert!((a.classical_r2 - 15.987179172105265 / 100.0).abs() < 1e-9);
        assert_eq!(a, radius_experiment(10, 50, 0.1, 200, 7, 2).unwrap());
        assert!((a.emp_mean_r2 - a.theory_r2).abs() < 5.0 * a.se);
    }

    #[test]
    fn alpha_one_limit() {
        let r = radius_experiment(3, 20, 1.0, 50, 1, 1).unwrap();
        assert!((r.theory_r2 - 12.0 / 40.0).abs() < 1e-15);
        assert!(radius_experiment(3, 20, 0.0, 50, 1, 1).is_err());
    }
}
