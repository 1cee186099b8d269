//! Log-space arithmetic and the chi-square quantile.

use statrs::function::erf::erf_inv;
use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

use crate::error::{Error, Result};

pub const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// `ln Σ exp(x_i)` over extended reals. Empty input gives −∞.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max.is_infinite() {
        return max;
    }
    max + xs.iter().map(|&x| (x - max).exp()).sum::<f64>().ln()
}

/// `ln( (1/B) Σ exp(x_i) )`.
pub fn log_mean_exp(xs: &[f64]) -> f64 {
    log_sum_exp(xs) - (xs.len() as f64).ln()
}

/// Lower quantile of the chi-square distribution: the `x` with `P(χ²_k ≤ x) = p`.
pub fn chi_square_quantile(p: f64, dof: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!("probability must lie in (0, 1), got {p}")));
    }
    invert_chi_square(p, dof, Tail::Lower)
}

/// Upper-α quantile `c_{α,k}`: the `x` with `P(χ²_k > x) = α`.
pub fn chi_square_upper_quantile(alpha: f64, dof: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    invert_chi_square(alpha, dof, Tail::Upper)
}

#[derive(Clone, Copy)]
enum Tail {
    Lower,
    Upper,
}

const QUANTILE_TOL: f64 = 1e-10;

fn invert_chi_square(target: f64, dof: f64, tail: Tail) -> Result<f64> {
    if !(dof > 0.0 && dof.is_finite()) {
        return Err(Error::invalid(format!("degrees of freedom must be positive, got {dof}")));
    }
    let a = 0.5 * dof;
    let cdf = |x: f64| -> f64 {
        if x <= 0.0 {
            return match tail {
                Tail::Lower => 0.0,
                Tail::Upper => 1.0,
            };
        }
        match tail {
            Tail::Lower => gamma_lr(a, 0.5 * x),
            Tail::Upper => gamma_ur(a, 0.5 * x),
        }
    };
    // f(x) = cdf(x) - target is increasing for the lower tail, decreasing for the upper.
    let sign = match tail {
        Tail::Lower => 1.0,
        Tail::Upper => -1.0,
    };
    let f = |x: f64| sign * (cdf(x) - target);
    let log_norm = a * std::f64::consts::LN_2 + ln_gamma(a);
    let density = |x: f64| ((a - 1.0) * x.ln() - 0.5 * x - log_norm).exp();

    // Wilson-Hilferty starting point.
    let p_lower = match tail {
        Tail::Lower => target,
        Tail::Upper => 1.0 - target,
    };
    let z = std::f64::consts::SQRT_2 * erf_inv(2.0 * p_lower - 1.0);
    let h = 2.0 / (9.0 * dof);
    let mut x = (dof * (1.0 - h + z * h.sqrt()).powi(3)).max(1e-8);

    let mut lo = 0.0;
    let mut hi = x.max(1.0);
    while f(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let fx = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if fx < 0.0 {
            lo = lo.max(x);
        } else {
            hi = hi.min(x);
        }
        // f' is the chi-square density for either tail.
        let mut next = x - fx / density(x);
        if !next.is_finite() || next <= lo || next >= hi {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= QUANTILE_TOL * x.max(1.0) {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}
