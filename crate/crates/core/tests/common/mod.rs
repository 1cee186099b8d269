//! Helpers shared by the integration suites.

#![allow(dead_code)]

use uinfer::{Constraint, Dataset, Family, Mle, Params};

/// `log M_t` recomputed from scratch on the first `t` rows of `stream`.
pub fn batch_log_m(alt: &Family, null: &Mle, init: &Params, burn_in: usize, stream: &Dataset, t: usize) -> f64 {
    if t <= burn_in {
        return 0.0;
    }
    let mut numerator = 0.0;
    for i in burn_in..t {
        let theta1 = if i == 0 {
            init.clone()
        } else {
            alt.fit(stream, &(0..i).collect::<Vec<_>>(), &Constraint::Full).unwrap()
        };
        numerator += theta1.log_density(stream.row(i)).unwrap();
    }
    let window: Vec<usize> = (burn_in..t).collect();
    let theta0 = null.family.fit(stream, &window, &null.constraint).unwrap();
    let denominator = theta0.log_likelihood(stream, &window).unwrap();
    if numerator == f64::NEG_INFINITY {
        f64::NEG_INFINITY
    } else {
        numerator - denominator
    }
}

/// Trapezoid rule on `[lo, hi]` with `steps` panels.
pub fn integrate(f: impl Fn(f64) -> f64, lo: f64, hi: f64, steps: usize) -> f64 {
    let h = (hi - lo) / steps as f64;
    let inner: f64 = (1..steps).map(|i| f(lo + h * i as f64)).sum();
    h * (0.5 * (f(lo) + f(hi)) + inner)
}
