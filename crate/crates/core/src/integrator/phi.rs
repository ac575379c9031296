//! The functions `phi_l(v) = sum_k (-v)^k / (2k + l)!`, `l = 0, 1, 2`, of
//! `v = (h omega)^2`.
//!
//! Closed forms are `cos(x)`, `sin(x)/x` and `(1 - cos x)/x^2` with `x = sqrt(v)`.
//! Below [`SERIES_CROSSOVER`] the truncated series is used instead.

use crate::error::{Error, Result};

pub const SERIES_CROSSOVER: f64 = 1e-4;

/// Highest series index `k` retained below the crossover.
pub const SERIES_TERMS: usize = 4;

pub fn phi(l: usize, v: f64) -> Result<f64> {
    if l > 2 {
        return Err(Error::InvalidParameter(format!(
            "phi index must be 0, 1 or 2, got {l}"
        )));
    }
    if !(v >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "phi argument must be nonnegative, got {v}"
        )));
    }
    Ok(if v < SERIES_CROSSOVER {
        phi_series(l, v)
    } else {
        phi_closed(l, v)
    })
}

/// Truncated series through `k = SERIES_TERMS`.
pub fn phi_series(l: usize, v: f64) -> f64 {
    // Horner in -v with coefficients 1/(2k+l)!
    let mut acc = 0.0;
    for k in (0..=SERIES_TERMS).rev() {
        acc = acc * (-v) + 1.0 / factorial(2 * k + l);
    }
    acc
}

/// Closed forms; `phi_2` uses `2 sin^2(x/2)/x^2` to avoid cancellation.
pub fn phi_closed(l: usize, v: f64) -> f64 {
    let x = v.sqrt();
    match l {
        0 => x.cos(),
        1 => x.sin() / x,
        _ => {
            let s = (0.5 * x).sin();
            2.0 * s * s / v
        }
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}
