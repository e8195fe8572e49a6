//! Special functions used across the crate.

use statrs::function::gamma;

pub fn ln_gamma(x: f64) -> f64 {
    gamma::ln_gamma(x)
}

/// Standard normal cdf. Evaluated through `erfc` on the tail side so that
/// neither tail loses relative accuracy to cancellation.
pub fn norm_cdf(x: f64) -> f64 {
    if x < 0.0 {
        0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
    } else {
        1.0 - 0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
    }
}

/// Upper tail `1 - Φ(x)`.
pub fn norm_sf(x: f64) -> f64 {
    norm_cdf(-x)
}

pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}
