//! Special functions used by the closed-form kernels.

use std::f64::consts::PI;

pub use statrs::function::erf::{erfc, erfc_inv};

/// Bessel function of the first kind, order one.
///
/// Uses Bessel's integral `J₁(x) = (1/π)∫₀^π cos(θ - x sin θ) dθ`. The
/// integrand is smooth and periodic, so the trapezoidal rule converges
/// geometrically once the node count exceeds `|x|` by a margin.
pub fn bessel_j1(x: f64) -> f64 {
    let ax = x.abs();
    if ax < 2.0 {
        // The quadrature sum cancels down to O(x); the series does not.
        let half = x / 2.0;
        let mut term = half;
        let mut sum = term;
        for k in 1..20 {
            let k = k as f64;
            term *= -half * half / (k * (k + 1.0));
            sum += term;
        }
        return sum;
    }
    let n = 40 + (1.1 * ax).ceil() as usize;
    let h = PI / n as f64;
    // The endpoint terms cos(0) and cos(π) cancel.
    let mut sum = 0.0;
    for k in 1..n {
        let theta = k as f64 * h;
        sum += (theta - ax * theta.sin()).cos();
    }
    let j = sum / n as f64;
    if x < 0.0 {
        -j
    } else {
        j
    }
}

/// `2·J₁(x)/x`, continuous at the origin with value 1.
pub fn jinc(x: f64) -> f64 {
    let ax = x.abs();
    if ax < 1e-4 {
        let x2 = ax * ax;
        1.0 - x2 / 8.0 + x2 * x2 / 192.0
    } else {
        2.0 * bessel_j1(ax) / ax
    }
}
