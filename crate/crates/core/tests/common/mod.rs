//! Independent reference implementations used only by the tests.
#![allow(dead_code)]

use std::f64::consts::PI;

/// Composite Simpson rule with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// erfc(y) = 2/√π ∫_y^∞ e^{-s²} ds, truncated where the integrand is below 1e-40.
pub fn erfc_quad(y: f64) -> f64 {
    2.0 / PI.sqrt() * simpson(|s| (-s * s).exp(), y, y + 10.0, 40_000)
}

pub fn erf_quad(y: f64) -> f64 {
    2.0 / PI.sqrt() * simpson(|s| (-s * s).exp(), 0.0, y, 40_000)
}

/// ln Γ(z) for z ≥ 15 from the Stirling series.
fn ln_gamma_stirling(z: f64) -> f64 {
    let z2 = z * z;
    let series = 1.0 / (12.0 * z) - 1.0 / (360.0 * z * z2) + 1.0 / (1260.0 * z * z2 * z2)
        - 1.0 / (1680.0 * z * z2 * z2 * z2)
        + 1.0 / (1188.0 * z * z2 * z2 * z2 * z2);
    (z - 0.5) * z.ln() - z + 0.5 * (2.0 * PI).ln() + series
}

/// Γ(x) by upward recurrence into the Stirling range; x must avoid the poles.
pub fn gamma_stirling(x: f64) -> f64 {
    let mut z = x;
    let mut prod = 1.0;
    while z < 15.0 {
        prod *= z;
        z += 1.0;
    }
    ln_gamma_stirling(z).exp() / prod
}

/// Classical Neumann coefficient from Ste = √π (σ/2) e^{σ²/4} erf(σ/2), by bisection.
pub fn classical_sigma(ste: f64) -> f64 {
    let g = |s: f64| {
        let h = 0.5 * s;
        PI.sqrt() * h * (h * h).exp() * erf_quad(h) - ste
    };
    let (mut lo, mut hi) = (0.0, 10.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    0.5 * (lo + hi)
}
