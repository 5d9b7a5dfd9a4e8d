//! Fractional operators on uniformly sampled time series.
//!
//! * Caputo derivative of order γ via the L1 scheme (piecewise-linear
//!   interpolation of f, kernel integrated exactly per cell).
//! * Riemann–Liouville integral via product trapezoid weights, and the RL
//!   derivative as a one-sided difference of the order-(1-δ) integral.
//! * The closed-form Caputo power rule, used as an oracle.
//!
//! All sums are the direct O(N²) history sums.

use thiserror::Error;

use crate::specfun::{gamma_fn, rgamma, SpecialError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FracOpsError {
    #[error("time series needs at least 2 samples, got {0}")]
    TooShort(usize),
    #[error("time step must be positive and finite, got {0}")]
    BadStep(f64),
    #[error("fractional order gamma = {0} outside (0, 1]")]
    GammaOutOfRange(f64),
    #[error("Riemann-Liouville order delta = {0} outside (-1, 1)")]
    DeltaOutOfRange(f64),
    #[error(
        "window requires start < n <= last index, got start = {start}, n = {n}, last = {last}"
    )]
    BadWindow { start: usize, n: usize, last: usize },
    #[error("power-rule exponent beta = {0} must be positive")]
    BadExponent(f64),
    #[error("power-rule time t = {0} must be positive")]
    BadTime(f64),
    #[error(transparent)]
    Special(#[from] SpecialError),
}

/// Uniformly sampled signal, `values[n]` at `t = n · dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    values: Vec<f64>,
    dt: f64,
}

impl TimeSeries {
    pub fn new(values: Vec<f64>, dt: f64) -> Result<Self, FracOpsError> {
        if values.len() < 2 {
            return Err(FracOpsError::TooShort(values.len()));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(FracOpsError::BadStep(dt));
        }
        Ok(Self { values, dt })
    }

    /// Samples `f` at `t = n · dt` for `n = 0..=steps`.
    pub fn sample(f: impl Fn(f64) -> f64, dt: f64, steps: usize) -> Result<Self, FracOpsError> {
        let values = (0..=steps).map(|n| f(n as f64 * dt)).collect();
        Self::new(values, dt)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn last_index(&self) -> usize {
        self.values.len() - 1
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }
}

pub(crate) fn check_gamma(gamma: f64) -> Result<(), FracOpsError> {
    if gamma > 0.0 && gamma <= 1.0 {
        Ok(())
    } else {
        Err(FracOpsError::GammaOutOfRange(gamma))
    }
}

/// L1 weights on a uniform grid.
///
/// The L1 Caputo sum at level n is
/// `scale · Σ_{m=0}^{n-1} b_m (f_{n-m} - f_{n-m-1})` with
/// `b_m = (m+1)^{1-γ} - m^{1-γ}` and `scale = dt^{-γ} / Γ(2-γ)`.
/// At γ = 1 only `b_0 = 1` survives and the sum is a backward difference.
#[derive(Debug, Clone)]
pub struct L1Weights {
    gamma: f64,
    scale: f64,
    b: Vec<f64>,
}

impl L1Weights {
    pub fn new(gamma: f64, dt: f64, levels: usize) -> Result<Self, FracOpsError> {
        check_gamma(gamma)?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(FracOpsError::BadStep(dt));
        }
        let beta = 1.0 - gamma;
        let b = (0..levels.max(1))
            .map(|m| {
                if gamma == 1.0 {
                    if m == 0 {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    let m = m as f64;
                    (m + 1.0).powf(beta) - m.powf(beta)
                }
            })
            .collect();
        let scale = dt.powf(-gamma) / gamma_fn(2.0 - gamma)?;
        Ok(Self { gamma, scale, b })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `dt^{-γ} / Γ(2-γ)`.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// `b_m`; requires `m` below the construction length.
    pub fn b(&self, m: usize) -> f64 {
        self.b[m]
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.b
    }

    /// True when the history (m ≥ 1) weights are all zero, i.e. γ = 1.
    pub fn is_local(&self) -> bool {
        self.gamma == 1.0
    }

    /// `Σ_{j=start}^{n-1} b_{n-1-j} (f_{j+1} - f_j)` without the scale factor.
    pub fn window_sum(&self, f: &[f64], start: usize, n: usize) -> f64 {
        let from = if self.is_local() { n - 1 } else { start };
        (from..n)
            .map(|j| self.b[n - 1 - j] * (f[j + 1] - f[j]))
            .sum()
    }

    /// History part `Σ_{m=1}^{n-1} b_m Δ_{n-m}` where `increments[k-1] = f_k - f_{k-1}`
    /// for `k = 1..n`. `first` skips a leading run of zero increments.
    pub fn history(&self, increments: &[f64], first: usize) -> f64 {
        if self.is_local() {
            return 0.0;
        }
        let n = increments.len() + 1;
        // increments[k-1] pairs with b_{n-k}
        increments
            .iter()
            .enumerate()
            .skip(first)
            .map(|(i, d)| self.b[n - 1 - i] * d)
            .sum()
    }
}

/// L1 approximation of the Caputo derivative of order γ at every level.
///
/// Level 0 is reported as 0 (the Caputo derivative of a C¹ function
/// vanishes at the lower terminal). γ = 1 gives backward differences.
pub fn caputo_l1(f: &TimeSeries, gamma: f64) -> Result<Vec<f64>, FracOpsError> {
    let w = L1Weights::new(gamma, f.dt, f.len())?;
    let v = &f.values;
    let mut out = vec![0.0; v.len()];
    for (n, slot) in out.iter_mut().enumerate().skip(1) {
        *slot = w.scale * w.window_sum(v, 0, n);
    }
    Ok(out)
}

/// L1 Caputo derivative at level `n` with the memory integral starting at
/// level `start` instead of 0.
pub fn caputo_l1_window(
    f: &TimeSeries,
    start_index: usize,
    gamma: f64,
    n: usize,
) -> Result<f64, FracOpsError> {
    let last = f.last_index();
    if start_index >= n || n > last {
        return Err(FracOpsError::BadWindow {
            start: start_index,
            n,
            last,
        });
    }
    let w = L1Weights::new(gamma, f.dt, n)?;
    Ok(w.scale * w.window_sum(&f.values, start_index, n))
}

/// Product-trapezoid RL integral of order `order` ∈ (0, 1] at every level.
fn rl_integral(f: &TimeSeries, order: f64) -> Result<Vec<f64>, FracOpsError> {
    let v = &f.values;
    let p = order + 1.0;
    let scale = f.dt.powf(order) * rgamma(order + 2.0);
    // d_m = (m+1)^{p} - 2 m^{p} + (m-1)^{p} for m ≥ 1
    let pw: Vec<f64> = (0..=v.len()).map(|m| (m as f64).powf(p)).collect();
    let mut out = vec![0.0; v.len()];
    for n in 1..v.len() {
        let nf = n as f64;
        let mut acc = (pw[n - 1] - (nf - 1.0 - order) * nf.powf(order)) * v[0];
        for (j, fj) in v.iter().enumerate().take(n).skip(1) {
            let m = n - j;
            acc += (pw[m + 1] - 2.0 * pw[m] + pw[m - 1]) * fj;
        }
        acc += v[n];
        out[n] = scale * acc;
    }
    Ok(out)
}

/// Riemann–Liouville operator of order δ ∈ (-1, 1).
///
/// δ < 0 is the fractional integral of order -δ; δ > 0 is the time
/// derivative of the order-(1-δ) integral, taken as a backward difference
/// (forward difference at level 0); δ = 0 returns `f`.
pub fn rl_operator(f: &TimeSeries, delta: f64) -> Result<Vec<f64>, FracOpsError> {
    if !(delta > -1.0 && delta < 1.0) {
        return Err(FracOpsError::DeltaOutOfRange(delta));
    }
    if delta == 0.0 {
        return Ok(f.values.clone());
    }
    if delta < 0.0 {
        return rl_integral(f, -delta);
    }
    let integral = rl_integral(f, 1.0 - delta)?;
    let dt = f.dt;
    let mut out = vec![0.0; integral.len()];
    for n in 1..integral.len() {
        out[n] = (integral[n] - integral[n - 1]) / dt;
    }
    out[0] = out[1];
    Ok(out)
}

/// Caputo derivative of `t^β`: `Γ(β+1)/Γ(β+1-γ) · t^{β-γ}`.
pub fn caputo_power_rule(beta: f64, gamma: f64, t: f64) -> Result<f64, FracOpsError> {
    check_gamma(gamma)?;
    if !(beta > 0.0) {
        return Err(FracOpsError::BadExponent(beta));
    }
    if !(t > 0.0) {
        return Err(FracOpsError::BadTime(t));
    }
    Ok(gamma_fn(beta + 1.0)? * rgamma(beta + 1.0 - gamma) * t.powf(beta - gamma))
}
