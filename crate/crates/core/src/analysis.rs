//! Residual evaluators and diagnostics.
//!
//! * [`model_a_residual`]: the heat equation with the Caputo memory starting
//!   at the front arrival time s⁻¹(x), applied to a closed-form or simulated
//!   temperature.
//! * [`memory_tail`]: the part of the full Caputo integral of the closed-form
//!   solution that lies before s⁻¹(x). A closed-form solution of the
//!   full-memory equation violates the windowed one by exactly this amount.
//! * [`model_c_terms`], [`nonlocal_flux`], [`energy_balance_check`] and
//!   [`exponent_fit`].

use std::cell::RefCell;

use rayon::prelude::*;
use thiserror::Error;

use crate::closedform::{ClosedFormError, FracParams, Material, SimilaritySolution};
use crate::fracops::{caputo_l1, caputo_l1_window, rl_operator, FracOpsError, TimeSeries};
use crate::quad::kernel_integral;
use crate::solver::{FrontPath, SimState};
use crate::specfun::{rgamma, SpecialError, WrightArgs, WrightSeries};

/// Uniform time steps used to sample a closed-form temperature between
/// s⁻¹(x) and t for the L1 Caputo window.
pub const FINE_STEPS: usize = 20_000;

/// Time steps on [0, t] for the Riemann–Liouville front term of Model C.
pub const RL_STEPS: usize = 2_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("point (x = {x}, t = {t}) is not inside the liquid region")]
    OutsideLiquid { x: f64, t: f64 },
    #[error("singular latent term: t equals the arrival time at x = {x} (t = {t})")]
    SingularPoint { x: f64, t: f64 },
    #[error("fit window [{lo}, {hi}] has {found} usable samples, need at least 10")]
    TooFewSamples { lo: f64, hi: f64, found: usize },
    #[error("degenerate fit window: {0}")]
    Degenerate(&'static str),
    #[error("{points} points but {values} values")]
    LengthMismatch { points: usize, values: usize },
    #[error(transparent)]
    ClosedForm(#[from] ClosedFormError),
    #[error(transparent)]
    Operator(#[from] FracOpsError),
    #[error(transparent)]
    Special(#[from] SpecialError),
}

/// Max, mean and sign counts of a residual set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualSummary {
    pub max_abs: f64,
    pub mean_abs: f64,
    pub min: f64,
    pub max: f64,
    pub positive: usize,
    pub negative: usize,
}

impl ResidualSummary {
    fn of(values: &[f64]) -> Self {
        let mut s = Self {
            max_abs: 0.0,
            mean_abs: 0.0,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
            positive: 0,
            negative: 0,
        };
        for &v in values {
            s.max_abs = s.max_abs.max(v.abs());
            s.mean_abs += v.abs();
            s.min = s.min.min(v);
            s.max = s.max.max(v);
            if v > 0.0 {
                s.positive += 1;
            } else if v < 0.0 {
                s.negative += 1;
            }
        }
        if !values.is_empty() {
            s.mean_abs /= values.len() as f64;
        }
        s
    }
}

/// Residual values at (x, t) points.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    points: Vec<(f64, f64)>,
    values: Vec<f64>,
    summary: ResidualSummary,
}

impl ResidualReport {
    pub fn new(points: Vec<(f64, f64)>, values: Vec<f64>) -> Result<Self, AnalysisError> {
        if points.len() != values.len() {
            return Err(AnalysisError::LengthMismatch {
                points: points.len(),
                values: values.len(),
            });
        }
        let summary = ResidualSummary::of(&values);
        Ok(Self {
            points,
            values,
            summary,
        })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn summary(&self) -> &ResidualSummary {
        &self.summary
    }
}

/// Temperature field fed to [`model_a_residual`].
#[derive(Debug, Clone, Copy)]
pub enum TemperatureSource<'a> {
    /// Closed form; s⁻¹ and u_xx are analytic.
    Similarity(&'a SimilaritySolution),
    /// Solver output; points snap to the nearest node and level, s⁻¹ to the
    /// level at which the node melted.
    Simulation(&'a SimState),
}

fn check_inside(sol: &SimilaritySolution, x: f64, t: f64) -> Result<(), AnalysisError> {
    if x > 0.0 && t > 0.0 && x < sol.s(t) {
        Ok(())
    } else {
        Err(AnalysisError::OutsideLiquid { x, t })
    }
}

/// L1 Caputo derivative of the liquid formula at (x, t) with the memory
/// starting at s⁻¹(x), on `steps` uniform steps.
fn windowed_caputo(
    sol: &SimilaritySolution,
    gamma: f64,
    x: f64,
    t: f64,
    steps: usize,
) -> Result<f64, AnalysisError> {
    let ta = sol.s_inverse(x);
    let h = (t - ta) / steps as f64;
    let values = (0..=steps)
        .map(|j| {
            if j == 0 {
                Ok(0.0)
            } else {
                sol.u_liquid(x, ta + j as f64 * h)
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    let series = TimeSeries::new(values, h)?;
    Ok(caputo_l1_window(&series, 0, gamma, steps)?)
}

/// ρc ∂^γu/∂t^γ (memory from s⁻¹(x)) - kτ^{1-γ} u_xx at each point.
pub fn model_a_residual(
    source: TemperatureSource<'_>,
    mat: &Material,
    frac: &FracParams,
    points: &[(f64, f64)],
) -> Result<ResidualReport, AnalysisError> {
    let rho_c = mat.rho * mat.c;
    let diffusive = mat.k * frac.tau_factor();
    let values = match source {
        TemperatureSource::Similarity(sol) => points
            .par_iter()
            .map(|&(x, t)| {
                check_inside(sol, x, t)?;
                let caputo = windowed_caputo(sol, frac.gamma, x, t, FINE_STEPS)?;
                Ok(rho_c * caputo - diffusive * sol.u_xx(x, t)?)
            })
            .collect::<Result<Vec<_>, AnalysisError>>()?,
        TemperatureSource::Simulation(state) => points
            .par_iter()
            .map(|&(x, t)| simulated_residual(state, frac.gamma, rho_c, diffusive, x, t))
            .collect::<Result<Vec<_>, AnalysisError>>()?,
    };
    ResidualReport::new(points.to_vec(), values)
}

fn simulated_residual(
    state: &SimState,
    gamma: f64,
    rho_c: f64,
    diffusive: f64,
    x: f64,
    t: f64,
) -> Result<f64, AnalysisError> {
    let grid = &state.grid;
    let outside = AnalysisError::OutsideLiquid { x, t };
    let (dx, dt) = (grid.dx(), grid.dt());
    let i = (x / dx).round();
    let n = (t / dt).round();
    if !(i >= 2.0 && n >= 1.0 && (i as usize) + 2 <= grid.nx && (n as usize) < state.levels()) {
        return Err(outside);
    }
    let (i, n) = (i as usize, n as usize);
    let onset = match state.onset[i] {
        Some(o) if o < n && grid.x(i + 2) < state.front.positions()[n] => o,
        _ => return Err(outside),
    };
    let history = TimeSeries::new(state.node_history(i), dt)?;
    let caputo = caputo_l1_window(&history, onset - 1, gamma, n)?;
    // wide stencil, independent of the solver's three-point Laplacian
    let row = &state.temperature[n];
    let u_xx = (row[i + 2] - 2.0 * row[i] + row[i - 2]) / (4.0 * dx * dx);
    Ok(rho_c * caputo - diffusive * u_xx)
}

/// Similarity value ξ beyond which ∂u/∂t of the closed form is dropped from
/// the tail integral: W(-ξ, -γ/2, 1) is negligible there, or the series has
/// reached its rounding floor.
fn tail_cutoff(sol: &SimilaritySolution) -> Result<f64, AnalysisError> {
    let series = WrightSeries::default();
    let mu = -0.5 * sol.gamma;
    let mut z = 1.5 * sol.sigma + 1.0;
    loop {
        let sum = series.sum(WrightArgs::new(-z, mu, 1.0)?)?;
        if sum.value.abs() < 1e-12 || sum.rounding_error() > 1e-3 * sum.value.abs() || z > 60.0 {
            return Ok(z);
        }
        z *= 1.2;
    }
}

/// (ρc/Γ(1-γ)) ∫_0^{s⁻¹(x)} (t-t')^{-γ} ∂u/∂t'(x, t') dt' for the closed-form
/// liquid formula. Zero at γ = 1.
pub fn memory_tail(
    sol: &SimilaritySolution,
    mat: &Material,
    frac: &FracParams,
    x: f64,
    t: f64,
) -> Result<f64, AnalysisError> {
    check_inside(sol, x, t)?;
    let gamma = frac.gamma;
    if gamma == 1.0 {
        return Ok(0.0);
    }
    let ta = sol.s_inverse(x);
    let z = tail_cutoff(sol)?;
    let tc = (x / (sol.lambda * z)).powf(2.0 / gamma);
    let failure = RefCell::new(None);
    let integrand = |tp: f64| match sol.u_t(x, tp) {
        Ok(v) => v,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            0.0
        }
    };
    let integral = kernel_integral(integrand, tc, ta, t, gamma, 1e-10);
    if let Some(e) = failure.into_inner() {
        return Err(e.into());
    }
    Ok(mat.rho * mat.c * rgamma(1.0 - gamma) * integral)
}

/// (l/c) (t - s⁻¹(x))^{-γ} / Γ(1-γ); zero at γ = 1.
pub fn singular_latent_term(gamma: f64, l_over_c: f64, elapsed: f64) -> Result<f64, AnalysisError> {
    if !(elapsed > 0.0) {
        return Err(AnalysisError::SingularPoint {
            x: f64::NAN,
            t: elapsed,
        });
    }
    Ok(l_over_c * elapsed.powf(-gamma) * rgamma(1.0 - gamma))
}

/// Bulk and front residuals of Model C.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelCReport {
    /// ∂^γu/∂t^γ + (l/c)(t-s⁻¹(x))^{-γ}/Γ(1-γ) - τ^{1-γ}α u_xx at each point.
    pub bulk: ResidualReport,
    /// ρl s'(t) + τ^{1-γ}k RL^{1-γ}[u_x(s(·)⁻, ·)](t) at (s(t), t) for each point time.
    pub front: ResidualReport,
}

/// Evaluates Model C's equations on the closed-form candidate.
///
/// The Riemann–Liouville derivative acts on the front gradient sampled on
/// [`RL_STEPS`] steps of [0, t]; the gradient is singular at t = 0, so the
/// first sample is repeated there.
pub fn model_c_terms(
    sol: &SimilaritySolution,
    mat: &Material,
    frac: &FracParams,
    points: &[(f64, f64)],
) -> Result<ModelCReport, AnalysisError> {
    let gamma = frac.gamma;
    let tau = frac.tau_factor();
    let alpha = mat.alpha();
    let bulk = points
        .par_iter()
        .map(|&(x, t)| {
            check_inside(sol, x, t)?;
            let elapsed = t - sol.s_inverse(x);
            if !(elapsed > 0.0) {
                return Err(AnalysisError::SingularPoint { x, t });
            }
            let caputo = windowed_caputo(sol, gamma, x, t, FINE_STEPS)?;
            let latent = singular_latent_term(gamma, mat.l / mat.c, elapsed)?;
            Ok(caputo + latent - tau * alpha * sol.u_xx(x, t)?)
        })
        .collect::<Result<Vec<_>, AnalysisError>>()?;

    let front = points
        .par_iter()
        .map(|&(_, t)| {
            let dt = t / RL_STEPS as f64;
            let mut grad = (0..=RL_STEPS)
                .map(|j| {
                    let tj = (j.max(1)) as f64 * dt;
                    sol.u_x(sol.s(tj), tj)
                })
                .collect::<Result<Vec<_>, _>>()?;
            grad[0] = grad[1];
            let rl = rl_operator(&TimeSeries::new(grad, dt)?, 1.0 - gamma)?;
            let s_prime = sol.sigma * sol.lambda * 0.5 * gamma * t.powf(0.5 * gamma - 1.0);
            Ok(mat.rho * mat.l * s_prime + tau * mat.k * rl[RL_STEPS])
        })
        .collect::<Result<Vec<_>, AnalysisError>>()?;
    let front_points = points.iter().map(|&(_, t)| (sol.s(t), t)).collect();

    Ok(ModelCReport {
        bulk: ResidualReport::new(points.to_vec(), bulk)?,
        front: ResidualReport::new(front_points, front)?,
    })
}

/// τ^{1-γ} RL^{1-γ}(q) at every level; γ = 1 returns q.
pub fn nonlocal_flux(q_history: &TimeSeries, frac: &FracParams) -> Result<Vec<f64>, AnalysisError> {
    let tau = frac.tau_factor();
    Ok(rl_operator(q_history, 1.0 - frac.gamma)?
        .into_iter()
        .map(|v| tau * v)
        .collect())
}

/// Per-level fractional global energy balance of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyBalance {
    pub times: Vec<f64>,
    /// L1 Caputo derivative of the trapezoid total energy.
    pub lhs: Vec<f64>,
    /// τ^{1-γ} q(0, t) with a second-order one-sided gradient.
    pub rhs: Vec<f64>,
    /// |lhs - rhs| / |rhs|; 0 when both vanish.
    pub rel_mismatch: Vec<f64>,
}

impl EnergyBalance {
    /// Relative mismatches as a report at (0, t).
    pub fn report(&self) -> Result<ResidualReport, AnalysisError> {
        ResidualReport::new(
            self.times.iter().map(|&t| (0.0, t)).collect(),
            self.rel_mismatch.clone(),
        )
    }

    /// Largest relative mismatch over levels `skip..`.
    pub fn max_mismatch_after(&self, skip: usize) -> f64 {
        self.rel_mismatch
            .iter()
            .skip(skip)
            .fold(0.0, |a, &b| a.max(b))
    }
}

pub fn energy_balance_check(
    state: &SimState,
    mat: &Material,
    frac: &FracParams,
) -> Result<EnergyBalance, AnalysisError> {
    let grid = &state.grid;
    let dx = grid.dx();
    let total: Vec<f64> = state
        .enthalpy
        .iter()
        .map(|e| {
            let last = e.len() - 1;
            dx * (0.5 * (e[0] + e[last]) + e[1..last].iter().sum::<f64>())
        })
        .collect();
    let lhs = caputo_l1(&TimeSeries::new(total, grid.dt())?, frac.gamma)?;
    let tau = frac.tau_factor();
    let rhs: Vec<f64> = state
        .temperature
        .iter()
        .map(|u| {
            let grad = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * dx);
            tau * (-mat.k * grad)
        })
        .collect();
    let rel_mismatch = lhs
        .iter()
        .zip(&rhs)
        .map(|(&l, &r)| {
            if r == 0.0 {
                if l == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                (l - r).abs() / r.abs()
            }
        })
        .collect();
    Ok(EnergyBalance {
        times: (0..state.levels()).map(|n| grid.t(n)).collect(),
        lhs,
        rhs,
        rel_mismatch,
    })
}

/// Least-squares power law s ≈ A t^p.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerFit {
    pub p: f64,
    pub a: f64,
    pub r2: f64,
}

/// Fits log s = log A + p log t over samples with t in `window` and s > 0.
pub fn exponent_fit(front: &FrontPath, window: (f64, f64)) -> Result<PowerFit, AnalysisError> {
    let (lo, hi) = window;
    let samples: Vec<(f64, f64)> = front
        .times()
        .iter()
        .zip(front.positions())
        .filter(|(&t, &s)| t >= lo && t <= hi && t > 0.0 && s > 0.0)
        .map(|(&t, &s)| (t.ln(), s.ln()))
        .collect();
    if samples.len() < 10 {
        return Err(AnalysisError::TooFewSamples {
            lo,
            hi,
            found: samples.len(),
        });
    }
    let n = samples.len() as f64;
    let mx = samples.iter().map(|p| p.0).sum::<f64>() / n;
    let my = samples.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in &samples {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 {
        return Err(AnalysisError::Degenerate("all sample times are equal"));
    }
    if syy == 0.0 {
        return Err(AnalysisError::Degenerate("all positions are equal"));
    }
    let p = sxy / sxx;
    let intercept = my - p * mx;
    let ss_res: f64 = samples
        .iter()
        .map(|&(x, y)| {
            let r = y - intercept - p * x;
            r * r
        })
        .sum();
    Ok(PowerFit {
        p,
        a: intercept.exp(),
        r2: 1.0 - ss_res / syy,
    })
}
