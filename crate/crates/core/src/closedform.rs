//! Similarity solutions of the one-phase melting problem.
//!
//! With ξ = x / (λ t^{γ/2}) the temperature
//!
//! ```text
//! u(x, t) = u0 · (1 - (1 - W(-ξ, -γ/2, 1)) / (1 - W(-σ, -γ/2, 1)))   for x < s(t)
//! s(t)    = σ λ t^{γ/2}
//! ```
//!
//! solves ∂^γu/∂t^γ = ατ^{1-γ} u_xx on the whole half-line when
//! λ² = ατ^{1-γ}. Substituting u and s into the fractional Stefan condition
//! ρl ∂^γs/∂t^γ = -τ^{1-γ} k u_x(s⁻, t) with the Caputo power rule gives
//!
//! ```text
//! F(σ) = σ Γ(1+γ/2)/Γ(1-γ/2) - κ Ste W(-σ, -γ/2, 1-γ/2) / (1 - W(-σ, -γ/2, 1)) = 0,
//! ```
//!
//! where Ste = c u0 / l and κ = ατ^{1-γ}/λ² (1 for the dimensional λ).
//! At γ = 1 this is the classical Neumann solution.

use statrs::function::erf::erf;
use thiserror::Error;

use crate::roots::solve_bracketed;
use crate::specfun::{gamma_fn, rgamma, SpecialError, WrightArgs, WrightSeries};

/// Largest σ at which the Wright series is still trusted.
const SIGMA_CEILING: f64 = 30.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClosedFormError {
    #[error("{name} must be positive and finite, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("fractional order gamma = {0} outside (0, 1]")]
    GammaOutOfRange(f64),
    #[error("no sign change of the front equation on ({lo}, {hi}]")]
    Bracketing { lo: f64, hi: f64 },
    #[error("time must be positive, got {0}")]
    BadTime(f64),
    #[error("position must be non-negative, got {0}")]
    BadPosition(f64),
    #[error(transparent)]
    Special(#[from] SpecialError),
}

fn positive(name: &'static str, value: f64) -> Result<f64, ClosedFormError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(ClosedFormError::NonPositive { name, value })
    }
}

/// Thermophysical constants of the liquid phase (SI units).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Material {
    /// density, kg/m³
    pub rho: f64,
    /// specific heat, J/(kg·K)
    pub c: f64,
    /// conductivity, W/(m·K)
    pub k: f64,
    /// latent heat, J/kg
    pub l: f64,
}

impl Material {
    pub fn new(rho: f64, c: f64, k: f64, l: f64) -> Result<Self, ClosedFormError> {
        Ok(Self {
            rho: positive("rho", rho)?,
            c: positive("c", c)?,
            k: positive("k", k)?,
            l: positive("l", l)?,
        })
    }

    /// Unit constants; handy for nondimensional runs.
    pub fn unit() -> Self {
        Self {
            rho: 1.0,
            c: 1.0,
            k: 1.0,
            l: 1.0,
        }
    }

    /// Thermal diffusivity k/(ρc), m²/s.
    pub fn alpha(&self) -> f64 {
        self.k / (self.rho * self.c)
    }
}

/// Fractional order γ and relaxation time τ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FracParams {
    pub gamma: f64,
    pub tau: f64,
}

impl FracParams {
    pub fn new(gamma: f64, tau: f64) -> Result<Self, ClosedFormError> {
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(ClosedFormError::GammaOutOfRange(gamma));
        }
        Ok(Self {
            gamma,
            tau: positive("tau", tau)?,
        })
    }

    /// τ^{1-γ}; exactly 1 at γ = 1.
    pub fn tau_factor(&self) -> f64 {
        if self.gamma == 1.0 {
            1.0
        } else {
            self.tau.powf(1.0 - self.gamma)
        }
    }
}

/// Temperature imposed at x = 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryData {
    pub u0: f64,
}

impl BoundaryData {
    pub fn new(u0: f64) -> Result<Self, ClosedFormError> {
        Ok(Self {
            u0: positive("u0", u0)?,
        })
    }
}

/// Stefan number c·u0/l.
pub fn stefan_number(mat: &Material, bc: &BoundaryData) -> f64 {
    mat.c * bc.u0 / mat.l
}

/// Which similarity scale to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LambdaConvention {
    /// λ = (ατ^{1-γ})^{1/2}; makes x/(λt^{γ/2}) dimensionless and the
    /// profile an exact solution of the fractional heat equation.
    #[default]
    Dimensional,
    /// λ = τ^{(1-γ)/2} α^{γ/2}; agrees with the dimensional scale when
    /// γ = 1 or α = 1, otherwise the profile does not solve the PDE.
    AlphaPower,
}

/// λ = (ατ^{1-γ})^{1/2}.
pub fn lambda_scale(mat: &Material, frac: &FracParams) -> f64 {
    lambda_scale_with(mat, frac, LambdaConvention::Dimensional)
}

pub fn lambda_scale_with(mat: &Material, frac: &FracParams, conv: LambdaConvention) -> f64 {
    match conv {
        LambdaConvention::Dimensional => (mat.alpha() * frac.tau_factor()).sqrt(),
        LambdaConvention::AlphaPower => {
            frac.tau_factor().sqrt() * mat.alpha().powf(0.5 * frac.gamma)
        }
    }
}

/// Closed-form Wright-function solution (σ, λ, γ, u0, Ste).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilaritySolution {
    pub sigma: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub u0: f64,
    pub stefan: f64,
    /// 1 - W(-σ, -γ/2, 1)
    denom: f64,
}

impl SimilaritySolution {
    pub fn new(
        sigma: f64,
        lambda: f64,
        gamma: f64,
        u0: f64,
        stefan: f64,
    ) -> Result<Self, ClosedFormError> {
        positive("sigma", sigma)?;
        positive("lambda", lambda)?;
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(ClosedFormError::GammaOutOfRange(gamma));
        }
        let w = series().eval(WrightArgs::new(-sigma, -0.5 * gamma, 1.0)?)?;
        Ok(Self {
            sigma,
            lambda,
            gamma,
            u0,
            stefan,
            denom: 1.0 - w,
        })
    }

    fn mu(&self) -> f64 {
        -0.5 * self.gamma
    }

    /// Front position σλt^{γ/2}.
    pub fn s(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        self.sigma * self.lambda * t.powf(0.5 * self.gamma)
    }

    /// Arrival time of the front at x: (x/(σλ))^{2/γ}.
    pub fn s_inverse(&self, x: f64) -> f64 {
        (x / (self.sigma * self.lambda)).powf(2.0 / self.gamma)
    }

    /// Similarity variable x/(λt^{γ/2}).
    pub fn xi(&self, x: f64, t: f64) -> f64 {
        x / (self.lambda * t.powf(0.5 * self.gamma))
    }

    fn w_shift(&self, xi: f64, shift: f64) -> Result<f64, ClosedFormError> {
        let mu = self.mu();
        Ok(series().eval(WrightArgs::new(-xi, mu, 1.0 + shift * mu)?)?)
    }

    /// Liquid-phase formula evaluated without the x < s(t) restriction.
    pub fn u_liquid(&self, x: f64, t: f64) -> Result<f64, ClosedFormError> {
        check_xt(x, t)?;
        let w = self.w_shift(self.xi(x, t), 0.0)?;
        Ok(self.u0 * (1.0 - (1.0 - w) / self.denom))
    }

    /// Piecewise temperature: the liquid formula for x < s(t), 0 beyond.
    pub fn u(&self, x: f64, t: f64) -> Result<f64, ClosedFormError> {
        check_xt(x, t)?;
        if x >= self.s(t) {
            return Ok(0.0);
        }
        self.u_liquid(x, t)
    }

    /// ∂u/∂t of the liquid formula:
    /// u0/(1-W_σ) · W'(-ξ) · (γ/2) · ξ/t.
    pub fn u_t(&self, x: f64, t: f64) -> Result<f64, ClosedFormError> {
        check_xt(x, t)?;
        let xi = self.xi(x, t);
        let wp = self.w_shift(xi, 1.0)?;
        Ok(self.u0 / self.denom * wp * 0.5 * self.gamma * xi / t)
    }

    /// ∂u/∂x of the liquid formula.
    pub fn u_x(&self, x: f64, t: f64) -> Result<f64, ClosedFormError> {
        check_xt(x, t)?;
        let scale = self.lambda * t.powf(0.5 * self.gamma);
        let wp = self.w_shift(x / scale, 1.0)?;
        Ok(-self.u0 / self.denom * wp / scale)
    }

    /// ∂²u/∂x² of the liquid formula (second shift of W).
    pub fn u_xx(&self, x: f64, t: f64) -> Result<f64, ClosedFormError> {
        check_xt(x, t)?;
        let scale = self.lambda * t.powf(0.5 * self.gamma);
        let wpp = self.w_shift(x / scale, 2.0)?;
        Ok(self.u0 / self.denom * wpp / (scale * scale))
    }
}

fn check_xt(x: f64, t: f64) -> Result<(), ClosedFormError> {
    if !(t > 0.0) {
        return Err(ClosedFormError::BadTime(t));
    }
    if !(x >= 0.0) {
        return Err(ClosedFormError::BadPosition(x));
    }
    Ok(())
}

fn series() -> WrightSeries {
    WrightSeries::default()
}

/// F(σ) for the front coefficient; `kappa` = ατ^{1-γ}/λ².
pub fn sigma_residual(
    sigma: f64,
    gamma: f64,
    stefan: f64,
    kappa: f64,
) -> Result<f64, ClosedFormError> {
    let mu = -0.5 * gamma;
    let s = series();
    let w1 = s.eval(WrightArgs::new(-sigma, mu, 1.0)?)?;
    let w2 = s.eval(WrightArgs::new(-sigma, mu, 1.0 + mu)?)?;
    let ratio = gamma_fn(1.0 + 0.5 * gamma)? * rgamma(1.0 - 0.5 * gamma);
    Ok(sigma * ratio - kappa * stefan * w2 / (1.0 - w1))
}

/// Small-Ste asymptote σ ≈ (κ Ste Γ(1-γ/2)/Γ(1+γ/2))^{1/2}.
pub fn sigma_small_stefan(gamma: f64, stefan: f64, kappa: f64) -> Result<f64, ClosedFormError> {
    Ok((kappa * stefan * gamma_fn(1.0 - 0.5 * gamma)? / gamma_fn(1.0 + 0.5 * gamma)?).sqrt())
}

/// Front coefficient σ for the dimensional λ.
pub fn sigma_solve(
    mat: &Material,
    frac: &FracParams,
    bc: &BoundaryData,
    tol: f64,
) -> Result<f64, ClosedFormError> {
    sigma_solve_with(mat, frac, bc, LambdaConvention::Dimensional, tol)
}

pub fn sigma_solve_with(
    mat: &Material,
    frac: &FracParams,
    bc: &BoundaryData,
    conv: LambdaConvention,
    tol: f64,
) -> Result<f64, ClosedFormError> {
    positive("tol", tol)?;
    let stefan = positive("Stefan number", stefan_number(mat, bc))?;
    let lambda = lambda_scale_with(mat, frac, conv);
    let kappa = mat.alpha() * frac.tau_factor() / (lambda * lambda);
    solve_sigma(frac.gamma, stefan, kappa, tol)
}

fn solve_sigma(gamma: f64, stefan: f64, kappa: f64, tol: f64) -> Result<f64, ClosedFormError> {
    let small = sigma_small_stefan(gamma, stefan, kappa)?;
    let f = |s: f64| sigma_residual(s, gamma, stefan, kappa);

    let mut lo = 1e-3 * small;
    while f(lo)? >= 0.0 {
        lo *= 1e-2;
        if lo < 1e-300 {
            return Err(ClosedFormError::Bracketing { lo, hi: small });
        }
    }
    let mut hi = 1.05 * small;
    loop {
        if hi > SIGMA_CEILING {
            return Err(ClosedFormError::Bracketing {
                lo,
                hi: SIGMA_CEILING,
            });
        }
        if f(hi)? > 0.0 {
            break;
        }
        lo = hi;
        hi *= 1.5;
    }

    let mut failure = None;
    let root = solve_bracketed(
        |s| match f(s) {
            Ok(v) => v,
            Err(e) => {
                failure = Some(e);
                0.0
            }
        },
        lo,
        hi,
        tol,
        1e-15 * hi,
    );
    match failure {
        Some(e) => Err(e),
        None => Ok(root),
    }
}

/// σ, λ and the cached denominator for the given data.
pub fn similarity_solution(
    mat: &Material,
    frac: &FracParams,
    bc: &BoundaryData,
    conv: LambdaConvention,
    tol: f64,
) -> Result<SimilaritySolution, ClosedFormError> {
    let sigma = sigma_solve_with(mat, frac, bc, conv, tol)?;
    SimilaritySolution::new(
        sigma,
        lambda_scale_with(mat, frac, conv),
        frac.gamma,
        bc.u0,
        stefan_number(mat, bc),
    )
}

/// Temperature of the closed-form solution (0 beyond the front).
pub fn similarity_u(sol: &SimilaritySolution, x: f64, t: f64) -> Result<f64, ClosedFormError> {
    sol.u(x, t)
}

/// Front position of the closed-form solution.
pub fn similarity_s(sol: &SimilaritySolution, t: f64) -> f64 {
    sol.s(t)
}

/// Classical (γ = 1) Neumann solution. σ solves
/// Ste = √π (σ/2) e^{σ²/4} erf(σ/2), with erf taken from `statrs` so the
/// Wright-series path is not involved.
pub fn neumann_classical(
    mat: &Material,
    bc: &BoundaryData,
    tol: f64,
) -> Result<SimilaritySolution, ClosedFormError> {
    positive("tol", tol)?;
    let stefan = positive("Stefan number", stefan_number(mat, bc))?;
    let g = |s: f64| {
        let h = 0.5 * s;
        std::f64::consts::PI.sqrt() * h * (h * h).exp() * erf(h) - stefan
    };
    let mut hi = 1.0;
    while g(hi) <= 0.0 {
        hi *= 2.0;
        if hi > 64.0 {
            return Err(ClosedFormError::Bracketing { lo: 0.0, hi });
        }
    }
    let sigma = solve_bracketed(g, 0.0, hi, tol * stefan.max(1.0), 1e-16);
    SimilaritySolution::new(sigma, mat.alpha().sqrt(), 1.0, bc.u0, stefan)
}

/// Classical Neumann profile u0 (1 - erf(x/(2√(αt))) / erf(σ/2)).
pub fn neumann_profile(sol: &SimilaritySolution, alpha: f64, x: f64, t: f64) -> f64 {
    if x >= sol.s(t) {
        return 0.0;
    }
    sol.u0 * (1.0 - erf(x / (2.0 * (alpha * t).sqrt())) / erf(0.5 * sol.sigma))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_with_stefan(ste: f64) -> (Material, BoundaryData) {
        (Material::unit(), BoundaryData::new(ste).unwrap())
    }

    #[test]
    fn lambda_examples() {
        let m = Material::new(1.0, 1.0, 4.0, 1.0).unwrap();
        let f = FracParams::new(1.0, 123.0).unwrap();
        assert_eq!(lambda_scale(&m, &f), 2.0);
        let f = FracParams::new(0.5, 1.0).unwrap();
        assert_eq!(lambda_scale(&Material::unit(), &f), 1.0);
        let m = Material::new(1.0, 1.0, 2.0, 1.0).unwrap();
        let f = FracParams::new(0.5, 3.0).unwrap();
        assert!((lambda_scale(&m, &f) - 1.861_209_718_204_198).abs() < 1e-10);
    }

    #[test]
    fn conventions_agree_when_alpha_is_one() {
        let f = FracParams::new(0.4, 2.5).unwrap();
        let m = Material::unit();
        let a = lambda_scale_with(&m, &f, LambdaConvention::Dimensional);
        let b = lambda_scale_with(&m, &f, LambdaConvention::AlphaPower);
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn classical_sigma_stefan_one() {
        let (m, bc) = unit_with_stefan(1.0);
        let f = FracParams::new(1.0, 1.0).unwrap();
        let s = sigma_solve(&m, &f, &bc, 1e-13).unwrap();
        // independent high-precision solve: 1.2401252666271910
        assert!((s - 1.240_125_266_627_191).abs() < 1e-12, "{s}");
        let n = neumann_classical(&m, &bc, 1e-14).unwrap();
        assert!((s - n.sigma).abs() < 1e-10);
    }

    #[test]
    fn small_stefan_asymptote() {
        for gamma in [0.3, 0.7, 1.0] {
            let (m, bc) = unit_with_stefan(1e-4);
            let f = FracParams::new(gamma, 1.0).unwrap();
            let s = sigma_solve(&m, &f, &bc, 1e-15).unwrap();
            let a = sigma_small_stefan(gamma, 1e-4, 1.0).unwrap();
            assert!((s / a - 1.0).abs() < 1e-2, "gamma={gamma}: {s} vs {a}");
        }
    }

    #[test]
    fn boundary_values() {
        let (m, bc) = unit_with_stefan(1.0);
        let f = FracParams::new(0.6, 1.0).unwrap();
        let sol = similarity_solution(&m, &f, &bc, LambdaConvention::Dimensional, 1e-13).unwrap();
        for t in [0.1, 1.0, 7.0] {
            assert!((sol.u(0.0, t).unwrap() - 1.0).abs() < 1e-15);
            assert!(sol.u_liquid(sol.s(t), t).unwrap().abs() < 1e-12);
            assert_eq!(sol.u(sol.s(t) * 1.01, t).unwrap(), 0.0);
        }
    }

    #[test]
    fn front_power_law() {
        let sol = SimilaritySolution::new(1.0, 1.0, 0.8, 1.0, 1.0).unwrap();
        assert_eq!(sol.s(0.0), 0.0);
        assert!((sol.s(16.0) - 3.031_433_133_020_796).abs() < 1e-9);
        assert!((sol.s_inverse(sol.s(2.5)) - 2.5).abs() < 1e-12);
    }

    #[test]
    fn bad_inputs() {
        assert!(Material::new(0.0, 1.0, 1.0, 1.0).is_err());
        assert!(FracParams::new(1.5, 1.0).is_err());
        assert!(BoundaryData::new(-1.0).is_err());
        let sol = SimilaritySolution::new(1.0, 1.0, 0.5, 1.0, 1.0).unwrap();
        assert_eq!(sol.u(0.1, 0.0), Err(ClosedFormError::BadTime(0.0)));
    }

    #[test]
    fn alpha_power_convention_solves_front_condition() {
        let m = Material::new(1.0, 1.0, 3.0, 1.0).unwrap();
        let f = FracParams::new(0.5, 2.0).unwrap();
        let bc = BoundaryData::new(1.0).unwrap();
        let sol = similarity_solution(&m, &f, &bc, LambdaConvention::AlphaPower, 1e-13).unwrap();
        let t = 1.7;
        let lhs = m.rho
            * m.l
            * sol.sigma
            * sol.lambda
            * crate::fracops::caputo_power_rule(0.25, 0.5, t).unwrap();
        let rhs = -f.tau_factor() * m.k * sol.u_x(sol.s(t), t).unwrap();
        assert!((lhs - rhs).abs() < 1e-10 * rhs.abs());
    }
}
