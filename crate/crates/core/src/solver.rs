//! Fixed-grid solver for the coupled fractional melting model
//!
//! ```text
//! ρc ∂^γu/∂t^γ = τ^{1-γ} k u_xx      0 < x < s(t)   (memory from s⁻¹(x))
//! ρl ∂^γs/∂t^γ = -τ^{1-γ} k u_x(s⁻)
//! u(0, t) = u0,  u(s(t), t) = 0,  s(0) = 0
//! ```
//!
//! Both Caputo derivatives use L1 weights on a uniform time grid, and each
//! step is implicit: the temperature at level n solves a tridiagonal system
//! whose last row places the Dirichlet zero at the sub-cell interface
//! position, and the interface position solves the discrete front condition
//! by bracketing. Because a node's temperature is zero until the front
//! passes it, the full-history L1 sum of that node equals the windowed
//! Caputo derivative starting at s⁻¹(x).
//!
//! The latent memory lives on s(t) alone. A plain enthalpy update on
//! e = ρcu + ρlφ would instead keep a latent jump in every melted node's
//! history, which adds a term (l/c)(t - s⁻¹(x))^{-γ}/Γ(1-γ) to the bulk
//! equation.

use rayon::prelude::*;
use thiserror::Error;

use crate::closedform::{BoundaryData, FracParams, Material};
use crate::fracops::{FracOpsError, L1Weights};
use crate::roots::solve_bracketed;
use crate::specfun::gamma_fn;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("grid: {0}")]
    Grid(String),
    #[error("front reached the right boundary at t = {t} (s = {s}, x_max = {x_max}); enlarge the domain")]
    FrontReachedBoundary { t: f64, s: f64, x_max: f64 },
    #[error("front path: {0}")]
    Front(String),
    #[error("simulation already at the final level {0}")]
    Finished(usize),
    #[error(transparent)]
    Operator(#[from] FracOpsError),
}

/// Uniform space-time grid: nodes `x_i = i·dx`, levels `t_n = n·dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    pub x_max: f64,
    pub nx: usize,
    pub t_max: f64,
    pub nt: usize,
}

impl Grid1D {
    pub fn new(x_max: f64, nx: usize, t_max: f64, nt: usize) -> Result<Self, SolverError> {
        if !(x_max > 0.0 && x_max.is_finite()) {
            return Err(SolverError::Grid(format!(
                "x_max must be positive, got {x_max}"
            )));
        }
        if !(t_max > 0.0 && t_max.is_finite()) {
            return Err(SolverError::Grid(format!(
                "t_max must be positive, got {t_max}"
            )));
        }
        if nx < 8 {
            return Err(SolverError::Grid(format!(
                "nx must be at least 8, got {nx}"
            )));
        }
        if nt < 8 {
            return Err(SolverError::Grid(format!(
                "nt must be at least 8, got {nt}"
            )));
        }
        Ok(Self {
            x_max,
            nx,
            t_max,
            nt,
        })
    }

    pub fn dx(&self) -> f64 {
        self.x_max / self.nx as f64
    }

    pub fn dt(&self) -> f64 {
        self.t_max / self.nt as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.dx()
    }

    pub fn t(&self, n: usize) -> f64 {
        n as f64 * self.dt()
    }
}

/// Sampled interface trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontPath {
    times: Vec<f64>,
    positions: Vec<f64>,
}

impl FrontPath {
    /// Requires equal lengths, increasing times, and non-decreasing positions.
    pub fn new(times: Vec<f64>, positions: Vec<f64>) -> Result<Self, SolverError> {
        if times.len() != positions.len() || times.is_empty() {
            return Err(SolverError::Front(format!(
                "need matching non-empty arrays, got {} times and {} positions",
                times.len(),
                positions.len()
            )));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(SolverError::Front(
                "times must be strictly increasing".into(),
            ));
        }
        if positions.windows(2).any(|w| w[1] < w[0]) {
            return Err(SolverError::Front(
                "positions must be non-decreasing".into(),
            ));
        }
        Ok(Self { times, positions })
    }

    /// Samples a closed-form front `s(t)` at the given times.
    pub fn from_fn(times: Vec<f64>, s: impl Fn(f64) -> f64) -> Result<Self, SolverError> {
        let positions = times.iter().map(|&t| s(t)).collect();
        Self::new(times, positions)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Linear interpolation of s(t); clamps outside the sampled range.
    pub fn at(&self, t: f64) -> f64 {
        interp(&self.times, &self.positions, t)
    }

    /// First time at which the front reaches `x`, by linear interpolation
    /// of the monotone path; `None` if it never does.
    pub fn inverse(&self, x: f64) -> Option<f64> {
        let idx = self.positions.iter().position(|&p| p >= x)?;
        if idx == 0 {
            return Some(self.times[0]);
        }
        let (p0, p1) = (self.positions[idx - 1], self.positions[idx]);
        let (t0, t1) = (self.times[idx - 1], self.times[idx]);
        Some(t0 + (t1 - t0) * (x - p0) / (p1 - p0))
    }
}

fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if x <= xs[0] {
        return ys[0];
    }
    let last = xs.len() - 1;
    if x >= xs[last] {
        return ys[last];
    }
    let j = xs.partition_point(|&v| v <= x);
    let (x0, x1) = (xs[j - 1], xs[j]);
    ys[j - 1] + (ys[j] - ys[j - 1]) * (x - x0) / (x1 - x0)
}

/// Full space-time history of a run. Row `n` of each table is level `n`.
///
/// `liquid_fraction` is the melted share of each node's control volume
/// (`[x_i - dx/2, x_i + dx/2]`, half-cell at x = 0), so the trapezoid
/// integral of φ equals s(t). Temperature is zero at every node the front
/// has not yet passed, and `enthalpy = ρc·u + ρl·φ`.
#[derive(Debug, Clone)]
pub struct SimState {
    pub grid: Grid1D,
    pub temperature: Vec<Vec<f64>>,
    pub liquid_fraction: Vec<Vec<f64>>,
    pub enthalpy: Vec<Vec<f64>>,
    pub front: FrontPath,
    /// Level at which each node first became liquid.
    pub onset: Vec<Option<usize>>,
    /// Steps at which the front condition asked for a retreat and the front
    /// was held in place instead.
    pub front_holds: usize,
}

impl SimState {
    pub fn levels(&self) -> usize {
        self.temperature.len()
    }

    /// Temperature history of node `i` over all levels.
    pub fn node_history(&self, i: usize) -> Vec<f64> {
        self.temperature.iter().map(|row| row[i]).collect()
    }
}

/// Front position where the node liquid fraction crosses 1/2, by linear
/// interpolation between the bracketing nodes.
pub fn liquid_fraction_front(phi: &[f64], dx: f64) -> f64 {
    for i in 1..phi.len() {
        if phi[i] < 0.5 {
            let (a, b) = (phi[i - 1], phi[i]);
            return dx * ((i - 1) as f64 + (a - 0.5) / (a - b));
        }
    }
    dx * (phi.len() - 1) as f64
}

/// One-phase solver state. Advance with [`Solver::step`] or use [`run`].
pub struct Solver {
    mat: Material,
    bc: BoundaryData,
    grid: Grid1D,
    weights: L1Weights,
    /// Γ(2-γ) dt^γ τ^{1-γ} α
    c_u: f64,
    /// Γ(2-γ) dt^γ τ^{1-γ} k / (ρl)
    c_s: f64,
    temperature: Vec<Vec<f64>>,
    increments: Vec<Vec<f64>>,
    front: Vec<f64>,
    front_increments: Vec<f64>,
    onset: Vec<Option<usize>>,
    front_holds: usize,
}

struct Profile {
    last: usize,
    values: Vec<f64>,
    /// u_x at the interface divided by -1, i.e. q/k
    gradient: f64,
}

impl Solver {
    pub fn new(
        mat: &Material,
        frac: &FracParams,
        bc: &BoundaryData,
        grid: &Grid1D,
    ) -> Result<Self, SolverError> {
        let weights = L1Weights::new(frac.gamma, grid.dt(), grid.nt + 1)?;
        let g2 = gamma_fn(2.0 - frac.gamma).map_err(FracOpsError::from)?;
        let base = g2 * grid.dt().powf(frac.gamma) * frac.tau_factor();
        let nodes = grid.nx + 1;
        let mut first = vec![0.0; nodes];
        first[0] = bc.u0;
        let mut onset = vec![None; nodes];
        onset[0] = Some(0);
        Ok(Self {
            mat: *mat,
            bc: *bc,
            grid: *grid,
            weights,
            c_u: base * mat.alpha(),
            c_s: base * mat.k / (mat.rho * mat.l),
            temperature: vec![first],
            increments: vec![Vec::with_capacity(grid.nt); nodes],
            front: vec![0.0],
            front_increments: Vec::with_capacity(grid.nt),
            onset,
            front_holds: 0,
        })
    }

    /// Index of the most recently computed level.
    pub fn level(&self) -> usize {
        self.temperature.len() - 1
    }

    pub fn front(&self) -> f64 {
        *self.front.last().unwrap()
    }

    /// Solves the implicit temperature system with the interface at `s`.
    fn profile(&self, s: f64, history: &[f64]) -> Profile {
        let dx = self.grid.dx();
        let u0 = self.bc.u0;
        let prev = self.temperature.last().unwrap();
        let h_min = 1e-9 * dx;
        let mut last = ((s - h_min) / dx).ceil() as isize - 1;
        last = last.clamp(0, self.grid.nx as isize - 1);
        let last = last as usize;
        let mut values = vec![0.0; self.grid.nx + 1];
        values[0] = u0;
        if last == 0 {
            return Profile {
                last,
                values,
                gradient: if u0 == 0.0 { 0.0 } else { u0 / s },
            };
        }
        let h = s - self.grid.x(last);
        let r = self.c_u / (dx * dx);
        // Thomas algorithm on rows 1..=last
        let m = last;
        let mut sub = vec![0.0; m + 1];
        let mut diag = vec![0.0; m + 1];
        let mut sup = vec![0.0; m + 1];
        let mut rhs = vec![0.0; m + 1];
        for i in 1..=m {
            rhs[i] = prev[i] - history[i];
            if i < m {
                sub[i] = -r;
                diag[i] = 1.0 + 2.0 * r;
                sup[i] = -r;
            } else {
                let a = 2.0 * self.c_u / ((dx + h) * dx);
                sub[i] = -a;
                diag[i] = 1.0 + 2.0 * self.c_u / (dx + h) * (1.0 / h + 1.0 / dx);
            }
        }
        rhs[1] -= sub[1] * u0;
        sub[1] = 0.0;
        for i in 2..=m {
            let w = sub[i] / diag[i - 1];
            diag[i] -= w * sup[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        values[m] = rhs[m] / diag[m];
        for i in (1..m).rev() {
            values[i] = (rhs[i] - sup[i] * values[i + 1]) / diag[i];
        }
        Profile {
            last,
            gradient: values[last] / h,
            values,
        }
    }

    /// Advances one level.
    pub fn step(&mut self) -> Result<(), SolverError> {
        let n = self.level() + 1;
        if n > self.grid.nt {
            return Err(SolverError::Finished(self.grid.nt));
        }
        let w = &self.weights;
        let onset = &self.onset;
        let history: Vec<f64> = self
            .increments
            .par_iter()
            .enumerate()
            .map(|(i, inc)| match onset[i] {
                Some(o) if i > 0 => w.history(inc, o.saturating_sub(1)),
                _ => 0.0,
            })
            .collect();
        let front_history = w.history(&self.front_increments, 0);

        let s_prev = self.front();
        let dx = self.grid.dx();
        let residual = |s: f64| -> f64 {
            let p = self.profile(s, &history);
            (s - s_prev) + front_history - self.c_s * p.gradient
        };

        let lo = if s_prev > 0.0 { s_prev } else { 1e-12 * dx };
        let s_new = if residual(lo) >= 0.0 {
            if front_history > 0.0 {
                self.front_holds += 1;
            }
            s_prev
        } else {
            let mut step = self
                .front_increments
                .last()
                .copied()
                .filter(|d| *d > 0.0)
                .unwrap_or(0.25 * dx);
            let mut hi = lo + step;
            while residual(hi) <= 0.0 {
                step *= 2.0;
                hi = lo + step;
                if hi > 2.0 * self.grid.x_max {
                    break;
                }
            }
            solve_bracketed(residual, lo, hi, 0.0, 1e-13 * dx)
        };

        let t = self.grid.t(n);
        if s_new >= self.grid.x_max - dx {
            return Err(SolverError::FrontReachedBoundary {
                t,
                s: s_new,
                x_max: self.grid.x_max,
            });
        }

        let profile = if s_new > 0.0 {
            self.profile(s_new, &history)
        } else {
            let mut values = vec![0.0; self.grid.nx + 1];
            values[0] = self.bc.u0;
            Profile {
                last: 0,
                values,
                gradient: 0.0,
            }
        };
        let prev = self.temperature.last().unwrap();
        for (i, inc) in self.increments.iter_mut().enumerate() {
            inc.push(profile.values[i] - prev[i]);
        }
        for i in 1..=profile.last {
            if self.onset[i].is_none() {
                self.onset[i] = Some(n);
            }
        }
        self.temperature.push(profile.values);
        self.front_increments.push(s_new - s_prev);
        self.front.push(s_new);
        Ok(())
    }

    /// Packages the computed levels.
    pub fn finish(self) -> Result<SimState, SolverError> {
        let dx = self.grid.dx();
        let (rho_c, rho_l) = (self.mat.rho * self.mat.c, self.mat.rho * self.mat.l);
        let liquid_fraction: Vec<Vec<f64>> = self
            .front
            .iter()
            .map(|&s| {
                (0..=self.grid.nx)
                    .map(|i| {
                        if i == 0 {
                            1.0
                        } else {
                            ((s - self.grid.x(i)) / dx + 0.5).clamp(0.0, 1.0)
                        }
                    })
                    .collect()
            })
            .collect();
        let enthalpy = self
            .temperature
            .iter()
            .zip(&liquid_fraction)
            .map(|(u, phi)| {
                u.iter()
                    .zip(phi)
                    .map(|(u, p)| rho_c * u + rho_l * p)
                    .collect()
            })
            .collect();
        let times = (0..self.front.len()).map(|n| self.grid.t(n)).collect();
        Ok(SimState {
            grid: self.grid,
            front: FrontPath::new(times, self.front)?,
            temperature: self.temperature,
            liquid_fraction,
            enthalpy,
            onset: self.onset,
            front_holds: self.front_holds,
        })
    }
}

/// Runs all `grid.nt` steps.
pub fn run(
    mat: &Material,
    frac: &FracParams,
    bc: &BoundaryData,
    grid: &Grid1D,
) -> Result<SimState, SolverError> {
    let mut solver = Solver::new(mat, frac, bc, grid)?;
    for _ in 0..grid.nt {
        solver.step()?;
    }
    solver.finish()
}
