//! Time-fractional Stefan problems in one space dimension.
//!
//! * [`specfun`]: Gamma and Wright functions.
//! * [`fracops`]: L1 Caputo, Riemann–Liouville operators, power rule.
//! * [`closedform`]: Wright-function similarity solutions and the classical
//!   Neumann solution.
//! * [`solver`]: fixed-grid front solver for the coupled fractional model.
//! * [`analysis`]: residuals, memory terms, energy balance, exponent fits.
//! * [`quad`], [`roots`]: adaptive quadrature and bracketed root finding.
//! * [`cli`]: configuration parsing and the command-line driver.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod closedform;
pub mod fracops;
pub mod quad;
pub mod roots;
pub mod solver;
pub mod specfun;
