//! Deterministic verdicts for affine jump-diffusions.
//!
//! The crate represents an affine Markov process on R_+^m × R^n by its
//! admissible parameters (α, β, γ, κ), evaluates the functions R_0..R_d of the
//! generalized Riccati system, solves the flow numerically, and decides — with
//! three-valued, evidence-carrying verdicts — whether the process is
//! conservative and whether stochastic or ordinary exponentials of its
//! components are true martingales. A finite-activity Monte Carlo simulator
//! acts as an independent statistical cross-check of the analytic answers.

pub mod cli;
pub mod conservativeness;
pub mod expr;
pub mod martingale;
pub mod model;
pub mod models;
pub mod montecarlo;
pub mod quad;
pub mod riccati;

pub use model::{
    classify_moment, load_spec, measure_integral, measure_integral_expr, save_spec,
    total_mass, truncation_h, validate_admissibility, AffineParams, Atom, Evidence,
    IntegralResult, IntegralStatus, JumpMeasure, MomentKind, Outcome, Verdict,
};
