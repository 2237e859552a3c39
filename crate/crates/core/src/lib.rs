#![forbid(unsafe_code)]

//! Cost trade-offs for the vector-valued Witsenhausen counterexample with a
//! non-causal encoder and a causal decoder.
//!
//! The problem instance is a pair of variances `(Q, N)`: an i.i.d. Gaussian
//! initial state `X0 ~ N(0, Q)` is shifted by a control input `U1` into the
//! internal state `X1 = X0 + U1`, which a second agent must estimate from the
//! noisy observation `Y1 = X1 + Z1`, `Z1 ~ N(0, N)`. A strategy is scored by
//! the pair (input power `P = E[U1^2]`, estimation cost `S = E[(X1 - U2)^2]`).
//!
//! The crate computes and cross-validates three views of the trade-off:
//!
//! - [`model`] — closed-form costs: the best linear scheme, the optimal cost
//!   attainable when the internal state is restricted to continuous random
//!   variables (a straight line between two tangent powers `P1`, `P2` when
//!   `Q > 4N`), and the time-sharing scheme that achieves that line.
//! - [`gaussian_opt`] — the constrained optimization over correlation
//!   coefficients behind the continuous-RV bound, an exhaustive grid oracle
//!   that certifies the closed form, and the explicit Gaussian coordination
//!   scheme that attains it.
//! - [`twopoint`] — Witsenhausen's two-point strategy `U1 = a*sign(X0) - X0`,
//!   whose binary internal state beats every continuous-RV scheme at equal
//!   power for suitable `(Q, N, a)`.
//! - [`mc`] — seeded Monte Carlo evaluation of every policy, the statistical
//!   oracle for the closed forms and the quadrature.
//!
//! All costs are plain `f64` power units; every function is pure and safe to
//! call from multiple threads.

use thiserror::Error;

pub mod gaussian_opt;
pub mod mc;
pub mod model;
pub mod quad;
pub mod twopoint;

pub use model::{CostPoint, Policy, ProblemParams, Regime};

/// Errors shared by all modules of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("problem parameters must have positive variances, got Q = {state_var}, N = {noise_var}")]
    InvalidParams { state_var: f64, noise_var: f64 },

    #[error("power must be nonnegative, got {0}")]
    NegativePower(f64),

    #[error("power must be strictly positive, got {0}")]
    NonpositivePower(f64),

    #[error("amplitude must be nonnegative, got {0}")]
    NegativeAmplitude(f64),

    #[error("P = {power} lies outside the middle regime [{lower}, {upper}]")]
    OutOfRegime { power: f64, lower: f64, upper: f64 },

    #[error("no middle regime exists for Q = {state_var}, N = {noise_var} (requires Q > 4N)")]
    NoMiddleRegime { state_var: f64, noise_var: f64 },

    #[error("correlation {name} = {value} outside [{lo}, {hi}]")]
    CorrelationOutOfRange {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("infeasible correlations: rho1^2 = {rho1_sq} violates rho1^2 <= P/(P+N) = {bound}")]
    InfeasibleRho1 { rho1_sq: f64, bound: f64 },

    #[error("conditional-variance term A = {0} is negative; correlation geometry infeasible")]
    NegativeGeometry(f64),

    #[error(
        "quadrature did not converge: achieved error bound {achieved:.3e} exceeds tolerance {requested:.3e}"
    )]
    QuadratureAccuracy {
        /// Best value obtained before giving up.
        value: f64,
        achieved: f64,
        requested: f64,
    },

    #[error("invalid policy: {0}")]
    InvalidPolicy(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("grid search found no feasible cell (internal error)")]
    EmptyFeasibleSet,
}

pub type Result<T> = std::result::Result<T, Error>;
