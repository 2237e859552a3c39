//! Witsenhausen's two-point strategy.
//!
//! The encoder `U1 = a sign(X0) - X0` quantizes the internal state to
//! `X1 = +-a`. Its input power is exact,
//!
//! ```text
//! P_t(a) = Q + a (a - 2 sqrt(2Q/pi)),
//! ```
//!
//! minimized at `a = sqrt(2Q/pi)` with value `Q (1 - 2/pi)`. The estimation
//! cost is the Bayes MMSE of an equiprobable `+-a` signal in Gaussian noise
//! of variance `N` (posterior mean `a tanh(a y / N)`):
//!
//! ```text
//! S_t(a) = a^2 / sqrt(2 pi N) * exp(-a^2/(2N)) * integral exp(-y^2/(2N)) / cosh(a y / N) dy,
//! ```
//!
//! evaluated by adaptive quadrature. [`dominance_scan`] sweeps an amplitude
//! grid and compares `(P_t, S_t)` against the continuous-RV optimum at the
//! same power; rows where `S_t <= S_c(P_t)` witness that a binary internal
//! state beats every continuous one.

use rayon::prelude::*;

use crate::model::ProblemParams;
use crate::quad::adaptive_simpson;
use crate::{Error, Result};

/// Settings for the estimation-cost integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    /// Half-width of the integration interval in noise standard deviations;
    /// at least 8 (tail contribution decays like exp(-truncation^2/2)).
    pub truncation: f64,
    /// Absolute tolerance on the final cost value.
    pub abs_tol: f64,
    /// Bisection depth cap per interval.
    pub max_subdivisions: u32,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            truncation: 16.0,
            abs_tol: 1e-12,
            max_subdivisions: 50,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.truncation >= 8.0) {
            return Err(Error::InvalidConfig(format!(
                "quadrature truncation must be at least 8 noise standard deviations, got {}",
                self.truncation
            )));
        }
        if !(self.abs_tol > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "quadrature tolerance must be positive, got {}",
                self.abs_tol
            )));
        }
        if self.max_subdivisions < 10 {
            return Err(Error::InvalidConfig(format!(
                "quadrature depth cap must be at least 10, got {}",
                self.max_subdivisions
            )));
        }
        Ok(())
    }
}

/// One amplitude of a dominance sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DominanceRow {
    pub amplitude: f64,
    /// Two-point input power `P_t(a)`.
    pub power: f64,
    /// Two-point estimation cost `S_t(a)`.
    pub cost: f64,
    /// Continuous-RV optimal cost at the same power.
    pub continuous_cost: f64,
    /// `S_t(a) <= S_c(P_t(a))`.
    pub dominates: bool,
    /// Achieved error bound of a non-converged quadrature, if any; the
    /// `cost` column then holds the best value obtained.
    pub quad_error: Option<f64>,
}

/// Input power of the two-point strategy: `Q + a (a - 2 sqrt(2Q/pi))`.
pub fn twopoint_power(params: &ProblemParams, amplitude: f64) -> Result<f64> {
    if !(amplitude >= 0.0) {
        return Err(Error::NegativeAmplitude(amplitude));
    }
    let q = params.state_var();
    Ok(q + amplitude * (amplitude - 2.0 * (2.0 * q / std::f64::consts::PI).sqrt()))
}

/// Estimation cost of the two-point strategy by adaptive quadrature.
///
/// Integrates the even integrand on `[0, truncation * sqrt(N)]` and doubles;
/// the integrand is evaluated in the overflow-safe form
/// `2 exp(-y^2/(2N) - a y / N) / (1 + exp(-2 a y / N))`.
pub fn twopoint_mmse(
    params: &ProblemParams,
    amplitude: f64,
    quad: &QuadratureConfig,
) -> Result<f64> {
    if !(amplitude >= 0.0) {
        return Err(Error::NegativeAmplitude(amplitude));
    }
    quad.validate()?;
    if amplitude == 0.0 {
        return Ok(0.0);
    }
    let n = params.noise_var();
    let a = amplitude;
    let prefactor = a * a / (2.0 * std::f64::consts::PI * n).sqrt() * (-a * a / (2.0 * n)).exp();
    if prefactor == 0.0 {
        // exp(-a^2/(2N)) underflowed; the cost is below ~1e-300.
        return Ok(0.0);
    }
    let integrand = |y: f64| {
        let e = (-2.0 * a * y / n).exp();
        2.0 * (-0.5 * y * y / n - a * y / n).exp() / (1.0 + e)
    };
    // The final cost carries a factor 2 * prefactor, so the integral itself
    // only needs abs_tol / (2 * prefactor).
    let inner_tol = quad.abs_tol / (2.0 * prefactor);
    let upper = quad.truncation * n.sqrt();
    let r = adaptive_simpson(integrand, 0.0, upper, inner_tol, quad.max_subdivisions);
    let value = 2.0 * prefactor * r.value;
    if !r.converged {
        return Err(Error::QuadratureAccuracy {
            value,
            achieved: 2.0 * prefactor * r.error_bound,
            requested: quad.abs_tol,
        });
    }
    Ok(value)
}

/// Sweep a uniform amplitude grid and compare the two-point costs against
/// the continuous-RV optimum at equal power.
///
/// Rows are evaluated in parallel and returned in ascending amplitude
/// order. A quadrature accuracy failure annotates its row rather than
/// aborting the scan.
pub fn dominance_scan(
    params: &ProblemParams,
    a_min: f64,
    a_max: f64,
    steps: usize,
    quad: &QuadratureConfig,
) -> Result<Vec<DominanceRow>> {
    if !(a_min >= 0.0) {
        return Err(Error::NegativeAmplitude(a_min));
    }
    if !(a_max > a_min) || steps < 2 {
        return Err(Error::InvalidConfig(format!(
            "dominance scan needs a_min < a_max and steps >= 2, got [{a_min}, {a_max}] with {steps} steps"
        )));
    }
    quad.validate()?;
    let rows: Vec<DominanceRow> = (0..steps)
        .into_par_iter()
        .map(|i| {
            let a = a_min + (a_max - a_min) * i as f64 / (steps - 1) as f64;
            let power = twopoint_power(params, a)?;
            let (cost, quad_error) = match twopoint_mmse(params, a, quad) {
                Ok(v) => (v, None),
                Err(Error::QuadratureAccuracy { value, achieved, .. }) => (value, Some(achieved)),
                Err(e) => return Err(e),
            };
            let continuous_cost = params.continuous_optimal_cost(power)?;
            Ok(DominanceRow {
                amplitude: a,
                power,
                cost,
                continuous_cost,
                dominates: cost <= continuous_cost,
                quad_error,
            })
        })
        .collect::<Result<_>>()?;
    Ok(rows)
}
