//! Problem parameters, control policies, and closed-form costs.
//!
//! The best linear scheme with input power `P <= Q` is `U1 = -sqrt(P/Q) X0`,
//! leaving the scaled state `X1 = (1 - sqrt(P/Q)) X0`; its estimation cost is
//!
//! ```text
//! S_l(P) = (sqrt(Q) - sqrt(P))^2 * N / ((sqrt(Q) - sqrt(P))^2 + N)
//! ```
//!
//! and 0 for `P > Q`, where the state can be cancelled outright. When
//! `Q > 4N` there is a power window `[P1, P2]` on which the optimal cost over
//! continuous internal states drops below `S_l` onto the straight line
//! `P -> N (Q - N - P) / Q`, attained by time-sharing the two linear schemes
//! of power `P1` and `P2`. The thresholds are the roots of
//! `P^2 - (Q - 2N) P + N^2 = 0`, which is exactly the double-tangency
//! condition `(P + N)^2 = Q P` of the line against `S_l`.

use crate::{Error, Result};

/// Variances defining a problem instance.
///
/// `state_var` is the variance Q of the initial state `X0 ~ N(0, Q)`;
/// `noise_var` is the variance N of the channel noise `Z1 ~ N(0, N)`.
/// Both must be strictly positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemParams {
    state_var: f64,
    noise_var: f64,
}

/// An achievable pair: input power `P = E[U1^2]` and estimation cost
/// `S = E[(X1 - U2)^2]`, both in power units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostPoint {
    pub power: f64,
    pub cost: f64,
}

/// Implementable control strategies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Policy {
    /// Best linear scheme of the given power: `U1 = -sqrt(P/Q) X0` for
    /// `P <= Q`, otherwise `U1 = -X0 + sqrt(P - Q)` (the offset only serves
    /// to meet the power constraint with equality).
    Linear { power: f64 },
    /// `U1 = a*sign(X0) - X0`: quantizes the internal state to `+-a`.
    TwoPoint { amplitude: f64 },
    /// Convex mixing of two linear schemes: a fraction `lambda` of the
    /// samples runs at `power_low`, the rest at `power_high`.
    TimeShare {
        lambda: f64,
        power_low: f64,
        power_high: f64,
    },
    /// Explicit Gaussian coordination scheme that achieves the middle-regime
    /// line `N (Q - N - P) / Q`; requires `Q > 4N` and `P` in `[P1, P2]`.
    GaussianAchievability { power: f64 },
}

/// Power regimes of the continuous-RV optimal cost.
///
/// The three regimes partition `P >= 0` for fixed `(Q, N)`. Boundary
/// tie-breaks: `P = P1` and `P = P2` classify as `Middle` (both branches
/// agree there), `P = Q` classifies as `Overpowered` (both give cost 0).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// The linear scheme is optimal: `Q <= 4N`, or `P` outside `[P1, P2]`.
    Linear,
    /// `Q > 4N` and `P` in `[P1, P2]`: the time-sharing line is optimal.
    Middle,
    /// `P >= Q`: the state can be cancelled, cost 0.
    Overpowered,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Regime::Linear => write!(f, "linear"),
            Regime::Middle => write!(f, "middle"),
            Regime::Overpowered => write!(f, "overpowered"),
        }
    }
}

impl ProblemParams {
    pub fn new(state_var: f64, noise_var: f64) -> Result<Self> {
        if !(state_var > 0.0) || !(noise_var > 0.0) || !state_var.is_finite() || !noise_var.is_finite() {
            return Err(Error::InvalidParams {
                state_var,
                noise_var,
            });
        }
        Ok(Self {
            state_var,
            noise_var,
        })
    }

    /// Variance Q of the initial state.
    #[inline]
    pub fn state_var(&self) -> f64 {
        self.state_var
    }

    /// Variance N of the channel noise.
    #[inline]
    pub fn noise_var(&self) -> f64 {
        self.noise_var
    }

    /// Estimation cost of the best linear scheme at input power `P`.
    ///
    /// `S_l(P) = g N / (g + N)` with `g = (sqrt(Q) - sqrt(P))^2` on
    /// `[0, Q]`, and 0 beyond.
    pub fn linear_cost(&self, power: f64) -> Result<f64> {
        if !(power >= 0.0) {
            return Err(Error::NegativePower(power));
        }
        let (q, n) = (self.state_var, self.noise_var);
        if power >= q {
            return Ok(0.0);
        }
        let g = (q.sqrt() - power.sqrt()).powi(2);
        Ok(g * n / (g + n))
    }

    /// The power window `(P1, P2)` on which the continuous-RV optimum beats
    /// the linear scheme, or `None` when `Q <= 4N` and no window exists.
    ///
    /// `P1 = (Q - 2N - sqrt(Q (Q - 4N))) / 2` and `P2` with `+sqrt`;
    /// `0 < P1 <= P2 < Q` always holds when the window exists.
    pub fn thresholds(&self) -> Option<(f64, f64)> {
        let (q, n) = (self.state_var, self.noise_var);
        if q <= 4.0 * n {
            return None;
        }
        let d = (q * (q - 4.0 * n)).sqrt();
        let p2 = 0.5 * (q - 2.0 * n + d);
        // The roots multiply to N^2; the smaller one via the product avoids
        // cancellation when Q >> N.
        let p1 = n * n / p2;
        Some((p1, p2))
    }

    /// Regime of the given power; see [`Regime`] for the boundary tie-breaks.
    pub fn regime_of(&self, power: f64) -> Regime {
        if power >= self.state_var {
            return Regime::Overpowered;
        }
        match self.thresholds() {
            Some((p1, p2)) if power >= p1 && power <= p2 => Regime::Middle,
            _ => Regime::Linear,
        }
    }

    /// Optimal estimation cost over strategies whose internal state is a
    /// continuous random variable, at input power `P`.
    ///
    /// Equals `N (Q - N - P) / Q` on the middle regime and the linear cost
    /// everywhere else; never exceeds [`ProblemParams::linear_cost`].
    pub fn continuous_optimal_cost(&self, power: f64) -> Result<f64> {
        if !(power >= 0.0) {
            return Err(Error::NegativePower(power));
        }
        match self.regime_of(power) {
            Regime::Middle => {
                let (q, n) = (self.state_var, self.noise_var);
                Ok(n * (q - n - power) / q)
            }
            _ => self.linear_cost(power),
        }
    }

    /// Cost of time-sharing the two linear schemes of power `P1` and `P2`
    /// so that the average power is `P`.
    ///
    /// The mixing weight solves `lambda P1 + (1 - lambda) P2 = P`; the
    /// resulting cost lies on the line `N (Q - N - P) / Q`. Only defined on
    /// the middle regime.
    pub fn timeshare_cost(&self, power: f64) -> Result<f64> {
        let (p1, p2) = self.thresholds().ok_or(Error::NoMiddleRegime {
            state_var: self.state_var,
            noise_var: self.noise_var,
        })?;
        if !(power >= p1 && power <= p2) {
            return Err(Error::OutOfRegime {
                power,
                lower: p1,
                upper: p2,
            });
        }
        let lambda = (p2 - power) / (p2 - p1);
        Ok(lambda * self.linear_cost(p1)? + (1.0 - lambda) * self.linear_cost(p2)?)
    }
}

impl Policy {
    /// Check the policy's own field invariants and its compatibility with
    /// the problem instance.
    pub fn validate(&self, params: &ProblemParams) -> Result<()> {
        match *self {
            Policy::Linear { power } => {
                if !(power >= 0.0) {
                    return Err(Error::NegativePower(power));
                }
            }
            Policy::TwoPoint { amplitude } => {
                if !(amplitude >= 0.0) {
                    return Err(Error::NegativeAmplitude(amplitude));
                }
            }
            Policy::TimeShare {
                lambda,
                power_low,
                power_high,
            } => {
                if !(0.0..=1.0).contains(&lambda) {
                    return Err(Error::InvalidPolicy(format!(
                        "time-share fraction lambda = {lambda} outside [0, 1]"
                    )));
                }
                if !(power_low >= 0.0) {
                    return Err(Error::NegativePower(power_low));
                }
                if !(power_high >= power_low) {
                    return Err(Error::InvalidPolicy(format!(
                        "time-share powers must satisfy P_low <= P_high, got {power_low} > {power_high}"
                    )));
                }
            }
            Policy::GaussianAchievability { power } => {
                let (p1, p2) = params.thresholds().ok_or(Error::NoMiddleRegime {
                    state_var: params.state_var(),
                    noise_var: params.noise_var(),
                })?;
                if !(power >= p1 && power <= p2) {
                    return Err(Error::OutOfRegime {
                        power,
                        lower: p1,
                        upper: p2,
                    });
                }
            }
        }
        Ok(())
    }
}
