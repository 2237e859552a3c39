//! Seeded Monte Carlo evaluation of every policy.
//!
//! Samples are generated in independent blocks: block `b` draws from a
//! ChaCha12 stream obtained by seeding with the 64-bit seed and selecting
//! stream `b`, so any parallel partition of the blocks produces bit-identical
//! estimates. Standard normal variates come from `rand_distr`'s ziggurat
//! sampler; each sample consumes its variates in a fixed documented order.
//!
//! The decoders are the closed-form Bayes/linear estimators that attain each
//! policy's quoted cost; simulation validates those costs rather than
//! assuming them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::gaussian_opt::{achievability_covariance, achievability_scheme};
use crate::model::{CostPoint, Policy, ProblemParams};
use crate::twopoint::{twopoint_mmse, twopoint_power, QuadratureConfig};
use crate::{Error, Result};

/// Sample budget and seeding of a simulation run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    pub samples: u64,
    pub seed: u64,
    /// Samples per deterministic block; one ChaCha stream per block.
    pub block_size: u64,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            samples: 1_000_000,
            seed: 7,
            block_size: 65_536,
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples < 1 {
            return Err(Error::InvalidConfig("sample count must be at least 1".into()));
        }
        if self.block_size < 1 {
            return Err(Error::InvalidConfig("block size must be at least 1".into()));
        }
        Ok(())
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    /// Standard error of the mean from the unbiased sample variance;
    /// 0 when fewer than two samples.
    pub std_error: f64,
    pub n: u64,
}

/// An affine map of the channel output: `U2 = gain * Y1 + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineDecoder {
    pub gain: f64,
    pub intercept: f64,
}

/// Closed-form decoder attaining each policy's quoted cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Decoder {
    /// Linear policies: the scalar Wiener gain, plus the offset for
    /// overpowered schemes whose internal state is a known constant.
    Affine(AffineDecoder),
    /// Two-point policies: posterior mean `amplitude * tanh(slope * Y1)`.
    Tanh { amplitude: f64, slope: f64 },
    /// Time sharing: the active branch's linear decoder, chosen by sample
    /// index (the branch allocation is deterministic side information).
    TimeShare {
        lambda: f64,
        low: AffineDecoder,
        high: AffineDecoder,
    },
    /// Gaussian coordination scheme: `U2 = y_gain * Y1 + w2_gain * W2`.
    SideInfo { y_gain: f64, w2_gain: f64 },
}

fn linear_decoder(params: &ProblemParams, power: f64) -> AffineDecoder {
    let (q, n) = (params.state_var(), params.noise_var());
    if power > q {
        // The state is cancelled; only the power-matching offset remains.
        AffineDecoder {
            gain: 0.0,
            intercept: (power - q).sqrt(),
        }
    } else {
        let c = 1.0 - (power / q).sqrt();
        let g = c * c * q;
        AffineDecoder {
            gain: g / (g + n),
            intercept: 0.0,
        }
    }
}

/// The closed-form decoder for a policy.
pub fn estimator_coefficients(params: &ProblemParams, policy: &Policy) -> Result<Decoder> {
    policy.validate(params)?;
    Ok(match *policy {
        Policy::Linear { power } => Decoder::Affine(linear_decoder(params, power)),
        Policy::TwoPoint { amplitude } => Decoder::Tanh {
            amplitude,
            slope: amplitude / params.noise_var(),
        },
        Policy::TimeShare {
            lambda,
            power_low,
            power_high,
        } => Decoder::TimeShare {
            lambda,
            low: linear_decoder(params, power_low),
            high: linear_decoder(params, power_high),
        },
        Policy::GaussianAchievability { power } => {
            let scheme = achievability_scheme(params, power)?;
            Decoder::SideInfo {
                y_gain: scheme.decoder_y,
                w2_gain: scheme.decoder_w2,
            }
        }
    })
}

/// Closed-form reference pair `(P, S)` a simulation of the policy should
/// reproduce; the two-point cost uses the given quadrature settings.
pub fn reference_costs(
    params: &ProblemParams,
    policy: &Policy,
    quad: &QuadratureConfig,
) -> Result<CostPoint> {
    policy.validate(params)?;
    Ok(match *policy {
        Policy::Linear { power } => CostPoint {
            power,
            cost: params.linear_cost(power)?,
        },
        Policy::TwoPoint { amplitude } => CostPoint {
            power: twopoint_power(params, amplitude)?,
            cost: twopoint_mmse(params, amplitude, quad)?,
        },
        Policy::TimeShare {
            lambda,
            power_low,
            power_high,
        } => CostPoint {
            power: lambda * power_low + (1.0 - lambda) * power_high,
            cost: lambda * params.linear_cost(power_low)?
                + (1.0 - lambda) * params.linear_cost(power_high)?,
        },
        Policy::GaussianAchievability { power } => CostPoint {
            power,
            cost: achievability_covariance(params, power)?.1,
        },
    })
}

#[derive(Clone, Copy, Default)]
struct Moments {
    sum_p: f64,
    sum_p2: f64,
    sum_s: f64,
    sum_s2: f64,
    n: u64,
}

impl Moments {
    fn push(&mut self, power_sample: f64, cost_sample: f64) {
        self.sum_p += power_sample;
        self.sum_p2 += power_sample * power_sample;
        self.sum_s += cost_sample;
        self.sum_s2 += cost_sample * cost_sample;
        self.n += 1;
    }

    fn merge(mut self, other: Moments) -> Moments {
        self.sum_p += other.sum_p;
        self.sum_p2 += other.sum_p2;
        self.sum_s += other.sum_s;
        self.sum_s2 += other.sum_s2;
        self.n += other.n;
        self
    }

    fn estimates(&self) -> (McEstimate, McEstimate) {
        let n = self.n as f64;
        let make = |sum: f64, sum_sq: f64| {
            let mean = sum / n;
            let std_error = if self.n > 1 {
                let var = ((sum_sq - sum * sum / n) / (n - 1.0)).max(0.0);
                (var / n).sqrt()
            } else {
                0.0
            };
            McEstimate {
                mean,
                std_error,
                n: self.n,
            }
        };
        (make(self.sum_p, self.sum_p2), make(self.sum_s, self.sum_s2))
    }
}

/// Everything a sample loop needs besides randomness.
enum Kernel {
    Linear {
        state_gain: f64, // U1 = state_gain * X0 + intercept
        intercept: f64,
        decoder: AffineDecoder,
    },
    TwoPoint {
        amplitude: f64,
        decoder_amplitude: f64,
        decoder_slope: f64,
    },
    TimeShare {
        cut: u64, // first `cut` samples run the low-power branch
        low: Box<Kernel>,
        high: Box<Kernel>,
    },
    Achievability {
        z0_sd: f64,
        u0_sd: f64,
        w2_gain: f64,
        state_gain: f64,
        y_gain: f64,
        w2_decoder_gain: f64,
    },
}

fn linear_kernel(params: &ProblemParams, power: f64) -> Kernel {
    let q = params.state_var();
    let (state_gain, intercept) = if power > q {
        (-1.0, (power - q).sqrt())
    } else {
        (-(power / q).sqrt(), 0.0)
    };
    Kernel::Linear {
        state_gain,
        intercept,
        decoder: linear_decoder(params, power),
    }
}

fn build_kernel(params: &ProblemParams, policy: &Policy, samples: u64) -> Result<Kernel> {
    Ok(match *policy {
        Policy::Linear { power } => linear_kernel(params, power),
        Policy::TwoPoint { amplitude } => Kernel::TwoPoint {
            amplitude,
            decoder_amplitude: amplitude,
            decoder_slope: amplitude / params.noise_var(),
        },
        Policy::TimeShare {
            lambda,
            power_low,
            power_high,
        } => Kernel::TimeShare {
            cut: ((lambda * samples as f64).ceil() as u64).min(samples),
            low: Box::new(linear_kernel(params, power_low)),
            high: Box::new(linear_kernel(params, power_high)),
        },
        Policy::GaussianAchievability { power } => {
            let s = achievability_scheme(params, power)?;
            Kernel::Achievability {
                z0_sd: s.z0_var.sqrt(),
                u0_sd: s.u0_var.sqrt(),
                w2_gain: s.w2_gain,
                state_gain: s.state_gain,
                y_gain: s.decoder_y,
                w2_decoder_gain: s.decoder_w2,
            }
        }
    })
}

impl Kernel {
    /// Run one sample. Variate order: plain policies draw (X0, Z1); the
    /// achievability scheme draws (W2, Z0, U0, Z1).
    fn sample(
        &self,
        rng: &mut ChaCha12Rng,
        params: &ProblemParams,
        index: u64,
        w2_scale: f64,
    ) -> (f64, f64) {
        let sqrt_q = params.state_var().sqrt();
        let sqrt_n = params.noise_var().sqrt();
        match self {
            Kernel::Linear {
                state_gain,
                intercept,
                decoder,
            } => {
                let x0 = sqrt_q * rng.sample::<f64, _>(StandardNormal);
                let z1 = sqrt_n * rng.sample::<f64, _>(StandardNormal);
                let u1 = state_gain * x0 + intercept;
                let x1 = x0 + u1;
                let y1 = x1 + z1;
                let u2 = decoder.gain * y1 + decoder.intercept;
                (u1 * u1, (x1 - u2) * (x1 - u2))
            }
            Kernel::TwoPoint {
                amplitude,
                decoder_amplitude,
                decoder_slope,
            } => {
                let x0 = sqrt_q * rng.sample::<f64, _>(StandardNormal);
                let z1 = sqrt_n * rng.sample::<f64, _>(StandardNormal);
                let sign = if x0 >= 0.0 { 1.0 } else { -1.0 };
                let u1 = amplitude * sign - x0;
                let x1 = amplitude * sign;
                let y1 = x1 + z1;
                let u2 = decoder_amplitude * (decoder_slope * y1).tanh();
                (u1 * u1, (x1 - u2) * (x1 - u2))
            }
            Kernel::TimeShare { cut, low, high } => {
                if index < *cut {
                    low.sample(rng, params, index, w2_scale)
                } else {
                    high.sample(rng, params, index, w2_scale)
                }
            }
            Kernel::Achievability {
                z0_sd,
                u0_sd,
                w2_gain,
                state_gain,
                y_gain,
                w2_decoder_gain,
            } => {
                let w2 = rng.sample::<f64, _>(StandardNormal);
                let z0 = z0_sd * rng.sample::<f64, _>(StandardNormal);
                let u0 = u0_sd * rng.sample::<f64, _>(StandardNormal);
                let z1 = sqrt_n * rng.sample::<f64, _>(StandardNormal);
                let x0 = z0 + w2_gain * w2;
                let u1 = -state_gain * z0 + u0;
                let x1 = x0 + u1;
                let y1 = x1 + z1;
                // Rescaling W2 rescales the decoder weight inversely; the
                // estimate depends on correlations only.
                let u2 = y_gain * y1 + (w2_decoder_gain / w2_scale) * (w2_scale * w2);
                (u1 * u1, (x1 - u2) * (x1 - u2))
            }
        }
    }
}

fn run_simulation(
    params: &ProblemParams,
    policy: &Policy,
    cfg: &McConfig,
    w2_scale: f64,
) -> Result<(McEstimate, McEstimate)> {
    policy.validate(params)?;
    cfg.validate()?;
    let kernel = build_kernel(params, policy, cfg.samples)?;
    let n_blocks = cfg.samples.div_ceil(cfg.block_size);

    let total = (0..n_blocks)
        .into_par_iter()
        .map(|block| {
            let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
            rng.set_stream(block);
            let start = block * cfg.block_size;
            let end = (start + cfg.block_size).min(cfg.samples);
            let mut m = Moments::default();
            for index in start..end {
                let (p, s) = kernel.sample(&mut rng, params, index, w2_scale);
                m.push(p, s);
            }
            m
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(Moments::default(), Moments::merge);

    Ok(total.estimates())
}

/// Simulate a policy and return the estimated (power, cost) pair.
///
/// Deterministic: identical `(params, policy, cfg)` give bit-identical
/// estimates for any worker count, because blocks draw from independent
/// streams and are reduced in block order.
pub fn simulate_policy(
    params: &ProblemParams,
    policy: &Policy,
    cfg: &McConfig,
) -> Result<(McEstimate, McEstimate)> {
    run_simulation(params, policy, cfg, 1.0)
}
