//! Variance-preserving time grid `(a_t, σ_t)`, the forward process and
//! time-travel re-noising.
//!
//! The grid is a linear-β DDPM schedule (β from 1e-4 to 0.02 over a
//! 1000-step reference horizon) evaluated in its continuous-time limit, so
//! a grid of any length `T` covers the same cumulative noise range:
//!
//! ```text
//! log ᾱ(τ) = -N (β₀ τ + (β₁ - β₀) τ² / 2),   τ = t / T,  N = 1000
//! a_t = √ᾱ(t/T),   σ_t = √(1 - a_t²)
//! ```
//!
//! Equivalently, the per-step β_t = 1 - ᾱ(t/T) / ᾱ((t-1)/T) and
//! `a_t = √∏(1 - β_i)`.

use crate::error::{Error, Result};
use crate::image::Image;

const BETA_START: f64 = 1e-4;
const BETA_END: f64 = 0.02;
const REFERENCE_STEPS: f64 = 1000.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    a: Vec<f64>,
    sigma: Vec<f64>,
}

impl Schedule {
    pub fn new(steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidArgument(
                "schedule needs at least one step".into(),
            ));
        }
        let log_alpha_bar = |tau: f64| {
            -REFERENCE_STEPS * (BETA_START * tau + (BETA_END - BETA_START) * tau * tau / 2.0)
        };
        let mut a = Vec::with_capacity(steps + 1);
        let mut sigma = Vec::with_capacity(steps + 1);
        for t in 0..=steps {
            let at = (0.5 * log_alpha_bar(t as f64 / steps as f64)).exp();
            a.push(at);
            sigma.push((1.0 - at * at).sqrt());
        }
        // Exact endpoints at t = 0.
        a[0] = 1.0;
        sigma[0] = 0.0;
        Ok(Self { a, sigma })
    }

    /// Builds a schedule from explicit values, checking the invariants
    /// (`a_0 = 1`, `σ_0 = 0`, strict monotonicity, `a² + σ² = 1`).
    pub fn from_values(a: Vec<f64>, sigma: Vec<f64>) -> Result<Self> {
        if a.len() < 2 || a.len() != sigma.len() {
            return Err(Error::InvalidArgument(
                "need matching a and sigma arrays of length T + 1 >= 2".into(),
            ));
        }
        if a[0] != 1.0 || sigma[0] != 0.0 {
            return Err(Error::InvalidArgument(
                "a_0 must be 1 and sigma_0 must be 0".into(),
            ));
        }
        for t in 1..a.len() {
            if !(a[t] < a[t - 1] && sigma[t] > sigma[t - 1]) {
                return Err(Error::InvalidArgument(format!(
                    "schedule is not strictly monotone at t = {t}"
                )));
            }
            if (a[t] * a[t] + sigma[t] * sigma[t] - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidArgument(format!(
                    "schedule is not variance preserving at t = {t}"
                )));
            }
        }
        Ok(Self { a, sigma })
    }

    /// Number of reverse steps `T`.
    pub fn steps(&self) -> usize {
        self.a.len() - 1
    }

    pub fn a(&self, t: usize) -> f64 {
        self.a[t]
    }

    pub fn sigma(&self, t: usize) -> f64 {
        self.sigma[t]
    }

    pub fn a_values(&self) -> &[f64] {
        &self.a
    }

    pub fn sigma_values(&self) -> &[f64] {
        &self.sigma
    }

    pub(crate) fn check_step(&self, t: usize) -> Result<()> {
        if t > self.steps() {
            Err(Error::StepOutOfRange {
                t,
                steps: self.steps(),
            })
        } else {
            Ok(())
        }
    }

    /// `x_t = a_t x0 + σ_t ε`.
    pub fn forward_diffuse(&self, x0: &Image, t: usize, noise: &Image) -> Result<Image> {
        self.check_step(t)?;
        let (a, s) = (self.a[t], self.sigma[t]);
        x0.zip_map(noise, |x, n| a * x + s * n)
    }

    /// Coefficients `(scale, noise_std)` of the jump from step `t` to
    /// `t + l`, chosen so that `x_t = a_t x0 + σ_t ε` maps to a sample with
    /// the marginal of `x_{t+l}`.
    pub fn jump_coefficients(&self, t: usize, l: usize) -> Result<(f64, f64)> {
        self.check_step(t + l)?;
        let ratio = self.a[t + l] / self.a[t];
        let var = self.sigma[t + l].powi(2) - (ratio * self.sigma[t]).powi(2);
        // VP schedules keep this nonnegative; tiny negative values are rounding.
        assert!(var > -1e-12, "negative re-noising variance {var}");
        Ok((ratio, var.max(0.0).sqrt()))
    }

    /// Re-noises `x_t` forward to `t + l`.
    pub fn renoise_jump(&self, x_t: &Image, t: usize, l: usize, noise: &Image) -> Result<Image> {
        let (scale, std) = self.jump_coefficients(t, l)?;
        x_t.zip_map(noise, |x, n| scale * x + std * n)
    }
}

/// Time-travel configuration: blocks of `block_length` steps, each
/// traversed `repeats` times.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TravelPlan {
    pub block_length: usize,
    pub repeats: usize,
}

impl TravelPlan {
    pub fn new(block_length: usize, repeats: usize) -> Result<Self> {
        if block_length == 0 || repeats == 0 {
            return Err(Error::InvalidArgument(format!(
                "time travel needs l >= 1 and r >= 1, got l = {block_length}, r = {repeats}"
            )));
        }
        Ok(Self {
            block_length,
            repeats,
        })
    }

    pub const fn none() -> Self {
        Self {
            block_length: 1,
            repeats: 1,
        }
    }

    /// Consecutive `(start, end)` blocks partitioning `T..0` from the top;
    /// the last block may be shorter.
    pub fn blocks(&self, steps: usize) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let mut start = steps;
        while start > 0 {
            let end = start.saturating_sub(self.block_length);
            out.push((start, end));
            start = end;
        }
        out
    }

    /// Total reverse steps (denoiser evaluations) for a `steps`-long grid.
    pub fn total_steps(&self, steps: usize) -> usize {
        steps * self.repeats
    }
}

impl Default for TravelPlan {
    fn default() -> Self {
        Self {
            block_length: 10,
            repeats: 3,
        }
    }
}
