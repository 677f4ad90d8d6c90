//! Reverse diffusion with range-null-space projection.
//!
//! Each reverse step predicts `ε_t`, forms the clean estimate `x0|t`, runs
//! the constraint chain
//!
//! ```text
//! before_projection hooks -> DDNM projection -> after_projection hooks
//! ```
//!
//! and draws `x_{t-1}`. With measurement noise (`sigma_y > 0`) the projection
//! is the per-mode scaled update and the injected noise is shaped by the
//! matching per-mode `γ` coefficients.

use std::fs;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::denoise::Denoiser;
use crate::error::{Error, Result};
use crate::image::{pnm, Image, Shape};
use crate::linops::{LinearOperator, Measurement};
use crate::schedule::{Schedule, TravelPlan};

pub const DEFAULT_ETA: f64 = 0.85;
pub const DEFAULT_STEPS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerConfig {
    /// Grid length `T`.
    pub steps: usize,
    pub eta: f64,
    pub travel: TravelPlan,
    pub seed: u64,
    /// Measurement noise standard deviation.
    pub sigma_y: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            steps: DEFAULT_STEPS,
            eta: DEFAULT_ETA,
            travel: TravelPlan::default(),
            seed: 0,
            sigma_y: 0.0,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::InvalidArgument("steps must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::InvalidArgument(format!(
                "eta must lie in [0, 1], got {}",
                self.eta
            )));
        }
        if !(self.sigma_y >= 0.0 && self.sigma_y.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "sigma_y must be a finite nonnegative number, got {}",
                self.sigma_y
            )));
        }
        TravelPlan::new(self.travel.block_length, self.travel.repeats)?;
        Ok(())
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }
}

/// One link of the constraint chain applied to `x0|t` at every step.
pub trait Constraint {
    fn apply(&mut self, x0: &mut Image, t: usize) -> Result<()>;
}

#[derive(Default)]
pub struct ConstraintHooks<'a> {
    pub before_projection: Vec<&'a mut dyn Constraint>,
    pub after_projection: Vec<&'a mut dyn Constraint>,
}

impl ConstraintHooks<'_> {
    pub fn none() -> Self {
        Self::default()
    }
}

/// `x0|t = (x_t - σ_t ε_t) / a_t`.
pub fn estimate_x0(schedule: &Schedule, x_t: &Image, eps: &Image, t: usize) -> Result<Image> {
    schedule.check_step(t)?;
    if t == 0 {
        return Err(Error::InvalidArgument("cannot estimate x0 at t = 0".into()));
    }
    let (a, s) = (schedule.a(t), schedule.sigma(t));
    x_t.zip_map(eps, |x, e| (x - s * e) / a)
}

/// `A†y + (I - A†A) x0t`.
pub fn ddnm_project(op: &dyn LinearOperator, y: &Measurement, x0t: &Image) -> Result<Image> {
    x0t.expect_shape(op.input_shape())?;
    let special = op.pinv(y)?;
    let range = op.range_project(x0t)?;
    let mut out = special;
    for ((o, &x), &r) in out.data_mut().iter_mut().zip(x0t.data()).zip(range.data()) {
        *o += x - r;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseCoefficients {
    /// Range-space retention `λ`.
    pub lambda: f64,
    /// Injected-noise coefficient `γ`.
    pub gamma: f64,
}

/// `λ` and `γ` for one mode given the previous-step schedule values.
///
/// `s` enters through `Σ†(Σ†)ᵀ = diag(s²)`, i.e. it is the singular value of
/// the pseudo-inverse for that mode (`0` on null modes). The pair satisfies
/// `a²σ_y²λ²s² + σ²γ² = σ²η²`.
pub fn lambda_gamma(
    s: f64,
    a_prev: f64,
    sigma_prev: f64,
    eta: f64,
    sigma_y: f64,
) -> NoiseCoefficients {
    if s == 0.0 {
        return NoiseCoefficients {
            lambda: 1.0,
            gamma: if sigma_prev == 0.0 { 0.0 } else { eta },
        };
    }
    if sigma_prev == 0.0 {
        // Terminal step: no noise is injected and the range is kept only up
        // to the (zero) budget.
        let lambda = if sigma_y == 0.0 { 1.0 } else { 0.0 };
        return NoiseCoefficients { lambda, gamma: 0.0 };
    }
    let budget = sigma_prev * eta;
    let load = a_prev * sigma_y * s;
    if budget >= load {
        let q = load / sigma_prev;
        NoiseCoefficients {
            lambda: 1.0,
            gamma: (eta * eta - q * q).max(0.0).sqrt(),
        }
    } else {
        NoiseCoefficients {
            lambda: budget / load,
            gamma: 0.0,
        }
    }
}

/// [`lambda_gamma`] at reverse step `t` (uses `a_{t-1}`, `σ_{t-1}`).
pub fn compute_lambda_gamma(
    s: f64,
    t: usize,
    schedule: &Schedule,
    eta: f64,
    sigma_y: f64,
) -> Result<NoiseCoefficients> {
    schedule.check_step(t)?;
    if t == 0 || s < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "lambda/gamma need t >= 1 and s >= 0 (t = {t}, s = {s})"
        )));
    }
    Ok(lambda_gamma(
        s,
        schedule.a(t - 1),
        schedule.sigma(t - 1),
        eta,
        sigma_y,
    ))
}

/// Per-mode `γ` for one step, keyed by the operator's singular values.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeGammas {
    range: Vec<(f64, f64)>,
    null: f64,
}

impl ModeGammas {
    pub fn uniform(eta: f64) -> Self {
        Self {
            range: Vec::new(),
            null: eta,
        }
    }

    /// `γ` for a mode with operator singular value `s`.
    pub fn gamma(&self, s: f64) -> f64 {
        if s == 0.0 {
            return self.null;
        }
        self.range
            .iter()
            .find(|(sv, _)| *sv == s)
            .map_or(self.null, |(_, g)| *g)
    }

    pub fn range_gammas(&self) -> &[(f64, f64)] {
        &self.range
    }
}

/// Singular value of `A†` for a mode whose `A` singular value is `s`.
fn pinv_singular_value(s: f64) -> f64 {
    if s > 0.0 {
        1.0 / s
    } else {
        0.0
    }
}

/// `x0t + Σ_t A†(y - A x0t)` with `Σ_t = V Λ_t Vᵀ`, plus the per-mode `γ`
/// used to shape the injected noise at this step.
pub fn ddnm_plus_project(
    op: &dyn LinearOperator,
    y: &Measurement,
    x0t: &Image,
    t: usize,
    schedule: &Schedule,
    cfg: &SamplerConfig,
) -> Result<(Image, ModeGammas)> {
    schedule.check_step(t)?;
    if t == 0 {
        return Err(Error::InvalidArgument("projection needs t >= 1".into()));
    }
    let classes = op.mode_classes();
    let mut range = Vec::new();
    let mut has_null = false;
    for class in classes.iter().filter(|c| c.count > 0) {
        if class.singular_value > 0.0 {
            let c = compute_lambda_gamma(
                pinv_singular_value(class.singular_value),
                t,
                schedule,
                cfg.eta,
                cfg.sigma_y,
            )?;
            range.push((class.singular_value, c));
        } else {
            has_null = true;
        }
    }
    let null = compute_lambda_gamma(0.0, t, schedule, cfg.eta, cfg.sigma_y)?.gamma;
    let gammas = ModeGammas {
        range: range.iter().map(|(s, c)| (*s, c.gamma)).collect(),
        null: if has_null { null } else { cfg.eta },
    };
    if range.iter().all(|(_, c)| c.lambda == 1.0) {
        // Σ_t = I: identical to the noise-free projection.
        return Ok((ddnm_project(op, y, x0t)?, gammas));
    }
    let residual = y.sub(&op.forward(x0t)?)?;
    let lambda_of = |s: f64| {
        range
            .iter()
            .find(|(sv, _)| *sv == s)
            .map_or(0.0, |(_, c)| c.lambda)
    };
    let update = op.pinv_scaled(&residual, &lambda_of)?;
    Ok((x0t.zip_map(&update, |x, u| x + u)?, gammas))
}

/// How the fresh noise `ε` enters `x_{t-1}`.
pub enum NoiseScale<'a> {
    /// `η ε`.
    Scalar(f64),
    /// `Φ_t ε = V Γ_t Vᵀ ε`.
    PerMode {
        op: &'a dyn LinearOperator,
        gammas: &'a ModeGammas,
    },
}

/// `x_{t-1} = a_{t-1} x̂0 + σ_{t-1} (Φ ε + √(1 - η²) ε_t)`.
///
/// `noise` is the fresh standard-normal draw `ε`.
pub fn sample_prev(
    schedule: &Schedule,
    x0hat: &Image,
    eps_t: &Image,
    t: usize,
    eta: f64,
    scale: NoiseScale<'_>,
    noise: &Image,
) -> Result<Image> {
    schedule.check_step(t)?;
    if t == 0 {
        return Err(Error::InvalidArgument("no step before t = 0".into()));
    }
    x0hat.expect_shape(eps_t.shape())?;
    noise.expect_shape(eps_t.shape())?;
    let (a, s) = (schedule.a(t - 1), schedule.sigma(t - 1));
    if s == 0.0 && a == 1.0 {
        return Ok(x0hat.clone());
    }
    let fresh = match scale {
        NoiseScale::Scalar(eta) => noise.map(|n| eta * n),
        NoiseScale::PerMode { op, gammas } => op.spectral_apply(noise, &|sv| gammas.gamma(sv))?,
    };
    let keep = (1.0 - eta * eta).max(0.0).sqrt();
    let data = x0hat
        .data()
        .iter()
        .zip(fresh.data())
        .zip(eps_t.data())
        .map(|((&x, &f), &e)| a * x + s * (f + keep * e))
        .collect();
    Ok(Image::from_raw(x0hat.shape(), data))
}

/// Receives every projected clean estimate during a run.
pub trait StepObserver {
    fn observe(&mut self, step: usize, t: usize, x0: &Image) -> Result<()>;
}

/// Writes `x0|t` snapshots every `every` steps as `<prefix>_step<NNNN>_t<TTT>.ppm`.
#[derive(Debug, Clone)]
pub struct StepDump {
    pub dir: PathBuf,
    pub every: usize,
    pub prefix: String,
}

impl StepObserver for StepDump {
    fn observe(&mut self, step: usize, t: usize, x0: &Image) -> Result<()> {
        if self.every == 0 || !step.is_multiple_of(self.every) {
            return Ok(());
        }
        fs::create_dir_all(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        let ext = if x0.channels() == 3 { "ppm" } else { "pgm" };
        let name = format!("{}_step{step:04}_t{t:03}.{ext}", self.prefix);
        pnm::save(self.dir.join(name), x0)
    }
}

#[derive(Debug, Clone)]
pub struct Sample {
    pub image: Image,
    /// Denoiser evaluations performed.
    pub steps: usize,
}

pub(crate) fn standard_normal(shape: Shape, rng: &mut ChaCha8Rng) -> Image {
    Image::from_fn(shape, |_, _, _| rng.sample(StandardNormal))
}

pub fn run_sampler(
    op: &dyn LinearOperator,
    y: &Measurement,
    denoiser: &dyn Denoiser,
    cfg: &SamplerConfig,
    hooks: ConstraintHooks<'_>,
) -> Result<Sample> {
    run_sampler_observed(op, y, denoiser, cfg, hooks, None)
}

pub fn run_sampler_observed(
    op: &dyn LinearOperator,
    y: &Measurement,
    denoiser: &dyn Denoiser,
    cfg: &SamplerConfig,
    mut hooks: ConstraintHooks<'_>,
    mut observer: Option<&mut dyn StepObserver>,
) -> Result<Sample> {
    cfg.validate()?;
    let shape = op.input_shape();
    if denoiser.shape() != shape {
        return Err(Error::Shape(format!(
            "denoiser accepts {} but the operator acts on {shape}",
            denoiser.shape()
        )));
    }
    if y.len() != op.output_len() {
        return Err(Error::Shape(format!(
            "measurement has {} entries, operator expects {}",
            y.len(),
            op.output_len()
        )));
    }
    let schedule = Schedule::new(cfg.steps)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut x = standard_normal(shape, &mut rng);
    let mut step = 0;

    for (start, end) in cfg.travel.blocks(cfg.steps) {
        for pass in 0..cfg.travel.repeats {
            if pass > 0 {
                let noise = standard_normal(shape, &mut rng);
                x = schedule.renoise_jump(&x, end, start - end, &noise)?;
            }
            for t in (end + 1..=start).rev() {
                let eps = denoiser.predict_eps(&x, t, &schedule)?;
                let mut x0 = estimate_x0(&schedule, &x, &eps, t)?;
                for hook in hooks.before_projection.iter_mut() {
                    hook.apply(&mut x0, t)?;
                }
                let (mut x0hat, gammas) = if cfg.sigma_y > 0.0 {
                    let (img, g) = ddnm_plus_project(op, y, &x0, t, &schedule, cfg)?;
                    (img, Some(g))
                } else {
                    (ddnm_project(op, y, &x0)?, None)
                };
                for hook in hooks.after_projection.iter_mut() {
                    hook.apply(&mut x0hat, t)?;
                }
                if !x0hat.is_finite() {
                    return Err(Error::NonFinite {
                        step,
                        context: format!("clean estimate at t = {t}"),
                    });
                }
                if let Some(obs) = observer.as_deref_mut() {
                    obs.observe(step, t, &x0hat)?;
                }
                let noise = standard_normal(shape, &mut rng);
                let scale = match &gammas {
                    Some(g) => NoiseScale::PerMode { op, gammas: g },
                    None => NoiseScale::Scalar(cfg.eta),
                };
                x = sample_prev(&schedule, &x0hat, &eps, t, cfg.eta, scale, &noise)?;
                if !x.is_finite() {
                    return Err(Error::NonFinite {
                        step,
                        context: format!("state x_{}", t - 1),
                    });
                }
                step += 1;
            }
        }
    }
    Ok(Sample {
        image: x,
        steps: step,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::denoise::{GaussianDenoiser, GmmDenoiser, GmmPrior, ZeroDenoiser};
    use crate::image::Mask;
    use crate::linops::{AvgPool, MaskOp};

    fn scalar(v: f64) -> Image {
        Image::new(Shape::new(1, 1, 1), vec![v]).unwrap()
    }

    fn toy() -> Schedule {
        Schedule::from_values(vec![1.0, 0.8, 0.5], vec![0.0, 0.6, 0.75f64.sqrt()]).unwrap()
    }

    #[test]
    fn estimate_x0_inverts_forward_example() {
        let x0 = estimate_x0(&toy(), &scalar(1.1), &scalar(0.5), 1).unwrap();
        assert!((x0.data()[0] - 1.0).abs() < 1e-15);
        let x0 = estimate_x0(&toy(), &scalar(0.4), &scalar(0.0), 1).unwrap();
        assert_eq!(x0.data()[0], 0.4 / 0.8);
        assert!(estimate_x0(&toy(), &scalar(0.4), &scalar(0.0), 0).is_err());
    }

    #[test]
    fn forward_then_estimate_recovers_x0() {
        let s = Schedule::new(50).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let shape = Shape::new(3, 3, 3);
        let x0 = standard_normal(shape, &mut rng);
        let eps = standard_normal(shape, &mut rng);
        for t in [1, 10, 50] {
            let xt = s.forward_diffuse(&x0, t, &eps).unwrap();
            let back = estimate_x0(&s, &xt, &eps, t).unwrap();
            assert!(back.max_abs_diff(&x0).unwrap() < 1e-12);
        }
    }

    #[test]
    fn projection_examples() {
        let op = AvgPool::new(Shape::new(2, 2, 1), 2).unwrap();
        let ones = Image::filled(Shape::new(2, 2, 1), 1.0);
        let out = ddnm_project(&op, &Measurement::new(vec![0.5]), &ones).unwrap();
        assert_eq!(out.data(), &[0.5; 4]);

        let consistent = Image::new(Shape::new(2, 2, 1), vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let y = op.forward(&consistent).unwrap();
        let out = ddnm_project(&op, &y, &consistent).unwrap();
        assert!(out.max_abs_diff(&consistent).unwrap() < 1e-15);

        let shape = Shape::new(2, 2, 3);
        let mask = Mask::from_fn(2, 2, |i, j| i == j);
        let mop = MaskOp::new(shape, mask.clone()).unwrap();
        let truth = Image::from_fn(shape, |i, j, k| 0.1 * (i + 2 * j + 3 * k) as f64);
        let guess = Image::filled(shape, -0.7);
        let out = ddnm_project(&mop, &mop.forward(&truth).unwrap(), &guess).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..3 {
                    let expect = if mask.is_known(i, j) {
                        truth.get(i, j, k)
                    } else {
                        -0.7
                    };
                    assert_eq!(out.get(i, j, k), expect);
                }
            }
        }
        assert!(ddnm_project(&mop, &Measurement::new(vec![0.0]), &guess).is_err());
    }

    #[test]
    fn lambda_gamma_examples() {
        // σ = 0.5, η = 0.8, a = 0.9, σ_y = 0.1, s = 1.
        let c = lambda_gamma(1.0, 0.9, 0.5, 0.8, 0.1);
        assert_eq!(c.lambda, 1.0);
        let expect = ((0.16 - 0.0081) / 0.25f64).sqrt();
        assert!((c.gamma - expect).abs() < 1e-15);
        assert!((c.gamma - 0.77949).abs() < 1e-5);
        // Identity oracle.
        let lhs = 0.81 * 0.01 * c.lambda.powi(2) + 0.25 * c.gamma.powi(2);
        assert!((lhs - 0.25 * 0.64).abs() < 1e-15);

        // σ_y = 1: clamped branch.
        let c = lambda_gamma(1.0, 0.9, 0.5, 0.8, 1.0);
        assert!((c.lambda - 0.4 / 0.9).abs() < 1e-15);
        assert_eq!(c.gamma, 0.0);

        // Null modes carry no measurement noise.
        assert_eq!(lambda_gamma(0.0, 0.9, 0.5, 0.8, 1.0).gamma, 0.8);
        // Noise-free.
        let c = lambda_gamma(2.0, 0.9, 0.5, 0.8, 0.0);
        assert_eq!((c.lambda, c.gamma), (1.0, 0.8));
    }

    #[test]
    fn sigma_y_zero_matches_noise_free_projection() {
        let s = Schedule::new(10).unwrap();
        let shape = Shape::new(4, 4, 3);
        let op = AvgPool::new(shape, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = standard_normal(shape, &mut rng);
        let y = op.forward(&standard_normal(shape, &mut rng)).unwrap();
        let cfg = SamplerConfig {
            eta: 0.6,
            ..SamplerConfig::default()
        };
        for t in 1..=10 {
            let (p, g) = ddnm_plus_project(&op, &y, &x, t, &s, &cfg).unwrap();
            assert_eq!(p, ddnm_project(&op, &y, &x).unwrap());
            let expect = if t == 1 { 0.0 } else { 0.6 };
            assert_eq!(g.gamma(0.0), expect);
            assert_eq!(g.gamma(0.5), expect);
        }
    }

    #[test]
    fn noisy_projection_scales_residual() {
        // Force the clamped branch and compare with λ A†(y - A x).
        let s = Schedule::new(10).unwrap();
        let shape = Shape::new(4, 4, 1);
        let op = AvgPool::new(shape, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = standard_normal(shape, &mut rng);
        let y = op.forward(&standard_normal(shape, &mut rng)).unwrap();
        let cfg = SamplerConfig {
            eta: 0.85,
            sigma_y: 0.5,
            ..SamplerConfig::default()
        };
        let t = 3;
        let c = lambda_gamma(2.0, s.a(t - 1), s.sigma(t - 1), 0.85, 0.5);
        assert!(c.lambda < 1.0);
        let (p, g) = ddnm_plus_project(&op, &y, &x, t, &s, &cfg).unwrap();
        let r = y.sub(&op.forward(&x).unwrap()).unwrap();
        let expect = x
            .zip_map(&op.pinv(&r).unwrap(), |a, b| a + c.lambda * b)
            .unwrap();
        assert!(p.max_abs_diff(&expect).unwrap() < 1e-14);
        assert_eq!(g.gamma(0.5), c.gamma);
        assert_eq!(g.gamma(0.0), 0.85);
    }

    #[test]
    fn deterministic_and_terminal_steps() {
        let s = toy();
        let x0 = scalar(0.3);
        let eps = scalar(-0.2);
        let noise = scalar(1.7);
        // η = 0 on step 2 -> 1: a_1 x̂0 + σ_1 ε_t.
        let out = sample_prev(&s, &x0, &eps, 2, 0.0, NoiseScale::Scalar(0.0), &noise).unwrap();
        assert_eq!(out.data()[0], 0.8 * 0.3 + 0.6 * -0.2);
        // t = 1 returns x̂0 exactly.
        let out = sample_prev(&s, &x0, &eps, 1, 0.85, NoiseScale::Scalar(0.85), &noise).unwrap();
        assert_eq!(out, x0);
        assert!(sample_prev(&s, &x0, &eps, 0, 0.85, NoiseScale::Scalar(0.85), &noise).is_err());
    }

    #[test]
    fn injected_noise_variance() {
        // η = 1: x_{t-1} = a x̂0 + σ ε, so Var = σ_{t-1}².
        let s = toy();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let n = 20_000;
        let draws: Vec<f64> = (0..n)
            .map(|_| {
                let noise = standard_normal(Shape::new(1, 1, 1), &mut rng);
                sample_prev(
                    &s,
                    &scalar(0.3),
                    &scalar(0.9),
                    2,
                    1.0,
                    NoiseScale::Scalar(1.0),
                    &noise,
                )
                .unwrap()
                .data()[0]
            })
            .collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let target = 0.36;
        // Var of the sample variance for a Gaussian: 2σ⁴/(n-1).
        let se = (2.0 * target * target / (n - 1) as f64).sqrt();
        assert!((var - target).abs() < 4.0 * se, "{var}");
        assert!((mean - 0.24).abs() < 4.0 * (target / n as f64).sqrt());
    }

    #[test]
    fn zero_denoiser_smoke_run() {
        let shape = Shape::new(4, 4, 1);
        let op = MaskOp::new(shape, Mask::filled(4, 4, false)).unwrap();
        let cfg = SamplerConfig {
            steps: 20,
            eta: 1.0,
            travel: TravelPlan::none(),
            ..SamplerConfig::default()
        };
        let out = run_sampler(
            &op,
            &Measurement::empty(),
            &ZeroDenoiser::new(shape),
            &cfg,
            ConstraintHooks::none(),
        )
        .unwrap();
        assert!(out.image.is_finite());
        assert_eq!(out.steps, 20);
    }

    #[test]
    fn all_known_mask_returns_measurement() {
        let shape = Shape::new(4, 4, 3);
        let prior = GmmPrior::synthetic(shape, 2, 0.05, 2).unwrap();
        let truth = prior.components().next().unwrap().1.clone();
        let op = MaskOp::new(shape, Mask::filled(4, 4, true)).unwrap();
        let y = op.forward(&truth).unwrap();
        let cfg = SamplerConfig {
            steps: 10,
            travel: TravelPlan::new(3, 2).unwrap(),
            ..SamplerConfig::default()
        };
        let out = run_sampler(
            &op,
            &y,
            &GmmDenoiser::new(prior),
            &cfg,
            ConstraintHooks::none(),
        )
        .unwrap();
        assert_eq!(out.image, truth);
        assert_eq!(out.steps, 20);
    }

    #[test]
    fn time_travel_step_count() {
        let shape = Shape::new(2, 2, 1);
        let op = MaskOp::new(shape, Mask::filled(2, 2, false)).unwrap();
        let d = GaussianDenoiser::isotropic(Image::zeros(shape), 0.25).unwrap();
        let mut counter = Counter(0);
        let cfg = SamplerConfig {
            steps: 100,
            travel: TravelPlan::new(10, 3).unwrap(),
            ..SamplerConfig::default()
        };
        let out = run_sampler_observed(
            &op,
            &Measurement::empty(),
            &d,
            &cfg,
            ConstraintHooks::none(),
            Some(&mut counter),
        )
        .unwrap();
        assert_eq!(out.steps, 300);
        assert_eq!(counter.0, 300);
    }

    struct Counter(usize);

    impl StepObserver for Counter {
        fn observe(&mut self, _: usize, _: usize, _: &Image) -> Result<()> {
            self.0 += 1;
            Ok(())
        }
    }

    #[test]
    fn denoiser_shape_must_match() {
        let op = MaskOp::new(Shape::new(2, 2, 1), Mask::filled(2, 2, false)).unwrap();
        let d = ZeroDenoiser::new(Shape::new(4, 4, 1));
        let err = run_sampler(
            &op,
            &Measurement::empty(),
            &d,
            &SamplerConfig::default(),
            ConstraintHooks::none(),
        );
        assert!(matches!(err, Err(Error::Shape(_))));
    }

    #[test]
    fn config_validation() {
        let bad_eta = SamplerConfig {
            eta: 1.5,
            ..SamplerConfig::default()
        };
        assert!(bad_eta.validate().is_err());
        let bad_sigma = SamplerConfig {
            sigma_y: -0.1,
            ..SamplerConfig::default()
        };
        assert!(bad_sigma.validate().is_err());
        assert!(SamplerConfig::default().validate().is_ok());
    }

    #[test]
    fn step_dump_writes_snapshots() {
        let dir = tempfile::tempdir().unwrap();
        let shape = Shape::new(2, 2, 1);
        let op = MaskOp::new(shape, Mask::filled(2, 2, false)).unwrap();
        let mut dump = StepDump {
            dir: dir.path().to_path_buf(),
            every: 5,
            prefix: "tile0".into(),
        };
        let cfg = SamplerConfig {
            steps: 10,
            travel: TravelPlan::none(),
            ..SamplerConfig::default()
        };
        run_sampler_observed(
            &op,
            &Measurement::empty(),
            &ZeroDenoiser::new(shape),
            &cfg,
            ConstraintHooks::none(),
            Some(&mut dump),
        )
        .unwrap();
        let n = fs::read_dir(dir.path()).unwrap().count();
        assert_eq!(n, 2);
    }
}
