//! ε-predictors with closed-form posterior means.
//!
//! Each analytic denoiser computes the exact `E[x0 | x_t]` under its prior
//! and converts it to a noise prediction `ε_t = (x_t - a_t x̂0) / σ_t`, so
//! that `(x_t - σ_t ε_t) / a_t` recovers `x̂0`.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::image::{pnm, Image, Shape};
use crate::schedule::Schedule;

pub const DEFAULT_TAU: f64 = 0.05;
pub const MANIFEST: &str = "prior.txt";

pub trait Denoiser: Send + Sync {
    /// The fixed input shape this denoiser accepts.
    fn shape(&self) -> Shape;

    fn predict_eps(&self, x_t: &Image, t: usize, schedule: &Schedule) -> Result<Image>;
}

fn check_call(shape: Shape, x_t: &Image, t: usize, schedule: &Schedule) -> Result<()> {
    x_t.expect_shape(shape)?;
    schedule.check_step(t)?;
    if t == 0 {
        return Err(Error::InvalidArgument(
            "denoiser called at t = 0 where sigma_0 = 0".into(),
        ));
    }
    Ok(())
}

fn eps_from_x0(x_t: &Image, x0: &Image, a: f64, sigma: f64) -> Result<Image> {
    x_t.zip_map(x0, |x, m| (x - a * m) / sigma)
}

/// Always predicts zero noise, so `x0|t = x_t / a_t`.
#[derive(Debug, Clone)]
pub struct ZeroDenoiser {
    shape: Shape,
}

impl ZeroDenoiser {
    pub fn new(shape: Shape) -> Self {
        Self { shape }
    }
}

impl Denoiser for ZeroDenoiser {
    fn shape(&self) -> Shape {
        self.shape
    }

    fn predict_eps(&self, x_t: &Image, _t: usize, _schedule: &Schedule) -> Result<Image> {
        x_t.expect_shape(self.shape)?;
        Ok(Image::zeros(self.shape))
    }
}

/// Independent Gaussian prior `N(μ, diag(v))`.
#[derive(Debug, Clone)]
pub struct GaussianDenoiser {
    mean: Image,
    variance: Image,
}

impl GaussianDenoiser {
    pub fn new(mean: Image, variance: Image) -> Result<Self> {
        variance.expect_shape(mean.shape())?;
        if variance.data().iter().any(|&v| v < 0.0) {
            return Err(Error::Prior("negative prior variance".into()));
        }
        Ok(Self { mean, variance })
    }

    pub fn isotropic(mean: Image, variance: f64) -> Result<Self> {
        let v = Image::filled(mean.shape(), variance);
        Self::new(mean, v)
    }

    pub fn mean(&self) -> &Image {
        &self.mean
    }

    pub fn variance(&self) -> &Image {
        &self.variance
    }

    /// `E[x0 | x_t] = μ + a v / (a² v + σ²) (x_t - a μ)`.
    pub fn posterior_mean(&self, x_t: &Image, t: usize, schedule: &Schedule) -> Result<Image> {
        check_call(self.shape(), x_t, t, schedule)?;
        Ok(posterior_mean_gaussian(
            &self.mean,
            &self.variance,
            x_t,
            schedule.a(t),
            schedule.sigma(t),
        ))
    }
}

pub(crate) fn posterior_mean_gaussian(
    mean: &Image,
    variance: &Image,
    x_t: &Image,
    a: f64,
    sigma: f64,
) -> Image {
    let data = mean
        .data()
        .iter()
        .zip(variance.data())
        .zip(x_t.data())
        .map(|((&m, &v), &x)| m + a * v / (a * a * v + sigma * sigma) * (x - a * m))
        .collect();
    Image::from_raw(mean.shape(), data)
}

impl Denoiser for GaussianDenoiser {
    fn shape(&self) -> Shape {
        self.mean.shape()
    }

    fn predict_eps(&self, x_t: &Image, t: usize, schedule: &Schedule) -> Result<Image> {
        let x0 = self.posterior_mean(x_t, t, schedule)?;
        eps_from_x0(x_t, &x0, schedule.a(t), schedule.sigma(t))
    }
}

/// Isotropic Gaussian mixture `Σ w_k N(μ_k, τ² I)`.
#[derive(Debug, Clone)]
pub struct GmmPrior {
    weights: Vec<f64>,
    means: Vec<Image>,
    tau: f64,
}

impl GmmPrior {
    pub fn new(components: Vec<(f64, Image)>, tau: f64) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Prior("mixture has no components".into()));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::Prior(format!("tau must be positive, got {tau}")));
        }
        let shape = components[0].1.shape();
        let (weights, means): (Vec<f64>, Vec<Image>) = components.into_iter().unzip();
        if let Some(m) = means.iter().find(|m| m.shape() != shape) {
            return Err(Error::Prior(format!(
                "component shapes differ: {shape} vs {}",
                m.shape()
            )));
        }
        if weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(Error::Prior("component weights must be positive".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Prior(format!("weights sum to {total}, not 1")));
        }
        Ok(Self {
            weights,
            means,
            tau,
        })
    }

    pub fn shape(&self) -> Shape {
        self.means[0].shape()
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }

    pub fn components(&self) -> impl Iterator<Item = (f64, &Image)> {
        self.weights.iter().copied().zip(&self.means)
    }

    /// Reads `prior.txt` from `dir`: a `tau <float>` line followed by
    /// `component <weight> <relative-path>` lines. Blank lines and `#`
    /// comments are ignored. Weights are renormalized.
    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let manifest = dir.join(MANIFEST);
        let text = fs::read_to_string(&manifest).map_err(|e| Error::io(&manifest, e))?;
        let mut tau = None;
        let mut components = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let bad = || Error::Prior(format!("{}:{}: malformed line", manifest.display(), n + 1));
            match fields.as_slice() {
                ["tau", v] => tau = Some(v.parse::<f64>().map_err(|_| bad())?),
                ["component", w, path] => {
                    let w = w.parse::<f64>().map_err(|_| bad())?;
                    components.push((w, pnm::load(dir.join(path))?));
                }
                _ => return Err(bad()),
            }
        }
        let tau = tau.ok_or_else(|| Error::Prior("manifest has no tau line".into()))?;
        let total: f64 = components.iter().map(|c| c.0).sum();
        if (total - 1.0).abs() > 1e-6 {
            log::warn!("prior weights sum to {total}; renormalizing");
        }
        if total > 0.0 {
            components.iter_mut().for_each(|c| c.0 /= total);
        }
        Self::new(components, tau)
    }

    /// Writes the means as `component_NN.ppm`/`.pgm` plus `prior.txt`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let ext = if self.shape().channels == 3 {
            "ppm"
        } else {
            "pgm"
        };
        let mut manifest = format!("tau {}\n", self.tau);
        for (k, (w, mean)) in self.components().enumerate() {
            let name = format!("component_{k:02}.{ext}");
            pnm::save(dir.join(&name), mean)?;
            manifest.push_str(&format!("component {w} {name}\n"));
        }
        let path = dir.join(MANIFEST);
        fs::write(&path, manifest).map_err(|e| Error::io(&path, e))
    }

    /// A mixture of `k` smooth, 8-bit-representable color fields with equal
    /// weights. Used by tests, the self-test and `make-prior`.
    pub fn synthetic(shape: Shape, k: usize, tau: f64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut components = Vec::with_capacity(k);
        for _ in 0..k {
            let base: Vec<f64> = (0..shape.channels)
                .map(|_| rng.random_range(-0.6..0.6))
                .collect();
            let phase: Vec<f64> = (0..shape.channels)
                .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
                .collect();
            let fy = rng.random_range(0..3) as f64;
            let fx = rng.random_range(1..3) as f64;
            let amp = rng.random_range(0.1..0.3);
            let mean = Image::from_fn(shape, |i, j, c| {
                let u = fy * i as f64 / shape.height as f64 + fx * j as f64 / shape.width as f64;
                let v = base[c] + amp * (std::f64::consts::TAU * u + phase[c]).sin();
                v.clamp(-0.95, 0.95)
            });
            components.push((1.0 / k as f64, pnm::quantize(&mean)));
        }
        let total: f64 = components.iter().map(|c| c.0).sum();
        components.iter_mut().for_each(|c| c.0 /= total);
        Self::new(components, tau)
    }

    /// Like [`GmmPrior::synthetic`], but every component is periodic with
    /// `period` pixels along both axes, so any window shifted by a multiple
    /// of `period` sees the same mixture. Tiles whose stride is a multiple
    /// of `period` can then continue each other without a seam.
    pub fn stationary(shape: Shape, k: usize, tau: f64, period: usize, seed: u64) -> Result<Self> {
        if period == 0 {
            return Err(Error::Prior("period must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut components = Vec::with_capacity(k);
        for _ in 0..k {
            let base: Vec<f64> = (0..shape.channels)
                .map(|_| rng.random_range(-0.6..0.6))
                .collect();
            let phase: Vec<f64> = (0..shape.channels)
                .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
                .collect();
            let (fy, fx) =
                [(0.0, 1.0), (1.0, 0.0), (1.0, 1.0), (1.0, -1.0)][rng.random_range(0..4)];
            let amp = rng.random_range(0.1..0.3);
            let mean = Image::from_fn(shape, |i, j, c| {
                let u = (fy * (i % period) as f64 + fx * (j % period) as f64) / period as f64;
                let v = base[c] + amp * (std::f64::consts::TAU * u + phase[c]).sin();
                v.clamp(-0.95, 0.95)
            });
            components.push((1.0 / k as f64, pnm::quantize(&mean)));
        }
        Self::new(components, tau)
    }
}

#[derive(Debug, Clone)]
pub struct GmmDenoiser {
    prior: GmmPrior,
}

impl GmmDenoiser {
    pub fn new(prior: GmmPrior) -> Self {
        Self { prior }
    }

    pub fn prior(&self) -> &GmmPrior {
        &self.prior
    }

    /// Posterior component probabilities `ρ_k ∝ w_k N(x_t; a μ_k, (a²τ² + σ²) I)`.
    pub fn responsibilities(&self, x_t: &Image, t: usize, schedule: &Schedule) -> Result<Vec<f64>> {
        check_call(self.shape(), x_t, t, schedule)?;
        Ok(self.responsibilities_at(x_t, schedule.a(t), schedule.sigma(t)))
    }

    fn responsibilities_at(&self, x_t: &Image, a: f64, sigma: f64) -> Vec<f64> {
        let var = a * a * self.prior.tau * self.prior.tau + sigma * sigma;
        let mut logits: Vec<f64> = self
            .prior
            .components()
            .map(|(w, mean)| {
                let dist: f64 = x_t
                    .data()
                    .iter()
                    .zip(mean.data())
                    .map(|(&x, &m)| {
                        let d = x - a * m;
                        d * d
                    })
                    .sum();
                w.ln() - dist / (2.0 * var)
            })
            .collect();
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        logits.iter_mut().for_each(|l| *l = (*l - max).exp());
        let total: f64 = logits.iter().sum();
        // The arg-max term contributes exp(0) = 1.
        assert!(
            total >= 1.0 && total.is_finite(),
            "responsibilities underflowed"
        );
        logits.iter_mut().for_each(|l| *l /= total);
        logits
    }

    /// `E[x0 | x_t] = Σ ρ_k [μ_k + c (x_t - a μ_k)]`, `c = a τ² / (a² τ² + σ²)`.
    pub fn posterior_mean(&self, x_t: &Image, t: usize, schedule: &Schedule) -> Result<Image> {
        check_call(self.shape(), x_t, t, schedule)?;
        let (a, sigma) = (schedule.a(t), schedule.sigma(t));
        let rho = self.responsibilities_at(x_t, a, sigma);
        let tau2 = self.prior.tau * self.prior.tau;
        let c = a * tau2 / (a * a * tau2 + sigma * sigma);
        let mut mixed = vec![0.0; x_t.shape().len()];
        for (r, (_, mean)) in rho.iter().zip(self.prior.components()) {
            if *r == 0.0 {
                continue;
            }
            for (acc, &m) in mixed.iter_mut().zip(mean.data()) {
                *acc += r * m;
            }
        }
        let data = x_t
            .data()
            .iter()
            .zip(&mixed)
            .map(|(&x, &m)| c * x + (1.0 - c * a) * m)
            .collect();
        Ok(Image::from_raw(x_t.shape(), data))
    }
}

impl Denoiser for GmmDenoiser {
    fn shape(&self) -> Shape {
        self.prior.shape()
    }

    fn predict_eps(&self, x_t: &Image, t: usize, schedule: &Schedule) -> Result<Image> {
        let x0 = self.posterior_mean(x_t, t, schedule)?;
        eps_from_x0(x_t, &x0, schedule.a(t), schedule.sigma(t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::StandardNormal;

    fn scalar(v: f64) -> Image {
        Image::new(Shape::new(1, 1, 1), vec![v]).unwrap()
    }

    /// Two-step grid with a_1 = 0.8, σ_1 = 0.6.
    fn toy() -> Schedule {
        Schedule::from_values(vec![1.0, 0.8, 0.5], vec![0.0, 0.6, 0.75f64.sqrt()]).unwrap()
    }

    #[test]
    fn gaussian_shrinkage_half() {
        // μ = 0, v = 1, a = 1, σ = 1, x_t = 2  =>  x̂0 = 1.
        let x0 = posterior_mean_gaussian(&scalar(0.0), &scalar(1.0), &scalar(2.0), 1.0, 1.0);
        assert_eq!(x0.data(), &[1.0]);
    }

    #[test]
    fn gaussian_limits() {
        let x0 = posterior_mean_gaussian(&scalar(0.3), &scalar(0.0), &scalar(5.0), 0.8, 0.6);
        assert_eq!(x0.data(), &[0.3]);
        let x0 = posterior_mean_gaussian(&scalar(0.3), &scalar(1.0), &scalar(0.4), 0.8, 1e-9);
        assert!((x0.data()[0] - 0.4 / 0.8).abs() < 1e-12);
    }

    #[test]
    fn gaussian_called_at_zero_fails() {
        let d = GaussianDenoiser::isotropic(scalar(0.0), 1.0).unwrap();
        assert!(d.predict_eps(&scalar(0.1), 0, &toy()).is_err());
    }

    #[test]
    fn eps_roundtrips_to_posterior_mean() {
        let s = Schedule::new(20).unwrap();
        let prior = GmmPrior::synthetic(Shape::new(4, 4, 3), 3, 0.1, 5).unwrap();
        let d = GmmDenoiser::new(prior);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let x_t = Image::from_fn(d.shape(), |_, _, _| rng.sample(StandardNormal));
        for t in [1, 7, 20] {
            let x0 = d.posterior_mean(&x_t, t, &s).unwrap();
            let eps = d.predict_eps(&x_t, t, &s).unwrap();
            let back = x_t
                .zip_map(&eps, |x, e| (x - s.sigma(t) * e) / s.a(t))
                .unwrap();
            assert!(back.max_abs_diff(&x0).unwrap() < 1e-12);
        }
    }

    #[test]
    fn single_component_mixture_is_gaussian() {
        let s = Schedule::new(30).unwrap();
        let mean = Image::from_fn(Shape::new(2, 3, 1), |i, j, _| {
            0.1 * i as f64 - 0.2 * j as f64
        });
        let tau = 0.3;
        let gmm = GmmDenoiser::new(GmmPrior::new(vec![(1.0, mean.clone())], tau).unwrap());
        let gauss = GaussianDenoiser::isotropic(mean, tau * tau).unwrap();
        let x_t = Image::from_fn(Shape::new(2, 3, 1), |i, j, _| {
            (i + 2 * j) as f64 * 0.37 - 0.5
        });
        for t in 1..=30 {
            let a = gmm.predict_eps(&x_t, t, &s).unwrap();
            let b = gauss.predict_eps(&x_t, t, &s).unwrap();
            assert!(a.max_abs_diff(&b).unwrap() < 1e-12);
        }
    }

    fn symmetric_pair(tau: f64) -> GmmDenoiser {
        GmmDenoiser::new(GmmPrior::new(vec![(0.5, scalar(1.0)), (0.5, scalar(-1.0))], tau).unwrap())
    }

    #[test]
    fn symmetric_mixture_at_origin() {
        // a = 0.8, σ = 0.6 on the toy grid; symmetry forces x̂0 = 0.
        let d = symmetric_pair(1e-6);
        let x0 = d.posterior_mean(&scalar(0.0), 1, &toy()).unwrap();
        assert_eq!(x0.data()[0], 0.0);
    }

    #[test]
    fn far_point_selects_positive_component() {
        let d = symmetric_pair(1e-6);
        let (a, sigma): (f64, f64) = (0.8, 0.6);
        let x: f64 = 10.0;
        // Explicit log-sum-exp over the two components.
        let var = a * a * 1e-12 + sigma * sigma;
        let l_pos = 0.5f64.ln() - (x - a).powi(2) / (2.0 * var);
        let l_neg = 0.5f64.ln() - (x + a).powi(2) / (2.0 * var);
        let m = l_pos.max(l_neg);
        let lse = m + ((l_pos - m).exp() + (l_neg - m).exp()).ln();
        let rho_pos = (l_pos - lse).exp();
        assert!(rho_pos > 1.0 - 1e-12);
        let rho = d.responsibilities(&scalar(x), 1, &toy()).unwrap();
        assert!((rho[0] - rho_pos).abs() < 1e-15);
        let x0 = d.posterior_mean(&scalar(x), 1, &toy()).unwrap();
        assert!((x0.data()[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn mixture_is_invariant_to_order_and_splitting() {
        let s = Schedule::new(25).unwrap();
        let shape = Shape::new(3, 3, 3);
        let base = GmmPrior::synthetic(shape, 4, 0.2, 9).unwrap();
        let comps: Vec<(f64, Image)> = base.components().map(|(w, m)| (w, m.clone())).collect();
        let mut reversed = comps.clone();
        reversed.reverse();
        let mut split = comps.clone();
        let (w0, m0) = split.remove(0);
        split.push((w0 * 0.3, m0.clone()));
        split.push((w0 * 0.7, m0));
        let a = GmmDenoiser::new(base);
        let b = GmmDenoiser::new(GmmPrior::new(reversed, 0.2).unwrap());
        let c = GmmDenoiser::new(GmmPrior::new(split, 0.2).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for t in [1, 5, 25] {
            let x_t = Image::from_fn(shape, |_, _, _| rng.sample::<f64, _>(StandardNormal) * 0.5);
            let pa = a.posterior_mean(&x_t, t, &s).unwrap();
            assert!(
                pa.max_abs_diff(&b.posterior_mean(&x_t, t, &s).unwrap())
                    .unwrap()
                    < 1e-12
            );
            assert!(
                pa.max_abs_diff(&c.posterior_mean(&x_t, t, &s).unwrap())
                    .unwrap()
                    < 1e-12
            );
        }
    }

    #[test]
    fn gaussian_posterior_matches_monte_carlo() {
        // Scalar prior x0 ~ N(0.2, 0.25); estimate E[x0 | x_t ≈ x*] by
        // regression on joint samples: E[x0 | x_t] is linear in x_t, so the
        // least-squares line through (x_t, x0) pairs is the posterior mean.
        let (mu, v, a, sigma): (f64, f64, f64, f64) = (0.2, 0.25, 0.8, 0.6);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let n = 100_000;
        let mut pairs = Vec::with_capacity(n);
        for _ in 0..n {
            let x0: f64 = mu + v.sqrt() * rng.sample::<f64, _>(StandardNormal);
            let xt = a * x0 + sigma * rng.sample::<f64, _>(StandardNormal);
            pairs.push((xt, x0));
        }
        let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n as f64;
        let my = pairs.iter().map(|p| p.1).sum::<f64>() / n as f64;
        let sxy: f64 = pairs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pairs.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        let resid_var = pairs
            .iter()
            .map(|p| (p.1 - intercept - slope * p.0).powi(2))
            .sum::<f64>()
            / n as f64;
        for x_star in [-1.0, 0.0, 0.7] {
            let mc = intercept + slope * x_star;
            let exact = posterior_mean_gaussian(&scalar(mu), &scalar(v), &scalar(x_star), a, sigma)
                .data()[0];
            // Standard error of the fitted line at x*.
            let se = (resid_var * (1.0 / n as f64 + (x_star - mx).powi(2) / sxx)).sqrt();
            assert!(
                (mc - exact).abs() < 4.0 * se,
                "x*={x_star}: {mc} vs {exact} (se {se})"
            );
        }
    }

    #[test]
    fn zero_denoiser() {
        let d = ZeroDenoiser::new(Shape::new(2, 2, 1));
        let x = Image::filled(Shape::new(2, 2, 1), 0.4);
        assert_eq!(
            d.predict_eps(&x, 1, &toy()).unwrap(),
            Image::zeros(x.shape())
        );
    }

    #[test]
    fn prior_manifest_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let prior = GmmPrior::synthetic(Shape::new(8, 8, 3), 3, 0.05, 1).unwrap();
        prior.save(dir.path()).unwrap();
        let back = GmmPrior::load(dir.path()).unwrap();
        assert_eq!(back.len(), 3);
        assert_eq!(back.tau(), 0.05);
        for ((w1, m1), (w2, m2)) in prior.components().zip(back.components()) {
            assert!((w1 - w2).abs() < 1e-12);
            assert_eq!(m1, m2);
        }
    }

    #[test]
    fn prior_manifest_renormalizes_and_rejects_garbage() {
        let dir = tempfile::tempdir().unwrap();
        let m = Image::filled(Shape::new(2, 2, 1), 0.0);
        pnm::save(dir.path().join("a.pgm"), &m).unwrap();
        fs::write(
            dir.path().join(MANIFEST),
            "tau 0.1\ncomponent 2 a.pgm\ncomponent 6 a.pgm\n",
        )
        .unwrap();
        let p = GmmPrior::load(dir.path()).unwrap();
        let w: Vec<f64> = p.components().map(|c| c.0).collect();
        assert_eq!(w, vec![0.25, 0.75]);

        fs::write(dir.path().join(MANIFEST), "tau 0.1\nmean 1 a.pgm\n").unwrap();
        assert!(matches!(GmmPrior::load(dir.path()), Err(Error::Prior(_))));
        fs::write(dir.path().join(MANIFEST), "component 1 a.pgm\n").unwrap();
        assert!(GmmPrior::load(dir.path()).is_err());
    }

    #[test]
    fn prior_validation() {
        let m = scalar(0.0);
        assert!(GmmPrior::new(vec![], 0.1).is_err());
        assert!(GmmPrior::new(vec![(1.0, m.clone())], 0.0).is_err());
        assert!(GmmPrior::new(vec![(0.5, m.clone())], 0.1).is_err());
        assert!(GmmPrior::new(
            vec![(0.5, m.clone()), (0.5, Image::zeros(Shape::new(1, 2, 1)))],
            0.1
        )
        .is_err());
    }
}
