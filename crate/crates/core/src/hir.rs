//! Hierarchical restoration: a coarse solve at `1/f` size, then the full-size
//! tiled solve with the coarse result imposed on the low frequencies of every
//! clean estimate:
//!
//! ```text
//! x̃0|t = A_sr† ẍ0_tile + (I - A_sr† A_sr) x0|t
//! ```
//!
//! with `A_sr` average pooling by `f` and `A_sr†` pixel replication.

use std::cell::Cell;
use std::rc::Rc;

use crate::denoise::Denoiser;
use crate::error::{Error, Result};
use crate::image::{Image, Shape};
use crate::linops::AvgPool;
use crate::msr::{msr_restore_with, plan_tiles, MsrOptions, MsrOutput, Tile, TilePlan, TileReport};
use crate::sampler::{Constraint, SamplerConfig, StepDump};
use crate::task::{Degradation, Task};

pub const DEFAULT_FACTOR: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HirConfig {
    pub factor: usize,
    pub phase1: SamplerConfig,
    pub phase2: SamplerConfig,
}

impl HirConfig {
    /// Both phases share `cfg`; the coarse phase gets its own seed and,
    /// where its observation is pooled, the pooled noise level `σ_y / f`.
    pub fn for_task(task: &Task, factor: usize, cfg: SamplerConfig) -> Result<Self> {
        let mut phase1 = cfg.with_seed(cfg.seed ^ 0x5eed_c0a2_5e00_0001);
        if !matches!(task.degradation(), Degradation::SuperRes { .. }) && factor > 0 {
            phase1.sigma_y = cfg.sigma_y / factor as f64;
        }
        let hir = Self {
            factor,
            phase1,
            phase2: cfg,
        };
        hir.validate()?;
        Ok(hir)
    }

    pub fn validate(&self) -> Result<()> {
        if self.factor < 2 {
            return Err(Error::InvalidArgument(format!(
                "hierarchy factor must be at least 2, got {}",
                self.factor
            )));
        }
        self.phase1.validate()?;
        self.phase2.validate()
    }
}

fn pool(image: &Image, f: usize) -> Result<Image> {
    AvgPool::new(image.shape(), f)?.pool(image)
}

/// The same task at `1/f` of the result size.
pub fn derive_phase1_task(task: &Task, f: usize) -> Result<Task> {
    if f < 2 {
        return Err(Error::InvalidArgument(format!(
            "hierarchy factor must be at least 2, got {f}"
        )));
    }
    let shape = task.shape();
    if !shape.height.is_multiple_of(f) || !shape.width.is_multiple_of(f) {
        return Err(Error::Alignment(format!(
            "{}x{} result is not divisible by hierarchy factor {f}",
            shape.height, shape.width
        )));
    }
    let observed = || {
        task.observed()
            .expect("restoration tasks carry an observation")
    };
    match task.degradation() {
        Degradation::SuperRes { factor } => {
            if factor % f != 0 {
                return Err(Error::Alignment(format!(
                    "super-resolution scale {factor} is not divisible by hierarchy factor {f}"
                )));
            }
            Task::super_resolution(observed().clone(), factor / f)
        }
        Degradation::Inpaint { mask } => {
            // A reduced pixel is known only when its whole footprint is.
            let reduced = mask.downsample_conservative(f)?;
            if reduced.count_known() == 0 {
                log::warn!(
                    "no {f}x{f} footprint is fully known; the coarse phase is unconditional"
                );
            } else {
                log::info!(
                    "coarse mask keeps {} of {} pixels (fully known footprints only)",
                    reduced.count_known(),
                    reduced.height() * reduced.width()
                );
            }
            Task::inpainting(pool(observed(), f)?, reduced)
        }
        Degradation::Colorize => Task::colorization(pool(observed(), f)?),
        Degradation::Denoise => Ok(Task::denoising(pool(observed(), f)?)),
        Degradation::Generate => Ok(Task::generation(Shape::new(
            shape.height / f,
            shape.width / f,
            shape.channels,
        ))),
    }
}

/// Coarse-phase tiling: same patch and overlap on the reduced canvas.
pub fn phase1_plan(task1: &Task, plan2: &TilePlan) -> Result<TilePlan> {
    let shape = task1.shape();
    plan_tiles(
        shape.width,
        shape.height,
        plan2.patch(),
        plan2.overlap(),
        task1.block(),
    )
}

/// Running maximum of `‖A_sr x̃ - ẍ0_tile‖∞` right after the hook.
#[derive(Debug, Clone, Default)]
pub struct HookResidual(Rc<Cell<f64>>);

impl HookResidual {
    pub fn max(&self) -> f64 {
        self.0.get()
    }

    fn record(&self, r: f64) {
        if r > self.0.get() || r.is_nan() {
            self.0.set(r);
        }
    }
}

/// Replaces the `f x f` block means of the clean estimate with the coarse
/// result, leaving the within-block detail untouched.
#[derive(Debug)]
pub struct LowFrequencyHook {
    op: AvgPool,
    target: Image,
    residual: HookResidual,
}

impl LowFrequencyHook {
    pub fn new(tile: Shape, f: usize, target: Image, residual: HookResidual) -> Result<Self> {
        let op = AvgPool::new(tile, f)?;
        target.expect_shape(op.output_shape())?;
        Ok(Self {
            op,
            target,
            residual,
        })
    }
}

impl Constraint for LowFrequencyHook {
    fn apply(&mut self, x0: &mut Image, _t: usize) -> Result<()> {
        let pooled = self.op.pool(x0)?;
        let f = self.op.factor();
        let c = x0.channels();
        let width = x0.width();
        let (tw, data) = (self.target.width(), x0.data_mut());
        for (p, chunk) in data.chunks_exact_mut(c).enumerate() {
            let q = ((p / width) / f * tw + (p % width) / f) * c;
            for (k, v) in chunk.iter_mut().enumerate() {
                *v += self.target.data()[q + k] - pooled.data()[q + k];
            }
        }
        let after = self.op.pool(x0)?;
        self.residual.record(after.max_abs_diff(&self.target)?);
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct HirOutput {
    pub image: Image,
    /// Phase-1 result `ẍ0`.
    pub coarse: Image,
    pub phase1: MsrOutput,
    /// Per-tile reports of phase 2.
    pub tiles: Vec<TileReport>,
    pub steps: usize,
    /// Largest hook residual over all tiles and steps of phase 2.
    pub max_hook_residual: f64,
    /// `‖A_sr x̂ - ẍ0‖∞` on the final image.
    pub final_residual: f64,
}

/// Phase 2 alone. With `coarse = None` this is exactly [`crate::msr::msr_restore`].
pub fn phase2_restore(
    task: &Task,
    coarse: Option<&Image>,
    f: usize,
    plan2: &TilePlan,
    denoiser: &dyn Denoiser,
    cfg: &SamplerConfig,
    dump: Option<StepDump>,
) -> Result<(MsrOutput, HookResidual)> {
    let residual = HookResidual::default();
    let Some(coarse) = coarse else {
        let out = msr_restore_with(
            task,
            plan2,
            denoiser,
            cfg,
            MsrOptions {
                leading: None,
                dump,
            },
        )?;
        return Ok((out, residual));
    };
    if !plan2.block().is_multiple_of(f) {
        return Err(Error::Alignment(format!(
            "tile plan block {} is not a multiple of hierarchy factor {f}",
            plan2.block()
        )));
    }
    if coarse.height() * f != plan2.height()
        || coarse.width() * f != plan2.width()
        || coarse.channels() != task.shape().channels
    {
        return Err(Error::Shape(format!(
            "coarse result {} does not match a {}x{} plan at factor {f}",
            coarse.shape(),
            plan2.height(),
            plan2.width()
        )));
    }
    let channels = task.shape().channels;
    let shared = residual.clone();
    let mut factory = move |tile: &Tile| -> Result<Option<Box<dyn Constraint>>> {
        let w = tile.window;
        let target = coarse.crop(w.downscale(f)?)?;
        let hook = LowFrequencyHook::new(
            Shape::new(w.height, w.width, channels),
            f,
            target,
            shared.clone(),
        )?;
        Ok(Some(Box::new(hook)))
    };
    let out = msr_restore_with(
        task,
        plan2,
        denoiser,
        cfg,
        MsrOptions {
            leading: Some(&mut factory),
            dump,
        },
    )?;
    Ok((out, residual))
}

pub fn hir_restore(
    task: &Task,
    hir: &HirConfig,
    plan2: &TilePlan,
    denoiser: &dyn Denoiser,
) -> Result<HirOutput> {
    hir_restore_with(task, hir, plan2, denoiser, None)
}

/// As [`hir_restore`], optionally dumping per-step snapshots of both phases.
pub fn hir_restore_with(
    task: &Task,
    hir: &HirConfig,
    plan2: &TilePlan,
    denoiser: &dyn Denoiser,
    dump: Option<StepDump>,
) -> Result<HirOutput> {
    hir.validate()?;
    let f = hir.factor;
    let task1 = derive_phase1_task(task, f)?;
    let plan1 = phase1_plan(&task1, plan2)?;
    let with_prefix = |p: &str| {
        dump.as_ref().map(|d| StepDump {
            prefix: format!("{}{p}_", d.prefix),
            ..d.clone()
        })
    };
    let phase1 = msr_restore_with(
        &task1,
        &plan1,
        denoiser,
        &hir.phase1,
        MsrOptions {
            leading: None,
            dump: with_prefix("phase1"),
        },
    )?;
    let coarse = phase1.image.clone();
    if let Some(d) = &dump {
        let ext = if coarse.channels() == 3 { "ppm" } else { "pgm" };
        crate::image::pnm::save(d.dir.join(format!("{}coarse.{ext}", d.prefix)), &coarse)?;
    }
    let (phase2, residual) = phase2_restore(
        task,
        Some(&coarse),
        f,
        plan2,
        denoiser,
        &hir.phase2,
        with_prefix("phase2"),
    )?;
    let final_residual = pool(&phase2.image, f)?.max_abs_diff(&coarse)?;
    log::info!(
        "coarse-to-fine residual {final_residual:.3e} (hook max {:.3e})",
        residual.max()
    );
    Ok(HirOutput {
        steps: phase1.steps + phase2.steps,
        tiles: phase2.tiles,
        image: phase2.image,
        coarse,
        phase1,
        max_hook_residual: residual.max(),
        final_residual,
    })
}
