//! Small deterministic jobs exercising every stage. Each check returns an
//! output image whose hash must be stable for a fixed seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::denoise::{GmmDenoiser, GmmPrior};
use crate::error::Result;
use crate::hir::{hir_restore, HirConfig};
use crate::image::{pnm, Image, Mask, Shape, Window};
use crate::linops::{AvgPool, Grayscale, LinearOperator, MaskOp};
use crate::msr::{msr_restore, plan_tiles};
use crate::sampler::{run_sampler, ConstraintHooks, SamplerConfig};
use crate::schedule::{Schedule, TravelPlan};
use crate::task::{Degradation, Task};

const PATCH: usize = 16;
const OVERLAP: usize = 8;

#[derive(Debug, Clone)]
pub struct SelftestOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub image: Image,
    /// SHA-256 of the encoded output image.
    pub hash: String,
}

#[derive(Debug, Clone, Copy)]
pub struct SelftestJob {
    pub name: &'static str,
    run: fn(u64) -> Result<(bool, String, Image)>,
}

impl SelftestJob {
    pub fn run(&self, seed: u64) -> Result<SelftestOutcome> {
        let (passed, detail, image) = (self.run)(seed)?;
        let hash = pnm::content_hash(&image);
        Ok(SelftestOutcome {
            name: self.name,
            passed,
            detail,
            image,
            hash,
        })
    }
}

pub fn jobs() -> Vec<SelftestJob> {
    vec![
        SelftestJob {
            name: "operators",
            run: operators,
        },
        SelftestJob {
            name: "schedule",
            run: schedule,
        },
        SelftestJob {
            name: "ddnm-sr",
            run: ddnm_sr,
        },
        SelftestJob {
            name: "ddnm-inpaint",
            run: ddnm_inpaint,
        },
        SelftestJob {
            name: "ddnm-colorize",
            run: ddnm_colorize,
        },
        SelftestJob {
            name: "msr-generate",
            run: msr_generate,
        },
        SelftestJob {
            name: "msr-sr",
            run: msr_sr,
        },
        SelftestJob {
            name: "hir-inpaint",
            run: hir_inpaint,
        },
    ]
}

/// Runs every job once.
pub fn run_all(seed: u64) -> Result<Vec<SelftestOutcome>> {
    jobs().iter().map(|j| j.run(seed)).collect()
}

fn denoiser() -> GmmDenoiser {
    let prior = GmmPrior::stationary(Shape::new(PATCH, PATCH, 3), 4, 0.05, OVERLAP, 17)
        .expect("valid selftest prior");
    GmmDenoiser::new(prior)
}

fn config(seed: u64) -> SamplerConfig {
    SamplerConfig {
        steps: 20,
        travel: TravelPlan::new(5, 2).expect("valid travel plan"),
        seed,
        ..SamplerConfig::default()
    }
}

fn truth(shape: Shape, seed: u64) -> Result<Image> {
    let d = denoiser();
    let plan = plan_tiles(shape.width, shape.height, PATCH, OVERLAP, 4)?;
    Ok(msr_restore(&Task::generation(shape), &plan, &d, &config(seed ^ 0xface))?.image)
}

fn probe(shape: Shape, seed: u64) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Image::from_fn(shape, |_, _, _| rng.random_range(-1.0..1.0))
}

fn operators(seed: u64) -> Result<(bool, String, Image)> {
    let shape = Shape::new(8, 8, 3);
    let x = probe(shape, seed);
    let mask = Mask::from_fn(8, 8, |i, j| !(i * 5 + j * 3 + seed as usize).is_multiple_of(3));
    let ops: Vec<Box<dyn LinearOperator>> = vec![
        Box::new(AvgPool::new(shape, 2)?),
        Box::new(AvgPool::new(shape, 4)?),
        Box::new(MaskOp::new(shape, mask)?),
        Box::new(Grayscale::new(shape)?),
    ];
    let mut worst: f64 = 0.0;
    for op in &ops {
        let ax = op.forward(&x)?;
        let back = op.forward(&op.pinv(&ax)?)?;
        worst = worst.max(back.max_abs_diff(&ax)?);
    }
    let out = ops[0].range_project(&x)?;
    Ok((
        worst <= 1e-10,
        format!("max |A A+ A x - A x| = {worst:.2e}"),
        out,
    ))
}

fn schedule(_seed: u64) -> Result<(bool, String, Image)> {
    let s = Schedule::new(100)?;
    let vp = (0..=100)
        .map(|t| (s.a(t).powi(2) + s.sigma(t).powi(2) - 1.0).abs())
        .fold(0.0, f64::max);
    let steps = TravelPlan::default().total_steps(100);
    let image = Image::new(
        Shape::new(1, 101, 1),
        s.a_values().iter().map(|a| 2.0 * a - 1.0).collect(),
    )?;
    Ok((
        vp <= 1e-12 && steps == 300,
        format!("VP deviation {vp:.1e}, {steps} steps for T=100 l=10 r=3"),
        image,
    ))
}

fn single_tile(task: &Task, seed: u64) -> Result<(bool, String, Image)> {
    let (op, y) = task.restrict(Window::full(PATCH, PATCH))?;
    let out = run_sampler(
        op.as_ref(),
        &y,
        &denoiser(),
        &config(seed),
        ConstraintHooks::none(),
    )?;
    let err = task.consistency_error(&out.image)?;
    Ok((err <= 1e-6, format!("consistency {err:.2e}"), out.image))
}

fn ddnm_sr(seed: u64) -> Result<(bool, String, Image)> {
    let x = truth(Shape::new(PATCH, PATCH, 3), seed)?;
    single_tile(
        &Task::from_truth(Degradation::SuperRes { factor: 4 }, &x)?,
        seed,
    )
}

fn ddnm_inpaint(seed: u64) -> Result<(bool, String, Image)> {
    let x = truth(Shape::new(PATCH, PATCH, 3), seed)?;
    let mask = Mask::from_fn(PATCH, PATCH, |i, j| (i / 4 + j / 4) % 2 == 0);
    single_tile(&Task::from_truth(Degradation::Inpaint { mask }, &x)?, seed)
}

fn ddnm_colorize(seed: u64) -> Result<(bool, String, Image)> {
    let x = truth(Shape::new(PATCH, PATCH, 3), seed)?;
    single_tile(&Task::from_truth(Degradation::Colorize, &x)?, seed)
}

fn msr_generate(seed: u64) -> Result<(bool, String, Image)> {
    let task = Task::generation(Shape::new(24, 40, 3));
    let plan = plan_tiles(40, 24, PATCH, OVERLAP, 1)?;
    let out = msr_restore(&task, &plan, &denoiser(), &config(seed))?;
    let worst = out
        .tiles
        .iter()
        .map(|t| t.seam.max_abs_diff)
        .fold(0.0, f64::max);
    Ok((
        worst == 0.0 && out.tiles.len() == plan.len(),
        format!("{} tiles, max seam difference {worst}", plan.len()),
        out.image,
    ))
}

fn msr_sr(seed: u64) -> Result<(bool, String, Image)> {
    let x = truth(Shape::new(24, 40, 3), seed)?;
    let task = Task::from_truth(Degradation::SuperRes { factor: 4 }, &x)?;
    let plan = plan_tiles(40, 24, PATCH, OVERLAP, 4)?;
    let out = msr_restore(&task, &plan, &denoiser(), &config(seed))?;
    let err = task.consistency_error(&out.image)?;
    let exact = out.tiles.iter().all(|t| t.seam.mismatches == 0);
    Ok((
        err <= 1e-6 && exact,
        format!("consistency {err:.2e}, seams exact: {exact}"),
        out.image,
    ))
}

fn hir_inpaint(seed: u64) -> Result<(bool, String, Image)> {
    let shape = Shape::new(32, 48, 3);
    let x = truth(shape, seed)?;
    let mask = Mask::from_fn(32, 48, |i, j| {
        !(8..24).contains(&i) || !(16..32).contains(&j)
    });
    let task = Task::from_truth(Degradation::Inpaint { mask }, &x)?;
    let plan = plan_tiles(48, 32, PATCH, OVERLAP, 2)?;
    let hir = HirConfig::for_task(&task, 2, config(seed))?;
    let out = hir_restore(&task, &hir, &plan, &denoiser())?;
    let err = task.consistency_error(&out.image)?;
    Ok((
        out.max_hook_residual <= 1e-10 && err <= 1e-6,
        format!(
            "hook residual {:.2e}, coarse residual {:.3}, consistency {err:.2e}",
            out.max_hook_residual, out.final_residual
        ),
        out.image,
    ))
}
