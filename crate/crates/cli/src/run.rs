//! Executes a validated job and writes the result plus `metrics.txt`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use tilediff::denoise::{GmmDenoiser, GmmPrior};
use tilediff::hir::{derive_phase1_task, hir_restore_with, phase1_plan, HirConfig};
use tilediff::image::pnm;
use tilediff::metrics::seam_metric;
use tilediff::msr::{msr_restore_with, plan_tiles, MsrOptions, TilePlan};
use tilediff::sampler::{SamplerConfig, StepDump};
use tilediff::schedule::TravelPlan;
use tilediff::task::Task;
use tilediff::{Image, Mask, Shape};

use crate::job::{JobSpec, TaskKind};

pub const DEBUG_DIR_ENV: &str = "TILEDIFF_DEBUG_DIR";
/// Snapshot interval for step dumps.
pub const DEBUG_EVERY: usize = 10;

pub fn sampler_config(job: &JobSpec) -> Result<SamplerConfig> {
    Ok(SamplerConfig {
        steps: job.steps,
        eta: job.eta,
        travel: TravelPlan::new(job.travel_length, job.travel_repeats)?,
        seed: job.seed,
        sigma_y: job.sigma_y,
    })
}

fn load_mask(path: &Path) -> Result<Mask> {
    let img = pnm::load(path)?;
    let gray = if img.channels() == 3 {
        Image::from_fn(img.shape().with_channels(1), |i, j, _| img.get(i, j, 0))
    } else {
        img
    };
    Mask::from_image(&gray).with_context(|| format!("mask {}", path.display()))
}

/// Builds the task described by the job, reading its input files.
pub fn build_task(job: &JobSpec) -> Result<Task> {
    if job.task == TaskKind::Generate {
        let (Some(w), Some(h)) = (job.width, job.height) else {
            bail!("generation needs width and height");
        };
        return Ok(Task::generation(Shape::new(h, w, 3)));
    }
    let path = job.input.as_ref().context("missing input image")?;
    let input = pnm::load(path).with_context(|| format!("input {}", path.display()))?;
    Ok(match job.task {
        TaskKind::Sr => Task::super_resolution(input, job.scale)?,
        TaskKind::Inpaint => {
            let mask = load_mask(job.mask.as_ref().context("missing mask")?)?;
            Task::inpainting(input, mask)?
        }
        TaskKind::Colorize => {
            let gray = if input.channels() == 3 {
                tilediff::linops::Grayscale::new(input.shape())?.to_gray(&input)?
            } else {
                input
            };
            Task::colorization(gray)?
        }
        TaskKind::Denoise => Task::denoising(input),
        TaskKind::Generate => unreachable!(),
    })
}

pub fn build_plan(job: &JobSpec, shape: Shape) -> Result<TilePlan> {
    Ok(plan_tiles(
        shape.width,
        shape.height,
        job.patch,
        job.overlap,
        job.block(),
    )?)
}

/// Canvas size without reading pixel data when possible.
pub fn canvas_shape(job: &JobSpec) -> Result<Shape> {
    if let (Some(w), Some(h)) = (job.width, job.height) {
        if job.task == TaskKind::Generate || job.input.is_none() {
            return Ok(Shape::new(h, w, 3));
        }
    }
    Ok(build_task(job)?.shape())
}

pub fn describe_plan(job: &JobSpec) -> Result<String> {
    let shape = canvas_shape(job)?;
    let plan = build_plan(job, shape)?;
    let mut out = String::new();
    writeln!(
        out,
        "canvas {}x{}, patch {}, overlap {}, stride {}, block {}, {} tiles",
        shape.width,
        shape.height,
        plan.patch(),
        plan.overlap(),
        plan.stride(),
        plan.block(),
        plan.len()
    )?;
    writeln!(out, "x positions: {:?}", plan.x_positions())?;
    writeln!(out, "y positions: {:?}", plan.y_positions())?;
    for t in plan.tiles() {
        writeln!(
            out,
            "tile {:3} row {:2} col {:2} top {:4} left {:4} size {}x{}",
            t.index, t.row, t.col, t.window.top, t.window.left, t.window.width, t.window.height
        )?;
    }
    if job.hir_factor >= 2 {
        let f = job.hir_factor;
        if shape.width % f != 0 || shape.height % f != 0 {
            bail!(
                "canvas {}x{} is not divisible by hir_factor {f}",
                shape.width,
                shape.height
            );
        }
        let w1 = shape.width / f;
        let h1 = shape.height / f;
        let block1 = if job.task == TaskKind::Sr {
            job.scale / f
        } else {
            1
        };
        let plan1 = plan_tiles(w1, h1, job.patch, job.overlap, block1)?;
        writeln!(out, "coarse phase: canvas {w1}x{h1}, {} tiles", plan1.len())?;
        writeln!(out, "coarse x positions: {:?}", plan1.x_positions())?;
        writeln!(out, "coarse y positions: {:?}", plan1.y_positions())?;
    }
    Ok(out)
}

pub fn metrics_path(output: &Path) -> PathBuf {
    output
        .parent()
        .map(|p| p.join("metrics.txt"))
        .unwrap_or_else(|| PathBuf::from("metrics.txt"))
}

fn load_denoiser(job: &JobSpec, patch_shape: Shape) -> Result<GmmDenoiser> {
    let dir = job.prior.as_ref().context("missing prior")?;
    let prior = GmmPrior::load(dir).with_context(|| format!("prior {}", dir.display()))?;
    if prior.shape() != patch_shape {
        bail!(
            "prior {} has patch shape {}, but the job needs {} (check 'patch' and the image channels)",
            dir.display(),
            prior.shape(),
            patch_shape
        );
    }
    Ok(GmmDenoiser::new(prior))
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub output: PathBuf,
    pub metrics: PathBuf,
    pub hash: String,
    pub lines: Vec<(String, String)>,
}

/// Runs the job. `metrics.txt` is written next to the output whether or not
/// the run succeeds.
pub fn run_job(job: &JobSpec) -> Result<RunReport> {
    let output = job.output.clone().context("missing output path")?;
    let metrics = metrics_path(&output);
    let start = Instant::now();
    let mut lines = vec![
        ("task".to_string(), job.task.to_string()),
        ("seed".to_string(), job.seed.to_string()),
    ];
    let result = execute(job, &output, &mut lines);
    lines.push((
        "wall_clock_s".into(),
        format!("{:.3}", start.elapsed().as_secs_f64()),
    ));
    match &result {
        Ok(hash) => {
            lines.push(("output_sha256".into(), hash.clone()));
            lines.push(("status".into(), "ok".into()));
        }
        Err(e) => {
            lines.push(("status".into(), "failed".into()));
            lines.push(("error".into(), format!("{e:#}").replace('\n', " ")));
        }
    }
    let text: String = lines.iter().map(|(k, v)| format!("{k}: {v}\n")).collect();
    if let Some(dir) = metrics.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
    }
    fs::write(&metrics, text).with_context(|| format!("writing {}", metrics.display()))?;
    let hash = result?;
    Ok(RunReport {
        output,
        metrics,
        hash,
        lines,
    })
}

fn execute(job: &JobSpec, output: &Path, lines: &mut Vec<(String, String)>) -> Result<String> {
    let task = build_task(job)?;
    let shape = task.shape();
    let plan = build_plan(job, shape)?;
    let denoiser = load_denoiser(job, Shape::new(job.patch, job.patch, shape.channels))?;
    let cfg = sampler_config(job)?;
    let dump = std::env::var_os(DEBUG_DIR_ENV).map(|dir| StepDump {
        dir: PathBuf::from(dir),
        every: DEBUG_EVERY,
        prefix: String::new(),
    });
    lines.push(("width".into(), shape.width.to_string()));
    lines.push(("height".into(), shape.height.to_string()));
    lines.push(("tiles".into(), plan.len().to_string()));

    let (image, steps, tiles) = if job.hir_factor >= 2 {
        // Fail early with a clear message if the coarse phase cannot be tiled.
        let coarse_task = derive_phase1_task(&task, job.hir_factor)?;
        phase1_plan(&coarse_task, &plan)?;
        let hir = HirConfig::for_task(&task, job.hir_factor, cfg)?;
        let out = hir_restore_with(&task, &hir, &plan, &denoiser, dump)?;
        lines.push(("hir_factor".into(), job.hir_factor.to_string()));
        lines.push((
            "hir_coarse_tiles".into(),
            out.phase1.tiles.len().to_string(),
        ));
        lines.push((
            "hir_hook_residual".into(),
            format!("{:e}", out.max_hook_residual),
        ));
        lines.push((
            "hir_final_residual".into(),
            format!("{:e}", out.final_residual),
        ));
        (out.image, out.steps, out.tiles)
    } else {
        let out = msr_restore_with(
            &task,
            &plan,
            &denoiser,
            &cfg,
            MsrOptions {
                leading: None,
                dump,
            },
        )?;
        (out.image, out.steps, out.tiles)
    };

    lines.push(("steps".into(), steps.to_string()));
    lines.push((
        "consistency_error".into(),
        format!("{:e}", task.consistency_error(&image)?),
    ));
    let worst = tiles
        .iter()
        .map(|t| t.seam.max_abs_diff)
        .fold(0.0, f64::max);
    lines.push(("seam_max_abs_diff".into(), format!("{worst}")));
    for t in &tiles {
        lines.push((
            format!("seam_tile_{:03}", t.index),
            format!("{}", t.seam.max_abs_diff),
        ));
    }
    for v in seam_metric(&image, &plan)? {
        lines.push((format!("seam_metric_{}", v.line), format!("{:.6}", v.value)));
    }
    if let Some(dir) = output.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
    }
    pnm::save(output, &image)?;
    Ok(pnm::content_hash(&image))
}
