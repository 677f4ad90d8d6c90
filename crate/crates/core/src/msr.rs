//! Mask-shift restoration: raster-order tiles over an arbitrary canvas, each
//! sampled with the already restored overlap held fixed.
//!
//! For every tile the sampler's clean estimate is overwritten on the known
//! region with the committed canvas values after the task projection:
//! `x̄0|t = A_m ẋ0 + (I - A_m) x̂0|t`. Because the overwrite is a plain copy
//! and the last step returns the clean estimate unchanged, a committed tile
//! agrees with the canvas bit for bit on its overlap.

use crate::denoise::Denoiser;
use crate::error::{Error, Result};
use crate::image::{Image, Mask, Shape, Window};
use crate::sampler::{
    run_sampler_observed, Constraint, ConstraintHooks, SamplerConfig, StepDump, StepObserver,
};
use crate::task::Task;

pub const DEFAULT_PATCH: usize = 64;
pub const DEFAULT_OVERLAP: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Tile {
    pub index: usize,
    pub row: usize,
    pub col: usize,
    pub window: Window,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TilePlan {
    height: usize,
    width: usize,
    patch: usize,
    overlap: usize,
    block: usize,
    tiles: Vec<Tile>,
}

fn positions(len: usize, patch: usize, stride: usize) -> Vec<usize> {
    let mut out = vec![0];
    let mut pos = 0;
    while pos + patch < len {
        pos = (pos + stride).min(len - patch);
        out.push(pos);
    }
    out
}

/// Raster-order tiling of a `canvas_w x canvas_h` canvas. Positions step by
/// `patch - overlap`; the last one in each direction is pulled back so the
/// tile ends on the canvas edge.
pub fn plan_tiles(
    canvas_w: usize,
    canvas_h: usize,
    patch: usize,
    overlap: usize,
    block: usize,
) -> Result<TilePlan> {
    if block == 0 {
        return Err(Error::InvalidArgument("block size must be positive".into()));
    }
    if patch == 0 || overlap == 0 || overlap >= patch {
        return Err(Error::InvalidArgument(format!(
            "need 0 < overlap < patch, got overlap {overlap}, patch {patch}"
        )));
    }
    if canvas_w < patch || canvas_h < patch {
        return Err(Error::InvalidArgument(format!(
            "{canvas_w}x{canvas_h} canvas is smaller than the {patch}px patch"
        )));
    }
    for (name, v) in [
        ("patch", patch),
        ("overlap", overlap),
        ("canvas width", canvas_w),
        ("canvas height", canvas_h),
    ] {
        if v % block != 0 {
            return Err(Error::Alignment(format!(
                "{name} {v} is not a multiple of block size {block}"
            )));
        }
    }
    let stride = patch - overlap;
    let ys = positions(canvas_h, patch, stride);
    let xs = positions(canvas_w, patch, stride);
    let mut tiles = Vec::with_capacity(xs.len() * ys.len());
    for (row, &top) in ys.iter().enumerate() {
        for (col, &left) in xs.iter().enumerate() {
            tiles.push(Tile {
                index: tiles.len(),
                row,
                col,
                window: Window::new(top, left, patch, patch),
            });
        }
    }
    Ok(TilePlan {
        height: canvas_h,
        width: canvas_w,
        patch,
        overlap,
        block,
        tiles,
    })
}

impl TilePlan {
    pub fn tiles(&self) -> &[Tile] {
        &self.tiles
    }

    pub fn len(&self) -> usize {
        self.tiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tiles.is_empty()
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn patch(&self) -> usize {
        self.patch
    }

    pub fn overlap(&self) -> usize {
        self.overlap
    }

    pub fn stride(&self) -> usize {
        self.patch - self.overlap
    }

    pub fn block(&self) -> usize {
        self.block
    }

    pub fn x_positions(&self) -> Vec<usize> {
        self.tiles
            .iter()
            .filter(|t| t.row == 0)
            .map(|t| t.window.left)
            .collect()
    }

    pub fn y_positions(&self) -> Vec<usize> {
        self.tiles
            .iter()
            .filter(|t| t.col == 0)
            .map(|t| t.window.top)
            .collect()
    }

    fn check_task(&self, task: &Task) -> Result<()> {
        let shape = task.shape();
        if shape.height != self.height || shape.width != self.width {
            return Err(Error::Shape(format!(
                "plan covers {}x{} but the task result is {}x{}",
                self.height, self.width, shape.height, shape.width
            )));
        }
        if !self.block.is_multiple_of(task.block()) {
            return Err(Error::Alignment(format!(
                "plan block {} is not a multiple of the task block {}",
                self.block,
                task.block()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SeamCheck {
    /// Samples on the known region that differ from the canvas.
    pub mismatches: usize,
    pub max_abs_diff: f64,
}

/// The growing result plus the mask of committed pixels.
#[derive(Debug, Clone)]
pub struct Canvas {
    image: Image,
    known: Mask,
    committed: usize,
}

impl Canvas {
    pub fn new(shape: Shape) -> Self {
        Self {
            image: Image::zeros(shape),
            known: Mask::filled(shape.height, shape.width, false),
            committed: 0,
        }
    }

    pub fn image(&self) -> &Image {
        &self.image
    }

    pub fn known(&self) -> &Mask {
        &self.known
    }

    pub fn committed(&self) -> usize {
        self.committed
    }

    pub fn into_image(self) -> Image {
        self.image
    }

    fn expect_next(&self, tile: &Tile) -> Result<()> {
        if tile.index != self.committed {
            return Err(Error::TileOrder {
                index: tile.index,
                expected: self.committed,
            });
        }
        Ok(())
    }

    /// Writes a finished tile. Reports how far it strays from the canvas on
    /// the previously known region.
    pub fn commit(&mut self, tile: &Tile, result: &Image) -> Result<SeamCheck> {
        self.expect_next(tile)?;
        let w = tile.window;
        let c = self.image.channels();
        let mut check = SeamCheck::default();
        for i in 0..w.height {
            for j in 0..w.width {
                if self.known.is_known(w.top + i, w.left + j) {
                    for k in 0..c {
                        let (a, b) = (
                            result.get(i, j, k),
                            self.image.get(w.top + i, w.left + j, k),
                        );
                        if a != b {
                            check.mismatches += 1;
                            check.max_abs_diff = check.max_abs_diff.max((a - b).abs());
                        }
                    }
                }
            }
        }
        self.image.blit_in_place(result, w)?;
        self.known.fill_window(w)?;
        self.committed += 1;
        Ok(check)
    }
}

/// Known-region mask of the next tile: the committed pixels under its window.
pub fn overlap_mask(plan: &TilePlan, idx: usize, canvas: &Canvas) -> Result<Mask> {
    let tile = plan
        .tiles
        .get(idx)
        .ok_or_else(|| Error::InvalidArgument(format!("plan has no tile {idx}")))?;
    canvas.expect_next(tile)?;
    canvas.known.crop(tile.window)
}

/// Overwrites the known region of the clean estimate with fixed values.
#[derive(Debug, Clone)]
pub struct MaskHook {
    known: Mask,
    values: Image,
}

impl MaskHook {
    pub fn new(known: Mask, values: Image) -> Result<Self> {
        if known.height() != values.height() || known.width() != values.width() {
            return Err(Error::Shape("mask and values differ in size".into()));
        }
        Ok(Self { known, values })
    }
}

impl Constraint for MaskHook {
    fn apply(&mut self, x0: &mut Image, _t: usize) -> Result<()> {
        x0.expect_shape(self.values.shape())?;
        let c = x0.channels();
        for (p, &known) in self.known.as_slice().iter().enumerate() {
            if known {
                x0.data_mut()[p * c..(p + 1) * c]
                    .copy_from_slice(&self.values.data()[p * c..(p + 1) * c]);
            }
        }
        Ok(())
    }
}

/// Seed for the tile at `(row, col)`, independent of how many tiles exist.
pub fn tile_seed(seed: u64, row: usize, col: usize) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    mix(mix(mix(seed) ^ row as u64) ^ (col as u64).rotate_left(32))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TileReport {
    pub index: usize,
    pub window: Window,
    pub known_pixels: usize,
    /// Agreement with the canvas on the known region at commit.
    pub seam: SeamCheck,
    pub steps: usize,
}

#[derive(Debug, Clone)]
pub struct MsrOutput {
    pub image: Image,
    pub steps: usize,
    pub tiles: Vec<TileReport>,
}

/// Builds an extra leading constraint for a tile (run before the task
/// projection).
pub type LeadingHookFactory<'a> = dyn FnMut(&Tile) -> Result<Option<Box<dyn Constraint>>> + 'a;

#[derive(Default)]
pub struct MsrOptions<'a> {
    pub leading: Option<&'a mut LeadingHookFactory<'a>>,
    /// Per-step snapshots; the prefix is extended with the tile index.
    pub dump: Option<StepDump>,
}

pub fn msr_restore(
    task: &Task,
    plan: &TilePlan,
    denoiser: &dyn Denoiser,
    cfg: &SamplerConfig,
) -> Result<MsrOutput> {
    msr_restore_with(task, plan, denoiser, cfg, MsrOptions::default())
}

pub fn msr_restore_with(
    task: &Task,
    plan: &TilePlan,
    denoiser: &dyn Denoiser,
    cfg: &SamplerConfig,
    mut options: MsrOptions<'_>,
) -> Result<MsrOutput> {
    plan.check_task(task)?;
    let mut canvas = Canvas::new(task.shape());
    let mut reports = Vec::with_capacity(plan.len());
    let mut steps = 0;
    for tile in plan.tiles() {
        let (op, y) = task.restrict(tile.window)?;
        let known = overlap_mask(plan, tile.index, &canvas)?;
        let known_pixels = known.count_known();
        let values = canvas.image().crop(tile.window)?;
        let mut mask_hook = MaskHook::new(known, values)?;
        let mut leading = match options.leading.as_deref_mut() {
            Some(factory) => factory(tile)?,
            None => None,
        };
        let mut hooks = ConstraintHooks::none();
        if let Some(h) = leading.as_deref_mut() {
            hooks.before_projection.push(h);
        }
        if known_pixels > 0 {
            hooks.after_projection.push(&mut mask_hook);
        }
        let tile_cfg = cfg.with_seed(tile_seed(cfg.seed, tile.row, tile.col));
        let mut dump = options.dump.as_ref().map(|d| StepDump {
            prefix: format!("{}tile{:03}", d.prefix, tile.index),
            ..d.clone()
        });
        let sample = run_sampler_observed(
            op.as_ref(),
            &y,
            denoiser,
            &tile_cfg,
            hooks,
            dump.as_mut().map(|d| d as &mut dyn StepObserver),
        )?;
        let seam = canvas.commit(tile, &sample.image)?;
        if seam.mismatches > 0 {
            log::warn!(
                "tile {} differs from the canvas on {} known samples",
                tile.index,
                seam.mismatches
            );
        }
        steps += sample.steps;
        reports.push(TileReport {
            index: tile.index,
            window: tile.window,
            known_pixels,
            seam,
            steps: sample.steps,
        });
    }
    debug_assert!(canvas.known().all_known());
    Ok(MsrOutput {
        image: canvas.into_image(),
        steps,
        tiles: reports,
    })
}

/// Baseline without the overlap constraint: every tile is solved on its own
/// and pasted over its predecessors in raster order.
pub fn independent_restore(
    task: &Task,
    plan: &TilePlan,
    denoiser: &dyn Denoiser,
    cfg: &SamplerConfig,
) -> Result<MsrOutput> {
    plan.check_task(task)?;
    let mut image = Image::zeros(task.shape());
    let mut reports = Vec::with_capacity(plan.len());
    let mut steps = 0;
    for tile in plan.tiles() {
        let (op, y) = task.restrict(tile.window)?;
        let tile_cfg = cfg.with_seed(tile_seed(cfg.seed, tile.row, tile.col));
        let sample = run_sampler_observed(
            op.as_ref(),
            &y,
            denoiser,
            &tile_cfg,
            ConstraintHooks::none(),
            None,
        )?;
        image.blit_in_place(&sample.image, tile.window)?;
        steps += sample.steps;
        reports.push(TileReport {
            index: tile.index,
            window: tile.window,
            known_pixels: 0,
            seam: SeamCheck::default(),
            steps: sample.steps,
        });
    }
    Ok(MsrOutput {
        image,
        steps,
        tiles: reports,
    })
}
