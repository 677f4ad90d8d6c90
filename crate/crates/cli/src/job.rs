//! Job specification: config file plus command-line overrides.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::Args;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskKind {
    Sr,
    Inpaint,
    Colorize,
    Denoise,
    Generate,
}

impl FromStr for TaskKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "sr" => TaskKind::Sr,
            "inpaint" => TaskKind::Inpaint,
            "colorize" => TaskKind::Colorize,
            "denoise" => TaskKind::Denoise,
            "generate" => TaskKind::Generate,
            other => {
                return Err(format!(
                    "unknown task '{other}' (expected sr, inpaint, colorize, denoise or generate)"
                ))
            }
        })
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TaskKind::Sr => "sr",
            TaskKind::Inpaint => "inpaint",
            TaskKind::Colorize => "colorize",
            TaskKind::Denoise => "denoise",
            TaskKind::Generate => "generate",
        })
    }
}

/// Keys accepted in config files. Flags use the same names with dashes.
pub const KEYS: &[&str] = &[
    "task",
    "scale",
    "mask",
    "sigma_y",
    "width",
    "height",
    "patch",
    "overlap",
    "steps",
    "eta",
    "travel_length",
    "travel_repeats",
    "hir_factor",
    "seed",
    "prior",
    "input",
    "output",
];

/// Flags shared by `restore`, `generate` and `plan`.
#[derive(Debug, Clone, Default, Args)]
pub struct JobArgs {
    /// `key = value` file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// sr, inpaint, colorize, denoise or generate.
    #[arg(long)]
    pub task: Option<TaskKind>,
    /// Super-resolution factor.
    #[arg(long)]
    pub scale: Option<usize>,
    /// Inpainting mask (PGM; 255 = known, 0 = missing).
    #[arg(long)]
    pub mask: Option<PathBuf>,
    /// Measurement noise level in model units.
    #[arg(long)]
    pub sigma_y: Option<f64>,
    /// Output width (generation).
    #[arg(long)]
    pub width: Option<usize>,
    /// Output height (generation).
    #[arg(long)]
    pub height: Option<usize>,
    #[arg(long)]
    pub patch: Option<usize>,
    #[arg(long)]
    pub overlap: Option<usize>,
    /// Diffusion steps T.
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub eta: Option<f64>,
    /// Time-travel block length l.
    #[arg(long)]
    pub travel_length: Option<usize>,
    /// Time-travel repeats r.
    #[arg(long)]
    pub travel_repeats: Option<usize>,
    /// Hierarchy downsampling factor; 0 disables the coarse phase.
    #[arg(long)]
    pub hir_factor: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Prior directory (see `make-prior`).
    #[arg(long)]
    pub prior: Option<PathBuf>,
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    #[arg(long = "out")]
    pub output: Option<PathBuf>,
}

impl JobArgs {
    fn overrides(&self) -> Vec<(&'static str, String)> {
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        let fields: [(&str, Option<String>); 17] = [
            ("task", self.task.map(|t| t.to_string())),
            ("scale", self.scale.map(|v| v.to_string())),
            ("mask", path(&self.mask)),
            ("sigma_y", self.sigma_y.map(|v| v.to_string())),
            ("width", self.width.map(|v| v.to_string())),
            ("height", self.height.map(|v| v.to_string())),
            ("patch", self.patch.map(|v| v.to_string())),
            ("overlap", self.overlap.map(|v| v.to_string())),
            ("steps", self.steps.map(|v| v.to_string())),
            ("eta", self.eta.map(|v| v.to_string())),
            ("travel_length", self.travel_length.map(|v| v.to_string())),
            ("travel_repeats", self.travel_repeats.map(|v| v.to_string())),
            ("hir_factor", self.hir_factor.map(|v| v.to_string())),
            ("seed", self.seed.map(|v| v.to_string())),
            ("prior", path(&self.prior)),
            ("input", path(&self.input)),
            ("output", path(&self.output)),
        ];
        fields
            .into_iter()
            .filter_map(|(k, v)| v.map(|v| (k, v)))
            .collect()
    }
}

/// What the job will be used for; decides which keys are required.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Restore,
    Generate,
    Plan,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JobSpec {
    pub task: TaskKind,
    pub scale: usize,
    pub mask: Option<PathBuf>,
    pub sigma_y: f64,
    pub width: Option<usize>,
    pub height: Option<usize>,
    pub patch: usize,
    pub overlap: usize,
    pub steps: usize,
    pub eta: f64,
    pub travel_length: usize,
    pub travel_repeats: usize,
    pub hir_factor: usize,
    pub seed: u64,
    pub prior: Option<PathBuf>,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

/// Parses a `key = value` file. `#` starts a comment.
pub fn parse_config(text: &str, origin: &Path) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!(
                "{}:{}: expected `key = value`, got '{line}'",
                origin.display(),
                n + 1
            );
        };
        let key = key.trim().replace('-', "_");
        if !KEYS.contains(&key.as_str()) {
            bail!("{}:{}: unknown key '{key}'", origin.display(), n + 1);
        }
        out.insert(key, value.trim().to_string());
    }
    Ok(out)
}

fn get<T: FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<Option<T>>
where
    T::Err: fmt::Display,
{
    map.get(key)
        .map(|v| {
            v.parse::<T>()
                .map_err(|e| anyhow::anyhow!("invalid value '{v}' for key '{key}': {e}"))
        })
        .transpose()
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl JobSpec {
    /// Coordinates of every tile must be multiples of this.
    pub fn block(&self) -> usize {
        let op = if self.task == TaskKind::Sr {
            self.scale
        } else {
            1
        };
        if self.hir_factor >= 2 {
            op / gcd(op, self.hir_factor) * self.hir_factor
        } else {
            op
        }
    }

    fn validate(&self, purpose: Purpose) -> Result<()> {
        let need = |present: bool, key: &str, why: &str| {
            if present {
                Ok(())
            } else {
                Err(anyhow::anyhow!("missing required key '{key}' ({why})"))
            }
        };
        match purpose {
            Purpose::Restore => {
                if self.task == TaskKind::Generate {
                    bail!("key 'task': use the generate subcommand for generation");
                }
                need(
                    self.input.is_some(),
                    "input",
                    "restore reads an input image",
                )?;
            }
            Purpose::Generate => {
                if self.task != TaskKind::Generate {
                    bail!("key 'task': the generate subcommand only runs task = generate");
                }
            }
            Purpose::Plan => {}
        }
        if purpose != Purpose::Plan {
            need(
                self.prior.is_some(),
                "prior",
                "a prior directory is needed to sample",
            )?;
            need(self.output.is_some(), "output", "where to write the result")?;
        }
        if self.task == TaskKind::Generate || (purpose == Purpose::Plan && self.input.is_none()) {
            need(self.width.is_some(), "width", "canvas size")?;
            need(self.height.is_some(), "height", "canvas size")?;
        }
        if self.task == TaskKind::Inpaint {
            need(self.mask.is_some(), "mask", "inpainting needs a mask")?;
        }
        if self.task == TaskKind::Sr && self.scale < 1 {
            bail!("key 'scale' must be at least 1");
        }
        if !(self.sigma_y >= 0.0 && self.sigma_y.is_finite()) {
            bail!(
                "key 'sigma_y' must be a finite value >= 0, got {}",
                self.sigma_y
            );
        }
        if !(0.0..=1.0).contains(&self.eta) {
            bail!("key 'eta' must lie in [0, 1], got {}", self.eta);
        }
        for (key, v) in [
            ("steps", self.steps),
            ("travel_length", self.travel_length),
            ("travel_repeats", self.travel_repeats),
            ("patch", self.patch),
        ] {
            if v == 0 {
                bail!("key '{key}' must be positive");
            }
        }
        if self.overlap == 0 || self.overlap >= self.patch {
            bail!(
                "key 'overlap' must satisfy 0 < overlap < patch ({} vs {})",
                self.overlap,
                self.patch
            );
        }
        if self.hir_factor == 1 {
            bail!("key 'hir_factor' must be 0 (off) or at least 2");
        }
        if self.task == TaskKind::Sr && self.hir_factor >= 2 && !self.scale.is_multiple_of(self.hir_factor) {
            bail!(
                "key 'hir_factor': scale {} is not divisible by {}",
                self.scale,
                self.hir_factor
            );
        }
        let block = self.block();
        for (key, v) in [("patch", self.patch), ("overlap", self.overlap)] {
            if v % block != 0 {
                bail!("key '{key}': {v} is not a multiple of the block size {block} (alignment)");
            }
        }
        for (key, v) in [("width", self.width), ("height", self.height)] {
            if let Some(v) = v {
                if v % block != 0 {
                    bail!(
                        "key '{key}': {v} is not a multiple of the block size {block} (alignment)"
                    );
                }
                if v < self.patch {
                    bail!(
                        "key '{key}': {v} is smaller than the patch size {}",
                        self.patch
                    );
                }
            }
        }
        Ok(())
    }
}

/// Merges the config file (if any) with flag overrides and validates.
pub fn parse_job(args: &JobArgs, purpose: Purpose) -> Result<JobSpec> {
    let mut map = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            parse_config(&text, path)?
        }
        None => BTreeMap::new(),
    };
    for (k, v) in args.overrides() {
        map.insert(k.to_string(), v);
    }
    let default_task = if purpose == Purpose::Generate {
        Some(TaskKind::Generate)
    } else {
        None
    };
    let task = match get::<TaskKind>(&map, "task")?.or(default_task) {
        Some(t) => t,
        None => bail!("missing required key 'task'"),
    };
    let scale = match (task, get::<usize>(&map, "scale")?) {
        (TaskKind::Sr, None) => bail!("missing required key 'scale' (sr needs a scale)"),
        (_, s) => s.unwrap_or(1),
    };
    let spec = JobSpec {
        task,
        scale,
        mask: get(&map, "mask")?,
        sigma_y: get(&map, "sigma_y")?.unwrap_or(0.0),
        width: get(&map, "width")?,
        height: get(&map, "height")?,
        patch: get(&map, "patch")?.unwrap_or(tilediff::msr::DEFAULT_PATCH),
        overlap: get(&map, "overlap")?.unwrap_or(tilediff::msr::DEFAULT_OVERLAP),
        steps: get(&map, "steps")?.unwrap_or(tilediff::sampler::DEFAULT_STEPS),
        eta: get(&map, "eta")?.unwrap_or(tilediff::sampler::DEFAULT_ETA),
        travel_length: get(&map, "travel_length")?.unwrap_or(10),
        travel_repeats: get(&map, "travel_repeats")?.unwrap_or(3),
        hir_factor: get(&map, "hir_factor")?.unwrap_or(0),
        seed: get(&map, "seed")?.unwrap_or(0),
        prior: get(&map, "prior")?,
        input: get(&map, "input")?,
        output: get(&map, "output")?,
    };
    spec.validate(purpose)?;
    Ok(spec)
}
