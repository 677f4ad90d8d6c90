//! Boundary-artifact statistics for tiled results.
//!
//! A seam line sits between two adjacent pixel columns (or rows) where some
//! tile starts or ends. Its statistic is the largest absolute first
//! difference across the line minus the median absolute first difference at
//! the neighbouring lines up to [`BAND`] pixels away. Control lines are
//! placed half a stride away from the seams and scored the same way, giving
//! a null distribution for "no seam here".

use crate::error::{Error, Result};
use crate::image::Image;
use crate::msr::TilePlan;

pub const BAND: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Orientation {
    /// Between columns `position - 1` and `position`.
    Vertical,
    /// Between rows `position - 1` and `position`.
    Horizontal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SeamLine {
    pub orientation: Orientation,
    pub position: usize,
}

impl std::fmt::Display for SeamLine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.orientation {
            Orientation::Vertical => write!(f, "x{}", self.position),
            Orientation::Horizontal => write!(f, "y{}", self.position),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeamValue {
    pub line: SeamLine,
    pub value: f64,
}

fn edges(starts: &[usize], patch: usize, len: usize) -> Vec<usize> {
    let mut out: Vec<usize> = starts
        .iter()
        .flat_map(|&s| [s, s + patch])
        .filter(|&p| p > 0 && p < len)
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

fn lines(orientation: Orientation, positions: Vec<usize>) -> impl Iterator<Item = SeamLine> {
    positions.into_iter().map(move |position| SeamLine {
        orientation,
        position,
    })
}

/// Every internal tile edge of the plan, each spanning the whole canvas.
pub fn seam_lines(plan: &TilePlan) -> Vec<SeamLine> {
    let xs = edges(&plan.x_positions(), plan.patch(), plan.width());
    let ys = edges(&plan.y_positions(), plan.patch(), plan.height());
    lines(Orientation::Vertical, xs)
        .chain(lines(Orientation::Horizontal, ys))
        .collect()
}

/// Lines half a stride off the seams that do not coincide with any seam.
pub fn control_lines(plan: &TilePlan) -> Vec<SeamLine> {
    let half = (plan.stride() / 2).max(1);
    let shift = |seams: &[usize], len: usize| {
        let mut out: Vec<usize> = seams
            .iter()
            .flat_map(|&p| [p.checked_sub(half), Some(p + half)])
            .flatten()
            .filter(|&p| p > 0 && p < len && !seams.contains(&p))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    };
    let xs = edges(&plan.x_positions(), plan.patch(), plan.width());
    let ys = edges(&plan.y_positions(), plan.patch(), plan.height());
    lines(Orientation::Vertical, shift(&xs, plan.width()))
        .chain(lines(Orientation::Horizontal, shift(&ys, plan.height())))
        .collect()
}

/// Absolute first differences across the line at `position`.
fn crossings(
    img: &Image,
    orientation: Orientation,
    position: usize,
) -> impl Iterator<Item = f64> + '_ {
    let (h, w, c) = (img.height(), img.width(), img.channels());
    let along = match orientation {
        Orientation::Vertical => h,
        Orientation::Horizontal => w,
    };
    (0..along).flat_map(move |a| {
        (0..c).map(move |k| match orientation {
            Orientation::Vertical => (img.get(a, position, k) - img.get(a, position - 1, k)).abs(),
            Orientation::Horizontal => {
                (img.get(position, a, k) - img.get(position - 1, a, k)).abs()
            }
        })
    })
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn line_statistic(img: &Image, line: SeamLine) -> Result<f64> {
    let len = match line.orientation {
        Orientation::Vertical => img.width(),
        Orientation::Horizontal => img.height(),
    };
    if line.position == 0 || line.position >= len {
        return Err(Error::InvalidArgument(format!(
            "line {line} is not inside a {}x{} image",
            img.height(),
            img.width()
        )));
    }
    let peak = crossings(img, line.orientation, line.position).fold(0.0, f64::max);
    let mut band = Vec::new();
    for d in 1..=BAND {
        for p in [line.position.checked_sub(d), Some(line.position + d)]
            .into_iter()
            .flatten()
        {
            if p > 0 && p < len {
                band.extend(crossings(img, line.orientation, p));
            }
        }
    }
    Ok(peak - median(band))
}

fn check_dims(img: &Image, plan: &TilePlan) -> Result<()> {
    if img.height() != plan.height() || img.width() != plan.width() {
        return Err(Error::Shape(format!(
            "plan covers {}x{} but the image is {}x{}",
            plan.height(),
            plan.width(),
            img.height(),
            img.width()
        )));
    }
    Ok(())
}

pub fn seam_metric(img: &Image, plan: &TilePlan) -> Result<Vec<SeamValue>> {
    check_dims(img, plan)?;
    seam_lines(plan)
        .into_iter()
        .map(|line| {
            Ok(SeamValue {
                line,
                value: line_statistic(img, line)?,
            })
        })
        .collect()
}

pub fn control_metric(img: &Image, plan: &TilePlan) -> Result<Vec<SeamValue>> {
    check_dims(img, plan)?;
    control_lines(plan)
        .into_iter()
        .map(|line| {
            Ok(SeamValue {
                line,
                value: line_statistic(img, line)?,
            })
        })
        .collect()
}

/// Mean of the values; 0 when there are none.
pub fn mean_value(values: &[SeamValue]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().map(|v| v.value).sum::<f64>() / values.len() as f64
}
