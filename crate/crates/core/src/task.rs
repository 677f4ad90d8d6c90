//! Restoration tasks: a degradation plus its observation, restricted to
//! arbitrary windows of the output canvas.

use crate::error::{Error, Result};
use crate::image::{Image, Mask, Shape, Window};
use crate::linops::{AvgPool, Grayscale, Identity, LinearOperator, MaskOp, Measurement};

#[derive(Debug, Clone, PartialEq)]
pub enum Degradation {
    /// Average-pooling by `factor`.
    SuperRes {
        factor: usize,
    },
    Inpaint {
        mask: Mask,
    },
    Colorize,
    /// Identity operator; meaningful together with `sigma_y > 0`.
    Denoise,
    /// Empty measurement.
    Generate,
}

impl Degradation {
    pub fn name(&self) -> &'static str {
        match self {
            Degradation::SuperRes { .. } => "sr",
            Degradation::Inpaint { .. } => "inpaint",
            Degradation::Colorize => "colorize",
            Degradation::Denoise => "denoise",
            Degradation::Generate => "generate",
        }
    }
}

/// A degradation of a `shape`-sized result together with its observation,
/// kept in raster form so it can be cropped per tile:
///
/// * super-resolution: the low-resolution image;
/// * inpainting: the full image with missing pixels zeroed;
/// * colorization: the single-channel gray image;
/// * denoising: the noisy image;
/// * generation: nothing.
#[derive(Debug, Clone)]
pub struct Task {
    degradation: Degradation,
    shape: Shape,
    observed: Option<Image>,
}

impl Task {
    pub fn super_resolution(low_res: Image, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::InvalidArgument("scale must be at least 1".into()));
        }
        let shape = Shape::new(
            low_res.height() * factor,
            low_res.width() * factor,
            low_res.channels(),
        );
        Ok(Self {
            degradation: Degradation::SuperRes { factor },
            shape,
            observed: Some(low_res),
        })
    }

    pub fn inpainting(image: Image, mask: Mask) -> Result<Self> {
        let op = MaskOp::new(image.shape(), mask.clone())?;
        let observed = op.pinv(&op.forward(&image)?)?;
        Ok(Self {
            degradation: Degradation::Inpaint { mask },
            shape: image.shape(),
            observed: Some(observed),
        })
    }

    pub fn colorization(gray: Image) -> Result<Self> {
        if gray.channels() != 1 {
            return Err(Error::InvalidArgument(
                "colorization input must be single-channel".into(),
            ));
        }
        Ok(Self {
            degradation: Degradation::Colorize,
            shape: gray.shape().with_channels(3),
            observed: Some(gray),
        })
    }

    pub fn denoising(noisy: Image) -> Self {
        Self {
            degradation: Degradation::Denoise,
            shape: noisy.shape(),
            observed: Some(noisy),
        }
    }

    pub fn generation(shape: Shape) -> Self {
        Self {
            degradation: Degradation::Generate,
            shape,
            observed: None,
        }
    }

    /// Degrades `truth` (noise-free) and wraps the result as a task.
    pub fn from_truth(degradation: Degradation, truth: &Image) -> Result<Self> {
        match degradation {
            Degradation::SuperRes { factor } => {
                let op = AvgPool::new(truth.shape(), factor)?;
                Self::super_resolution(op.pool(truth)?, factor)
            }
            Degradation::Inpaint { mask } => Self::inpainting(truth.clone(), mask),
            Degradation::Colorize => {
                Self::colorization(Grayscale::new(truth.shape())?.to_gray(truth)?)
            }
            Degradation::Denoise => Ok(Self::denoising(truth.clone())),
            Degradation::Generate => Ok(Self::generation(truth.shape())),
        }
    }

    pub fn degradation(&self) -> &Degradation {
        &self.degradation
    }

    /// Shape of the restored result.
    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn observed(&self) -> Option<&Image> {
        self.observed.as_ref()
    }

    /// Coordinates of any window handed to [`Task::restrict`] must be
    /// multiples of this.
    pub fn block(&self) -> usize {
        match self.degradation {
            Degradation::SuperRes { factor } => factor,
            _ => 1,
        }
    }

    pub fn operator(&self) -> Result<Box<dyn LinearOperator>> {
        Ok(self
            .restrict(Window::full(self.shape.height, self.shape.width))?
            .0)
    }

    pub fn measurement(&self) -> Result<Measurement> {
        Ok(self
            .restrict(Window::full(self.shape.height, self.shape.width))?
            .1)
    }

    /// Operator and measurement of the sub-problem on window `w` of the
    /// result canvas.
    pub fn restrict(&self, w: Window) -> Result<(Box<dyn LinearOperator>, Measurement)> {
        if !w.fits(self.shape.height, self.shape.width) {
            return Err(Error::WindowOutOfBounds {
                window: w,
                height: self.shape.height,
                width: self.shape.width,
            });
        }
        let tile = Shape::new(w.height, w.width, self.shape.channels);
        let observed = || {
            self.observed
                .as_ref()
                .expect("restoration tasks carry an observation")
        };
        Ok(match &self.degradation {
            Degradation::SuperRes { factor } => {
                let op = AvgPool::new(tile, *factor)?;
                let y = observed().crop(w.downscale(*factor)?)?;
                (Box::new(op), Measurement::from(&y))
            }
            Degradation::Inpaint { mask } => {
                let op = MaskOp::new(tile, mask.crop(w)?)?;
                let y = op.forward(&observed().crop(w)?)?;
                (Box::new(op), y)
            }
            Degradation::Colorize => {
                let op = Grayscale::new(tile)?;
                (Box::new(op), Measurement::from(&observed().crop(w)?))
            }
            Degradation::Denoise => (
                Box::new(Identity::new(tile)),
                Measurement::from(&observed().crop(w)?),
            ),
            Degradation::Generate => (
                Box::new(MaskOp::new(tile, Mask::filled(w.height, w.width, false))?),
                Measurement::empty(),
            ),
        })
    }

    /// `‖A x - y‖∞` against the full-size measurement.
    pub fn consistency_error(&self, x: &Image) -> Result<f64> {
        let (op, y) = self.restrict(Window::full(self.shape.height, self.shape.width))?;
        if y.is_empty() {
            return Ok(0.0);
        }
        op.forward(x)?.max_abs_diff(&y)
    }
}
