//! Dense real-valued rasters in the diffusion value range [-1, 1].
//!
//! Pixels are stored row-major with interleaved channels, so the sample at
//! row `i`, column `j`, channel `k` lives at `(i * width + j) * channels + k`.
//! Values are never clamped here; clamping only happens when quantizing to
//! 8 bits in [`pnm`].

pub mod pnm;

use crate::error::{Error, Result};

/// Height, width and channel count of a raster.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Shape {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
}

impl Shape {
    pub const fn new(height: usize, width: usize, channels: usize) -> Self {
        Self {
            height,
            width,
            channels,
        }
    }

    pub const fn len(&self) -> usize {
        self.height * self.width * self.channels
    }

    pub const fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub const fn pixels(&self) -> usize {
        self.height * self.width
    }

    pub fn with_channels(self, channels: usize) -> Self {
        Self { channels, ..self }
    }
}

impl std::fmt::Display for Shape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}x{}", self.height, self.width, self.channels)
    }
}

/// Axis-aligned rectangle in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Window {
    pub top: usize,
    pub left: usize,
    pub height: usize,
    pub width: usize,
}

impl Window {
    pub const fn new(top: usize, left: usize, height: usize, width: usize) -> Self {
        Self {
            top,
            left,
            height,
            width,
        }
    }

    pub const fn full(height: usize, width: usize) -> Self {
        Self::new(0, 0, height, width)
    }

    pub const fn bottom(&self) -> usize {
        self.top + self.height
    }

    pub const fn right(&self) -> usize {
        self.left + self.width
    }

    pub fn fits(&self, height: usize, width: usize) -> bool {
        self.bottom() <= height && self.right() <= width
    }

    /// The same window with every coordinate divided by `factor`.
    pub fn downscale(&self, factor: usize) -> Result<Window> {
        if factor == 0
            || !self.top.is_multiple_of(factor)
            || !self.left.is_multiple_of(factor)
            || !self.height.is_multiple_of(factor)
            || !self.width.is_multiple_of(factor)
        {
            return Err(Error::Alignment(format!(
                "window {self:?} is not aligned to factor {factor}"
            )));
        }
        Ok(Window::new(
            self.top / factor,
            self.left / factor,
            self.height / factor,
            self.width / factor,
        ))
    }

    fn check(&self, height: usize, width: usize) -> Result<()> {
        if self.fits(height, width) {
            Ok(())
        } else {
            Err(Error::WindowOutOfBounds {
                window: *self,
                height,
                width,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    shape: Shape,
    data: Vec<f64>,
}

impl Image {
    pub fn new(shape: Shape, data: Vec<f64>) -> Result<Self> {
        if data.len() != shape.len() {
            return Err(Error::Shape(format!(
                "{} samples supplied for a {shape} image",
                data.len()
            )));
        }
        if !matches!(shape.channels, 1 | 3) {
            return Err(Error::Shape(format!(
                "images have 1 or 3 channels, got {}",
                shape.channels
            )));
        }
        if let Some(bad) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite sample at index {bad}"
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn filled(shape: Shape, value: f64) -> Self {
        assert!(
            matches!(shape.channels, 1 | 3),
            "images have 1 or 3 channels"
        );
        assert!(value.is_finite());
        Self {
            shape,
            data: vec![value; shape.len()],
        }
    }

    pub fn zeros(shape: Shape) -> Self {
        Self::filled(shape, 0.0)
    }

    pub fn from_fn(shape: Shape, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        assert!(
            matches!(shape.channels, 1 | 3),
            "images have 1 or 3 channels"
        );
        let mut data = Vec::with_capacity(shape.len());
        for i in 0..shape.height {
            for j in 0..shape.width {
                for k in 0..shape.channels {
                    data.push(f(i, j, k));
                }
            }
        }
        Self { shape, data }
    }

    /// Wraps already-validated data. Used by hot loops that produce samples
    /// by arithmetic on finite inputs.
    pub(crate) fn from_raw(shape: Shape, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), shape.len());
        Self { shape, data }
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn height(&self) -> usize {
        self.shape.height
    }

    pub fn width(&self) -> usize {
        self.shape.width
    }

    pub fn channels(&self) -> usize {
        self.shape.channels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.shape.width + j) * self.shape.channels + k
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[self.index(i, j, k)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        let idx = self.index(i, j, k);
        self.data[idx] = v;
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Image {
        Image::from_raw(self.shape, self.data.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Image, f: impl Fn(f64, f64) -> f64) -> Result<Image> {
        self.expect_shape(other.shape)?;
        Ok(Image::from_raw(
            self.shape,
            self.data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    pub fn expect_shape(&self, shape: Shape) -> Result<()> {
        if self.shape == shape {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "expected a {shape} image, got {}",
                self.shape
            )))
        }
    }

    pub fn max_abs_diff(&self, other: &Image) -> Result<f64> {
        self.expect_shape(other.shape)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// Copies the pixels under `w` into a new image.
    pub fn crop(&self, w: Window) -> Result<Image> {
        w.check(self.height(), self.width())?;
        let c = self.channels();
        let mut data = Vec::with_capacity(w.height * w.width * c);
        for i in w.top..w.bottom() {
            let start = self.index(i, w.left, 0);
            data.extend_from_slice(&self.data[start..start + w.width * c]);
        }
        Ok(Image::from_raw(Shape::new(w.height, w.width, c), data))
    }

    /// Returns a copy of `self` with the pixels under `w` replaced by `src`.
    pub fn blit(&self, src: &Image, w: Window) -> Result<Image> {
        let mut out = self.clone();
        out.blit_in_place(src, w)?;
        Ok(out)
    }

    pub fn blit_in_place(&mut self, src: &Image, w: Window) -> Result<()> {
        w.check(self.height(), self.width())?;
        if src.height() != w.height || src.width() != w.width || src.channels() != self.channels() {
            return Err(Error::Shape(format!(
                "cannot blit a {} image into window {w:?} of a {} image",
                src.shape, self.shape
            )));
        }
        let c = self.channels();
        let row = w.width * c;
        for (r, i) in (w.top..w.bottom()).enumerate() {
            let dst = self.index(i, w.left, 0);
            self.data[dst..dst + row].copy_from_slice(&src.data[r * row..(r + 1) * row]);
        }
        Ok(())
    }
}

/// Binary per-pixel mask; `true` marks a known pixel. Applies to every
/// channel of the pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    height: usize,
    width: usize,
    known: Vec<bool>,
}

impl Mask {
    pub fn new(height: usize, width: usize, known: Vec<bool>) -> Result<Self> {
        if known.len() != height * width {
            return Err(Error::Shape(format!(
                "{} mask entries for a {height}x{width} mask",
                known.len()
            )));
        }
        Ok(Self {
            height,
            width,
            known,
        })
    }

    pub fn filled(height: usize, width: usize, known: bool) -> Self {
        Self {
            height,
            width,
            known: vec![known; height * width],
        }
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut known = Vec::with_capacity(height * width);
        for i in 0..height {
            for j in 0..width {
                known.push(f(i, j));
            }
        }
        Self {
            height,
            width,
            known,
        }
    }

    /// Interprets a single-channel image as a mask: -1 (8-bit 0) is missing,
    /// +1 (8-bit 255) is known. Anything else is rejected.
    pub fn from_image(img: &Image) -> Result<Self> {
        if img.channels() != 1 {
            return Err(Error::InvalidArgument(
                "masks must be single-channel".into(),
            ));
        }
        let known = img
            .data()
            .iter()
            .enumerate()
            .map(|(idx, &v)| {
                if v == 1.0 {
                    Ok(true)
                } else if v == -1.0 {
                    Ok(false)
                } else {
                    Err(Error::InvalidArgument(format!(
                        "mask pixel ({}, {}) is neither 0 nor 255",
                        idx / img.width(),
                        idx % img.width()
                    )))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Mask::new(img.height(), img.width(), known)
    }

    pub fn to_image(&self) -> Image {
        Image::from_raw(
            Shape::new(self.height, self.width, 1),
            self.known
                .iter()
                .map(|&k| if k { 1.0 } else { -1.0 })
                .collect(),
        )
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn is_known(&self, i: usize, j: usize) -> bool {
        self.known[i * self.width + j]
    }

    pub fn set(&mut self, i: usize, j: usize, known: bool) {
        self.known[i * self.width + j] = known;
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.known
    }

    pub fn count_known(&self) -> usize {
        self.known.iter().filter(|&&k| k).count()
    }

    pub fn all_known(&self) -> bool {
        self.known.iter().all(|&k| k)
    }

    pub fn crop(&self, w: Window) -> Result<Mask> {
        w.check(self.height, self.width)?;
        Ok(Mask::from_fn(w.height, w.width, |i, j| {
            self.is_known(w.top + i, w.left + j)
        }))
    }

    /// Marks every pixel under `w` as known.
    pub fn fill_window(&mut self, w: Window) -> Result<()> {
        w.check(self.height, self.width)?;
        for i in w.top..w.bottom() {
            for j in w.left..w.right() {
                self.set(i, j, true);
            }
        }
        Ok(())
    }

    /// Reduced mask where a pixel is known only if its whole
    /// `factor x factor` footprint is known.
    pub fn downsample_conservative(&self, factor: usize) -> Result<Mask> {
        if factor == 0 || !self.height.is_multiple_of(factor) || !self.width.is_multiple_of(factor) {
            return Err(Error::Alignment(format!(
                "{}x{} mask is not divisible by {factor}",
                self.height, self.width
            )));
        }
        Ok(Mask::from_fn(
            self.height / factor,
            self.width / factor,
            |i, j| {
                (0..factor)
                    .all(|di| (0..factor).all(|dj| self.is_known(i * factor + di, j * factor + dj)))
            },
        ))
    }
}
