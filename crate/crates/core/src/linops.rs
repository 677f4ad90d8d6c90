//! Linear degradation operators `A` with structured pseudo-inverses `A†`.
//!
//! All operators here are matrix-free. Each also reports its singular
//! spectrum as a list of [`ModeClass`]es so that spectral functions
//! `V diag(f(s)) Vᵀ` and `V diag(f(s)) Σ† Uᵀ` can be applied without ever
//! forming an SVD. Every operator in this module has a single positive
//! singular value shared by all range modes, and `A†A` is the orthogonal
//! projector onto that range.

use std::fmt;

use crate::error::{Error, Result};
use crate::image::{Image, Mask, Shape};

/// Flat measurement vector `y = A x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement(Vec<f64>);

impl Measurement {
    pub fn new(data: Vec<f64>) -> Self {
        Self(data)
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn max_abs_diff(&self, other: &Measurement) -> Result<f64> {
        if self.len() != other.len() {
            return Err(Error::Shape(format!(
                "measurement lengths differ: {} vs {}",
                self.len(),
                other.len()
            )));
        }
        Ok(self
            .0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    pub fn sub(&self, other: &Measurement) -> Result<Measurement> {
        if self.len() != other.len() {
            return Err(Error::Shape(format!(
                "measurement lengths differ: {} vs {}",
                self.len(),
                other.len()
            )));
        }
        Ok(Measurement(
            self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect(),
        ))
    }
}

impl From<&Image> for Measurement {
    fn from(img: &Image) -> Self {
        Self(img.data().to_vec())
    }
}

/// A group of singular modes sharing one singular value. `s = 0` marks
/// null-space modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeClass {
    pub singular_value: f64,
    pub count: usize,
}

pub trait LinearOperator: fmt::Debug + Send + Sync {
    fn input_shape(&self) -> Shape;

    fn output_len(&self) -> usize;

    /// Shape of the measurement when it is itself a raster (pooling,
    /// grayscale, identity). `None` for scattered measurements.
    fn measurement_shape(&self) -> Option<Shape> {
        None
    }

    fn forward(&self, x: &Image) -> Result<Measurement>;

    fn pinv(&self, y: &Measurement) -> Result<Image>;

    fn mode_classes(&self) -> Vec<ModeClass>;

    /// `A†A x`, the orthogonal projection onto the row space.
    fn range_project(&self, x: &Image) -> Result<Image> {
        self.pinv(&self.forward(x)?)
    }

    /// `V diag(f(s_i)) Vᵀ x` over all `D` input modes, including null modes
    /// (evaluated at `s = 0`).
    fn spectral_apply(&self, x: &Image, f: &dyn Fn(f64) -> f64) -> Result<Image> {
        x.expect_shape(self.input_shape())?;
        let (range_scale, null_scale) = uniform_scales(&self.mode_classes(), f)?;
        let range = self.range_project(x)?;
        x.zip_map(&range, |xv, rv| {
            range_scale * rv + null_scale.map_or(0.0, |ns| ns * (xv - rv))
        })
    }

    /// `V diag(f(s_i)) Σ† Uᵀ r`. Null modes contribute nothing.
    fn pinv_scaled(&self, residual: &Measurement, f: &dyn Fn(f64) -> f64) -> Result<Image> {
        let (range_scale, _) = uniform_scales(&self.mode_classes(), f)?;
        Ok(self.pinv(residual)?.map(|v| range_scale * v))
    }
}

/// Evaluates `f` on the (single) positive singular value and, if null modes
/// exist, on zero.
fn uniform_scales(classes: &[ModeClass], f: &dyn Fn(f64) -> f64) -> Result<(f64, Option<f64>)> {
    let mut range = None;
    let mut null = None;
    for class in classes.iter().filter(|c| c.count > 0) {
        let v = f(class.singular_value);
        if !v.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "spectral function undefined at s = {}",
                class.singular_value
            )));
        }
        if class.singular_value > 0.0 {
            if range.is_some_and(|r: (f64, f64)| r.0 != class.singular_value) {
                return Err(Error::InvalidArgument(
                    "operator spectrum has more than one positive singular value".into(),
                ));
            }
            range = Some((class.singular_value, v));
        } else {
            null = Some(v);
        }
    }
    Ok((range.map_or(0.0, |r| r.1), null))
}

fn check_measurement(op: &dyn LinearOperator, y: &Measurement) -> Result<()> {
    if y.len() != op.output_len() {
        return Err(Error::Shape(format!(
            "measurement has {} entries, operator expects {}",
            y.len(),
            op.output_len()
        )));
    }
    Ok(())
}

/// `p x p` block mean per channel; `A†` replicates each value over its block.
#[derive(Debug, Clone)]
pub struct AvgPool {
    shape: Shape,
    factor: usize,
}

impl AvgPool {
    pub fn new(shape: Shape, factor: usize) -> Result<Self> {
        if factor == 0 || !shape.height.is_multiple_of(factor) || !shape.width.is_multiple_of(factor) {
            return Err(Error::Alignment(format!(
                "{}x{} image is not divisible by pooling factor {factor}",
                shape.height, shape.width
            )));
        }
        Ok(Self { shape, factor })
    }

    pub fn factor(&self) -> usize {
        self.factor
    }

    pub fn output_shape(&self) -> Shape {
        Shape::new(
            self.shape.height / self.factor,
            self.shape.width / self.factor,
            self.shape.channels,
        )
    }

    /// `forward` returning the pooled raster directly.
    pub fn pool(&self, x: &Image) -> Result<Image> {
        x.expect_shape(self.shape)?;
        let p = self.factor;
        let out = self.output_shape();
        let c = out.channels;
        let norm = 1.0 / (p * p) as f64;
        let mut data = vec![0.0; out.len()];
        for i in 0..self.shape.height {
            let oi = i / p;
            for j in 0..self.shape.width {
                let oj = j / p;
                let base = (oi * out.width + oj) * c;
                for k in 0..c {
                    data[base + k] += x.get(i, j, k);
                }
            }
        }
        data.iter_mut().for_each(|v| *v *= norm);
        Ok(Image::from_raw(out, data))
    }

    /// `pinv` taking the pooled raster directly.
    pub fn replicate(&self, y: &Image) -> Result<Image> {
        y.expect_shape(self.output_shape())?;
        let p = self.factor;
        Ok(Image::from_fn(self.shape, |i, j, k| y.get(i / p, j / p, k)))
    }
}

impl LinearOperator for AvgPool {
    fn input_shape(&self) -> Shape {
        self.shape
    }

    fn output_len(&self) -> usize {
        self.output_shape().len()
    }

    fn measurement_shape(&self) -> Option<Shape> {
        Some(self.output_shape())
    }

    fn forward(&self, x: &Image) -> Result<Measurement> {
        Ok(Measurement::from(&self.pool(x)?))
    }

    fn pinv(&self, y: &Measurement) -> Result<Image> {
        check_measurement(self, y)?;
        self.replicate(&Image::from_raw(self.output_shape(), y.as_slice().to_vec()))
    }

    fn mode_classes(&self) -> Vec<ModeClass> {
        let m = self.output_len();
        vec![
            ModeClass {
                singular_value: 1.0 / self.factor as f64,
                count: m,
            },
            ModeClass {
                singular_value: 0.0,
                count: self.shape.len() - m,
            },
        ]
    }
}

/// Selects the known pixels (all channels) in raster order; `A†` scatters
/// them back and leaves missing pixels at zero.
#[derive(Debug, Clone)]
pub struct MaskOp {
    shape: Shape,
    mask: Mask,
    known_pixels: usize,
}

impl MaskOp {
    pub fn new(shape: Shape, mask: Mask) -> Result<Self> {
        if mask.height() != shape.height || mask.width() != shape.width {
            return Err(Error::Shape(format!(
                "{}x{} mask for a {shape} image",
                mask.height(),
                mask.width()
            )));
        }
        let known_pixels = mask.count_known();
        Ok(Self {
            shape,
            mask,
            known_pixels,
        })
    }

    pub fn mask(&self) -> &Mask {
        &self.mask
    }
}

impl LinearOperator for MaskOp {
    fn input_shape(&self) -> Shape {
        self.shape
    }

    fn output_len(&self) -> usize {
        self.known_pixels * self.shape.channels
    }

    fn forward(&self, x: &Image) -> Result<Measurement> {
        x.expect_shape(self.shape)?;
        let c = self.shape.channels;
        let mut y = Vec::with_capacity(self.output_len());
        for (p, _) in self.mask.as_slice().iter().enumerate().filter(|(_, &k)| k) {
            y.extend_from_slice(&x.data()[p * c..(p + 1) * c]);
        }
        Ok(Measurement::new(y))
    }

    fn pinv(&self, y: &Measurement) -> Result<Image> {
        check_measurement(self, y)?;
        let c = self.shape.channels;
        let mut data = vec![0.0; self.shape.len()];
        let known = self.mask.as_slice().iter().enumerate().filter(|(_, &k)| k);
        for (n, (p, _)) in known.enumerate() {
            data[p * c..(p + 1) * c].copy_from_slice(&y.as_slice()[n * c..(n + 1) * c]);
        }
        Ok(Image::from_raw(self.shape, data))
    }

    fn range_project(&self, x: &Image) -> Result<Image> {
        x.expect_shape(self.shape)?;
        let c = self.shape.channels;
        let mut out = x.clone();
        for (p, &known) in self.mask.as_slice().iter().enumerate() {
            if !known {
                out.data_mut()[p * c..(p + 1) * c].fill(0.0);
            }
        }
        Ok(out)
    }

    fn mode_classes(&self) -> Vec<ModeClass> {
        vec![
            ModeClass {
                singular_value: 1.0,
                count: self.output_len(),
            },
            ModeClass {
                singular_value: 0.0,
                count: self.shape.len() - self.output_len(),
            },
        ]
    }
}

/// Per-pixel channel mean of an RGB image; `A†` copies the gray value into
/// all three channels.
#[derive(Debug, Clone)]
pub struct Grayscale {
    shape: Shape,
}

impl Grayscale {
    pub fn new(shape: Shape) -> Result<Self> {
        if shape.channels != 3 {
            return Err(Error::Shape(format!(
                "grayscale degradation needs a 3-channel input, got {shape}"
            )));
        }
        Ok(Self { shape })
    }

    pub fn output_shape(&self) -> Shape {
        self.shape.with_channels(1)
    }

    pub fn to_gray(&self, x: &Image) -> Result<Image> {
        x.expect_shape(self.shape)?;
        Ok(Image::from_raw(
            self.output_shape(),
            x.data()
                .chunks_exact(3)
                .map(|px| (px[0] + px[1] + px[2]) / 3.0)
                .collect(),
        ))
    }
}

impl LinearOperator for Grayscale {
    fn input_shape(&self) -> Shape {
        self.shape
    }

    fn output_len(&self) -> usize {
        self.shape.pixels()
    }

    fn measurement_shape(&self) -> Option<Shape> {
        Some(self.output_shape())
    }

    fn forward(&self, x: &Image) -> Result<Measurement> {
        Ok(Measurement::from(&self.to_gray(x)?))
    }

    fn pinv(&self, y: &Measurement) -> Result<Image> {
        check_measurement(self, y)?;
        Ok(Image::from_raw(
            self.shape,
            y.as_slice().iter().flat_map(|&g| [g, g, g]).collect(),
        ))
    }

    fn mode_classes(&self) -> Vec<ModeClass> {
        vec![
            ModeClass {
                singular_value: 1.0 / 3f64.sqrt(),
                count: self.shape.pixels(),
            },
            ModeClass {
                singular_value: 0.0,
                count: 2 * self.shape.pixels(),
            },
        ]
    }
}

#[derive(Debug, Clone)]
pub struct Identity {
    shape: Shape,
}

impl Identity {
    pub fn new(shape: Shape) -> Self {
        Self { shape }
    }
}

impl LinearOperator for Identity {
    fn input_shape(&self) -> Shape {
        self.shape
    }

    fn output_len(&self) -> usize {
        self.shape.len()
    }

    fn measurement_shape(&self) -> Option<Shape> {
        Some(self.shape)
    }

    fn forward(&self, x: &Image) -> Result<Measurement> {
        x.expect_shape(self.shape)?;
        Ok(Measurement::from(x))
    }

    fn pinv(&self, y: &Measurement) -> Result<Image> {
        check_measurement(self, y)?;
        Ok(Image::from_raw(self.shape, y.as_slice().to_vec()))
    }

    fn range_project(&self, x: &Image) -> Result<Image> {
        x.expect_shape(self.shape)?;
        Ok(x.clone())
    }

    fn mode_classes(&self) -> Vec<ModeClass> {
        vec![ModeClass {
            singular_value: 1.0,
            count: self.shape.len(),
        }]
    }
}

/// Dense matrices of an operator, for verification on small instances.
pub mod dense {
    use nalgebra::DMatrix;

    use super::{LinearOperator, Measurement};
    use crate::error::{Error, Result};
    use crate::image::Image;

    pub const MAX_DENSE_DIM: usize = 4096;

    /// Matrix of `A` (output_len x D), built by applying `forward` to the
    /// standard basis.
    pub fn forward_matrix(op: &dyn LinearOperator) -> Result<DMatrix<f64>> {
        let shape = op.input_shape();
        let d = shape.len();
        if d > MAX_DENSE_DIM {
            return Err(Error::InvalidArgument(format!(
                "dense construction limited to D <= {MAX_DENSE_DIM}, got {d}"
            )));
        }
        let m = op.output_len();
        let mut a = DMatrix::zeros(m, d);
        for col in 0..d {
            let mut e = vec![0.0; d];
            e[col] = 1.0;
            let y = op.forward(&Image::new(shape, e)?)?;
            for (row, v) in y.as_slice().iter().enumerate() {
                a[(row, col)] = *v;
            }
        }
        Ok(a)
    }

    /// Matrix of `A†` (D x output_len), built by applying `pinv` to the
    /// standard basis of the measurement space.
    pub fn pinv_matrix(op: &dyn LinearOperator) -> Result<DMatrix<f64>> {
        let d = op.input_shape().len();
        if d > MAX_DENSE_DIM {
            return Err(Error::InvalidArgument(format!(
                "dense construction limited to D <= {MAX_DENSE_DIM}, got {d}"
            )));
        }
        let m = op.output_len();
        let mut p = DMatrix::zeros(d, m);
        for col in 0..m {
            let mut e = vec![0.0; m];
            e[col] = 1.0;
            let x = op.pinv(&Measurement::new(e))?;
            for (row, v) in x.data().iter().enumerate() {
                p[(row, col)] = *v;
            }
        }
        Ok(p)
    }
}
