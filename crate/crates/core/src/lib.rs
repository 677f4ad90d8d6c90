//! Arbitrary-size image restoration and generation with a fixed-size
//! diffusion denoiser.
//!
//! The building blocks are
//!
//! * [`sampler`]: reverse diffusion where every clean estimate is projected
//!   onto the set of images consistent with a linear measurement
//!   (`x̂ = A†y + (I - A†A) x0|t`), with an optional measurement-noise path;
//! * [`msr`]: raster-order tiling where each tile treats the overlap with
//!   already restored tiles as an exact inpainting constraint;
//! * [`hir`]: a coarse pass at reduced size whose low frequencies constrain
//!   the full-size pass.
//!
//! Denoisers in [`denoise`] are closed-form posterior means of Gaussian and
//! Gaussian-mixture priors, so every stage can be checked exactly.

pub mod denoise;
pub mod error;
pub mod hir;
pub mod image;
pub mod linops;
pub mod metrics;
pub mod msr;
pub mod sampler;
pub mod schedule;
pub mod selftest;
pub mod task;

pub use error::{Error, Result};
pub use image::{Image, Mask, Shape, Window};
