//! Differentiable bilinear resampling through a [`WarpField`].
//!
//! Normalized coordinates map to continuous pixel positions with
//! `px = ((x + 1) W - 1) / 2`, the inverse of the pixel-center convention
//! used for landmarks, so an identity field samples every pixel center.

use rayon::prelude::*;
use thiserror::Error;

use crate::feature_map::FeatureMap;
use crate::field::{identity_field, WarpField};

/// What a sample outside the input grid sees.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BorderMode {
    /// Replicate the edge pixels.
    #[default]
    Clamp,
    /// Treat everything outside the grid as zero.
    Zeros,
}

#[derive(Debug, Error, PartialEq)]
pub enum SampleError {
    #[error("grad_output shape {found:?} does not match forward output shape {expected:?}")]
    GradShape {
        expected: (usize, usize, usize),
        found: (usize, usize, usize),
    },
}

/// Gradients of [`grid_sample`] with respect to its two inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleGradients {
    pub grad_input: FeatureMap,
    /// Row-major `H x W`, `[d/dx, d/dy]` of the normalized field coordinates.
    pub grad_field: Vec<[f64; 2]>,
}

/// Bilinear stencil at one output pixel: four input offsets, their weights,
/// and the weights' derivatives with respect to the continuous pixel position.
#[derive(Clone, Copy, Debug)]
struct Stencil {
    idx: [usize; 4],
    weight: [f64; 4],
    d_px: [f64; 4],
    d_py: [f64; 4],
}

struct Axis {
    lo: usize,
    hi: usize,
    frac: f64,
    lo_valid: bool,
    hi_valid: bool,
    /// Whether the position moves the sample (false where clamped).
    live: bool,
}

#[inline]
fn axis(pos: f64, size: usize, border: BorderMode) -> Axis {
    let last = (size - 1) as f64;
    match border {
        BorderMode::Clamp => {
            let live = (0.0..=last).contains(&pos);
            let p = pos.clamp(0.0, last);
            let lo = (p.floor() as usize).min(size - 1);
            let hi = (lo + 1).min(size - 1);
            Axis {
                lo,
                hi,
                frac: p - lo as f64,
                lo_valid: true,
                hi_valid: true,
                live,
            }
        }
        BorderMode::Zeros => {
            let f = pos.floor();
            let frac = pos - f;
            let lo_valid = f >= 0.0 && f <= last;
            let hi_valid = f + 1.0 >= 0.0 && f + 1.0 <= last;
            let lo = if lo_valid { f as usize } else { 0 };
            let hi = if hi_valid { (f + 1.0) as usize } else { 0 };
            Axis {
                lo,
                hi,
                frac,
                lo_valid,
                hi_valid,
                live: true,
            }
        }
    }
}

#[inline]
fn stencil(x: f64, y: f64, height: usize, width: usize, border: BorderMode) -> Stencil {
    let px = ((x + 1.0) * width as f64 - 1.0) * 0.5;
    let py = ((y + 1.0) * height as f64 - 1.0) * 0.5;
    let ax = axis(px, width, border);
    let ay = axis(py, height, border);
    let (fx, fy) = (ax.frac, ay.frac);
    let idx = [
        ay.lo * width + ax.lo,
        ay.lo * width + ax.hi,
        ay.hi * width + ax.lo,
        ay.hi * width + ax.hi,
    ];
    let valid = [
        ay.lo_valid && ax.lo_valid,
        ay.lo_valid && ax.hi_valid,
        ay.hi_valid && ax.lo_valid,
        ay.hi_valid && ax.hi_valid,
    ];
    let mut weight = [(1.0 - fx) * (1.0 - fy), fx * (1.0 - fy), (1.0 - fx) * fy, fx * fy];
    let sx = if ax.live { 1.0 } else { 0.0 };
    let sy = if ay.live { 1.0 } else { 0.0 };
    let mut d_px = [-(1.0 - fy) * sx, (1.0 - fy) * sx, -fy * sx, fy * sx];
    let mut d_py = [-(1.0 - fx) * sy, -fx * sy, (1.0 - fx) * sy, fx * sy];
    for k in 0..4 {
        if !valid[k] {
            weight[k] = 0.0;
            d_px[k] = 0.0;
            d_py[k] = 0.0;
        }
    }
    Stencil {
        idx,
        weight,
        d_px,
        d_py,
    }
}

fn stencils(input: &FeatureMap, field: &WarpField, border: BorderMode) -> Vec<Stencil> {
    let (h, w) = (input.height(), input.width());
    field
        .coords()
        .par_iter()
        .map(|p| stencil(p.x, p.y, h, w, border))
        .collect()
}

/// Samples `input` at every coordinate of `field`. The output has the
/// field's spatial size and the input's channel count.
///
/// A field that is exactly the identity for the input's size returns a copy
/// of the input.
pub fn grid_sample(input: &FeatureMap, field: &WarpField, border: BorderMode) -> FeatureMap {
    let (channels, h, w) = input.shape();
    if (field.height(), field.width()) == (h, w) && field.is_identity() {
        return input.clone();
    }
    let stencils = stencils(input, field, border);
    let plane = field.height() * field.width();
    let mut out = vec![0.0; channels * plane];
    out.par_chunks_mut(field.width())
        .enumerate()
        .for_each(|(row, chunk)| {
            let c = row / field.height();
            let src = input.channel(c);
            let base = (row % field.height()) * field.width();
            for (i, o) in chunk.iter_mut().enumerate() {
                let s = &stencils[base + i];
                *o = s.weight[0] * src[s.idx[0]]
                    + s.weight[1] * src[s.idx[1]]
                    + s.weight[2] * src[s.idx[2]]
                    + s.weight[3] * src[s.idx[3]];
            }
        });
    FeatureMap::from_raw(channels, field.height(), field.width(), out)
}

/// Exact gradients of [`grid_sample`] given the upstream gradient.
///
/// Along an axis where the sample position was clamped the field gradient
/// is zero. Input gradients are accumulated per channel in output-pixel
/// order, so results are independent of the thread count.
pub fn grid_sample_backward(
    grad_output: &FeatureMap,
    input: &FeatureMap,
    field: &WarpField,
    border: BorderMode,
) -> Result<SampleGradients, SampleError> {
    let (channels, h, w) = input.shape();
    let expected = (channels, field.height(), field.width());
    if grad_output.shape() != expected {
        return Err(SampleError::GradShape {
            expected,
            found: grad_output.shape(),
        });
    }
    let stencils = stencils(input, field, border);
    let plane = field.height() * field.width();

    let mut grad_input = vec![0.0; channels * h * w];
    grad_input
        .par_chunks_mut(h * w)
        .enumerate()
        .for_each(|(c, gin)| {
            let g = grad_output.channel(c);
            for (s, &go) in stencils.iter().zip(g) {
                for k in 0..4 {
                    gin[s.idx[k]] += go * s.weight[k];
                }
            }
        });

    let scale_x = w as f64 * 0.5;
    let scale_y = h as f64 * 0.5;
    let grad_field = (0..plane)
        .into_par_iter()
        .map(|i| {
            let s = &stencils[i];
            let (mut gx, mut gy) = (0.0, 0.0);
            for c in 0..channels {
                let go = grad_output.channel(c)[i];
                let src = input.channel(c);
                for k in 0..4 {
                    let v = src[s.idx[k]];
                    gx += go * s.d_px[k] * v;
                    gy += go * s.d_py[k] * v;
                }
            }
            [gx * scale_x, gy * scale_y]
        })
        .collect();

    Ok(SampleGradients {
        grad_input: FeatureMap::from_raw(channels, h, w, grad_input),
        grad_field,
    })
}

/// Warps an image through `field`; same numerics as [`grid_sample`].
pub fn warp_image(image: &FeatureMap, field: &WarpField, border: BorderMode) -> FeatureMap {
    grid_sample(image, field, border)
}

/// Bilinear resize covering the same extent (pixel-area aligned).
pub fn resize(input: &FeatureMap, height: usize, width: usize) -> FeatureMap {
    let id = identity_field(height, width).expect("resize target must be non-empty");
    grid_sample(input, &id, BorderMode::Clamp)
}
