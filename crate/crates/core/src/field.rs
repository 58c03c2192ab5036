//! Dense sampling fields: per-pixel source coordinates for backward warping.

use std::io::{Read, Write};

use rayon::prelude::*;
use thiserror::Error;

use crate::landmarks::normalize_coord;
use crate::point::Point;
use crate::tps::TpsTransform;

/// Default `epsilon` for [`blend_group_fields`].
pub const DEFAULT_BLEND_EPSILON: f64 = 1e-4;

const TPSF_MAGIC: &[u8; 4] = b"TPSF";
const TPSF_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("field dimensions must be at least 1x1, got {height}x{width}")]
    ZeroDimension { height: usize, width: usize },
    #[error("field size mismatch: {expected:?} vs {found:?}")]
    SizeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("no fields to blend")]
    Empty,
    #[error("{fields} fields but {groups} landmark groups")]
    GroupCountMismatch { fields: usize, groups: usize },
    #[error("landmark group {0} is empty")]
    EmptyGroup(usize),
    #[error("blend epsilon must be positive and finite, got {0}")]
    BadEpsilon(f64),
    #[error("field coordinates must be finite")]
    NonFinite,
    #[error("not a TPSF file (bad magic)")]
    BadMagic,
    #[error("unsupported TPSF version {0}")]
    BadVersion(u32),
    #[error("TPSF I/O error: {0}")]
    Io(#[from] std::io::Error),
}

/// An `H x W` grid of normalized source coordinates, row-major.
///
/// Sampling an image through the field produces, at output pixel `(r, c)`,
/// the source value at `coords[r * W + c]`.
#[derive(Clone, Debug, PartialEq)]
pub struct WarpField {
    height: usize,
    width: usize,
    coords: Vec<Point>,
}

#[inline]
fn pixel_center(r: usize, c: usize, height: usize, width: usize) -> Point {
    Point::new(
        normalize_coord(c as f64, width as u32),
        normalize_coord(r as f64, height as u32),
    )
}

fn check_dims(height: usize, width: usize) -> Result<(), FieldError> {
    if height == 0 || width == 0 || height > u32::MAX as usize || width > u32::MAX as usize {
        return Err(FieldError::ZeroDimension { height, width });
    }
    Ok(())
}

impl WarpField {
    pub fn from_coords(height: usize, width: usize, coords: Vec<Point>) -> Result<Self, FieldError> {
        check_dims(height, width)?;
        if coords.len() != height * width {
            return Err(FieldError::SizeMismatch {
                expected: (height, width),
                found: (coords.len() / width, width),
            });
        }
        if !coords.iter().all(|p| p.is_finite()) {
            return Err(FieldError::NonFinite);
        }
        Ok(WarpField {
            height,
            width,
            coords,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn coords(&self) -> &[Point] {
        &self.coords
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> Point {
        self.coords[r * self.width + c]
    }

    /// True when every entry is bit-identical to its own pixel center.
    pub fn is_identity(&self) -> bool {
        self.coords.iter().enumerate().all(|(i, p)| {
            *p == pixel_center(i / self.width, i % self.width, self.height, self.width)
        })
    }

    /// Largest coordinate difference between two equally sized fields.
    pub fn max_abs_diff(&self, other: &WarpField) -> Result<f64, FieldError> {
        self.check_same_size(other)?;
        Ok(self
            .coords
            .iter()
            .zip(&other.coords)
            .fold(0.0, |m, (a, b)| m.max((a.x - b.x).abs()).max((a.y - b.y).abs())))
    }

    fn check_same_size(&self, other: &WarpField) -> Result<(), FieldError> {
        if (self.height, self.width) != (other.height, other.width) {
            return Err(FieldError::SizeMismatch {
                expected: (self.height, self.width),
                found: (other.height, other.width),
            });
        }
        Ok(())
    }

    /// Writes the TPSF binary form: magic, version, height, width, then
    /// `H * W * 2` little-endian `f32` in row-major `(x, y)` order.
    pub fn write_tpsf<W: Write>(&self, mut out: W) -> Result<(), FieldError> {
        let mut buf = Vec::with_capacity(16 + self.coords.len() * 8);
        buf.extend_from_slice(TPSF_MAGIC);
        buf.extend_from_slice(&TPSF_VERSION.to_le_bytes());
        buf.extend_from_slice(&(self.height as u32).to_le_bytes());
        buf.extend_from_slice(&(self.width as u32).to_le_bytes());
        for p in &self.coords {
            buf.extend_from_slice(&(p.x as f32).to_le_bytes());
            buf.extend_from_slice(&(p.y as f32).to_le_bytes());
        }
        out.write_all(&buf)?;
        Ok(())
    }

    pub fn read_tpsf<R: Read>(mut input: R) -> Result<Self, FieldError> {
        let mut header = [0u8; 16];
        input.read_exact(&mut header)?;
        if &header[..4] != TPSF_MAGIC {
            return Err(FieldError::BadMagic);
        }
        let word = |i: usize| u32::from_le_bytes(header[i..i + 4].try_into().unwrap());
        let version = word(4);
        if version != TPSF_VERSION {
            return Err(FieldError::BadVersion(version));
        }
        let (height, width) = (word(8) as usize, word(12) as usize);
        check_dims(height, width)?;
        let mut body = vec![0u8; height * width * 8];
        input.read_exact(&mut body)?;
        let coords = body
            .chunks_exact(8)
            .map(|c| {
                let x = f32::from_le_bytes(c[..4].try_into().unwrap());
                let y = f32::from_le_bytes(c[4..].try_into().unwrap());
                Point::new(f64::from(x), f64::from(y))
            })
            .collect();
        WarpField::from_coords(height, width, coords)
    }
}

/// The field that samples every pixel at its own center.
pub fn identity_field(height: usize, width: usize) -> Result<WarpField, FieldError> {
    check_dims(height, width)?;
    let coords = (0..height * width)
        .map(|i| pixel_center(i / width, i % width, height, width))
        .collect();
    Ok(WarpField {
        height,
        width,
        coords,
    })
}

/// Evaluates `t` at every pixel center. Rows are filled in parallel; each
/// entry is computed by [`TpsTransform::eval`], so results do not depend on
/// the thread count.
pub fn rasterize_group_field(
    t: &TpsTransform,
    height: usize,
    width: usize,
) -> Result<WarpField, FieldError> {
    check_dims(height, width)?;
    let mut coords = vec![Point::ORIGIN; height * width];
    coords
        .par_chunks_mut(width)
        .enumerate()
        .for_each(|(r, row)| {
            for (c, out) in row.iter_mut().enumerate() {
                *out = t.eval(pixel_center(r, c, height, width));
            }
        });
    if !coords.iter().all(|p| p.is_finite()) {
        return Err(FieldError::NonFinite);
    }
    Ok(WarpField {
        height,
        width,
        coords,
    })
}

/// Merges per-group fields into one.
///
/// Each output pixel `p` is the convex combination `Σ_k ω_k f_k(p)` with
/// `ω_k ∝ 1 / (d_k(p)² + epsilon)`, where `d_k(p)` is the normalized distance
/// from `p` to the nearest landmark of group `k`. `groups` holds the
/// target-side landmarks in normalized coordinates, in the same order as
/// `fields`. Terms are summed in group order.
pub fn blend_group_fields(
    fields: &[WarpField],
    groups: &[Vec<Point>],
    epsilon: f64,
) -> Result<WarpField, FieldError> {
    let first = fields.first().ok_or(FieldError::Empty)?;
    if fields.len() != groups.len() {
        return Err(FieldError::GroupCountMismatch {
            fields: fields.len(),
            groups: groups.len(),
        });
    }
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(FieldError::BadEpsilon(epsilon));
    }
    for f in &fields[1..] {
        first.check_same_size(f)?;
    }
    if let Some(k) = groups.iter().position(|g| g.is_empty()) {
        return Err(FieldError::EmptyGroup(k));
    }
    if fields.len() == 1 {
        return Ok(first.clone());
    }

    let (height, width) = (first.height, first.width);
    let mut coords = vec![Point::ORIGIN; height * width];
    coords
        .par_chunks_mut(width)
        .enumerate()
        .for_each(|(r, row)| {
            let mut weights = vec![0.0; groups.len()];
            for (c, out) in row.iter_mut().enumerate() {
                let p = pixel_center(r, c, height, width);
                let mut total = 0.0;
                for (w, group) in weights.iter_mut().zip(groups) {
                    let nearest = group
                        .iter()
                        .map(|q| q.sqr_dist(p))
                        .fold(f64::INFINITY, f64::min);
                    *w = 1.0 / (nearest + epsilon);
                    total += *w;
                }
                let idx = r * width + c;
                let mut acc = Point::ORIGIN;
                for (w, f) in weights.iter().zip(fields) {
                    acc = acc + (w / total) * f.coords[idx];
                }
                *out = acc;
            }
        });
    Ok(WarpField {
        height,
        width,
        coords,
    })
}

/// Bilinearly resamples a field's coordinates onto an `height x width` grid
/// covering the same normalized extent. Border pixels are linearly
/// extrapolated from the two outermost samples rather than clamped.
pub fn upsample_field(
    field: &WarpField,
    height: usize,
    width: usize,
) -> Result<WarpField, FieldError> {
    check_dims(height, width)?;
    let axis = |dst: usize, src: usize| -> Vec<(usize, usize, f64)> {
        (0..dst)
            .map(|i| {
                if src == 1 {
                    return (0, 0, 0.0);
                }
                let s = (i as f64 + 0.5) * src as f64 / dst as f64 - 0.5;
                let i0 = (s.floor().max(0.0) as usize).min(src - 2);
                (i0, i0 + 1, s - i0 as f64)
            })
            .collect()
    };
    let cols = axis(width, field.width);
    let rows = axis(height, field.height);
    let mut coords = Vec::with_capacity(height * width);
    for &(r0, r1, ty) in &rows {
        for &(c0, c1, tx) in &cols {
            let top = lerp(field.at(r0, c0), field.at(r0, c1), tx);
            let bottom = lerp(field.at(r1, c0), field.at(r1, c1), tx);
            coords.push(lerp(top, bottom, ty));
        }
    }
    Ok(WarpField {
        height,
        width,
        coords,
    })
}

#[inline]
fn lerp(a: Point, b: Point, t: f64) -> Point {
    Point::new(a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t)
}
