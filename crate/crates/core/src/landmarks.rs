//! Facial landmark sets: loading, validation, normalization and rescaling.
//!
//! Landmarks are stored in pixel coordinates of the image they were detected
//! on. The warping code works in normalized coordinates where the outer edges
//! of the pixel grid map to `-1` and `1`:
//!
//! ```text
//! x_norm = 2 (x + 0.5) / W - 1
//! ```
//!
//! so pixel centers fall strictly inside `(-1, 1)` and the mapping is
//! independent of resolution.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::point::Point;

/// Points per group when a file does not say otherwise.
pub const DEFAULT_POINTS_PER_GROUP: usize = 10;

const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum LandmarkError {
    #[error("failed to read landmark file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to parse landmark JSON: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unsupported landmark file version {0} (expected 1)")]
    Version(u32),
    #[error("image dimensions must be at least 1x1, got {width}x{height}")]
    ZeroSized { width: u32, height: u32 },
    #[error("points per group must be at least 1")]
    ZeroGroupSize,
    #[error("landmark set has no groups")]
    NoGroups,
    #[error("group '{name}' (index {index}) has {found} points, expected {expected}")]
    WrongGroupSize {
        name: String,
        index: usize,
        found: usize,
        expected: usize,
    },
    #[error("group '{name}' (index {index}) point {point}: ({x}, {y}) lies outside the {width}x{height} image")]
    OutOfBounds {
        name: String,
        index: usize,
        point: usize,
        x: f64,
        y: f64,
        width: u32,
        height: u32,
    },
    #[error("group '{name}' (index {index}) point {point} is not finite")]
    NonFinite {
        name: String,
        index: usize,
        point: usize,
    },
    #[error("duplicate group name '{name}' at index {index}")]
    DuplicateName { name: String, index: usize },
    #[error("downscale factor must be at least 1")]
    ZeroFactor,
    #[error("downscaling {width}x{height} by {factor} leaves an image smaller than 2x2")]
    TooSmall { width: u32, height: u32, factor: u32 },
}

/// One named block of corresponding landmarks.
#[derive(Clone, Debug, PartialEq)]
pub struct LandmarkGroup {
    pub name: String,
    pub points: Vec<Point>,
}

/// `K` named groups of `N` landmarks on a `width x height` image.
#[derive(Clone, Debug, PartialEq)]
pub struct LandmarkSet {
    width: u32,
    height: u32,
    points_per_group: usize,
    groups: Vec<LandmarkGroup>,
}

#[derive(Serialize, Deserialize)]
struct LandmarkFile {
    version: u32,
    width: u32,
    height: u32,
    #[serde(default = "default_group_size")]
    n_per_group: usize,
    groups: Vec<GroupRecord>,
}

#[derive(Serialize, Deserialize)]
struct GroupRecord {
    name: String,
    points: Vec<[f64; 2]>,
}

fn default_group_size() -> usize {
    DEFAULT_POINTS_PER_GROUP
}

/// Allowed coordinate range, as `[lo, hi)` per axis relative to the image size.
#[derive(Clone, Copy)]
enum Extent {
    /// `x in [0, W)`, `y in [0, H)`.
    Strict,
    /// `x in [-0.5, W + 0.5)`: the range reachable by rescaling a strict set.
    Rescaled,
}

impl LandmarkSet {
    /// Builds a validated set. Every coordinate must satisfy `0 <= x < width`
    /// and `0 <= y < height`.
    pub fn new(
        width: u32,
        height: u32,
        points_per_group: usize,
        groups: Vec<LandmarkGroup>,
    ) -> Result<Self, LandmarkError> {
        Self::validated(width, height, points_per_group, groups, Extent::Strict)
    }

    fn validated(
        width: u32,
        height: u32,
        points_per_group: usize,
        groups: Vec<LandmarkGroup>,
        extent: Extent,
    ) -> Result<Self, LandmarkError> {
        if width == 0 || height == 0 {
            return Err(LandmarkError::ZeroSized { width, height });
        }
        if points_per_group == 0 {
            return Err(LandmarkError::ZeroGroupSize);
        }
        if groups.is_empty() {
            return Err(LandmarkError::NoGroups);
        }
        let (lo, hi_pad) = match extent {
            Extent::Strict => (0.0, 0.0),
            Extent::Rescaled => (-0.5, 0.5),
        };
        let (w, h) = (f64::from(width), f64::from(height));
        let mut names = HashSet::new();
        for (index, group) in groups.iter().enumerate() {
            if !names.insert(group.name.as_str()) {
                return Err(LandmarkError::DuplicateName {
                    name: group.name.clone(),
                    index,
                });
            }
            if group.points.len() != points_per_group {
                return Err(LandmarkError::WrongGroupSize {
                    name: group.name.clone(),
                    index,
                    found: group.points.len(),
                    expected: points_per_group,
                });
            }
            for (point, p) in group.points.iter().enumerate() {
                if !p.is_finite() {
                    return Err(LandmarkError::NonFinite {
                        name: group.name.clone(),
                        index,
                        point,
                    });
                }
                let inside = p.x >= lo && p.x < w + hi_pad && p.y >= lo && p.y < h + hi_pad;
                if !inside {
                    return Err(LandmarkError::OutOfBounds {
                        name: group.name.clone(),
                        index,
                        point,
                        x: p.x,
                        y: p.y,
                        width,
                        height,
                    });
                }
            }
        }
        Ok(LandmarkSet {
            width,
            height,
            points_per_group,
            groups,
        })
    }

    pub fn from_json_str(text: &str) -> Result<Self, LandmarkError> {
        let file: LandmarkFile = serde_json::from_str(text)?;
        if file.version != FORMAT_VERSION {
            return Err(LandmarkError::Version(file.version));
        }
        let groups = file
            .groups
            .into_iter()
            .map(|g| LandmarkGroup {
                name: g.name,
                points: g.points.into_iter().map(Point::from).collect(),
            })
            .collect();
        LandmarkSet::new(file.width, file.height, file.n_per_group, groups)
    }

    pub fn to_json_string(&self) -> String {
        let file = LandmarkFile {
            version: FORMAT_VERSION,
            width: self.width,
            height: self.height,
            n_per_group: self.points_per_group,
            groups: self
                .groups
                .iter()
                .map(|g| GroupRecord {
                    name: g.name.clone(),
                    points: g.points.iter().map(|&p| p.into()).collect(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("landmark sets always serialize")
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    /// `N`, the number of points in every group.
    pub fn points_per_group(&self) -> usize {
        self.points_per_group
    }

    /// `K`, the number of groups.
    pub fn num_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn groups(&self) -> &[LandmarkGroup] {
        &self.groups
    }

    /// All points, group by group.
    pub fn all_points(&self) -> impl Iterator<Item = Point> + '_ {
        self.groups.iter().flat_map(|g| g.points.iter().copied())
    }

    /// Same group names in the same order with the same group size.
    pub fn is_compatible(&self, other: &LandmarkSet) -> bool {
        self.points_per_group == other.points_per_group
            && self.groups.len() == other.groups.len()
            && self
                .groups
                .iter()
                .zip(&other.groups)
                .all(|(a, b)| a.name == b.name)
    }

    /// Each group's points in normalized coordinates of this set's image.
    pub fn normalized_groups(&self) -> Vec<Vec<Point>> {
        self.groups
            .iter()
            .map(|g| {
                g.points
                    .iter()
                    .map(|&p| normalize_point(p, self.width, self.height))
                    .collect()
            })
            .collect()
    }
}

/// Reads and validates a landmark JSON file.
pub fn load_landmarks(path: impl AsRef<Path>) -> Result<LandmarkSet, LandmarkError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| LandmarkError::Io {
        path: path.display().to_string(),
        source,
    })?;
    LandmarkSet::from_json_str(&text)
}

#[inline]
pub(crate) fn normalize_coord(v: f64, size: u32) -> f64 {
    2.0 * (v + 0.5) / f64::from(size) - 1.0
}

#[inline]
pub(crate) fn denormalize_coord(v: f64, size: u32) -> f64 {
    (v + 1.0) * f64::from(size) / 2.0 - 0.5
}

#[inline]
pub(crate) fn normalize_point(p: Point, width: u32, height: u32) -> Point {
    Point::new(normalize_coord(p.x, width), normalize_coord(p.y, height))
}

/// Maps pixel coordinates to normalized coordinates.
pub fn normalize_points(
    points: &[Point],
    width: u32,
    height: u32,
) -> Result<Vec<Point>, LandmarkError> {
    if width == 0 || height == 0 {
        return Err(LandmarkError::ZeroSized { width, height });
    }
    Ok(points
        .iter()
        .map(|&p| normalize_point(p, width, height))
        .collect())
}

/// Inverse of [`normalize_points`].
pub fn denormalize_points(
    points: &[Point],
    width: u32,
    height: u32,
) -> Result<Vec<Point>, LandmarkError> {
    if width == 0 || height == 0 {
        return Err(LandmarkError::ZeroSized { width, height });
    }
    Ok(points
        .iter()
        .map(|&p| Point::new(denormalize_coord(p.x, width), denormalize_coord(p.y, height)))
        .collect())
}

/// Rescales a set to an image `factor` times smaller, keeping pixel centers
/// aligned: `x' = (x + 0.5) / factor - 0.5`.
///
/// When the image dimensions are divisible by `factor` the normalized
/// coordinates of every point are unchanged. Rescaled points may sit up to
/// half a pixel outside `[0, W)`.
pub fn downscale_landmarks(set: &LandmarkSet, factor: u32) -> Result<LandmarkSet, LandmarkError> {
    if factor == 0 {
        return Err(LandmarkError::ZeroFactor);
    }
    if factor == 1 {
        return Ok(set.clone());
    }
    let (width, height) = (set.width / factor, set.height / factor);
    if width < 2 || height < 2 {
        return Err(LandmarkError::TooSmall {
            width: set.width,
            height: set.height,
            factor,
        });
    }
    let f = f64::from(factor);
    let groups = set
        .groups
        .iter()
        .map(|g| LandmarkGroup {
            name: g.name.clone(),
            points: g
                .points
                .iter()
                .map(|p| Point::new((p.x + 0.5) / f - 0.5, (p.y + 0.5) / f - 0.5))
                .collect(),
        })
        .collect();
    LandmarkSet::validated(width, height, set.points_per_group, groups, Extent::Rescaled)
}
