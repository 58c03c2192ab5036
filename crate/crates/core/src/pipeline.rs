//! Portrait/style alignment: landmark sets in, warp fields and aligned image
//! pairs out.
//!
//! Warps are backward maps. The spline for a `from -> to` warp is solved with
//! the `to` landmarks as constraint points and the `from` landmarks as
//! values, so each output pixel knows where to sample the `from` image.

use thiserror::Error;

use crate::feature_map::FeatureMap;
use crate::field::{
    blend_group_fields, identity_field, rasterize_group_field, FieldError, WarpField,
    DEFAULT_BLEND_EPSILON,
};
use crate::landmarks::{downscale_landmarks, LandmarkError, LandmarkSet};
use crate::point::Point;
use crate::sampler::{warp_image, BorderMode};
use crate::tps::{default_regularization, solve_tps, TpsError, TpsTransform};

/// Pyramid depth used when callers do not choose one (256 down to 32).
pub const DEFAULT_SCALES: usize = 4;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("landmark sets are incompatible (group names, order or group size differ)")]
    Incompatible,
    #[error("{what} is {found:?} but its landmarks describe a {expected:?} image")]
    DimensionMismatch {
        what: &'static str,
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("feature maps in a pairing differ in shape: {a:?} vs {b:?}")]
    PairShape {
        a: (usize, usize, usize),
        b: (usize, usize, usize),
    },
    #[error("scales must be at least 1")]
    NoScales,
    #[error("{height}x{width} is not divisible by {divisor} for {scales} scales")]
    Indivisible {
        height: usize,
        width: usize,
        divisor: usize,
        scales: usize,
    },
    #[error("group '{group}': {source}")]
    Tps {
        group: String,
        #[source]
        source: TpsError,
    },
    #[error(transparent)]
    Landmark(#[from] LandmarkError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// How the `K` landmark groups turn into one warp.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum WarpMode {
    /// One spline per group, blended by inverse squared distance to each
    /// group's landmarks.
    #[default]
    Grouped,
    /// A single spline through all `K * N` landmarks.
    Global,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Regularization {
    /// `1e-8` times the squared mean pairwise landmark distance.
    Auto,
    Fixed(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WarpConfig {
    pub mode: WarpMode,
    pub regularization: Regularization,
    pub blend_epsilon: f64,
    pub border: BorderMode,
}

impl Default for WarpConfig {
    fn default() -> Self {
        WarpConfig {
            mode: WarpMode::Grouped,
            regularization: Regularization::Auto,
            blend_epsilon: DEFAULT_BLEND_EPSILON,
            border: BorderMode::Clamp,
        }
    }
}

fn solve_group(
    name: &str,
    targets: &[Point],
    sources: &[Point],
    regularization: Regularization,
) -> Result<TpsTransform, PipelineError> {
    let lambda = match regularization {
        Regularization::Auto => default_regularization(targets),
        Regularization::Fixed(v) => v,
    };
    solve_tps(targets, sources, lambda).map_err(|source| PipelineError::Tps {
        group: name.to_string(),
        source,
    })
}

/// Solves the splines a `from -> to` warp is made of, in normalized
/// coordinates: one per group in grouped mode, a single one in global mode.
pub fn solve_warp(
    from: &LandmarkSet,
    to: &LandmarkSet,
    config: &WarpConfig,
) -> Result<Vec<(String, TpsTransform)>, PipelineError> {
    if !from.is_compatible(to) {
        return Err(PipelineError::Incompatible);
    }
    let sources = from.normalized_groups();
    let targets = to.normalized_groups();
    match config.mode {
        WarpMode::Global => {
            let all_t: Vec<Point> = targets.concat();
            let all_s: Vec<Point> = sources.concat();
            let t = solve_group("*", &all_t, &all_s, config.regularization)?;
            Ok(vec![("*".to_string(), t)])
        }
        WarpMode::Grouped => to
            .groups()
            .iter()
            .zip(targets.iter().zip(&sources))
            .map(|(g, (t, s))| Ok((g.name.clone(), solve_group(&g.name, t, s, config.regularization)?)))
            .collect(),
    }
}

/// Builds the field that warps an image carrying the `from` landmarks into
/// one carrying the `to` landmarks, at `height x width`.
///
/// Identical landmark sets produce the exact identity field.
pub fn build_warp(
    from: &LandmarkSet,
    to: &LandmarkSet,
    height: usize,
    width: usize,
    config: &WarpConfig,
) -> Result<WarpField, PipelineError> {
    if !from.is_compatible(to) {
        return Err(PipelineError::Incompatible);
    }
    let targets = to.normalized_groups();
    if from.normalized_groups() == targets {
        return Ok(identity_field(height, width)?);
    }
    let splines = solve_warp(from, to, config)?;
    let fields = splines
        .iter()
        .map(|(_, t)| rasterize_group_field(t, height, width))
        .collect::<Result<Vec<_>, _>>()?;
    match config.mode {
        WarpMode::Global => Ok(fields.into_iter().next().expect("one global spline")),
        WarpMode::Grouped => Ok(blend_group_fields(&fields, &targets, config.blend_epsilon)?),
    }
}

/// An image warped onto a reference image's landmark geometry.
#[derive(Clone, Debug)]
pub struct AlignedPair {
    reference_image: FeatureMap,
    warped_image: FeatureMap,
    shared_landmarks: LandmarkSet,
    source_landmarks: LandmarkSet,
    field: WarpField,
}

impl AlignedPair {
    pub fn reference_image(&self) -> &FeatureMap {
        &self.reference_image
    }

    pub fn warped_image(&self) -> &FeatureMap {
        &self.warped_image
    }

    /// Landmarks of the reference, now also carried by the warped image.
    pub fn shared_landmarks(&self) -> &LandmarkSet {
        &self.shared_landmarks
    }

    /// Landmarks of the image before warping.
    pub fn source_landmarks(&self) -> &LandmarkSet {
        &self.source_landmarks
    }

    pub fn field(&self) -> &WarpField {
        &self.field
    }
}

fn check_image(
    what: &'static str,
    image: &FeatureMap,
    landmarks: &LandmarkSet,
) -> Result<(), PipelineError> {
    let expected = (landmarks.height() as usize, landmarks.width() as usize);
    let found = (image.height(), image.width());
    if expected != found {
        return Err(PipelineError::DimensionMismatch {
            what,
            expected,
            found,
        });
    }
    Ok(())
}

/// Warps `moving` so that it carries `reference_lm`, producing an image the
/// size of `reference`.
pub fn align_pair(
    reference: &FeatureMap,
    reference_lm: &LandmarkSet,
    moving: &FeatureMap,
    moving_lm: &LandmarkSet,
    config: &WarpConfig,
) -> Result<AlignedPair, PipelineError> {
    check_image("reference image", reference, reference_lm)?;
    check_image("moving image", moving, moving_lm)?;
    let field = build_warp(
        moving_lm,
        reference_lm,
        reference.height(),
        reference.width(),
        config,
    )?;
    let warped_image = warp_image(moving, &field, config.border);
    Ok(AlignedPair {
        reference_image: reference.clone(),
        warped_image,
        shared_landmarks: reference_lm.clone(),
        source_landmarks: moving_lm.clone(),
        field,
    })
}

/// Warps the style image onto the portrait's landmarks.
pub fn align_style_to_portrait(
    portrait: &FeatureMap,
    portrait_lm: &LandmarkSet,
    style: &FeatureMap,
    style_lm: &LandmarkSet,
    config: &WarpConfig,
) -> Result<AlignedPair, PipelineError> {
    align_pair(portrait, portrait_lm, style, style_lm, config)
}

/// Fields for a resolution pyramid `(H, W), (H/2, W/2), ...`, each built from
/// landmarks downscaled to that level.
pub fn multiscale_fields(
    from: &LandmarkSet,
    to: &LandmarkSet,
    base_height: usize,
    base_width: usize,
    scales: usize,
    config: &WarpConfig,
) -> Result<Vec<WarpField>, PipelineError> {
    if scales == 0 {
        return Err(PipelineError::NoScales);
    }
    let divisor = 1usize << (scales - 1);
    if !base_height.is_multiple_of(divisor) || !base_width.is_multiple_of(divisor) {
        return Err(PipelineError::Indivisible {
            height: base_height,
            width: base_width,
            divisor,
            scales,
        });
    }
    (0..scales)
        .map(|k| {
            let factor = 1u32 << k;
            let from_k = downscale_landmarks(from, factor)?;
            let to_k = downscale_landmarks(to, factor)?;
            build_warp(
                &from_k,
                &to_k,
                base_height >> k,
                base_width >> k,
                config,
            )
        })
        .collect()
}

/// The two landmark-identical pairs compared by the deformation-invariance
/// term: `(stylized, portrait)` and `(stylized_warped, portrait_warped)`.
pub fn branch_pairings<'a>(
    portrait: &'a FeatureMap,
    stylized: &'a FeatureMap,
    stylized_warped: &'a FeatureMap,
    portrait_warped: &'a FeatureMap,
) -> Result<[(&'a FeatureMap, &'a FeatureMap); 2], PipelineError> {
    for (a, b) in [(stylized, portrait), (stylized_warped, portrait_warped)] {
        if a.shape() != b.shape() {
            return Err(PipelineError::PairShape {
                a: a.shape(),
                b: b.shape(),
            });
        }
    }
    Ok([(stylized, portrait), (stylized_warped, portrait_warped)])
}
