//! Landmark-driven thin-plate-spline alignment.
//!
//! The crate solves thin-plate splines between facial landmark groups,
//! rasterizes them into dense backward-warp fields, resamples feature maps
//! through those fields with exact gradients, and provides the loss kernels
//! used when training geometry-aware portrait stylization models.

pub mod cli;
pub mod feature_map;
pub mod field;
pub mod landmarks;
pub mod losses;
pub mod pipeline;
pub mod point;
pub mod sampler;
pub mod tensor_io;
pub mod tps;

pub use feature_map::FeatureMap;
pub use field::{blend_group_fields, identity_field, rasterize_group_field, upsample_field, WarpField};
pub use landmarks::{downscale_landmarks, load_landmarks, normalize_points, LandmarkGroup, LandmarkSet};
pub use pipeline::{
    align_pair, align_style_to_portrait, branch_pairings, build_warp, multiscale_fields, AlignedPair,
    WarpConfig, WarpMode,
};
pub use point::Point;
pub use sampler::{grid_sample, grid_sample_backward, warp_image, BorderMode, SampleGradients};
pub use tps::{bending_energy, eval_tps, rbf_u, solve_tps, TpsTransform};
