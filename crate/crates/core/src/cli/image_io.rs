//! 8-bit PNG images to and from unit-range feature maps.
//!
//! RGB images become 3-channel maps; images with alpha become 4-channel maps
//! whose alpha is warped like any other channel (no premultiplication).

use std::path::Path;

use image::{ColorType, DynamicImage, ImageFormat};

use crate::feature_map::FeatureMap;

pub fn load_png(path: &Path) -> Result<FeatureMap, String> {
    let img = image::open(path).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(from_dynamic(&img))
}

pub fn from_dynamic(img: &DynamicImage) -> FeatureMap {
    let (width, height) = (img.width() as usize, img.height() as usize);
    let (channels, bytes) = if img.color().has_alpha() {
        (4, img.to_rgba8().into_raw())
    } else {
        (3, img.to_rgb8().into_raw())
    };
    let plane = width * height;
    let mut data = vec![0.0; channels * plane];
    for (i, px) in bytes.chunks_exact(channels).enumerate() {
        for (c, &v) in px.iter().enumerate() {
            data[c * plane + i] = f64::from(v) / 255.0;
        }
    }
    FeatureMap::new(channels, height, width, data).expect("decoded images are non-empty")
}

/// Interleaved 8-bit samples, values clamped to `[0, 1]` and rounded.
pub fn to_bytes(map: &FeatureMap) -> Vec<u8> {
    let (channels, height, width) = map.shape();
    let plane = height * width;
    let data = map.data();
    let mut out = Vec::with_capacity(channels * plane);
    for i in 0..plane {
        for c in 0..channels {
            out.push((data[c * plane + i].clamp(0.0, 1.0) * 255.0).round() as u8);
        }
    }
    out
}

pub fn save_png(map: &FeatureMap, path: &Path) -> Result<(), String> {
    let color = match map.channels() {
        1 => ColorType::L8,
        3 => ColorType::Rgb8,
        4 => ColorType::Rgba8,
        n => return Err(format!("cannot write a {n}-channel image as PNG")),
    };
    image::save_buffer_with_format(
        path,
        &to_bytes(map),
        map.width() as u32,
        map.height() as u32,
        color,
        ImageFormat::Png,
    )
    .map_err(|e| format!("{}: {e}", path.display()))
}
