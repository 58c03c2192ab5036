use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FeatureMapError {
    #[error("feature map dimensions must be at least 1, got {channels}x{height}x{width}")]
    ZeroDimension {
        channels: usize,
        height: usize,
        width: usize,
    },
    #[error("expected {expected} values for the given shape, got {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("feature map value {0} is not finite")]
    NonFinite(usize),
}

/// A `C x H x W` real tensor in channel-major, row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMap {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl FeatureMap {
    pub fn new(
        channels: usize,
        height: usize,
        width: usize,
        data: Vec<f64>,
    ) -> Result<Self, FeatureMapError> {
        if channels == 0 || height == 0 || width == 0 {
            return Err(FeatureMapError::ZeroDimension {
                channels,
                height,
                width,
            });
        }
        let expected = channels * height * width;
        if data.len() != expected {
            return Err(FeatureMapError::LengthMismatch {
                expected,
                found: data.len(),
            });
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(FeatureMapError::NonFinite(i));
        }
        Ok(FeatureMap {
            channels,
            height,
            width,
            data,
        })
    }

    pub fn zeros(channels: usize, height: usize, width: usize) -> Result<Self, FeatureMapError> {
        Self::new(channels, height, width, vec![0.0; channels * height * width])
    }

    /// Builds a map from `f(channel, row, col)`.
    pub fn from_fn(
        channels: usize,
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self, FeatureMapError> {
        let mut data = Vec::with_capacity(channels * height * width);
        for c in 0..channels {
            for r in 0..height {
                for x in 0..width {
                    data.push(f(c, r, x));
                }
            }
        }
        Self::new(channels, height, width, data)
    }

    pub(crate) fn from_raw(channels: usize, height: usize, width: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), channels * height * width);
        FeatureMap {
            channels,
            height,
            width,
            data,
        }
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// `(channels, height, width)`.
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, c: usize, r: usize, x: usize) -> f64 {
        self.data[(c * self.height + r) * self.width + x]
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        let plane = self.height * self.width;
        &self.data[c * plane..(c + 1) * plane]
    }

    /// The feature vector across channels at one pixel.
    pub fn pixel_vector(&self, r: usize, x: usize) -> Vec<f64> {
        (0..self.channels).map(|c| self.get(c, r, x)).collect()
    }

    /// Applies `f` to every value.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self, FeatureMapError> {
        Self::new(
            self.channels,
            self.height,
            self.width,
            self.data.iter().map(|&v| f(v)).collect(),
        )
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    /// Peak signal-to-noise ratio in dB over pixels at least `margin` away
    /// from every border, for values with the given dynamic range `peak`.
    /// Returns `None` on shape mismatch or an empty interior.
    pub fn psnr_interior(&self, other: &FeatureMap, margin: usize, peak: f64) -> Option<f64> {
        if self.shape() != other.shape()
            || 2 * margin >= self.height
            || 2 * margin >= self.width
        {
            return None;
        }
        let mut sum = 0.0;
        let mut count = 0usize;
        for c in 0..self.channels {
            for r in margin..self.height - margin {
                for x in margin..self.width - margin {
                    let d = self.get(c, r, x) - other.get(c, r, x);
                    sum += d * d;
                    count += 1;
                }
            }
        }
        let mse = sum / count as f64;
        Some(if mse == 0.0 {
            f64::INFINITY
        } else {
            10.0 * (peak * peak / mse).log10()
        })
    }

    pub fn mean_abs_diff(&self, other: &FeatureMap) -> Option<f64> {
        if self.shape() != other.shape() {
            return None;
        }
        let total: f64 = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .sum();
        Some(total / self.data.len() as f64)
    }
}
