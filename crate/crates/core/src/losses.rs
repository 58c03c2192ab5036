//! Training objectives as plain numerical kernels.
//!
//! Nothing here runs a network: discriminator scores, discriminator
//! activations and perceptual feature stacks are supplied by the caller.

use thiserror::Error;

use crate::feature_map::FeatureMap;

/// Scores are clamped to `[SCORE_EPS, 1 - SCORE_EPS]` before taking logs.
pub const SCORE_EPS: f64 = 1e-7;
/// Default InfoNCE temperature.
pub const DEFAULT_TAU: f64 = 0.07;
/// Default half-size of the self-similarity window (9x9, 81 entries).
pub const DEFAULT_WINDOW_RADIUS: usize = 4;
/// Default number of query locations per side of the query grid (16x16 = 256).
pub const DEFAULT_QUERIES_PER_SIDE: usize = 16;

#[derive(Debug, Error, PartialEq)]
pub enum LossError {
    #[error("score list '{0}' is empty")]
    EmptyScores(&'static str),
    #[error("score {index} in '{list}' is not finite")]
    NonFiniteScore { list: &'static str, index: usize },
    #[error("shape mismatch: {a:?} vs {b:?}")]
    ShapeMismatch {
        a: (usize, usize, usize),
        b: (usize, usize, usize),
    },
    #[error("query ({row}, {col}) with window radius {radius} leaves the {height}x{width} map")]
    QueryOutOfBounds {
        row: usize,
        col: usize,
        radius: usize,
        height: usize,
        width: usize,
    },
    #[error("similarity map sets differ in query locations or window radius")]
    SetMismatch,
    #[error("need at least 2 queries, got {0}")]
    TooFewQueries(usize),
    #[error("temperature must be positive and finite, got {0}")]
    BadTemperature(f64),
    #[error("layer count mismatch: {a} vs {b} (weights: {weights})")]
    LayerCountMismatch { a: usize, b: usize, weights: usize },
    #[error("count mismatch: {a} vs {b}")]
    CountMismatch { a: usize, b: usize },
    #[error("embedding {index} dimension mismatch: {a} vs {b}")]
    DimensionMismatch { index: usize, a: usize, b: usize },
    #[error("embedding {index} in set '{set}' is a zero vector")]
    ZeroVector { set: &'static str, index: usize },
    #[error("loss weights must be finite and non-negative")]
    BadWeights,
}

/// Cosine similarity computed as `a·b / sqrt(|a|² |b|²)`; zero if either
/// vector is zero.
#[inline]
fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / (na * nb).sqrt()).clamp(-1.0, 1.0)
}

fn clamped_logs(
    scores: &[f64],
    list: &'static str,
    f: impl Fn(f64) -> f64,
) -> Result<f64, LossError> {
    if scores.is_empty() {
        return Err(LossError::EmptyScores(list));
    }
    let mut total = 0.0;
    for (index, &s) in scores.iter().enumerate() {
        if !s.is_finite() {
            return Err(LossError::NonFiniteScore { list, index });
        }
        total += f(s.clamp(SCORE_EPS, 1.0 - SCORE_EPS)).ln();
    }
    Ok(total / scores.len() as f64)
}

/// Discriminator side of the adversarial objective:
/// `-(mean log D(real) + mean log(1 - D(fake)))`.
pub fn gan_loss_discriminator(real_scores: &[f64], fake_scores: &[f64]) -> Result<f64, LossError> {
    let real = clamped_logs(real_scores, "real", |s| s)?;
    let fake = clamped_logs(fake_scores, "fake", |s| 1.0 - s)?;
    Ok(-(real + fake))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum GeneratorObjective {
    /// `mean log(1 - D(fake))`, minimized by the generator.
    #[default]
    Minimax,
    /// `-mean log D(fake)`.
    NonSaturating,
}

pub fn gan_loss_generator(
    fake_scores: &[f64],
    objective: GeneratorObjective,
) -> Result<f64, LossError> {
    match objective {
        GeneratorObjective::Minimax => clamped_logs(fake_scores, "fake", |s| 1.0 - s),
        GeneratorObjective::NonSaturating => Ok(-clamped_logs(fake_scores, "fake", |s| s)?),
    }
}

/// How the channel axis is collapsed before spatial matching.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ChannelReduction {
    #[default]
    Mean,
    Max,
}

fn reduce_channels(map: &FeatureMap, reduction: ChannelReduction) -> Vec<f64> {
    let (channels, h, w) = map.shape();
    let plane = h * w;
    let mut out = match reduction {
        ChannelReduction::Mean => vec![0.0; plane],
        ChannelReduction::Max => vec![f64::NEG_INFINITY; plane],
    };
    for c in 0..channels {
        for (o, &v) in out.iter_mut().zip(map.channel(c)) {
            match reduction {
                ChannelReduction::Mean => *o += v,
                ChannelReduction::Max => *o = o.max(v),
            }
        }
    }
    if reduction == ChannelReduction::Mean {
        let inv = 1.0 / channels as f64;
        out.iter_mut().for_each(|o| *o *= inv);
    }
    out
}

fn check_shapes(a: &FeatureMap, b: &FeatureMap) -> Result<(), LossError> {
    if a.shape() != b.shape() {
        return Err(LossError::ShapeMismatch {
            a: a.shape(),
            b: b.shape(),
        });
    }
    Ok(())
}

/// Spatial feature matching with channel-mean reduction.
pub fn feature_matching_loss(real: &FeatureMap, fake: &FeatureMap) -> Result<f64, LossError> {
    feature_matching_loss_with(real, fake, ChannelReduction::Mean)
}

/// Collapses the channel axis of both maps and returns the mean absolute
/// difference of the resulting `H x W` maps.
pub fn feature_matching_loss_with(
    real: &FeatureMap,
    fake: &FeatureMap,
    reduction: ChannelReduction,
) -> Result<f64, LossError> {
    check_shapes(real, fake)?;
    let a = reduce_channels(real, reduction);
    let b = reduce_channels(fake, reduction);
    let total: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum();
    Ok(total / a.len() as f64)
}

/// Local self-similarity maps at a set of query locations.
#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityMapSet {
    pub query_locations: Vec<(usize, usize)>,
    /// One `(2r + 1)²` vector per query, window in row-major order.
    pub maps: Vec<Vec<f64>>,
    pub window_radius: usize,
}

/// A `per_side x per_side` grid of query locations spread evenly over the
/// interior of an `height x width` map, keeping `radius` pixels clear of
/// every border.
pub fn uniform_query_grid(
    height: usize,
    width: usize,
    radius: usize,
    per_side: usize,
) -> Vec<(usize, usize)> {
    if per_side == 0 || height <= 2 * radius || width <= 2 * radius {
        return Vec::new();
    }
    let spread = |size: usize| -> Vec<usize> {
        let (lo, hi) = (radius, size - 1 - radius);
        if per_side == 1 {
            return vec![(lo + hi) / 2];
        }
        let mut v: Vec<usize> = (0..per_side)
            .map(|i| lo + ((hi - lo) * i + (per_side - 1) / 2) / (per_side - 1))
            .collect();
        v.dedup();
        v
    };
    let rows = spread(height);
    let cols = spread(width);
    rows.iter()
        .flat_map(|&r| cols.iter().map(move |&c| (r, c)))
        .collect()
}

/// For each query, the cosine similarity between its feature vector and
/// every feature vector in the surrounding `(2r + 1) x (2r + 1)` window.
pub fn spatial_correlative_maps(
    features: &FeatureMap,
    query_locations: &[(usize, usize)],
    window_radius: usize,
) -> Result<SimilarityMapSet, LossError> {
    let (_, height, width) = features.shape();
    let r = window_radius;
    for &(row, col) in query_locations {
        if row < r || col < r || row + r >= height || col + r >= width {
            return Err(LossError::QueryOutOfBounds {
                row,
                col,
                radius: r,
                height,
                width,
            });
        }
    }
    let maps = query_locations
        .iter()
        .map(|&(row, col)| {
            let center = features.pixel_vector(row, col);
            let mut map = Vec::with_capacity((2 * r + 1) * (2 * r + 1));
            for nr in row - r..=row + r {
                for nc in col - r..=col + r {
                    map.push(cosine(&center, &features.pixel_vector(nr, nc)));
                }
            }
            map
        })
        .collect();
    Ok(SimilarityMapSet {
        query_locations: query_locations.to_vec(),
        maps,
        window_radius,
    })
}

/// Contrastive loss between two sets of self-similarity maps.
///
/// For query `q` the positive is `maps_b[q]` and the negatives are all other
/// maps of `maps_b`; similarities are cosines between maps. Returns the mean
/// over queries of `logsumexp(s / tau) - s_q / tau`.
pub fn spatial_correlative_loss(
    maps_a: &SimilarityMapSet,
    maps_b: &SimilarityMapSet,
    tau: f64,
) -> Result<f64, LossError> {
    if maps_a.query_locations != maps_b.query_locations
        || maps_a.window_radius != maps_b.window_radius
        || maps_a.maps.len() != maps_b.maps.len()
    {
        return Err(LossError::SetMismatch);
    }
    let q = maps_a.maps.len();
    if q < 2 {
        return Err(LossError::TooFewQueries(q));
    }
    if !(tau.is_finite() && tau > 0.0) {
        return Err(LossError::BadTemperature(tau));
    }
    let mut logits = vec![0.0; q];
    let mut total = 0.0;
    for (i, anchor) in maps_a.maps.iter().enumerate() {
        for (l, candidate) in logits.iter_mut().zip(&maps_b.maps) {
            *l = cosine(anchor, candidate) / tau;
        }
        let peak = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = logits.iter().map(|l| (l - peak).exp()).sum();
        total += peak + sum.ln() - logits[i];
    }
    Ok(total / q as f64)
}

/// `Σ_l weight_l · mean |a_l - b_l|` over two perceptual feature stacks.
/// `None` weights every layer by 1.
pub fn cycle_loss(
    features_a: &[FeatureMap],
    features_b: &[FeatureMap],
    layer_weights: Option<&[f64]>,
) -> Result<f64, LossError> {
    let weights_len = layer_weights.map_or(features_a.len(), <[f64]>::len);
    if features_a.len() != features_b.len() || weights_len != features_a.len() {
        return Err(LossError::LayerCountMismatch {
            a: features_a.len(),
            b: features_b.len(),
            weights: weights_len,
        });
    }
    let mut total = 0.0;
    for (l, (a, b)) in features_a.iter().zip(features_b).enumerate() {
        check_shapes(a, b)?;
        let w = layer_weights.map_or(1.0, |ws| ws[l]);
        total += w * a.mean_abs_diff(b).expect("shapes checked");
    }
    Ok(total)
}

/// Weights of the auxiliary terms in the full objective.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossWeights {
    /// Feature matching.
    pub lambda1: f64,
    /// Spatial-correlative term.
    pub lambda2: f64,
    /// Cycle consistency.
    pub lambda3: f64,
}

impl LossWeights {
    pub fn new(lambda1: f64, lambda2: f64, lambda3: f64) -> Result<Self, LossError> {
        let ok = [lambda1, lambda2, lambda3]
            .iter()
            .all(|v| v.is_finite() && *v >= 0.0);
        if !ok {
            return Err(LossError::BadWeights);
        }
        Ok(LossWeights {
            lambda1,
            lambda2,
            lambda3,
        })
    }
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            lambda1: 1.0,
            lambda2: 1.0,
            lambda3: 10.0,
        }
    }
}

/// `gan + λ1 fm + λ2 sc + λ3 cyc`.
pub fn total_loss(gan: f64, fm: f64, sc: f64, cyc: f64, w: &LossWeights) -> f64 {
    gan + w.lambda1 * fm + w.lambda2 * sc + w.lambda3 * cyc
}

/// Mean of `1 - cos(a_i, b_i)` over paired embeddings.
pub fn embedding_cosine_distance(
    embeddings_a: &[Vec<f64>],
    embeddings_b: &[Vec<f64>],
) -> Result<f64, LossError> {
    if embeddings_a.len() != embeddings_b.len() || embeddings_a.is_empty() {
        return Err(LossError::CountMismatch {
            a: embeddings_a.len(),
            b: embeddings_b.len(),
        });
    }
    let mut total = 0.0;
    for (index, (a, b)) in embeddings_a.iter().zip(embeddings_b).enumerate() {
        if a.len() != b.len() {
            return Err(LossError::DimensionMismatch {
                index,
                a: a.len(),
                b: b.len(),
            });
        }
        if a.iter().all(|&v| v == 0.0) {
            return Err(LossError::ZeroVector { set: "a", index });
        }
        if b.iter().all(|&v| v == 0.0) {
            return Err(LossError::ZeroVector { set: "b", index });
        }
        total += 1.0 - cosine(a, b);
    }
    Ok(total / embeddings_a.len() as f64)
}
