//! Thin-plate-spline interpolation in the plane.
//!
//! A transform maps a point `p` to
//!
//! ```text
//! F(p) = A [p; 1] + sum_i w_i U(|c_i - p|),    U(r) = r^2 log r^2
//! ```
//!
//! where the centers `c_i` are the constraint points. The coefficients come
//! from the usual `(N + 3) x (N + 3)` saddle-point system
//!
//! ```text
//! [ K + lambda I   P ] [ w ]   [ v ]
//! [ P^T            0 ] [ a ] = [ 0 ]
//! ```
//!
//! with `K_ij = U(|c_i - c_j|)` and `P` rows `(1, x_i, y_i)`, solved once for
//! each output coordinate.

use nalgebra::{DMatrix, Dyn, LU};
use serde::Serialize;
use thiserror::Error;

use crate::point::Point;

/// Two constraint points closer than this are treated as duplicates.
pub const DUPLICATE_THRESHOLD: f64 = 1e-9;

/// Smallest-to-largest pivot ratio below which the system counts as singular.
const PIVOT_RATIO_FLOOR: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum TpsError {
    #[error("radial basis argument must be non-negative, got {0}")]
    NegativeRadius(f64),
    #[error("need at least 3 constraint points, got {0}")]
    TooFewPoints(usize),
    #[error("constraint point count {points} does not match value count {values}")]
    LengthMismatch { points: usize, values: usize },
    #[error("constraint points {first} and {second} coincide (distance {distance:e})")]
    DuplicatePoints {
        first: usize,
        second: usize,
        distance: f64,
    },
    #[error("constraint input {0} is not finite")]
    NonFinite(usize),
    #[error("regularization must be finite and non-negative, got {0}")]
    BadRegularization(f64),
    #[error(
        "TPS system is singular (pivot ratio {pivot_ratio:e}); the constraint points are \
         (nearly) collinear, raise the regularization"
    )]
    Singular { pivot_ratio: f64 },
}

/// `U(r) = r^2 log r^2`, with the limit value `0` at `r = 0`.
pub fn rbf_u(r: f64) -> Result<f64, TpsError> {
    if r < 0.0 || r.is_nan() {
        return Err(TpsError::NegativeRadius(r));
    }
    Ok(rbf_u_sq(r * r))
}

/// `U` as a function of the squared radius.
#[inline]
pub(crate) fn rbf_u_sq(r2: f64) -> f64 {
    if r2 == 0.0 {
        0.0
    } else {
        r2 * r2.ln()
    }
}

/// Solved coefficients of one thin-plate spline.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TpsTransform {
    /// Rows act on `[x, y, 1]`.
    affine: [[f64; 3]; 2],
    weights: Vec<[f64; 2]>,
    centers: Vec<Point>,
    regularization: f64,
}

impl TpsTransform {
    pub fn affine(&self) -> &[[f64; 3]; 2] {
        &self.affine
    }

    pub fn weights(&self) -> &[[f64; 2]] {
        &self.weights
    }

    pub fn centers(&self) -> &[Point] {
        &self.centers
    }

    pub fn regularization(&self) -> f64 {
        self.regularization
    }

    /// Largest absolute radial weight.
    pub fn max_abs_weight(&self) -> f64 {
        self.weights
            .iter()
            .flat_map(|w| w.iter())
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Evaluates the transform at one point.
    #[inline]
    pub fn eval(&self, p: Point) -> Point {
        let [ax, ay] = self.affine;
        let mut x = ax[0] * p.x + ax[1] * p.y + ax[2];
        let mut y = ay[0] * p.x + ay[1] * p.y + ay[2];
        for (c, w) in self.centers.iter().zip(&self.weights) {
            let u = rbf_u_sq(c.sqr_dist(p));
            x += w[0] * u;
            y += w[1] * u;
        }
        Point::new(x, y)
    }
}

/// `1e-8` times the squared mean pairwise distance of `points`.
pub fn default_regularization(points: &[Point]) -> f64 {
    let n = points.len();
    if n < 2 {
        return 0.0;
    }
    let mut total = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            total += points[i].sqr_dist(points[j]).sqrt();
        }
    }
    let mean = total / (n * (n - 1) / 2) as f64;
    1e-8 * mean * mean
}

/// Solves for the spline taking every `constraint_points[i]` to
/// `constraint_values[i]`. With `regularization == 0` the result interpolates
/// exactly; larger values trade exactness for a smoother warp.
pub fn solve_tps(
    constraint_points: &[Point],
    constraint_values: &[Point],
    regularization: f64,
) -> Result<TpsTransform, TpsError> {
    let n = constraint_points.len();
    if n != constraint_values.len() {
        return Err(TpsError::LengthMismatch {
            points: n,
            values: constraint_values.len(),
        });
    }
    if n < 3 {
        return Err(TpsError::TooFewPoints(n));
    }
    if !(regularization.is_finite() && regularization >= 0.0) {
        return Err(TpsError::BadRegularization(regularization));
    }
    for (i, (p, v)) in constraint_points.iter().zip(constraint_values).enumerate() {
        if !p.is_finite() || !v.is_finite() {
            return Err(TpsError::NonFinite(i));
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            let distance = constraint_points[i].sqr_dist(constraint_points[j]).sqrt();
            if distance <= DUPLICATE_THRESHOLD {
                return Err(TpsError::DuplicatePoints {
                    first: i,
                    second: j,
                    distance,
                });
            }
        }
    }

    let size = n + 3;
    let mut system = DMatrix::<f64>::zeros(size, size);
    for i in 0..n {
        let ci = constraint_points[i];
        for j in 0..n {
            system[(i, j)] = rbf_u_sq(ci.sqr_dist(constraint_points[j]));
        }
        system[(i, i)] += regularization;
        for (col, value) in [1.0, ci.x, ci.y].into_iter().enumerate() {
            system[(i, n + col)] = value;
            system[(n + col, i)] = value;
        }
    }
    let mut rhs = DMatrix::<f64>::zeros(size, 2);
    for (i, v) in constraint_values.iter().enumerate() {
        rhs[(i, 0)] = v.x;
        rhs[(i, 1)] = v.y;
    }

    let lu: LU<f64, Dyn, Dyn> = system.lu();
    let pivot_ratio = pivot_ratio(&lu);
    if pivot_ratio < PIVOT_RATIO_FLOOR {
        return Err(TpsError::Singular { pivot_ratio });
    }
    let solution = lu
        .solve(&rhs)
        .filter(|s| s.iter().all(|v| v.is_finite()))
        .ok_or(TpsError::Singular { pivot_ratio })?;

    let weights = (0..n)
        .map(|i| [solution[(i, 0)], solution[(i, 1)]])
        .collect();
    // solution rows n..n+3 hold the coefficients of (1, x, y)
    let affine = [0, 1].map(|d| {
        [
            solution[(n + 1, d)],
            solution[(n + 2, d)],
            solution[(n, d)],
        ]
    });
    Ok(TpsTransform {
        affine,
        weights,
        centers: constraint_points.to_vec(),
        regularization,
    })
}

fn pivot_ratio(lu: &LU<f64, Dyn, Dyn>) -> f64 {
    let u = lu.u();
    let (lo, hi) = u
        .diagonal()
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), d| {
            (lo.min(d.abs()), hi.max(d.abs()))
        });
    if hi == 0.0 {
        0.0
    } else {
        lo / hi
    }
}

/// Evaluates `t` at every point, preserving order.
pub fn eval_tps(t: &TpsTransform, points: &[Point]) -> Vec<Point> {
    points.iter().map(|&p| t.eval(p)).collect()
}

/// The bending energy
/// `∬ F_xx² + 2 F_xy² + F_yy² dx dy` summed over both output coordinates.
///
/// For a spline whose weights satisfy the side conditions the integral has
/// the closed form `16π Σ_d w_dᵀ K w_d`, because `Δ² U = 16π δ` for
/// `U = r² log r²`.
pub fn bending_energy(t: &TpsTransform) -> f64 {
    let n = t.centers.len();
    let mut quad = 0.0;
    for i in 0..n {
        let wi = t.weights[i];
        for j in 0..n {
            let k = rbf_u_sq(t.centers[i].sqr_dist(t.centers[j]));
            let wj = t.weights[j];
            quad += k * (wi[0] * wj[0] + wi[1] * wj[1]);
        }
    }
    16.0 * std::f64::consts::PI * quad
}
