//! Throughput of the warp stage: solve, rasterize, and resample a 3-channel
//! image once per iteration.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::feature_map::FeatureMap;
use crate::field::rasterize_group_field;
use crate::point::Point;
use crate::sampler::{warp_image, BorderMode};
use crate::tps::{default_regularization, solve_tps};

/// Landmarks per benchmark spline.
const BENCH_POINTS: usize = 10;

#[derive(Clone, Debug, Serialize)]
pub struct BenchReport {
    pub image_size: usize,
    pub iterations: usize,
    pub threads: usize,
    pub mean_ms: f64,
    pub p50_ms: f64,
    pub p95_ms: f64,
    pub throughput_fps: f64,
    /// Sum of the last warped image; identical across runs with one seed.
    pub checksum: f64,
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

/// Runs the benchmark on a pool of `threads` workers (`None`: all cores).
pub fn run_bench(size: usize, iterations: usize, threads: Option<usize>, seed: u64) -> BenchReport {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .expect("failed to build thread pool");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let targets: Vec<Point> = (0..BENCH_POINTS)
        .map(|_| Point::new(rng.gen_range(-0.8..0.8), rng.gen_range(-0.8..0.8)))
        .collect();
    let sources: Vec<Point> = targets
        .iter()
        .map(|p| *p + Point::new(rng.gen_range(-0.05..0.05), rng.gen_range(-0.05..0.05)))
        .collect();
    let phase: [f64; 3] = [rng.gen(), rng.gen(), rng.gen()];
    let image = FeatureMap::from_fn(3, size, size, |c, r, x| {
        let (u, v) = (x as f64 / size as f64, r as f64 / size as f64);
        0.5 + 0.5 * (6.0 * u + 4.0 * v + phase[c] * 6.0).sin() * (3.0 * v).cos()
    })
    .expect("bench size is positive");

    let mut times = Vec::with_capacity(iterations);
    let mut checksum = 0.0;
    pool.install(|| {
        for _ in 0..iterations {
            let start = Instant::now();
            let lambda = default_regularization(&targets);
            let t = solve_tps(&targets, &sources, lambda).expect("bench landmarks are well spread");
            let field = rasterize_group_field(&t, size, size).expect("bench size is positive");
            let out = warp_image(&image, &field, BorderMode::Clamp);
            times.push(start.elapsed().as_secs_f64() * 1e3);
            checksum = out.data().iter().sum();
        }
    });

    let mean_ms = times.iter().sum::<f64>() / times.len() as f64;
    let mut sorted = times.clone();
    sorted.sort_by(f64::total_cmp);
    BenchReport {
        image_size: size,
        iterations,
        threads: pool.current_num_threads(),
        mean_ms,
        p50_ms: percentile(&sorted, 0.5),
        p95_ms: percentile(&sorted, 0.95),
        throughput_fps: 1000.0 / mean_ms,
        checksum,
    }
}
