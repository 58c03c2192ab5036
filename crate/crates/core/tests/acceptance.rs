//! Acceptance suite. Each test prints one `PASS`/`FAIL` line and then
//! asserts the same condition.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tps_align::cli::bench::run_bench;
use tps_align::field::identity_field;
use tps_align::losses::{
    cycle_loss, embedding_cosine_distance, feature_matching_loss_with, gan_loss_discriminator,
    gan_loss_generator, spatial_correlative_loss, spatial_correlative_maps, total_loss,
    uniform_query_grid, ChannelReduction, GeneratorObjective, LossWeights, SimilarityMapSet,
    DEFAULT_TAU, SCORE_EPS,
};
use tps_align::pipeline::multiscale_fields;
use tps_align::{
    align_pair, align_style_to_portrait, bending_energy, grid_sample, grid_sample_backward,
    solve_tps, upsample_field, BorderMode, FeatureMap, LandmarkGroup, LandmarkSet, Point,
    TpsTransform, WarpConfig, WarpField, WarpMode,
};

fn report(name: &str, pass: bool, detail: String) {
    println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "{name}: {detail}");
}

fn random_point(rng: &mut ChaCha8Rng) -> Point {
    Point::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

/// `n` points in `[-1, 1]²`, pairwise at least `min_sep` apart.
fn spread_points(rng: &mut ChaCha8Rng, n: usize, min_sep: f64) -> Vec<Point> {
    let mut pts: Vec<Point> = Vec::with_capacity(n);
    while pts.len() < n {
        let p = random_point(rng);
        if pts.iter().all(|q| q.sqr_dist(p) >= min_sep * min_sep) {
            pts.push(p);
        }
    }
    pts
}

// ---------------------------------------------------------------- splines

#[test]
fn tps_exactness() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let start = Instant::now();
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = rng.gen_range(4..=16);
        let pts = spread_points(&mut rng, n, 0.05);
        let vals: Vec<Point> = (0..n).map(|_| random_point(&mut rng)).collect();
        let t = solve_tps(&pts, &vals, 0.0).expect("well-spread points");
        for (p, v) in pts.iter().zip(&vals) {
            let e = t.eval(*p);
            worst = worst.max((e.x - v.x).abs()).max((e.y - v.y).abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    report(
        "tps_exactness",
        worst <= 1e-6 && secs < 10.0,
        format!("max residual {worst:.3e} (<= 1e-6), {secs:.2} s (< 10 s)"),
    );
}

#[test]
fn affine_reproduction() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut max_w, mut max_e) = (0.0f64, 0.0f64);
    for _ in 0..200 {
        let n = rng.gen_range(4..=16);
        let pts = spread_points(&mut rng, n, 0.05);
        let m: Vec<f64> = (0..6).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let vals: Vec<Point> = pts
            .iter()
            .map(|p| Point::new(m[0] * p.x + m[1] * p.y + m[2], m[3] * p.x + m[4] * p.y + m[5]))
            .collect();
        let t = solve_tps(&pts, &vals, 0.0).expect("well-spread points");
        max_w = max_w.max(t.max_abs_weight());
        max_e = max_e.max(bending_energy(&t));
    }
    report(
        "affine_reproduction",
        max_w <= 1e-8 && max_e <= 1e-9,
        format!("max |w| {max_w:.3e} (<= 1e-8), max energy {max_e:.3e} (<= 1e-9)"),
    );
}

/// Integrand `f_xx² + 2 f_xy² + f_yy²` summed over both output components,
/// from analytic second derivatives of `U = s ln s`, `s = r²`.
fn energy_density(t: &TpsTransform, x: f64, y: f64) -> f64 {
    let mut h = [[0.0; 3]; 2];
    for (c, w) in t.centers().iter().zip(t.weights()) {
        let (dx, dy) = (x - c.x, y - c.y);
        let s = dx * dx + dy * dy;
        if s == 0.0 {
            continue;
        }
        let base = 2.0 * (s.ln() + 1.0);
        let uxx = base + 4.0 * dx * dx / s;
        let uxy = 4.0 * dx * dy / s;
        let uyy = base + 4.0 * dy * dy / s;
        for d in 0..2 {
            h[d][0] += w[d] * uxx;
            h[d][1] += w[d] * uxy;
            h[d][2] += w[d] * uyy;
        }
    }
    h.iter().map(|d| d[0] * d[0] + 2.0 * d[1] * d[1] + d[2] * d[2]).sum()
}

/// Midpoint rule over `[lo, hi]²` with `n` cells per side, skipping the
/// inner square `[-hole, hole]²`.
fn midpoint(t: &TpsTransform, lo: f64, hi: f64, n: usize, hole: f64) -> f64 {
    let h = (hi - lo) / n as f64;
    let mut total = 0.0;
    for i in 0..n {
        let y = lo + (i as f64 + 0.5) * h;
        for j in 0..n {
            let x = lo + (j as f64 + 0.5) * h;
            if x.abs() < hole && y.abs() < hole {
                continue;
            }
            total += energy_density(t, x, y);
        }
    }
    total * h * h
}

#[test]
fn bending_energy_matches_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let n = rng.gen_range(4..=10);
        let pts = spread_points(&mut rng, n, 0.1);
        let vals: Vec<Point> = pts
            .iter()
            .map(|p| *p + Point::new(rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2)))
            .collect();
        let t = solve_tps(&pts, &vals, 0.0).unwrap();
        // fine grid over the centers, coarse grid out to where the
        // 1/r⁴ tail is negligible
        let quad = midpoint(&t, -2.0, 2.0, 1000, 0.0) + midpoint(&t, -60.0, 60.0, 1500, 2.0 - 1e-9);
        let closed = bending_energy(&t);
        worst = worst.max((closed - quad).abs() / quad);
    }
    report(
        "bending_energy_quadrature",
        worst <= 0.05,
        format!("max relative error {worst:.3e} (<= 5e-2)"),
    );
}

// ---------------------------------------------------------------- sampler

/// Keeps pixel-space sample positions at least 0.01 px from integers, where
/// the bilinear derivative is discontinuous.
fn avoid_kinks(f: &WarpField, h: usize, w: usize) -> WarpField {
    let nudge = |v: f64, size: usize| {
        let px = ((v + 1.0) * size as f64 - 1.0) * 0.5;
        let frac = px - px.round();
        if frac.abs() < 0.01 {
            let moved = px.round() + 0.01f64.copysign(frac);
            (2.0 * moved + 1.0) / size as f64 - 1.0
        } else {
            v
        }
    };
    let coords = f.coords().iter().map(|p| Point::new(nudge(p.x, w), nudge(p.y, h))).collect();
    WarpField::from_coords(f.height(), f.width(), coords).unwrap()
}

fn dot(a: &FeatureMap, b: &FeatureMap) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum()
}

fn rel_err(a: f64, b: f64) -> Option<f64> {
    let scale = a.abs().max(b.abs());
    (scale > 1e-6).then(|| (a - b).abs() / scale)
}

#[test]
fn gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let step = 1e-4;
    let (mut worst, mut checked) = (0.0f64, 0usize);
    for case in 0..100 {
        let c = rng.gen_range(1..=4);
        let (ih, iw) = (rng.gen_range(2..=12), rng.gen_range(2..=12));
        let (oh, ow) = (rng.gen_range(1..=12), rng.gen_range(1..=12));
        let border = if case % 2 == 0 { BorderMode::Clamp } else { BorderMode::Zeros };
        let input = FeatureMap::from_fn(c, ih, iw, |_, _, _| rng.gen_range(-1.0..1.0)).unwrap();
        let coords = (0..oh * ow)
            .map(|_| Point::new(rng.gen_range(-1.2..1.2), rng.gen_range(-1.2..1.2)))
            .collect();
        let field = avoid_kinks(&WarpField::from_coords(oh, ow, coords).unwrap(), ih, iw);
        let upstream = FeatureMap::from_fn(c, oh, ow, |_, _, _| rng.gen_range(-1.0..1.0)).unwrap();
        let grads = grid_sample_backward(&upstream, &input, &field, border).unwrap();
        let loss = |inp: &FeatureMap, f: &WarpField| dot(&upstream, &grid_sample(inp, f, border));

        for i in 0..input.data().len() {
            let shifted = |d: f64| {
                let mut v = input.data().to_vec();
                v[i] += d;
                FeatureMap::new(c, ih, iw, v).unwrap()
            };
            let fd = (loss(&shifted(step), &field) - loss(&shifted(-step), &field)) / (2.0 * step);
            if let Some(e) = rel_err(grads.grad_input.data()[i], fd) {
                worst = worst.max(e);
                checked += 1;
            }
        }
        for i in 0..oh * ow {
            for axis in 0..2 {
                let shifted = |d: f64| {
                    let mut v = field.coords().to_vec();
                    if axis == 0 {
                        v[i].x += d;
                    } else {
                        v[i].y += d;
                    }
                    WarpField::from_coords(oh, ow, v).unwrap()
                };
                let fd = (loss(&input, &shifted(step)) - loss(&input, &shifted(-step))) / (2.0 * step);
                if let Some(e) = rel_err(grads.grad_field[i][axis], fd) {
                    worst = worst.max(e);
                    checked += 1;
                }
            }
        }
    }
    report(
        "gradient_finite_differences",
        worst <= 1e-4,
        format!("max relative error {worst:.3e} (<= 1e-4) over {checked} entries"),
    );
}

// ---------------------------------------------------------------- pipeline

fn ring(cx: f64, cy: f64, radius: f64, n: usize) -> Vec<Point> {
    (0..n)
        .map(|i| {
            let a = i as f64 * std::f64::consts::TAU / n as f64;
            Point::new(cx + radius * a.cos(), cy + radius * a.sin())
        })
        .collect()
}

fn landmark_set(size: u32, groups: Vec<Vec<Point>>) -> LandmarkSet {
    let n = groups[0].len();
    let groups = groups
        .into_iter()
        .enumerate()
        .map(|(i, points)| LandmarkGroup { name: format!("g{i}"), points })
        .collect();
    LandmarkSet::new(size, size, n, groups).unwrap()
}

/// Two rings of ten landmarks placed like eyes and mouth on a face.
fn face_landmarks(size: u32) -> LandmarkSet {
    let s = size as f64 / 128.0;
    landmark_set(
        size,
        vec![ring(45.0 * s, 50.0 * s, 18.0 * s, 10), ring(85.0 * s, 80.0 * s, 16.0 * s, 10)],
    )
}

/// Small similarity transform, a low-frequency displacement and 1 px jitter.
fn smooth_deform(rng: &mut ChaCha8Rng, s: &LandmarkSet) -> LandmarkSet {
    let size = s.width() as f64;
    let c = size / 2.0;
    let k = size / 128.0;
    let (angle, scale) = (rng.gen_range(-0.08..0.08), rng.gen_range(0.95..1.05));
    let shift = Point::new(rng.gen_range(-4.0..4.0) * k, rng.gen_range(-4.0..4.0) * k);
    let (amp, freq, phase) = (rng.gen_range(1.0..2.5) * k, rng.gen_range(1.0..2.0), rng.gen_range(0.0..6.3));
    let (sin, cos) = f64::sin_cos(angle);
    let groups = s
        .groups()
        .iter()
        .map(|g| {
            g.points
                .iter()
                .map(|p| {
                    let (dx, dy) = (p.x - c, p.y - c);
                    let (u, v) = (p.x / size, p.y / size);
                    let wave = Point::new(amp * (freq * 6.0 * v + phase).sin(), amp * (freq * 6.0 * u - phase).cos());
                    Point::new(c + scale * (cos * dx - sin * dy), c + scale * (sin * dx + cos * dy))
                        + shift
                        + wave
                        + Point::new(rng.gen_range(-1.0..1.0) * k, rng.gen_range(-1.0..1.0) * k)
                })
                .collect()
        })
        .collect();
    landmark_set(s.width(), groups)
}

fn smooth_image(rng: &mut ChaCha8Rng, size: usize) -> FeatureMap {
    let params: Vec<f64> = (0..9).map(|_| rng.gen_range(0.5..2.0)).collect();
    FeatureMap::from_fn(3, size, size, |c, r, x| {
        let (u, v) = (x as f64 / size as f64, r as f64 / size as f64);
        0.5 + 0.25 * (params[3 * c] * 3.0 * u + params[3 * c + 1] * 2.0 * v).sin()
            + 0.2 * (params[3 * c + 2] * 4.0 * u * v).cos()
    })
    .unwrap()
}

#[test]
fn identity_alignment_is_bit_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut exact = true;
    for size in [64usize, 100, 128] {
        let lm = smooth_deform(&mut rng, &face_landmarks(size as u32));
        let img = FeatureMap::from_fn(3, size, size, |_, _, _| rng.gen_range(0.0..1.0)).unwrap();
        for mode in [WarpMode::Grouped, WarpMode::Global] {
            for border in [BorderMode::Clamp, BorderMode::Zeros] {
                let cfg = WarpConfig { mode, border, ..WarpConfig::default() };
                let pair = align_pair(&img, &lm, &img, &lm, &cfg).unwrap();
                exact &= pair.field().is_identity();
                exact &= pair
                    .warped_image()
                    .data()
                    .iter()
                    .zip(img.data())
                    .all(|(a, b)| a.to_bits() == b.to_bits());
            }
        }
        let id = identity_field(size, size).unwrap();
        exact &= grid_sample(&img, &id, BorderMode::Zeros) == img;
    }
    report("identity_alignment", exact, "warped output equals input bitwise".into());
}

#[test]
fn round_trip_recovers_style() {
    let size = 128;
    let mut worst = f64::INFINITY;
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let style_lm = face_landmarks(size as u32);
        let portrait_lm = smooth_deform(&mut rng, &style_lm);
        let style = smooth_image(&mut rng, size);
        let portrait = smooth_image(&mut rng, size);
        let cfg = WarpConfig::default();
        let there = align_style_to_portrait(&portrait, &portrait_lm, &style, &style_lm, &cfg).unwrap();
        let back = align_pair(&style, &style_lm, there.warped_image(), &portrait_lm, &cfg).unwrap();
        let psnr = back.warped_image().psnr_interior(&style, 16, 1.0).unwrap();
        worst = worst.min(psnr);
    }
    report("round_trip", worst >= 30.0, format!("min interior PSNR {worst:.2} dB (>= 30 dB)"));
}

#[test]
fn multiscale_fields_agree() {
    let size = 256;
    let mut worst = 0.0f64;
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(200 + seed);
        let to = face_landmarks(size as u32);
        let from = smooth_deform(&mut rng, &to);
        let fields = multiscale_fields(&from, &to, size, size, 3, &WarpConfig::default()).unwrap();
        for f in &fields[1..] {
            let up = upsample_field(f, size, size).unwrap();
            worst = worst.max(up.max_abs_diff(&fields[0]).unwrap());
        }
    }
    report(
        "multiscale_consistency",
        worst <= 1e-2,
        format!("max deviation {worst:.3e} normalized units (<= 1e-2)"),
    );
}

// ---------------------------------------------------------------- losses

fn clamp_score(s: f64) -> f64 {
    s.clamp(SCORE_EPS, 1.0 - SCORE_EPS)
}

fn naive_cosine(a: &[f64], b: &[f64]) -> f64 {
    let mut d = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for i in 0..a.len() {
        d += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        d / (na.sqrt() * nb.sqrt())
    }
}

fn naive_feature_matching(real: &FeatureMap, fake: &FeatureMap, max: bool) -> f64 {
    let (c, h, w) = real.shape();
    let mut total = 0.0;
    for r in 0..h {
        for x in 0..w {
            let reduce = |m: &FeatureMap| {
                let vals = (0..c).map(|k| m.get(k, r, x));
                if max {
                    vals.fold(f64::NEG_INFINITY, f64::max)
                } else {
                    vals.sum::<f64>() / c as f64
                }
            };
            total += (reduce(real) - reduce(fake)).abs();
        }
    }
    total / (h * w) as f64
}

fn naive_maps(f: &FeatureMap, queries: &[(usize, usize)], r: usize) -> Vec<Vec<f64>> {
    let pixel = |row: usize, col: usize| (0..f.channels()).map(|c| f.get(c, row, col)).collect::<Vec<_>>();
    queries
        .iter()
        .map(|&(row, col)| {
            let mut m = Vec::new();
            for dr in 0..=2 * r {
                for dc in 0..=2 * r {
                    m.push(naive_cosine(&pixel(row, col), &pixel(row + dr - r, col + dc - r)));
                }
            }
            m
        })
        .collect()
}

fn naive_infonce(a: &[Vec<f64>], b: &[Vec<f64>], tau: f64) -> f64 {
    let q = a.len();
    let mut total = 0.0;
    for i in 0..q {
        let mut denom = 0.0;
        for j in 0..q {
            denom += (naive_cosine(&a[i], &b[j]) / tau).exp();
        }
        total -= ((naive_cosine(&a[i], &b[i]) / tau).exp() / denom).ln();
    }
    total / q as f64
}

fn naive_l1(a: &FeatureMap, b: &FeatureMap) -> f64 {
    let mut t = 0.0;
    for i in 0..a.data().len() {
        t += (a.data()[i] - b.data()[i]).abs();
    }
    t / a.data().len() as f64
}

#[test]
fn loss_kernels_match_reference_loops() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    let mut track = |a: f64, b: f64| worst = worst.max((a - b).abs());
    for _ in 0..50 {
        let real: Vec<f64> = (0..rng.gen_range(1..8)).map(|_| rng.gen_range(0.0..1.0)).collect();
        let fake: Vec<f64> = (0..rng.gen_range(1..8)).map(|_| rng.gen_range(0.0..1.0)).collect();
        let mean = |v: &[f64], f: &dyn Fn(f64) -> f64| v.iter().map(|&s| f(clamp_score(s))).sum::<f64>() / v.len() as f64;
        track(
            gan_loss_discriminator(&real, &fake).unwrap(),
            -(mean(&real, &|s| s.ln()) + mean(&fake, &|s| (1.0 - s).ln())),
        );
        track(
            gan_loss_generator(&fake, GeneratorObjective::Minimax).unwrap(),
            mean(&fake, &|s| (1.0 - s).ln()),
        );
        track(
            gan_loss_generator(&fake, GeneratorObjective::NonSaturating).unwrap(),
            -mean(&fake, &|s| s.ln()),
        );

        let (c, h, w) = (rng.gen_range(1..5), rng.gen_range(5..10), rng.gen_range(5..10));
        let a = FeatureMap::from_fn(c, h, w, |_, _, _| rng.gen_range(-1.0..1.0)).unwrap();
        let b = FeatureMap::from_fn(c, h, w, |_, _, _| rng.gen_range(-1.0..1.0)).unwrap();
        track(
            feature_matching_loss_with(&a, &b, ChannelReduction::Mean).unwrap(),
            naive_feature_matching(&a, &b, false),
        );
        track(
            feature_matching_loss_with(&a, &b, ChannelReduction::Max).unwrap(),
            naive_feature_matching(&a, &b, true),
        );

        let radius = rng.gen_range(1..=2);
        let queries = uniform_query_grid(h, w, radius, 3);
        let ma = spatial_correlative_maps(&a, &queries, radius).unwrap();
        let mb = spatial_correlative_maps(&b, &queries, radius).unwrap();
        let (na, nb) = (naive_maps(&a, &queries, radius), naive_maps(&b, &queries, radius));
        for (x, y) in ma.maps.iter().flatten().zip(na.iter().flatten()) {
            track(*x, *y);
        }
        let tau = rng.gen_range(0.05..1.0);
        track(spatial_correlative_loss(&ma, &mb, tau).unwrap(), naive_infonce(&na, &nb, tau));

        let layers = rng.gen_range(1..4);
        let fa: Vec<FeatureMap> = (0..layers)
            .map(|_| FeatureMap::from_fn(c, h, w, |_, _, _| rng.gen_range(-1.0..1.0)).unwrap())
            .collect();
        let fb: Vec<FeatureMap> = (0..layers)
            .map(|_| FeatureMap::from_fn(c, h, w, |_, _, _| rng.gen_range(-1.0..1.0)).unwrap())
            .collect();
        let lw: Vec<f64> = (0..layers).map(|_| rng.gen_range(0.0..2.0)).collect();
        let mut expected = 0.0;
        for l in 0..layers {
            expected += lw[l] * naive_l1(&fa[l], &fb[l]);
        }
        track(cycle_loss(&fa, &fb, Some(&lw)).unwrap(), expected);

        let parts: Vec<f64> = (0..4).map(|_| rng.gen_range(0.0..3.0)).collect();
        let weights = LossWeights::new(rng.gen_range(0.0..2.0), rng.gen_range(0.0..2.0), rng.gen_range(0.0..20.0)).unwrap();
        track(
            total_loss(parts[0], parts[1], parts[2], parts[3], &weights),
            parts[0] + weights.lambda1 * parts[1] + weights.lambda2 * parts[2] + weights.lambda3 * parts[3],
        );

        let rows = rng.gen_range(1..6);
        let dim = rng.gen_range(2..9);
        let ea: Vec<Vec<f64>> = (0..rows).map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let eb: Vec<Vec<f64>> = (0..rows).map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let mut expected = 0.0;
        for i in 0..rows {
            expected += 1.0 - naive_cosine(&ea[i], &eb[i]);
        }
        track(embedding_cosine_distance(&ea, &eb).unwrap(), expected / rows as f64);
    }
    report("loss_reference_loops", worst <= 1e-6, format!("max abs deviation {worst:.3e} (<= 1e-6)"));
}

#[test]
fn contrastive_closed_form() {
    let tau = DEFAULT_TAU;
    let onehot = |i: usize| (0..3).map(|j| if i == j { 1.0 } else { 0.0 }).collect::<Vec<_>>();
    let set = SimilarityMapSet {
        query_locations: vec![(0, 0), (1, 1), (2, 2)],
        maps: (0..3).map(onehot).collect(),
        window_radius: 0,
    };
    let got = spatial_correlative_loss(&set, &set, tau).unwrap();
    // -log(e^{1/τ} / (e^{1/τ} + 2)) = log(1 + 2 e^{-1/τ})
    let expected = (2.0 * (-1.0 / tau).exp()).ln_1p();
    let err = (got - expected).abs();
    report(
        "contrastive_closed_form",
        err <= 1e-9,
        format!("{got:.6e} vs {expected:.6e}, error {err:.1e} (<= 1e-9)"),
    );
}

#[test]
fn total_loss_with_default_weights() {
    let v = total_loss(1.0, 1.0, 1.0, 1.0, &LossWeights::default());
    report("total_loss_unit_components", v == 13.0, format!("{v} (== 13)"));
}

#[test]
fn embedding_distance_extremes() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let a: Vec<Vec<f64>> = (0..16).map(|_| (0..8).map(|_| rng.gen_range(-3.0..3.0)).collect()).collect();
    let neg: Vec<Vec<f64>> = a.iter().map(|v| v.iter().map(|x| -x).collect()).collect();
    // rotate each coordinate pair by 90 degrees: (x, y) -> (-y, x)
    let orth: Vec<Vec<f64>> = a
        .iter()
        .map(|v| v.chunks(2).flat_map(|p| [-p[1], p[0]]).collect())
        .collect();
    let same = embedding_cosine_distance(&a, &a).unwrap();
    let ortho = embedding_cosine_distance(&a, &orth).unwrap();
    let anti = embedding_cosine_distance(&a, &neg).unwrap();
    report(
        "embedding_distance_extremes",
        same == 0.0 && ortho == 1.0 && anti == 2.0,
        format!("identical {same}, orthogonal {ortho}, antipodal {anti} (exactly 0, 1, 2)"),
    );
}

// ---------------------------------------------------------------- performance

#[test]
fn bench_single_thread_budget() {
    let r = run_bench(256, 50, Some(1), 0);
    report(
        "bench_single_thread",
        r.mean_ms <= 25.0,
        format!("mean {:.2} ms, p95 {:.2} ms at 256x256 (<= 25 ms)", r.mean_ms, r.p95_ms),
    );
}

#[test]
fn bench_scales_with_threads() {
    let one = run_bench(256, 50, Some(1), 0);
    let four = run_bench(256, 50, Some(4), 0);
    let speedup = one.mean_ms / four.mean_ms;
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    report(
        "bench_thread_scaling",
        speedup >= 2.0,
        format!(
            "1 thread {:.2} ms, 4 threads {:.2} ms, speedup {speedup:.2}x (>= 2x) on {cores} available core(s)",
            one.mean_ms, four.mean_ms
        ),
    );
}
