//! Distributional checks of the geometry and channel samplers at fixed seeds.
//! Bounds are 4-5 standard errors so the tests are not seed-fragile.

use std::f64::consts::PI;

use pinchnet_core::channel::{los_probability, LinkSampler};
use pinchnet_core::geometry::{sample_cluster_user, sample_ppp_disc, sample_realization, voronoi_cell_bounds};
use pinchnet_core::{LinkState, Point2, SystemParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

#[test]
fn ppp_counts_are_poisson_and_points_uniform() {
    let mut rng = rng(1);
    let (lambda, radius) = (1e-3, 60.0);
    let mu = lambda * PI * radius * radius;
    let mut counts = Vec::new();
    let mut radii = Vec::new();
    for _ in 0..20_000 {
        let pts = sample_ppp_disc(lambda, radius, &mut rng);
        counts.push(pts.len() as f64);
        radii.extend(pts.iter().map(|p| p.norm()));
    }
    let (mean, var) = mean_var(&counts);
    assert!((mean - mu).abs() < 4.0 * (mu / 20_000.0).sqrt(), "mean {mean} vs {mu}");
    assert!((var / mu - 1.0).abs() < 0.05, "variance {var} vs {mu}");
    assert!(radii.iter().all(|&r| r <= radius));
    let (mr, _) = mean_var(&radii);
    assert!((mr / (2.0 * radius / 3.0) - 1.0).abs() < 0.01);
    assert!(sample_ppp_disc(0.0, radius, &mut rng).is_empty());
}

#[test]
fn cluster_users_are_uniform_in_the_disc() {
    let mut rng = rng(2);
    let radius = 20.0;
    let center = Point2::new(3.0, -4.0);
    let n = 100_000;
    let r: Vec<f64> = (0..n).map(|_| (sample_cluster_user(center, radius, &mut rng) - center).norm()).collect();
    let (mean, var) = mean_var(&r);
    assert!((mean - 2.0 * radius / 3.0).abs() < 4.0 * (var / n as f64).sqrt());
    let inner = r.iter().filter(|&&x| x <= radius / 2.0).count() as f64 / n as f64;
    assert!((inner - 0.25).abs() < 4.0 * (0.25 * 0.75 / n as f64).sqrt());
    assert!(r.iter().all(|&x| x <= radius));
}

/// Area of the part of the disc of radius `r` with `lo ≤ x ≤ hi`.
fn strip_area(lo: f64, hi: f64, r: f64) -> f64 {
    let f = |x: f64| {
        let x = x.clamp(-r, r);
        x * (r * r - x * x).sqrt() + r * r * (x / r).asin()
    };
    f(hi) - f(lo)
}

#[test]
fn typical_antenna_follows_voronoi_areas() {
    let p = SystemParams { lambda: 0.0, n_presets: 5, ..SystemParams::default() };
    let mut rng = rng(3);
    let n = 100_000;
    let mut hits = [0u64; 5];
    for _ in 0..n {
        let net = sample_realization(&p, 100.0, &mut rng);
        assert!(net.interferer_antennas.is_empty());
        assert_eq!(net.typical_antenna.y, 0.0);
        let spacing = p.preset_spacing();
        let idx = ((net.typical_antenna.x + p.waveguide_len / 2.0) / spacing).round() as usize;
        hits[idx] += 1;
    }
    let disc = PI * p.cluster_radius * p.cluster_radius;
    for (i, &h) in hits.iter().enumerate() {
        let (lo, hi) = voronoi_cell_bounds(i as u32 + 1, 5, p.waveguide_len, p.cluster_radius).unwrap();
        let q = strip_area(lo, hi, p.cluster_radius) / disc;
        let freq = h as f64 / n as f64;
        assert!((freq - q).abs() < 4.5 * (q * (1.0 - q) / n as f64).sqrt(), "cell {i}: {freq} vs {q}");
    }
}

#[test]
fn displaced_interferers_stay_poisson() {
    let p = SystemParams { lambda: 1e-3, ..SystemParams::default() };
    let mut rng = rng(4);
    let ball = 100.0;
    let mu = p.lambda * PI * ball * ball;
    let counts: Vec<f64> = (0..5_000)
        .map(|_| {
            let net = sample_realization(&p, 400.0, &mut rng);
            net.interferer_antennas.iter().filter(|a| a.norm() <= ball).count() as f64
        })
        .collect();
    let (mean, var) = mean_var(&counts);
    assert!((mean - mu).abs() < 4.0 * (mu / 5_000.0).sqrt(), "mean {mean} vs {mu}");
    assert!((var / mu - 1.0).abs() < 0.1, "variance {var} vs {mu}");
}

#[test]
fn fading_has_unit_mean_and_shape_variance() {
    for shape in [1u32, 2, 3] {
        let p = SystemParams { shape_los: shape, beta: 1e-9, ..SystemParams::default() };
        let sampler = LinkSampler::new(&p).unwrap();
        let mut rng = rng(5 + u64::from(shape));
        let g: Vec<f64> = (0..100_000).map(|_| sampler.sample(10.0, &mut rng).fading_power).collect();
        let (mean, var) = mean_var(&g);
        let n = g.len() as f64;
        let target_var = 1.0 / f64::from(shape);
        assert!((mean - 1.0).abs() < 4.0 * (target_var / n).sqrt(), "N = {shape}: mean {mean}");
        assert!((var / target_var - 1.0).abs() < 0.03, "N = {shape}: var {var}");
    }
}

#[test]
fn exponential_fading_passes_kolmogorov_smirnov() {
    let p = SystemParams { shape_los: 1, beta: 1e-9, ..SystemParams::default() };
    let sampler = LinkSampler::new(&p).unwrap();
    let mut rng = rng(11);
    let mut g: Vec<f64> = (0..20_000).map(|_| sampler.sample(5.0, &mut rng).fading_power).collect();
    g.sort_by(f64::total_cmp);
    let n = g.len() as f64;
    let d = g
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let cdf = 1.0 - (-x).exp();
            (cdf - i as f64 / n).abs().max((i as f64 + 1.0) / n - cdf)
        })
        .fold(0.0, f64::max);
    // 1% critical value.
    assert!(d < 1.63 / n.sqrt(), "KS statistic {d}");
}

#[test]
fn los_fraction_matches_blockage_law() {
    let p = SystemParams::default();
    let sampler = LinkSampler::new(&p).unwrap();
    let mut rng = rng(12);
    for d in [5.0, 50.0, 150.0] {
        let q = los_probability(d, p.beta).unwrap();
        let n = 50_000;
        let los = (0..n).filter(|_| sampler.sample(d, &mut rng).state == LinkState::Los).count() as f64 / n as f64;
        assert!((los - q).abs() < 4.0 * (q * (1.0 - q) / n as f64).sqrt(), "d = {d}: {los} vs {q}");
    }
}
