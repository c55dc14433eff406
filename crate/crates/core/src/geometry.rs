//! Spatial model: cluster centres, waveguides, preset activation positions,
//! served users, and the Voronoi strips of a waveguide.

use std::f64::consts::PI;
use std::ops::{Add, Sub};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::SystemParams;

/// A point in the horizontal plane (m).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm_sq(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn scale(self, k: f64) -> Point2 {
        Point2::new(self.x * k, self.y * k)
    }

    /// Unit vector at angle `theta` from the x-axis.
    pub fn unit(theta: f64) -> Point2 {
        let (s, c) = theta.sin_cos();
        Point2::new(c, s)
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

/// One sampled snapshot of the network, seen from the typical cluster.
///
/// The typical cluster is centred at the origin with its waveguide on the
/// x-axis. It is not part of `interferer_antennas`.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkRealization {
    pub typical_user: Point2,
    pub typical_antenna: Point2,
    pub interferer_antennas: Vec<Point2>,
}

/// Width (m) of the annuli from which PPP points are drawn.
pub const RING_WIDTH: f64 = 250.0;

/// Samples a homogeneous PPP of intensity `lambda` restricted to the disc of
/// radius `radius` about the origin, ordered by distance from the origin.
///
/// Each annulus `[k w, (k + 1) w)` is drawn from its own stream, keyed by one
/// draw from `rng`. From the same `rng` state, the points inside any smaller
/// radius are therefore an exact prefix of the result: simulations that
/// differ only in their truncation radius see the same near field.
pub fn sample_ppp_disc<R: Rng + ?Sized>(lambda: f64, radius: f64, rng: &mut R) -> Vec<Point2> {
    sample_marked_ppp(lambda, radius, rng, |p, _| p)
}

/// [`sample_ppp_disc`] with a per-point mark drawn from the point's annulus
/// stream, so marks inherit the prefix property.
fn sample_marked_ppp<R, T>(
    lambda: f64,
    radius: f64,
    rng: &mut R,
    mut mark: impl FnMut(Point2, &mut ChaCha8Rng) -> T,
) -> Vec<T>
where
    R: Rng + ?Sized,
{
    let key: [u8; 32] = rng.random();
    let mut out = Vec::new();
    if !(lambda * radius > 0.0) {
        return out;
    }
    let mut ring_points = Vec::new();
    let mut ring = 0u64;
    while (ring as f64) * RING_WIDTH < radius {
        let r0 = ring as f64 * RING_WIDTH;
        let r1 = r0 + RING_WIDTH;
        let mut stream = ChaCha8Rng::from_seed(key);
        stream.set_stream(ring);
        // Poisson::new only fails for non-positive or non-finite means.
        let count = Poisson::new(lambda * PI * (r1 * r1 - r0 * r0))
            .expect("positive finite Poisson mean")
            .sample(&mut stream) as usize;
        ring_points.clear();
        for _ in 0..count {
            let r = (r0 * r0 + stream.random::<f64>() * (r1 * r1 - r0 * r0)).sqrt();
            let angle = 2.0 * PI * stream.random::<f64>();
            if r < radius {
                ring_points.push(Point2::unit(angle).scale(r));
            }
        }
        ring_points.sort_by(|a, b| a.norm_sq().total_cmp(&b.norm_sq()));
        out.extend(ring_points.iter().map(|&p| mark(p, &mut stream)));
        ring += 1;
    }
    out
}

fn uniform_in_disc<R: Rng + ?Sized>(center: Point2, radius: f64, rng: &mut R) -> Point2 {
    let r = radius * rng.random::<f64>().sqrt();
    let angle = 2.0 * PI * rng.random::<f64>();
    center + Point2::unit(angle).scale(r)
}

/// Signed offset along the waveguide of preset `n` (1-based), measured from
/// the waveguide centre.
pub fn preset_offset(n: u32, waveguide_len: f64, n_presets: u32) -> f64 {
    if n_presets <= 1 {
        return 0.0;
    }
    let spacing = waveguide_len / f64::from(n_presets - 1);
    spacing * (f64::from(n) - f64::from(n_presets + 1) / 2.0)
}

/// Planar coordinates of the `n_presets` activation positions on a waveguide
/// centred at `center` with orientation `theta`, in index order.
pub fn preset_locations(
    center: Point2,
    theta: f64,
    waveguide_len: f64,
    n_presets: u32,
) -> Result<Vec<Point2>> {
    if n_presets == 0 || n_presets % 2 == 0 {
        return Err(Error::invalid(
            "Np",
            format!("must be an odd positive integer, got {n_presets}"),
        ));
    }
    let dir = Point2::unit(theta);
    Ok((1..=n_presets)
        .map(|n| center + dir.scale(preset_offset(n, waveguide_len, n_presets)))
        .collect())
}

/// Index (0-based) of the preset nearest to `user` in the plane. Ties go to
/// the lowest index.
pub fn nearest_preset(user: Point2, presets: &[Point2]) -> Result<usize> {
    if presets.is_empty() {
        return Err(Error::invalid("presets", "at least one preset location is required"));
    }
    let mut best = 0;
    let mut best_dist = (user - presets[0]).norm_sq();
    for (i, p) in presets.iter().enumerate().skip(1) {
        let dist = (user - *p).norm_sq();
        if dist < best_dist {
            best = i;
            best_dist = dist;
        }
    }
    Ok(best)
}

/// Same as [`nearest_preset`] for collinear, evenly spaced presets, given the
/// user's signed projection `along` onto the waveguide axis.
pub fn nearest_preset_along(along: f64, waveguide_len: f64, n_presets: u32) -> usize {
    if n_presets <= 1 {
        return 0;
    }
    let spacing = waveguide_len / f64::from(n_presets - 1);
    let pos = along / spacing + f64::from(n_presets - 1) / 2.0;
    // ceil(pos - 1/2) rounds half-way points down, matching the lowest-index tie rule.
    let idx = (pos - 0.5).ceil();
    idx.clamp(0.0, f64::from(n_presets - 1)) as usize
}

/// Uniform point on the disc of radius `radius` about `center`.
pub fn sample_cluster_user<R: Rng + ?Sized>(center: Point2, radius: f64, rng: &mut R) -> Point2 {
    uniform_in_disc(center, radius, rng)
}

/// x-interval `(lo, hi)` of users served by preset `n` (1-based) on a
/// waveguide along the x-axis. The outermost cells extend to `±radius`.
pub fn voronoi_cell_bounds(n: u32, n_presets: u32, waveguide_len: f64, radius: f64) -> Result<(f64, f64)> {
    if n == 0 || n > n_presets {
        return Err(Error::invalid(
            "n",
            format!("preset index must lie in 1..={n_presets}, got {n}"),
        ));
    }
    if n_presets == 1 {
        return Ok((-radius, radius));
    }
    let spacing = waveguide_len / f64::from(n_presets - 1);
    let half = f64::from(n_presets) / 2.0;
    let n_f = f64::from(n);
    let lo = if n == 1 { -radius } else { spacing * (n_f - half - 1.0) };
    let hi = if n == n_presets { radius } else { spacing * (n_f - half) };
    Ok((lo, hi))
}

/// Antenna-to-user distance including the antenna height.
pub fn antenna_user_distance(user: Point2, antenna: Point2, height: f64) -> f64 {
    ((user - antenna).norm_sq() + height * height).sqrt()
}

/// Draws the activated antenna of a cluster: random orientation in `[0, π)`,
/// one uniformly placed served user, nearest preset.
fn sample_activated_antenna<R: Rng + ?Sized>(center: Point2, params: &SystemParams, rng: &mut R) -> Point2 {
    let theta = PI * rng.random::<f64>();
    let user = sample_cluster_user(center, params.cluster_radius, rng);
    let dir = Point2::unit(theta);
    let idx = nearest_preset_along((user - center).dot(dir), params.waveguide_len, params.n_presets);
    center + dir.scale(preset_offset(idx as u32 + 1, params.waveguide_len, params.n_presets))
}

/// Samples the typical cluster (user and activated antenna) and the activated
/// antennas of every other cluster within `sim_radius` of the origin.
pub fn sample_realization<R: Rng + ?Sized>(
    params: &SystemParams,
    sim_radius: f64,
    rng: &mut R,
) -> NetworkRealization {
    let typical_user = sample_cluster_user(Point2::ORIGIN, params.cluster_radius, rng);
    let idx = nearest_preset_along(typical_user.x, params.waveguide_len, params.n_presets);
    let typical_antenna = Point2::new(
        preset_offset(idx as u32 + 1, params.waveguide_len, params.n_presets),
        0.0,
    );
    let interferer_antennas = sample_marked_ppp(params.lambda, sim_radius, rng, |c, stream| {
        sample_activated_antenna(c, params, stream)
    });
    NetworkRealization {
        typical_user,
        typical_antenna,
        interferer_antennas,
    }
}
