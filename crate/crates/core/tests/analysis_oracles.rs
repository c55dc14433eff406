//! The analytical engine against independent oracles: direct quadrature of
//! the interference integral, finite differences of the derivative
//! recursion, a Gamma-CDF closed form for the noise-limited network, and
//! brute-force spatial averaging with an explicit nearest-preset search.

use std::f64::consts::{LN_2, PI};

use approx::{assert_abs_diff_eq, assert_relative_eq};
use pinchnet_core::analysis::{self, DistanceRule};
use pinchnet_core::channel::link_budget;
use pinchnet_core::geometry::{nearest_preset, preset_locations};
use pinchnet_core::numerics::finite_difference_richardson;
use pinchnet_core::{AnalysisConfig, InterferenceField, OutageAnalyzer, OutageInputs, Point2, SystemParams};

fn small_cell() -> SystemParams {
    SystemParams::default()
}

fn noise_limited(p: SystemParams) -> SystemParams {
    SystemParams { lambda: 0.0, ..p }
}

/// Composite Simpson rule with `n` (even) intervals.
fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
    let h = (hi - lo) / n as f64;
    let mut sum = f(lo) + f(hi);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(lo + i as f64 * h);
    }
    sum * h / 3.0
}

/// `P(G < x)` for `G ~ Gamma(N, 1/N)`, by integrating the density.
fn gamma_cdf(shape: u32, x: f64) -> f64 {
    let n = f64::from(shape);
    let factorial: f64 = (1..shape).map(f64::from).product();
    let pdf = |t: f64| n.powf(n) * t.powf(n - 1.0) * (-n * t).exp() / factorial;
    simpson(pdf, 0.0, x.min(80.0), 40_000)
}

/// `log L_I(s)` by integrating the PGFL exponent over `r = e^u`.
fn log_laplace_oracle(p: &SystemParams, s: f64) -> f64 {
    let integrand = |u: f64| {
        let r = u.exp();
        let d = (r * r + p.height * p.height).sqrt();
        let p_los = (-p.beta * d).exp();
        let class = |prob: f64, alpha: f64, shape: u32| {
            let n = f64::from(shape);
            prob * -(-n * (s / (n * d.powf(alpha))).ln_1p()).exp_m1()
        };
        let mean = class(p_los, p.alpha_los, p.shape_los) + class(1.0 - p_los, p.alpha_nlos, p.shape_nlos);
        mean * r * r
    };
    -2.0 * PI * p.lambda * simpson(integrand, -12.0, 30.0, 400_000)
}

#[test]
fn laplace_matches_direct_radial_quadrature() {
    // With α_N = 4 the mapped integrand vanishes at the far end and the rule
    // converges spectrally. With α_N = 3 it does not, and the error decays as
    // K⁻², which the coarse/fine pair checks.
    let large = SystemParams::large_cell();
    let field = InterferenceField::new(&large, AnalysisConfig::default().chebyshev_order).unwrap();
    for s in [0.1, 1.0, 10.0, 1e3, 1e5] {
        assert_relative_eq!(field.log_laplace(s), log_laplace_oracle(&large, s), max_relative = 1e-9);
    }
    let small = small_cell();
    let coarse = InterferenceField::new(&small, 400).unwrap();
    let fine = InterferenceField::new(&small, 1600).unwrap();
    for s in [0.1, 1.0, 10.0, 1e3, 1e5] {
        let oracle = log_laplace_oracle(&small, s);
        let err_coarse = (coarse.log_laplace(s) / oracle - 1.0).abs();
        let err_fine = (fine.log_laplace(s) / oracle - 1.0).abs();
        assert!(err_coarse < 3e-5, "s = {s}: {err_coarse}");
        assert!(err_fine < err_coarse / 10.0, "s = {s}: {err_fine} vs {err_coarse}");
    }
}

#[test]
fn laplace_is_one_at_zero_and_decreasing() {
    let field = InterferenceField::new(&SystemParams::large_cell(), 400).unwrap();
    assert_eq!(field.laplace(0.0), 1.0);
    let mut prev = 1.0;
    for s in [1e-3, 1e-1, 1.0, 10.0, 1e3, 1e6] {
        let v = field.laplace(s);
        assert!(v < prev && v > 0.0, "L_I({s}) = {v}");
        prev = v;
    }
}

#[test]
fn laplace_ignores_waveguide_layout() {
    let cfg = AnalysisConfig::default();
    let base = small_cell();
    let reference = analysis::laplace_interference(1.0, &base, &cfg).unwrap();
    for (np, len) in [(1, 10.0), (11, 10.0), (1, 30.0), (11, 30.0)] {
        let p = SystemParams { n_presets: np, waveguide_len: len, ..base.clone() };
        let v = analysis::laplace_interference(1.0, &p, &cfg).unwrap();
        assert_eq!(v.to_bits(), reference.to_bits());
    }
}

#[test]
fn derivative_recursion_matches_finite_differences() {
    for p in [small_cell(), SystemParams::large_cell()] {
        let xi = link_budget(&p).xi;
        let field = InterferenceField::new(&p, 400).unwrap();
        let zeta = |w: f64, j: usize| field.zeta_derivatives(w, xi, 2)[j];
        let lbar = |w: f64, j: usize| field.lbar_derivatives(w, xi, 2)[j];
        for omega in [0.1, 0.5, 2.0] {
            let h = 1e-2 * omega;
            for j in 1..=2 {
                let fd = finite_difference_richardson(|w| zeta(w, j - 1), omega, 1, h);
                assert_relative_eq!(zeta(omega, j), fd, max_relative = 1e-6);
                let fd = finite_difference_richardson(|w| lbar(w, j - 1), omega, 1, h);
                assert_relative_eq!(lbar(omega, j), fd, max_relative = 1e-6);
            }
            let fd2 = finite_difference_richardson(|w| zeta(w, 0), omega, 2, h);
            assert_relative_eq!(zeta(omega, 2), fd2, max_relative = 1e-5);
        }
    }
}

#[test]
fn free_functions_agree_with_field() {
    let p = small_cell();
    let cfg = AnalysisConfig::default();
    let field = InterferenceField::new(&p, cfg.chebyshev_order).unwrap();
    let z = field.zeta_derivatives(0.5, 1e-3, 3);
    for (j, &zj) in z.iter().enumerate().skip(1) {
        assert_eq!(analysis::zeta_derivative(j, 0.5, 1e-3, &p, &cfg).unwrap(), zj);
    }
    assert!(analysis::zeta_derivative(0, 0.5, 1e-3, &p, &cfg).is_err());
    assert_eq!(
        analysis::lbar_derivatives(0.5, 3, 1e-3, &p, &cfg).unwrap(),
        field.lbar_derivatives(0.5, 1e-3, 3)
    );
}

#[test]
fn noise_limited_recursion_is_closed_form() {
    let p = noise_limited(small_cell());
    let field = InterferenceField::new(&p, 100).unwrap();
    let xi: f64 = 0.3;
    let omega = 2.0;
    let zeta = field.zeta_derivatives(omega, xi, 3);
    assert_abs_diff_eq!(zeta[0], -omega * xi, epsilon = 1e-15);
    assert_abs_diff_eq!(zeta[1], -xi, epsilon = 1e-15);
    assert_eq!(&zeta[2..], &[0.0, 0.0]);
    let lbar = field.lbar_derivatives(omega, xi, 4);
    for (j, v) in lbar.iter().enumerate() {
        assert_relative_eq!(*v, (-xi).powi(j as i32) * (-omega * xi).exp(), max_relative = 1e-14);
    }
}

#[test]
fn noise_limited_conditional_outage_is_gamma_cdf() {
    let p = noise_limited(small_cell());
    let xi = link_budget(&p).xi;
    let engine = OutageAnalyzer::from_params(&p, &AnalysisConfig::default()).unwrap();
    for d0 in [3.0, 5.0, 12.0, 20.0] {
        for eps in [10.0, 300.0, 5e3, 1e5] {
            let p_los = (-p.beta * d0).exp();
            let oracle = p_los * gamma_cdf(p.shape_los, eps * xi * d0.powf(p.alpha_los))
                + (1.0 - p_los) * gamma_cdf(p.shape_nlos, eps * xi * d0.powf(p.alpha_nlos));
            let got = engine.conditional_outage(d0, eps).unwrap();
            assert_abs_diff_eq!(got, oracle, epsilon = 1e-10);
        }
    }
}

#[test]
fn conditional_outage_validates_inputs() {
    let p = small_cell();
    let engine = OutageAnalyzer::from_params(&p, &AnalysisConfig::default()).unwrap();
    assert!(engine.conditional_outage(p.height - 0.1, 1.0).is_err());
    assert!(engine.conditional_outage(10.0, -1.0).is_err());
    assert!(engine.conditional_outage(f64::NAN, 1.0).is_err());
    assert_eq!(engine.conditional_outage(10.0, 0.0).unwrap(), 0.0);
    let inputs = OutageInputs::from_params(&p).with_epsilon(3.0);
    assert_eq!(
        analysis::conditional_outage(10.0, &inputs, &AnalysisConfig::default()).unwrap(),
        engine.conditional_outage(10.0, 3.0).unwrap()
    );
}

#[test]
fn conditional_outage_rises_with_distance_and_threshold() {
    let p = SystemParams::large_cell();
    let engine = OutageAnalyzer::from_params(&p, &AnalysisConfig::default()).unwrap();
    let mut prev = 0.0;
    for d0 in [4.0, 10.0, 30.0, 60.0, 100.0] {
        let v = engine.conditional_outage(d0, 1.0).unwrap();
        assert!(v >= prev, "d0 = {d0}");
        prev = v;
    }
    let mut prev = 0.0;
    for eps in [0.01, 0.1, 1.0, 10.0, 1e3, 1e6] {
        let v = engine.conditional_outage(20.0, eps).unwrap();
        assert!(v >= prev, "eps = {eps}");
        prev = v;
    }
    assert!(prev > 0.999);
}

/// Brute-force spatial average: polar midpoint grid over the cluster disc,
/// serving antenna found by scanning every preset.
fn brute_force_outage(engine: &OutageAnalyzer, eps: f64, n_r: usize, n_t: usize) -> f64 {
    let p = engine.params();
    let presets = preset_locations(Point2::ORIGIN, 0.0, p.waveguide_len, p.n_presets).unwrap();
    let radius = p.cluster_radius;
    let (dr, dt) = (radius / n_r as f64, 2.0 * PI / n_t as f64);
    let mut total = 0.0;
    for i in 0..n_r {
        let r = (i as f64 + 0.5) * dr;
        for k in 0..n_t {
            let user = Point2::unit((k as f64 + 0.5) * dt).scale(r);
            let serving = presets[nearest_preset(user, &presets).unwrap()];
            let d = ((user - serving).norm_sq() + p.height * p.height).sqrt();
            total += engine.conditional_outage(d, eps).unwrap() * r * dr * dt;
        }
    }
    total / (PI * radius * radius)
}

#[test]
fn spatial_average_matches_nearest_preset_grid() {
    let p = noise_limited(small_cell());
    let engine = OutageAnalyzer::from_params(&p, &AnalysisConfig::default()).unwrap();
    for eps in [300.0, 3e3, 3e4] {
        let brute = brute_force_outage(&engine, eps, 600, 1200);
        let got = engine.outage_probability(eps).unwrap();
        assert!(got > 1e-3, "vacuous check at eps = {eps}");
        assert_abs_diff_eq!(got, brute, epsilon = 1e-5);
    }
}

#[test]
fn spatial_average_matches_grid_with_interference() {
    let p = SystemParams { n_presets: 3, ..SystemParams::large_cell() };
    let engine = OutageAnalyzer::from_params(&p, &AnalysisConfig::default()).unwrap();
    let brute = brute_force_outage(&engine, 1.0, 120, 240);
    assert_abs_diff_eq!(engine.outage_probability(1.0).unwrap(), brute, epsilon = 2e-4);
}

#[test]
fn upper_bound_matches_radial_oracle() {
    let p = noise_limited(small_cell());
    let xi = link_budget(&p).xi;
    let engine = OutageAnalyzer::from_params(&p, &AnalysisConfig::default()).unwrap();
    let eps = 3e3;
    let cond = |r: f64| {
        let d = (r * r + p.height * p.height).sqrt();
        let p_los = (-p.beta * d).exp();
        p_los * gamma_cdf(p.shape_los, eps * xi * d.powf(p.alpha_los))
            + (1.0 - p_los) * gamma_cdf(p.shape_nlos, eps * xi * d.powf(p.alpha_nlos))
    };
    let r = p.cluster_radius;
    let oracle = simpson(|x| cond(x) * 2.0 * x / (r * r), 0.0, r, 400);
    assert_abs_diff_eq!(engine.outage_upper_bound(eps).unwrap(), oracle, epsilon = 1e-8);
}

#[test]
fn lower_bound_matches_segment_projection_grid() {
    let p = noise_limited(small_cell());
    let engine = OutageAnalyzer::from_params(&p, &AnalysisConfig::default()).unwrap();
    let eps = 3e3;
    let half = p.waveguide_len / 2.0;
    let (n_r, n_t) = (600, 1200);
    let (dr, dt) = (p.cluster_radius / n_r as f64, 2.0 * PI / n_t as f64);
    let mut total = 0.0;
    for i in 0..n_r {
        let rr = (i as f64 + 0.5) * dr;
        for k in 0..n_t {
            let user = Point2::unit((k as f64 + 0.5) * dt).scale(rr);
            let foot = Point2::new(user.x.clamp(-half, half), 0.0);
            let d = ((user - foot).norm_sq() + p.height * p.height).sqrt();
            total += engine.conditional_outage(d, eps).unwrap() * rr * dr * dt;
        }
    }
    let brute = total / (PI * p.cluster_radius * p.cluster_radius);
    assert_abs_diff_eq!(engine.outage_lower_bound(eps).unwrap(), brute, epsilon = 1e-5);
}

#[test]
fn single_preset_equals_upper_bound() {
    let p = SystemParams { n_presets: 1, ..small_cell() };
    let engine = OutageAnalyzer::from_params(&p, &AnalysisConfig::default()).unwrap();
    for eps in [0.5, 1.0, 3.0] {
        assert_eq!(
            engine.outage_probability(eps).unwrap(),
            engine.outage_upper_bound(eps).unwrap()
        );
    }
}

#[test]
fn bounds_sandwich_outage_and_presets_help() {
    let cfg = AnalysisConfig::default();
    for base in [small_cell(), SystemParams::large_cell()] {
        for eps in [0.5, 1.0, 3.0, 7.0] {
            let mut prev = f64::INFINITY;
            for np in [1, 3, 11, 51] {
                let p = SystemParams { n_presets: np, ..base.clone() };
                let engine = OutageAnalyzer::from_params(&p, &cfg).unwrap();
                let (lo, v, hi) = (
                    engine.outage_lower_bound(eps).unwrap(),
                    engine.outage_probability(eps).unwrap(),
                    engine.outage_upper_bound(eps).unwrap(),
                );
                assert!(lo <= v + 1e-12 && v <= hi + 1e-12, "np = {np}, eps = {eps}");
                assert!(v <= prev + 1e-12, "np = {np}, eps = {eps}");
                prev = v;
            }
        }
    }
}

#[test]
fn dense_presets_approach_lower_bound() {
    let p = SystemParams { n_presets: 201, ..small_cell() };
    let engine = OutageAnalyzer::from_params(&p, &AnalysisConfig::default()).unwrap();
    for eps in [0.5, 1.0, 3.0] {
        let gap = engine.outage_probability(eps).unwrap() - engine.outage_lower_bound(eps).unwrap();
        assert!((0.0..1e-3).contains(&gap), "gap {gap} at eps = {eps}");
    }
}

#[test]
fn outage_vanishes_at_zero_threshold_and_saturates() {
    let engine = OutageAnalyzer::from_params(&SystemParams::large_cell(), &AnalysisConfig::default()).unwrap();
    assert_eq!(engine.outage_probability(0.0).unwrap(), 0.0);
    assert_eq!(engine.outage_upper_bound(0.0).unwrap(), 0.0);
    assert_eq!(engine.outage_lower_bound(0.0).unwrap(), 0.0);
    let mut prev = 0.0;
    for eps in [1e-3, 0.1, 1.0, 10.0, 1e3, 1e6, 1e9] {
        let v = engine.outage_probability(eps).unwrap();
        assert!(v >= prev);
        prev = v;
    }
    assert!(prev > 0.999);
    assert!(engine.outage_probability(-1.0).is_err());
}

#[test]
fn outage_falls_with_transmit_power() {
    let cfg = AnalysisConfig::default();
    let mut prev = 1.0;
    for dbm in [0.0, 10.0, 20.0, 30.0] {
        let p = SystemParams { tx_power: 1e-3 * 10f64.powf(dbm / 10.0), ..small_cell() };
        let v = analysis::outage_probability(&OutageInputs::from_params(&p), &cfg).unwrap();
        assert!(v <= prev);
        prev = v;
    }
}

/// `E[log2(1 + G d^-α / ξ)]` for a noise-limited fixed antenna, integrating
/// over the user radius and the Gamma fading density directly.
fn noise_limited_rate_oracle(p: &SystemParams, xi: f64) -> f64 {
    let gamma_mean_log = |shape: u32, snr: f64| {
        let n = f64::from(shape);
        let factorial: f64 = (1..shape).map(f64::from).product();
        let pdf = |t: f64| n.powf(n) * t.powf(n - 1.0) * (-n * t).exp() / factorial;
        // t = v² keeps the N = 1 density smooth at the origin.
        simpson(|v| 2.0 * v * pdf(v * v) * (snr * v * v).ln_1p(), 0.0, 8.0, 4000) / LN_2
    };
    let r_max = p.cluster_radius;
    simpson(
        |r| {
            let d = (r * r + p.height * p.height).sqrt();
            let p_los = (-p.beta * d).exp();
            let rate = p_los * gamma_mean_log(p.shape_los, d.powf(-p.alpha_los) / xi)
                + (1.0 - p_los) * gamma_mean_log(p.shape_nlos, d.powf(-p.alpha_nlos) / xi);
            rate * 2.0 * r / (r_max * r_max)
        },
        0.0,
        r_max,
        400,
    )
}

#[test]
fn ergodic_rate_matches_direct_expectation() {
    let p = SystemParams { n_presets: 1, ..noise_limited(small_cell()) };
    let xi = link_budget(&p).xi;
    let oracle = noise_limited_rate_oracle(&p, xi);
    let got = analysis::ergodic_rate(&p, &AnalysisConfig::default()).unwrap();
    assert_relative_eq!(got, oracle, max_relative = 1e-7);

    let halved = AnalysisConfig { rate_prefactor: 0.5, ..AnalysisConfig::default() };
    let got_half = analysis::ergodic_rate(&p, &halved).unwrap();
    assert_relative_eq!(got_half, 0.5 * LN_2 * got, max_relative = 1e-12);
}

#[test]
fn projected_rules_match_direct_evaluation() {
    let direct = AnalysisConfig { distance_nodes: 0, ..AnalysisConfig::default() };
    for p in [small_cell(), SystemParams::large_cell()] {
        let a = OutageAnalyzer::from_params(&p, &direct).unwrap();
        let b = OutageAnalyzer::from_params(&p, &AnalysisConfig::default()).unwrap();
        for eps in [1e-3, 0.5, 1.0, 3.0, 100.0, 1e5] {
            assert_abs_diff_eq!(a.outage_probability(eps).unwrap(), b.outage_probability(eps).unwrap(), epsilon = 1e-9);
            assert_abs_diff_eq!(a.outage_upper_bound(eps).unwrap(), b.outage_upper_bound(eps).unwrap(), epsilon = 1e-9);
            assert_abs_diff_eq!(a.outage_lower_bound(eps).unwrap(), b.outage_lower_bound(eps).unwrap(), epsilon = 1e-9);
        }
    }
}

#[test]
fn projection_reproduces_low_degree_moments() {
    // Uneven points and weights; any polynomial of degree < n survives exactly.
    let rule = DistanceRule::new((0..50).map(|i| (1.0 + (i as f64 * 0.37).sin().abs(), 0.1 + (i % 7) as f64)).collect());
    let projected = rule.project(8, 1.0, 2.0);
    assert_eq!(projected.points().len(), 8);
    let moment = |r: &DistanceRule, k: i32| r.points().iter().map(|&(d, w)| w * d.powi(k)).sum::<f64>();
    for k in 0..8 {
        assert_relative_eq!(moment(&projected, k), moment(&rule, k), max_relative = 1e-12);
    }
    assert_relative_eq!(projected.total_weight(), rule.total_weight(), max_relative = 1e-13);
}

#[test]
fn refinement_moves_analysis_below_tolerance() {
    let cfg = AnalysisConfig::default();
    let fine = cfg.refined();
    for p in [small_cell(), SystemParams::large_cell()] {
        let a = OutageAnalyzer::from_params(&p, &cfg).unwrap();
        let b = OutageAnalyzer::from_params(&p, &fine).unwrap();
        for eps in [0.5, 1.0, 3.0] {
            assert_abs_diff_eq!(a.outage_probability(eps).unwrap(), b.outage_probability(eps).unwrap(), epsilon = 1e-6);
        }
    }
}

#[test]
fn config_validation_names_the_field() {
    let bad = AnalysisConfig { gl_order_rate: 0, ..AnalysisConfig::default() };
    assert!(bad.validate().unwrap_err().to_string().contains("gl_order_rate"));
    let bad = AnalysisConfig { distance_nodes: 1, ..AnalysisConfig::default() };
    assert!(bad.validate().unwrap_err().to_string().contains("distance_nodes"));
    let bad = AnalysisConfig { rate_prefactor: -1.0, ..AnalysisConfig::default() };
    assert!(bad.validate().unwrap_err().to_string().contains("rate_prefactor"));
    let bad = AnalysisConfig { chebyshev_order: 0, ..AnalysisConfig::default() };
    assert!(bad.validate().unwrap_err().to_string().contains('K'));
}
