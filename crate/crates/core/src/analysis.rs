//! Analytical engine: Laplace transform of the aggregate interference, its
//! derivative recursion, conditional and spatially averaged outage, the
//! fixed-antenna and continuous-waveguide bounds, and the ergodic rate.
//!
//! Interferer antennas form a PPP of intensity λ seen from the typical user,
//! so with `D(r) = sqrt(r² + H²)`
//!
//! ```text
//! log L_I(s) = -2πλ Σ_Q ∫₀^∞ P_Q(D) (1 - (1 + s / (N_Q D^α_Q))^-N_Q) r dr
//! ```
//!
//! The radial integral is mapped onto `(0, π/2)` with `r = tan t` and
//! evaluated with the Gauss-Chebyshev rule, which yields a weighted sum over
//! nodes `φ_k`. Everything downstream reuses those precomputed node terms.

use std::f64::consts::{LN_2, PI};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::channel::link_budget;
use crate::error::{Error, Result};
use crate::geometry::{preset_offset, voronoi_cell_bounds};
use crate::numerics::{gauss_chebyshev_nodes, gauss_legendre_rule, integrate_semi_infinite, QuadratureRule};
use crate::params::SystemParams;

/// Quadrature orders and numerical tolerances of the analytical engine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Gauss-Chebyshev order `K` of the interference integral.
    #[serde(rename = "K")]
    pub chebyshev_order: usize,
    /// Gauss-Legendre order per axis for each Voronoi strip.
    pub gl_order_2d: usize,
    /// Gauss-Legendre order of the fixed-antenna radial integral.
    pub gl_order_radial: usize,
    /// Gauss-Legendre order per octave panel of the ergodic-rate integral.
    pub gl_order_rate: usize,
    /// Octaves of the SINR threshold covered on each side of 1 by the
    /// ergodic-rate integral.
    pub rate_octaves: usize,
    /// Chebyshev nodes in serving distance onto which the spatial rules are
    /// projected; 0 evaluates the conditional outage at every 2-D node.
    pub distance_nodes: usize,
    /// Multiplier of `∫₀^∞ (1 - P_out(ε)) / (1 + ε) dε`. `1/ln 2` gives
    /// `E[log2(1 + SINR)]`.
    pub rate_prefactor: f64,
    /// Probabilities within this distance outside `[0, 1]` are clamped;
    /// anything further out is reported as a numeric instability.
    pub tolerance: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            chebyshev_order: 400,
            gl_order_2d: 64,
            gl_order_radial: 64,
            gl_order_rate: 8,
            rate_octaves: 24,
            distance_nodes: 96,
            rate_prefactor: 1.0 / LN_2,
            tolerance: 1e-9,
        }
    }
}

impl AnalysisConfig {
    /// The same configuration with every quadrature order doubled.
    pub fn refined(&self) -> Self {
        Self {
            chebyshev_order: 2 * self.chebyshev_order,
            gl_order_2d: 2 * self.gl_order_2d,
            gl_order_radial: 2 * self.gl_order_radial,
            gl_order_rate: 2 * self.gl_order_rate,
            distance_nodes: 2 * self.distance_nodes,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let orders = [
            ("K", self.chebyshev_order),
            ("gl_order_2d", self.gl_order_2d),
            ("gl_order_radial", self.gl_order_radial),
            ("gl_order_rate", self.gl_order_rate),
            ("rate_octaves", self.rate_octaves),
        ];
        for (name, order) in orders {
            if order == 0 {
                return Err(Error::invalid(name, "must be at least 1"));
            }
        }
        if self.distance_nodes == 1 {
            return Err(Error::invalid("distance_nodes", "must be 0 (direct) or at least 2"));
        }
        if !(self.rate_prefactor > 0.0) || !self.rate_prefactor.is_finite() {
            return Err(Error::invalid("rate_prefactor", "must be positive and finite"));
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::invalid("tolerance", "must be non-negative"));
        }
        Ok(())
    }
}

/// Operating point of an outage evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct OutageInputs {
    /// SINR threshold `2^Rbar - 1`.
    pub epsilon: f64,
    /// Normalised noise `σ² / (ηP)`.
    pub xi: f64,
    pub params: SystemParams,
}

impl OutageInputs {
    /// Threshold from the target rate, noise from the link budget.
    pub fn from_params(params: &SystemParams) -> Self {
        Self {
            epsilon: params.sinr_threshold(),
            xi: link_budget(params).xi,
            params: params.clone(),
        }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }
}

/// One Gauss-Chebyshev node of one link class.
#[derive(Debug, Clone, Copy)]
struct NodeTerm {
    /// `(π³λ / 2K) sqrt(1 - θ_k²) (sin φ_k / cos³ φ_k) P_Q(D_k)`.
    weight: f64,
    /// `1 / (N_Q D_k^α_Q)`.
    scale: f64,
    shape: u32,
}

/// Precomputed Gauss-Chebyshev discretisation of the interference field.
///
/// Depends on the cluster intensity, height, blockage and fading parameters
/// only; the preset count and waveguide length never enter.
#[derive(Debug, Clone)]
pub struct InterferenceField {
    terms: Vec<NodeTerm>,
}

impl InterferenceField {
    pub fn new(params: &SystemParams, chebyshev_order: usize) -> Result<Self> {
        let nodes = gauss_chebyshev_nodes(chebyshev_order)?;
        let prefactor = PI.powi(3) * params.lambda / (2.0 * chebyshev_order as f64);
        let mut terms = Vec::with_capacity(2 * nodes.len());
        if prefactor == 0.0 {
            return Ok(Self { terms });
        }
        let h2 = params.height * params.height;
        for node in &nodes {
            let (sin, cos) = node.phi.sin_cos();
            let tan = sin / cos;
            let dist_sq = tan * tan + h2;
            let dist = dist_sq.sqrt();
            let jacobian = sin / (cos * cos * cos);
            let p_los = (-params.beta * dist).exp();
            let classes = [
                (p_los, params.alpha_los, params.shape_los),
                (-(-params.beta * dist).exp_m1(), params.alpha_nlos, params.shape_nlos),
            ];
            for (prob, alpha, shape) in classes {
                let weight = prefactor * node.weight * jacobian * prob;
                if weight == 0.0 {
                    continue;
                }
                terms.push(NodeTerm {
                    weight,
                    scale: 1.0 / (f64::from(shape) * dist_sq.powf(alpha / 2.0)),
                    shape,
                });
            }
        }
        Ok(Self { terms })
    }

    /// `log L_I(s)`.
    pub fn log_laplace(&self, s: f64) -> f64 {
        -self
            .terms
            .iter()
            .map(|t| {
                let (q, one_minus_q) = shrink(s * t.scale);
                t.weight * one_minus_power(q, one_minus_q, t.shape)
            })
            .sum::<f64>()
    }

    pub fn laplace(&self, s: f64) -> f64 {
        self.log_laplace(s).exp()
    }

    /// `log L_I(ω)` together with `ζ^(j)(ω)` for `j = 1..=max_order`, where
    /// `ζ(ω) = log L_I(ω) - ωξ`. Slot 0 of the vector holds `ζ(ω)` itself.
    pub fn zeta_series(&self, omega: f64, xi: f64, max_order: usize) -> (f64, Vec<f64>) {
        let mut out = vec![0.0; max_order + 1];
        let mut log_laplace = 0.0;
        for t in &self.terms {
            let (q, one_minus_q) = shrink(omega * t.scale);
            log_laplace -= t.weight * one_minus_power(q, one_minus_q, t.shape);
            if max_order == 0 {
                continue;
            }
            let n = f64::from(t.shape);
            // (-1)^j (N)_j a^j (1 + ωa)^(-N-j), built up from j = 0.
            let mut term = t.weight * q.powi(t.shape as i32);
            let ratio = t.scale * q;
            for (j, slot) in out.iter_mut().enumerate().skip(1) {
                term *= -(n + (j - 1) as f64) * ratio;
                *slot += term;
            }
        }
        out[0] = log_laplace - omega * xi;
        if max_order >= 1 {
            out[1] -= xi;
        }
        (log_laplace, out)
    }

    /// `ζ^(j)(ω)` for `j = 1..=max_order`; slot 0 holds `ζ(ω)`.
    pub fn zeta_derivatives(&self, omega: f64, xi: f64, max_order: usize) -> Vec<f64> {
        self.zeta_series(omega, xi, max_order).1
    }

    /// `L̄^(j)(ω)` for `j = 0..=max_order`, with `L̄(ω) = L_I(ω) e^{-ωξ}`.
    pub fn lbar_derivatives(&self, omega: f64, xi: f64, max_order: usize) -> Vec<f64> {
        let (_, zeta) = self.zeta_series(omega, xi, max_order);
        let mut out = Vec::with_capacity(max_order + 1);
        out.push(zeta[0].exp());
        for j in 1..=max_order {
            // L̄^(j) = Σ_{i<j} C(j-1, i) ζ^(j-i) L̄^(i), from L̄' = ζ' L̄.
            let mut binom = 1.0;
            let mut acc = 0.0;
            for i in 0..j {
                acc += binom * zeta[j - i] * out[i];
                binom = binom * (j - 1 - i) as f64 / (i + 1) as f64;
            }
            out.push(acc);
        }
        out
    }
}

/// `(q, 1 - q)` with `q = 1 / (1 + x)`, both accurate for small `x`.
#[inline]
fn shrink(x: f64) -> (f64, f64) {
    let q = 1.0 / (1.0 + x);
    (q, x * q)
}

/// `1 - q^n` for integer `n ≥ 1` without cancellation, given `1 - q`.
#[inline]
fn one_minus_power(q: f64, one_minus_q: f64, n: u32) -> f64 {
    // 1 - q^n = (1 - q)(1 + q + ... + q^(n-1))
    let mut sum = 1.0;
    let mut pow = 1.0;
    for _ in 1..n {
        pow *= q;
        sum += pow;
    }
    one_minus_q * sum
}

/// Weighted serving distances: a spatial average of the conditional outage
/// over some user region is `Σ w · P_out(d)` over the rule's points.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DistanceRule {
    points: Vec<(f64, f64)>,
}

impl DistanceRule {
    /// Rule from `(distance, weight)` pairs.
    pub fn new(points: Vec<(f64, f64)>) -> Self {
        Self { points }
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn total_weight(&self) -> f64 {
        self.points.iter().map(|(_, w)| w).sum()
    }

    /// Collapses the rule onto `n` Chebyshev-Lobatto nodes on `[lo, hi]`.
    ///
    /// The projected rule integrates the degree `n - 1` interpolant of the
    /// integrand exactly (weights are sums of Lagrange basis values), so it
    /// reproduces the original rule for any integrand that depends on
    /// distance only and is well resolved by that interpolant.
    pub fn project(&self, n: usize, lo: f64, hi: f64) -> DistanceRule {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        let nodes: Vec<f64> = (0..n)
            .map(|j| mid + half * (PI * j as f64 / (n - 1) as f64).cos())
            .collect();
        let bary: Vec<f64> = (0..n)
            .map(|j| {
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                if j == 0 || j == n - 1 {
                    0.5 * sign
                } else {
                    sign
                }
            })
            .collect();
        let mut weights = vec![0.0; n];
        let mut terms = vec![0.0; n];
        for &(d, w) in &self.points {
            if let Some(j) = nodes.iter().position(|&x| x == d) {
                weights[j] += w;
                continue;
            }
            let mut sum = 0.0;
            for j in 0..n {
                terms[j] = bary[j] / (d - nodes[j]);
                sum += terms[j];
            }
            for j in 0..n {
                weights[j] += w * terms[j] / sum;
            }
        }
        DistanceRule {
            points: nodes.into_iter().zip(weights).collect(),
        }
    }
}

/// Analytical outage and rate engine for one parameter set.
#[derive(Debug, Clone)]
pub struct OutageAnalyzer {
    params: SystemParams,
    cfg: AnalysisConfig,
    xi: f64,
    field: InterferenceField,
    rule_2d: QuadratureRule,
    rule_radial: QuadratureRule,
    cells: OnceLock<DistanceRule>,
    fixed: OnceLock<DistanceRule>,
    continuous: OnceLock<DistanceRule>,
}

impl OutageAnalyzer {
    pub fn new(params: &SystemParams, xi: f64, cfg: &AnalysisConfig) -> Result<Self> {
        params.validate()?;
        cfg.validate()?;
        if !(xi >= 0.0) {
            return Err(Error::invalid("xi", format!("must be non-negative, got {xi}")));
        }
        Ok(Self {
            params: params.clone(),
            cfg: cfg.clone(),
            xi,
            field: InterferenceField::new(params, cfg.chebyshev_order)?,
            rule_2d: gauss_legendre_rule(cfg.gl_order_2d, -1.0, 1.0)?,
            rule_radial: gauss_legendre_rule(cfg.gl_order_radial, -1.0, 1.0)?,
            cells: OnceLock::new(),
            fixed: OnceLock::new(),
            continuous: OnceLock::new(),
        })
    }

    /// Engine with `ξ` taken from the parameters' link budget.
    pub fn from_params(params: &SystemParams, cfg: &AnalysisConfig) -> Result<Self> {
        Self::new(params, link_budget(params).xi, cfg)
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn config(&self) -> &AnalysisConfig {
        &self.cfg
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn field(&self) -> &InterferenceField {
        &self.field
    }

    /// Outage probability of a user whose serving antenna is `d0` away.
    pub fn conditional_outage(&self, d0: f64, epsilon: f64) -> Result<f64> {
        if !(d0 >= self.params.height) {
            return Err(Error::invalid(
                "d0",
                format!("serving distance {d0} is below the antenna height {}", self.params.height),
            ));
        }
        if !(epsilon >= 0.0) {
            return Err(Error::invalid("epsilon", format!("must be non-negative, got {epsilon}")));
        }
        self.clamp_probability(self.conditional_outage_raw(d0, epsilon), "conditional outage")
    }

    fn conditional_outage_raw(&self, d0: f64, epsilon: f64) -> f64 {
        let p_los = (-self.params.beta * d0).exp();
        let branches = [
            (p_los, self.params.alpha_los, self.params.shape_los),
            (-(-self.params.beta * d0).exp_m1(), self.params.alpha_nlos, self.params.shape_nlos),
        ];
        let mut outage = 0.0;
        for (prob, alpha, shape) in branches {
            if prob == 0.0 {
                continue;
            }
            // P(|g|² < ω(I + ξ)/N) for |g|² ~ Gamma(N, 1/N) is
            // 1 - Σ_{j<N} ω^j / j! E[(I+ξ)^j e^{-ω(I+ξ)}].
            let omega = f64::from(shape) * epsilon * d0.powf(alpha);
            let lbar = self.field.lbar_derivatives(omega, self.xi, shape as usize - 1);
            let mut series = 0.0;
            let mut coeff = 1.0;
            for (j, value) in lbar.iter().enumerate() {
                if j > 0 {
                    coeff *= -omega / j as f64;
                }
                series += coeff * value;
            }
            outage += prob * (1.0 - series);
        }
        outage
    }

    /// Spatially averaged outage over a uniformly placed user served by its
    /// nearest preset.
    pub fn outage_probability(&self, epsilon: f64) -> Result<f64> {
        if self.params.n_presets == 1 {
            return self.outage_upper_bound(epsilon);
        }
        let rule = self.cells.get_or_init(|| self.finish(self.cell_rule()));
        self.average(rule, epsilon, "outage probability")
    }

    /// Fixed antenna at the cluster centre (a single preset).
    pub fn outage_upper_bound(&self, epsilon: f64) -> Result<f64> {
        let rule = self.fixed.get_or_init(|| self.finish(self.fixed_rule()));
        self.average(rule, epsilon, "outage upper bound")
    }

    /// Antenna free to sit anywhere on the waveguide: users alongside it are
    /// served from the foot of the perpendicular, users beyond an end from
    /// that end.
    pub fn outage_lower_bound(&self, epsilon: f64) -> Result<f64> {
        let rule = self.continuous.get_or_init(|| self.finish(self.continuous_rule()));
        self.average(rule, epsilon, "outage lower bound")
    }

    /// Ergodic rate: `prefactor · ∫₀^∞ (1 - P_out(ε)) / (1 + ε) dε`.
    pub fn ergodic_rate(&self) -> Result<f64> {
        let integral = integrate_semi_infinite(
            |eps| Ok((1.0 - self.outage_probability(eps)?) / (1.0 + eps)),
            self.cfg.gl_order_rate,
            self.cfg.rate_octaves,
        )?;
        Ok(self.cfg.rate_prefactor * integral)
    }

    fn average(&self, rule: &DistanceRule, epsilon: f64, context: &'static str) -> Result<f64> {
        if !(epsilon >= 0.0) {
            return Err(Error::invalid("epsilon", format!("must be non-negative, got {epsilon}")));
        }
        let mut total = 0.0;
        for &(d, w) in rule.points() {
            let p = self.conditional_outage_raw(d, epsilon);
            if !p.is_finite() {
                return Err(Error::NonFinite { at: d, value: p });
            }
            total += w * p;
        }
        self.clamp_probability(total, context)
    }

    /// Applies the configured distance projection.
    fn finish(&self, rule: DistanceRule) -> DistanceRule {
        match self.cfg.distance_nodes {
            0 => rule,
            n => {
                let p = &self.params;
                let d_max = (p.cluster_radius * p.cluster_radius + p.height * p.height).sqrt();
                rule.project(n, p.height, d_max)
            }
        }
    }

    /// Voronoi strips of the preset grid; cells mirror about `x = 0`, so only
    /// the right half is integrated and weighted twice.
    fn cell_rule(&self) -> DistanceRule {
        let p = &self.params;
        let np = p.n_presets;
        let h2 = p.height * p.height;
        let scale = 4.0 / (PI * p.cluster_radius * p.cluster_radius);
        let mid = np.div_ceil(2);
        let mut rule = DistanceRule::default();
        for n in mid..=np {
            let (lo, hi) = voronoi_cell_bounds(n, np, p.waveguide_len, p.cluster_radius)
                .expect("cell index within 1..=Np");
            let lo = if n == mid { 0.0 } else { lo };
            let anchor = preset_offset(n, p.waveguide_len, np);
            self.disc_strip(&mut rule, lo, hi, scale, |x, y| {
                let dx = x - anchor;
                (dx * dx + y * y + h2).sqrt()
            });
        }
        rule
    }

    fn fixed_rule(&self) -> DistanceRule {
        let radius = self.params.cluster_radius;
        let h2 = self.params.height * self.params.height;
        let scale = 2.0 / (radius * radius);
        DistanceRule {
            points: self
                .rule_radial
                .iter_on(0.0, radius)
                .map(|(r, w)| ((r * r + h2).sqrt(), scale * w * r))
                .collect(),
        }
    }

    fn continuous_rule(&self) -> DistanceRule {
        let p = &self.params;
        let h2 = p.height * p.height;
        let half = p.waveguide_len / 2.0;
        let scale = 4.0 / (PI * p.cluster_radius * p.cluster_radius);
        let mut rule = DistanceRule::default();
        self.disc_strip(&mut rule, half, p.cluster_radius, scale, |x, y| {
            let dx = x - half;
            (dx * dx + y * y + h2).sqrt()
        });
        self.disc_strip(&mut rule, 0.0, half, scale, |_, y| (y * y + h2).sqrt());
        rule
    }

    /// Appends the nodes of `∫_{x_lo}^{x_hi} ∫₀^{sqrt(R² - x²)} g(dist(x, y)) dy dx`
    /// on the disc of radius `R`, scaled by `scale`.
    ///
    /// The outer variable is `x = R sin u`, which turns the square-root edge
    /// of the disc into a smooth integrand.
    fn disc_strip(
        &self,
        rule: &mut DistanceRule,
        x_lo: f64,
        x_hi: f64,
        scale: f64,
        dist: impl Fn(f64, f64) -> f64,
    ) {
        let radius = self.params.cluster_radius;
        if !(x_hi > x_lo) {
            return;
        }
        let u_lo = (x_lo / radius).clamp(-1.0, 1.0).asin();
        let u_hi = (x_hi / radius).clamp(-1.0, 1.0).asin();
        for (u, wu) in self.rule_2d.iter_on(u_lo, u_hi) {
            let (sin, cos) = u.sin_cos();
            let x = radius * sin;
            let y_max = radius * cos;
            let outer = scale * wu * radius * cos;
            for (y, wy) in self.rule_2d.iter_on(0.0, y_max) {
                rule.points.push((dist(x, y), outer * wy));
            }
        }
    }

    fn clamp_probability(&self, value: f64, context: &'static str) -> Result<f64> {
        let tol = self.cfg.tolerance;
        if (0.0..=1.0).contains(&value) {
            Ok(value)
        } else if value >= -tol && value < 0.0 {
            Ok(0.0)
        } else if value > 1.0 && value <= 1.0 + tol {
            Ok(1.0)
        } else {
            Err(Error::NumericInstability { context, value })
        }
    }
}

/// `L_I(s) = E[e^{-sI}]`.
pub fn laplace_interference(s: f64, params: &SystemParams, cfg: &AnalysisConfig) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(Error::invalid("s", format!("must be non-negative, got {s}")));
    }
    Ok(InterferenceField::new(params, cfg.chebyshev_order)?.laplace(s))
}

/// `ζ^(j)(ω)` with `ζ(ω) = log L_I(ω) - ωξ`, for `j ≥ 1`.
pub fn zeta_derivative(j: usize, omega: f64, xi: f64, params: &SystemParams, cfg: &AnalysisConfig) -> Result<f64> {
    if j == 0 {
        return Err(Error::invalid("j", "derivative order must be at least 1"));
    }
    Ok(InterferenceField::new(params, cfg.chebyshev_order)?.zeta_derivatives(omega, xi, j)[j])
}

/// `L̄^(j)(ω)` for `j = 0..=max_order`.
pub fn lbar_derivatives(
    omega: f64,
    max_order: usize,
    xi: f64,
    params: &SystemParams,
    cfg: &AnalysisConfig,
) -> Result<Vec<f64>> {
    Ok(InterferenceField::new(params, cfg.chebyshev_order)?.lbar_derivatives(omega, xi, max_order))
}

pub fn conditional_outage(d0: f64, inputs: &OutageInputs, cfg: &AnalysisConfig) -> Result<f64> {
    OutageAnalyzer::new(&inputs.params, inputs.xi, cfg)?.conditional_outage(d0, inputs.epsilon)
}

pub fn outage_probability(inputs: &OutageInputs, cfg: &AnalysisConfig) -> Result<f64> {
    OutageAnalyzer::new(&inputs.params, inputs.xi, cfg)?.outage_probability(inputs.epsilon)
}

pub fn outage_upper_bound(inputs: &OutageInputs, cfg: &AnalysisConfig) -> Result<f64> {
    OutageAnalyzer::new(&inputs.params, inputs.xi, cfg)?.outage_upper_bound(inputs.epsilon)
}

pub fn outage_lower_bound(inputs: &OutageInputs, cfg: &AnalysisConfig) -> Result<f64> {
    OutageAnalyzer::new(&inputs.params, inputs.xi, cfg)?.outage_lower_bound(inputs.epsilon)
}

pub fn ergodic_rate(params: &SystemParams, cfg: &AnalysisConfig) -> Result<f64> {
    OutageAnalyzer::from_params(params, cfg)?.ergodic_rate()
}
