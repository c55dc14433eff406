//! Quadrature rules and a finite-difference helper.
//!
//! The Gauss-Chebyshev nodes drive the interference integral on `(0, π/2)`;
//! Gauss-Legendre rules cover the spatial averages and the semi-infinite
//! ergodic-rate integral.

use std::f64::consts::{FRAC_PI_4, PI};

use crate::error::{Error, Result};

/// Newton tolerance for Legendre roots.
const NEWTON_TOL: f64 = 1e-15;
const NEWTON_MAX_ITERS: usize = 100;

/// A node of the `K`-point Gauss-Chebyshev rule mapped onto `(0, π/2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChebyshevNode {
    /// `cos((2k-1)π / 2K)` on `(-1, 1)`.
    pub theta: f64,
    /// `(π/4)(1 + theta)`, the node on `(0, π/2)`.
    pub phi: f64,
    /// `sqrt(1 - theta²)`, which undoes the Chebyshev weight function.
    pub weight: f64,
}

/// Nodes of the Gauss-Chebyshev (first kind) rule used for integrals over `(0, π/2)`.
///
/// With these nodes, `∫₀^{π/2} g(t) dt ≈ (π/4)(π/K) Σ weight_k · g(phi_k)`.
pub fn gauss_chebyshev_nodes(order: usize) -> Result<Vec<ChebyshevNode>> {
    if order == 0 {
        return Err(Error::invalid("K", "Gauss-Chebyshev order must be at least 1"));
    }
    let k_f = order as f64;
    Ok((1..=order)
        .map(|k| {
            let theta = ((2 * k - 1) as f64 * PI / (2.0 * k_f)).cos();
            let phi = FRAC_PI_4 * (1.0 + theta);
            ChebyshevNode {
                theta,
                phi,
                weight: (1.0 - theta * theta).sqrt(),
            }
        })
        .collect())
}

/// Approximates `∫₀^{π/2} g(t) dt` with the `K`-point Gauss-Chebyshev rule.
pub fn gauss_chebyshev_integrate(order: usize, g: impl Fn(f64) -> f64) -> Result<f64> {
    let nodes = gauss_chebyshev_nodes(order)?;
    let sum: f64 = nodes.iter().map(|n| n.weight * g(n.phi)).sum();
    Ok(FRAC_PI_4 * (PI / order as f64) * sum)
}

/// Nodes and weights on a finite interval.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    interval: (f64, f64),
}

impl QuadratureRule {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn interval(&self) -> (f64, f64) {
        self.interval
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Affinely maps the rule onto `(lo, hi)`.
    pub fn mapped(&self, lo: f64, hi: f64) -> Result<QuadratureRule> {
        if !(lo < hi) {
            return Err(Error::InvalidInterval { lo, hi });
        }
        let (a, b) = self.interval;
        let scale = (hi - lo) / (b - a);
        Ok(QuadratureRule {
            nodes: self.nodes.iter().map(|x| lo + (x - a) * scale).collect(),
            weights: self.weights.iter().map(|w| w * scale).collect(),
            interval: (lo, hi),
        })
    }

    /// Iterator over `(node, weight)` pairs affinely mapped onto `(lo, hi)`
    /// without allocating. Degenerate intervals yield zero weights.
    pub fn iter_on(&self, lo: f64, hi: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let (a, b) = self.interval;
        let scale = (hi - lo) / (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (lo + (x - a) * scale, w * scale))
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// `n`-point Gauss-Legendre rule on `(lo, hi)`; exact for polynomials of degree `2n - 1`.
pub fn gauss_legendre_rule(n: usize, lo: f64, hi: f64) -> Result<QuadratureRule> {
    if n == 0 {
        return Err(Error::invalid("n", "Gauss-Legendre order must be at least 1"));
    }
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidInterval { lo, hi });
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let n_f = n as f64;
    // Roots are symmetric; solve for the upper half and mirror.
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n_f + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..NEWTON_MAX_ITERS {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= NEWTON_TOL {
                dp = legendre_with_derivative(n, x).1;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    let reference = QuadratureRule {
        nodes,
        weights,
        interval: (-1.0, 1.0),
    };
    if lo == -1.0 && hi == 1.0 {
        Ok(reference)
    } else {
        reference.mapped(lo, hi)
    }
}

/// `P_n(x)` and `P_n'(x)` via the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 1.0;
    let mut p = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k_f = k as f64;
        let p_next = ((2.0 * k_f - 1.0) * x * p - (k_f - 1.0) * p_prev) / k_f;
        p_prev = p;
        p = p_next;
    }
    let d = n as f64 * (x * p - p_prev) / (x * x - 1.0);
    (p, d)
}

/// Approximates `∫₀^∞ f(ε) dε` after the substitution `ε = u/(1-u)`.
///
/// The unit interval in `u` is split at the images of `ε = 2^k` for
/// `k = -octaves..=octaves`, and every panel gets an `order`-point
/// Gauss-Legendre rule. The outermost panels close at `u = 0` and `u = 1`.
/// Integrands that vary on a logarithmic scale in `ε` (outage curves do, at
/// both ends) thus see the same resolution in every octave.
pub fn integrate_semi_infinite<F>(mut f: F, order: usize, octaves: usize) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let reference = gauss_legendre_rule(order, -1.0, 1.0)?;
    let octaves = octaves as i32;
    let mut edges = Vec::with_capacity(2 * octaves as usize + 3);
    edges.push(0.0);
    for k in -octaves..=octaves {
        let eps = 2f64.powi(k);
        edges.push(eps / (1.0 + eps));
    }
    edges.push(1.0);
    let mut total = 0.0;
    for pair in edges.windows(2) {
        for (u, w) in reference.iter_on(pair[0], pair[1]) {
            let one_minus_u = 1.0 - u;
            let eps = u / one_minus_u;
            let value = f(eps)?;
            if !value.is_finite() {
                return Err(Error::NonFinite { at: eps, value });
            }
            total += w * value / (one_minus_u * one_minus_u);
        }
    }
    Ok(total)
}

/// Central finite-difference estimate of the first or second derivative of `f` at `x`.
///
/// Both stencils have `O(h²)` truncation error.
///
/// # Panics
///
/// Panics if `order` is not 1 or 2.
pub fn finite_difference(f: impl Fn(f64) -> f64, x: f64, order: u8, h: f64) -> f64 {
    match order {
        1 => (f(x + h) - f(x - h)) / (2.0 * h),
        2 => (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h),
        _ => panic!("finite_difference supports orders 1 and 2, got {order}"),
    }
}

/// Fourth-order accurate variant used where `O(h²)` is too coarse: Richardson
/// extrapolation of the central stencil at `h` and `h/2`.
pub fn finite_difference_richardson(f: impl Fn(f64) -> f64, x: f64, order: u8, h: f64) -> f64 {
    let coarse = finite_difference(&f, x, order, h);
    let fine = finite_difference(&f, x, order, h / 2.0);
    (4.0 * fine - coarse) / 3.0
}
