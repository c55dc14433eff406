//! Link-level model: blockage, Nakagami fading, path loss and SINR.
//!
//! Powers are normalised by `ηP`, so a link's received power is
//! `|g|² d^-α` and the noise enters as `ξ = σ² / (ηP)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{Error, Result};
use crate::params::{SystemParams, SPEED_OF_LIGHT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LinkState {
    Los,
    Nlos,
}

/// One link's draw: geometry, blockage state and fading power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkSample {
    pub distance: f64,
    pub state: LinkState,
    pub fading_power: f64,
    pub alpha: f64,
    pub shape: u32,
}

/// Link budget constants: `η = (c / 4πf_c)²` and `ξ = σ² / (ηP)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub eta: f64,
    pub xi: f64,
}

/// Probability that a link of length `d` is line-of-sight.
pub fn los_probability(d: f64, beta: f64) -> Result<f64> {
    if !(d >= 0.0) {
        return Err(Error::invalid("d", format!("distance must be non-negative, got {d}")));
    }
    if !(beta >= 0.0) {
        return Err(Error::invalid("beta", format!("must be non-negative, got {beta}")));
    }
    Ok((-beta * d).exp())
}

pub fn link_budget(params: &SystemParams) -> LinkBudget {
    let wavelength_factor = SPEED_OF_LIGHT / (4.0 * PI * params.carrier_hz);
    let eta = wavelength_factor * wavelength_factor;
    LinkBudget {
        eta,
        xi: params.noise_power / (eta * params.tx_power),
    }
}

/// Received power normalised by `ηP`.
pub fn received_power(link: &LinkSample) -> f64 {
    link.fading_power * link.distance.powf(-link.alpha)
}

pub fn sinr(signal_power: f64, interference_sum: f64, xi: f64) -> f64 {
    signal_power / (interference_sum + xi)
}

/// Phase rotation accumulated over `arc_length` metres of waveguide. The
/// guide wavelength is taken as the free-space wavelength `c / f_c`.
///
/// The factor has unit modulus and therefore drops out of every power metric.
pub fn inwaveguide_phase(arc_length: f64, carrier_hz: f64) -> Complex64 {
    let guide_wavelength = SPEED_OF_LIGHT / carrier_hz;
    Complex64::from_polar(1.0, -2.0 * PI * arc_length / guide_wavelength)
}

/// Forces link draws in simulator tests.
#[cfg(feature = "test-hooks")]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LinkOverride {
    /// Replace the fading draw by its mean (1).
    pub pin_fading: bool,
    pub force_state: Option<LinkState>,
}

/// Draws blockage states and fading powers for a fixed parameter set.
#[derive(Debug, Clone)]
pub struct LinkSampler {
    beta: f64,
    los: (f64, u32, Gamma<f64>),
    nlos: (f64, u32, Gamma<f64>),
    #[cfg(feature = "test-hooks")]
    overrides: LinkOverride,
}

impl LinkSampler {
    pub fn new(params: &SystemParams) -> Result<Self> {
        let gamma = |name: &'static str, shape: u32| {
            if shape == 0 {
                return Err(Error::invalid(name, "Nakagami shape must be a positive integer"));
            }
            let n = f64::from(shape);
            Gamma::new(n, 1.0 / n).map_err(|e| Error::invalid(name, e.to_string()))
        };
        Ok(Self {
            beta: params.beta,
            los: (params.alpha_los, params.shape_los, gamma("N_L", params.shape_los)?),
            nlos: (params.alpha_nlos, params.shape_nlos, gamma("N_N", params.shape_nlos)?),
            #[cfg(feature = "test-hooks")]
            overrides: LinkOverride::default(),
        })
    }

    #[cfg(feature = "test-hooks")]
    pub fn with_overrides(mut self, overrides: LinkOverride) -> Self {
        self.overrides = overrides;
        self
    }

    pub fn sample<R: Rng + ?Sized>(&self, distance: f64, rng: &mut R) -> LinkSample {
        let los = rng.random::<f64>() < (-self.beta * distance).exp();
        #[allow(unused_mut)]
        let mut state = if los { LinkState::Los } else { LinkState::Nlos };
        #[cfg(feature = "test-hooks")]
        if let Some(forced) = self.overrides.force_state {
            state = forced;
        }
        let (alpha, shape, dist) = match state {
            LinkState::Los => &self.los,
            LinkState::Nlos => &self.nlos,
        };
        #[allow(unused_mut)]
        let mut fading_power = dist.sample(rng);
        #[cfg(feature = "test-hooks")]
        if self.overrides.pin_fading {
            fading_power = 1.0;
        }
        LinkSample {
            distance,
            state,
            fading_power,
            alpha: *alpha,
            shape: *shape,
        }
    }
}

/// Draws one link of length `distance`: LoS with probability `exp(-βd)`,
/// fading power `Gamma(N, 1/N)` with the state's shape.
pub fn sample_link<R: Rng + ?Sized>(distance: f64, params: &SystemParams, rng: &mut R) -> Result<LinkSample> {
    Ok(LinkSampler::new(params)?.sample(distance, rng))
}
