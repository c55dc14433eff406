//! Monte Carlo engine: simulates whole network snapshots and estimates the
//! outage probability, the ergodic rate and the interference Laplace
//! transform.
//!
//! Realization `i` draws from ChaCha8 stream `i` under the master seed, and
//! per-realization results are reduced in index order. Estimates are
//! therefore bit-identical for any batch size and worker count.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[cfg(feature = "test-hooks")]
use crate::channel::LinkOverride;
use crate::channel::{link_budget, received_power, sinr, LinkBudget, LinkSampler};
use crate::error::{Error, Result};
use crate::geometry::{antenna_user_distance, sample_realization};
use crate::params::SystemParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub n_realizations: u64,
    /// Radius (m) of the disc in which interfering clusters are sampled.
    #[serde(rename = "R_sim")]
    pub sim_radius: f64,
    pub seed: u64,
    /// Realizations per parallel work item.
    pub batch_size: u64,
    /// Fixes the serving distance (m) instead of sampling the user's
    /// position relative to its antenna.
    pub pinned_d0: Option<f64>,
    /// Worker threads; 0 uses the global pool.
    pub workers: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_realizations: 100_000,
            sim_radius: 5000.0,
            seed: 0x5eed_2025,
            batch_size: 1000,
            pinned_d0: None,
            workers: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self, params: &SystemParams) -> Result<()> {
        if self.n_realizations == 0 {
            return Err(Error::invalid("n_realizations", "must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size", "must be at least 1"));
        }
        if !(self.sim_radius > 2.0 * params.cluster_radius) || !self.sim_radius.is_finite() {
            return Err(Error::invalid(
                "R_sim",
                format!(
                    "must exceed twice the cluster radius ({}), got {}",
                    2.0 * params.cluster_radius,
                    self.sim_radius
                ),
            ));
        }
        if let Some(d0) = self.pinned_d0 {
            if !(d0 >= params.height) || !d0.is_finite() {
                return Err(Error::invalid(
                    "pinned_d0",
                    format!("must be at least the antenna height ({}), got {d0}", params.height),
                ));
            }
        }
        Ok(())
    }
}

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub estimate: f64,
    pub std_error: f64,
    pub n: u64,
    pub seed: u64,
    /// Seconds spent producing the estimate.
    pub wall_time: f64,
}

impl EstimateReport {
    /// Whether `value` lies within `k` standard errors of the estimate.
    pub fn agrees_with(&self, value: f64, k: f64) -> bool {
        (self.estimate - value).abs() <= k * self.std_error
    }
}

/// Outcome of one simulated snapshot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealizationOutcome {
    pub sinr: f64,
    pub outage: bool,
    /// `log2(1 + sinr)`.
    pub rate: f64,
}

/// Simulator for one parameter set.
#[derive(Debug, Clone)]
pub struct Simulator {
    params: SystemParams,
    cfg: SimConfig,
    budget: LinkBudget,
    links: LinkSampler,
}

impl Simulator {
    pub fn new(params: &SystemParams, cfg: &SimConfig) -> Result<Self> {
        params.validate()?;
        cfg.validate(params)?;
        Ok(Self {
            params: params.clone(),
            cfg: cfg.clone(),
            budget: link_budget(params),
            links: LinkSampler::new(params)?,
        })
    }

    #[cfg(feature = "test-hooks")]
    pub fn with_link_override(mut self, overrides: LinkOverride) -> Self {
        self.links = self.links.with_overrides(overrides);
        self
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn link_budget(&self) -> LinkBudget {
        self.budget
    }

    /// Random stream of realization `index`.
    pub fn stream(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        rng.set_stream(index);
        rng
    }

    /// Simulates one snapshot and returns `(signal power, interference sum)`,
    /// both normalised by `ηP`.
    pub fn sample_powers(&self, rng: &mut ChaCha8Rng) -> (f64, f64) {
        let net = sample_realization(&self.params, self.cfg.sim_radius, rng);
        let h = self.params.height;
        let d0 = self
            .cfg
            .pinned_d0
            .unwrap_or_else(|| antenna_user_distance(net.typical_user, net.typical_antenna, h));
        let signal = received_power(&self.links.sample(d0, rng));
        let interference = net
            .interferer_antennas
            .iter()
            .map(|&a| {
                let d = antenna_user_distance(net.typical_user, a, h);
                received_power(&self.links.sample(d, rng))
            })
            .sum();
        (signal, interference)
    }

    pub fn run_realization(&self, rng: &mut ChaCha8Rng) -> RealizationOutcome {
        let (signal, interference) = self.sample_powers(rng);
        let sinr = sinr(signal, interference, self.budget.xi);
        let rate = sinr.ln_1p() / std::f64::consts::LN_2;
        RealizationOutcome {
            sinr,
            outage: rate < self.params.target_rate,
            rate,
        }
    }

    /// Runs every realization, possibly in parallel, and returns per-realization
    /// values in index order.
    fn collect<T, F>(&self, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&mut ChaCha8Rng) -> T + Sync,
    {
        let n = self.cfg.n_realizations;
        let batch = self.cfg.batch_size;
        let batches = n.div_ceil(batch);
        let work = || {
            (0..batches)
                .into_par_iter()
                .map(|b| {
                    (b * batch..((b + 1) * batch).min(n))
                        .map(|i| f(&mut self.stream(i)))
                        .collect::<Vec<T>>()
                })
                .collect::<Vec<Vec<T>>>()
        };
        let nested = if self.cfg.workers == 0 {
            work()
        } else {
            match rayon::ThreadPoolBuilder::new().num_threads(self.cfg.workers).build() {
                Ok(pool) => pool.install(work),
                Err(_) => work(),
            }
        };
        nested.into_iter().flatten().collect()
    }

    /// Outage and ergodic-rate estimates from one shared set of realizations.
    pub fn estimate_outage_and_rate(&self) -> (EstimateReport, EstimateReport) {
        let start = Instant::now();
        let outcomes = self.collect(|rng| self.run_realization(rng));
        let elapsed = start.elapsed().as_secs_f64();
        let outage = self.proportion_report(outcomes.iter().filter(|o| o.outage).count() as u64, elapsed);
        let rate = self.mean_report(outcomes.iter().map(|o| o.rate), elapsed);
        (outage, rate)
    }

    pub fn estimate_outage(&self) -> EstimateReport {
        let start = Instant::now();
        let hits = self
            .collect(|rng| self.run_realization(rng).outage)
            .into_iter()
            .filter(|&o| o)
            .count() as u64;
        self.proportion_report(hits, start.elapsed().as_secs_f64())
    }

    pub fn estimate_ergodic_rate(&self) -> EstimateReport {
        let start = Instant::now();
        let rates = self.collect(|rng| self.run_realization(rng).rate);
        self.mean_report(rates.into_iter(), start.elapsed().as_secs_f64())
    }

    /// Empirical `E[e^{-sI}]`.
    pub fn estimate_laplace(&self, s: f64) -> Result<EstimateReport> {
        if !(s >= 0.0) {
            return Err(Error::invalid("s", format!("must be non-negative, got {s}")));
        }
        let start = Instant::now();
        let values = self.collect(|rng| (-s * self.sample_powers(rng).1).exp());
        Ok(self.mean_report(values.into_iter(), start.elapsed().as_secs_f64()))
    }

    fn proportion_report(&self, hits: u64, wall_time: f64) -> EstimateReport {
        let n = self.cfg.n_realizations;
        let p = hits as f64 / n as f64;
        EstimateReport {
            estimate: p,
            std_error: (p * (1.0 - p) / n as f64).sqrt(),
            n,
            seed: self.cfg.seed,
            wall_time,
        }
    }

    fn mean_report(&self, values: impl Iterator<Item = f64> + Clone, wall_time: f64) -> EstimateReport {
        let n = self.cfg.n_realizations;
        let n_f = n as f64;
        let mean = values.clone().sum::<f64>() / n_f;
        let std_error = if n > 1 {
            let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n_f - 1.0);
            (var / n_f).sqrt()
        } else {
            0.0
        };
        EstimateReport {
            estimate: mean,
            std_error,
            n,
            seed: self.cfg.seed,
            wall_time,
        }
    }
}

pub fn run_realization(params: &SystemParams, cfg: &SimConfig, rng: &mut ChaCha8Rng) -> Result<RealizationOutcome> {
    Ok(Simulator::new(params, cfg)?.run_realization(rng))
}

pub fn estimate_outage(params: &SystemParams, cfg: &SimConfig) -> Result<EstimateReport> {
    Ok(Simulator::new(params, cfg)?.estimate_outage())
}

pub fn estimate_ergodic_rate(params: &SystemParams, cfg: &SimConfig) -> Result<EstimateReport> {
    Ok(Simulator::new(params, cfg)?.estimate_ergodic_rate())
}

pub fn estimate_laplace(s: f64, params: &SystemParams, cfg: &SimConfig) -> Result<EstimateReport> {
    Simulator::new(params, cfg)?.estimate_laplace(s)
}
