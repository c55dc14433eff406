use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Thermal noise power spectral density used for the default noise floor (dBm/Hz).
pub const THERMAL_NOISE_DBM_PER_HZ: f64 = -174.0;

/// Default transmission bandwidth (Hz).
pub const DEFAULT_BANDWIDTH_HZ: f64 = 100e6;

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

/// Noise power (W) over `bandwidth_hz` at the thermal floor.
pub fn thermal_noise_watts(bandwidth_hz: f64) -> f64 {
    dbm_to_watts(THERMAL_NOISE_DBM_PER_HZ + 10.0 * bandwidth_hz.log10())
}

/// Physical and geometric parameters of the network.
///
/// Field names in serialized form follow the usual symbols (`lambda`, `R`,
/// `L`, `Np`, ...). All quantities are SI: metres, watts, hertz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemParams {
    /// Intensity of cluster centres (1/m²).
    pub lambda: f64,
    /// Cluster radius (m).
    #[serde(rename = "R")]
    pub cluster_radius: f64,
    /// Waveguide length (m).
    #[serde(rename = "L")]
    pub waveguide_len: f64,
    /// Number of preset activation positions per waveguide (odd).
    #[serde(rename = "Np")]
    pub n_presets: u32,
    /// Antenna height (m).
    #[serde(rename = "H")]
    pub height: f64,
    /// Blockage density: a link of length d is LoS with probability exp(-beta d).
    pub beta: f64,
    #[serde(rename = "alpha_L")]
    pub alpha_los: f64,
    #[serde(rename = "alpha_N")]
    pub alpha_nlos: f64,
    /// Nakagami shape for LoS links.
    #[serde(rename = "N_L")]
    pub shape_los: u32,
    /// Nakagami shape for NLoS links.
    #[serde(rename = "N_N")]
    pub shape_nlos: u32,
    /// Carrier frequency (Hz).
    #[serde(rename = "f_c")]
    pub carrier_hz: f64,
    /// Noise power (W).
    #[serde(rename = "sigma2")]
    pub noise_power: f64,
    /// Transmit power (W).
    #[serde(rename = "P")]
    pub tx_power: f64,
    /// Target rate (bits per channel use).
    #[serde(rename = "Rbar")]
    pub target_rate: f64,
    /// Users per cluster. Only one is served per resource block, so this has
    /// no effect on any statistic.
    #[serde(rename = "Ku")]
    pub users_per_cluster: u32,
}

impl Default for SystemParams {
    /// Small-cell scenario: 20 m clusters, 10 m waveguides with 11 presets,
    /// 28 GHz carrier, -94 dBm noise over 100 MHz, 20 dBm transmit power.
    fn default() -> Self {
        Self {
            lambda: 1e-6,
            cluster_radius: 20.0,
            waveguide_len: 10.0,
            n_presets: 11,
            height: 3.0,
            beta: 0.01,
            alpha_los: 2.0,
            alpha_nlos: 3.0,
            shape_los: 3,
            shape_nlos: 2,
            carrier_hz: 28e9,
            noise_power: thermal_noise_watts(DEFAULT_BANDWIDTH_HZ),
            tx_power: dbm_to_watts(20.0),
            target_rate: 1.0,
            users_per_cluster: 1,
        }
    }
}

impl SystemParams {
    /// Large-cell scenario used for ergodic-rate comparisons: 100 m clusters
    /// and waveguides, denser clusters, steeper NLoS decay, 30 dBm.
    pub fn large_cell() -> Self {
        Self {
            lambda: 1e-5,
            cluster_radius: 100.0,
            waveguide_len: 100.0,
            n_presets: 3,
            height: 4.0,
            alpha_nlos: 4.0,
            tx_power: dbm_to_watts(30.0),
            ..Self::default()
        }
    }

    /// SINR threshold `2^Rbar - 1` matching the target rate.
    pub fn sinr_threshold(&self) -> f64 {
        self.target_rate.exp2() - 1.0
    }

    /// Distance between adjacent presets; zero for a single preset.
    pub fn preset_spacing(&self) -> f64 {
        if self.n_presets <= 1 {
            0.0
        } else {
            self.waveguide_len / f64::from(self.n_presets - 1)
        }
    }

    pub fn validate(&self) -> Result<()> {
        fn positive(name: &'static str, v: f64) -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(name, format!("must be positive and finite, got {v}")))
            }
        }
        fn non_negative(name: &'static str, v: f64) -> Result<()> {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(name, format!("must be non-negative and finite, got {v}")))
            }
        }

        non_negative("lambda", self.lambda)?;
        positive("R", self.cluster_radius)?;
        positive("L", self.waveguide_len)?;
        positive("H", self.height)?;
        non_negative("beta", self.beta)?;
        positive("f_c", self.carrier_hz)?;
        positive("sigma2", self.noise_power)?;
        positive("P", self.tx_power)?;
        non_negative("Rbar", self.target_rate)?;

        if self.n_presets == 0 || self.n_presets % 2 == 0 {
            return Err(Error::invalid(
                "Np",
                format!("must be an odd positive integer, got {}", self.n_presets),
            ));
        }
        if self.waveguide_len / 2.0 >= self.cluster_radius {
            return Err(Error::invalid(
                "L",
                format!(
                    "half the waveguide length ({}) must be below the cluster radius ({})",
                    self.waveguide_len / 2.0,
                    self.cluster_radius
                ),
            ));
        }
        if !(self.alpha_los >= 2.0) || !self.alpha_los.is_finite() {
            return Err(Error::invalid("alpha_L", format!("must be at least 2, got {}", self.alpha_los)));
        }
        if !(self.alpha_nlos >= self.alpha_los) || !self.alpha_nlos.is_finite() {
            return Err(Error::invalid(
                "alpha_N",
                format!("must be at least alpha_L ({}), got {}", self.alpha_los, self.alpha_nlos),
            ));
        }
        if self.shape_los == 0 {
            return Err(Error::invalid("N_L", "Nakagami shape must be a positive integer"));
        }
        if self.shape_nlos == 0 {
            return Err(Error::invalid("N_N", "Nakagami shape must be a positive integer"));
        }
        if self.users_per_cluster == 0 {
            return Err(Error::invalid("Ku", "at least one user per cluster is required"));
        }
        // Aggregate interference from a planar PPP is infinite unless the
        // far-field decay beats r^-2.
        if self.lambda > 0.0 {
            if self.alpha_nlos <= 2.0 {
                return Err(Error::invalid(
                    "alpha_N",
                    "must exceed 2 when lambda > 0, otherwise aggregate interference diverges",
                ));
            }
            if self.beta == 0.0 && self.alpha_los <= 2.0 {
                return Err(Error::invalid(
                    "beta",
                    "must be positive when alpha_L = 2 and lambda > 0, otherwise aggregate interference diverges",
                ));
            }
        }
        Ok(())
    }
}
