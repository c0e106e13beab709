use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical and algorithmic parameters of one simulated scenario.
///
/// Powers are linear watts, lengths meters, angles as documented per field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    /// Transmit antennas at the base station.
    pub n_tx: usize,
    /// Receive antennas per user.
    pub n_rx: usize,
    pub n_users: usize,
    pub n_jammers: usize,
    /// Propagation paths per link.
    pub n_paths: usize,
    pub wavelength: f64,
    /// Side of the square transmit moving region.
    pub tx_region: f64,
    /// Side of each square receive moving region.
    pub rx_region: f64,
    /// Minimum inter-antenna spacing.
    pub min_spacing: f64,
    pub p_max: f64,
    /// Noise power per receive antenna.
    pub noise_power: f64,
    /// Minimum worst-case rate per user, bits/s/Hz.
    pub min_rate: f64,
    /// Channel gain at the reference distance (linear).
    pub ref_gain: f64,
    pub path_loss_exp: f64,
    /// Elevation samples of the jammer uncertainty grid.
    pub q_elev: usize,
    /// Azimuth samples of the jammer uncertainty grid.
    pub q_azim: usize,
    pub jammer_powers: Vec<f64>,
    /// Full width of the jammer angular uncertainty, degrees.
    pub uncertainty_deg: f64,
    pub bs_position: [f64; 3],
    pub jammer_positions: Vec<[f64; 3]>,
    /// `(elevation, azimuth)` of each user seen from the base station, degrees.
    pub user_directions_deg: Vec<(f64, f64)>,
    pub user_radius: f64,
    pub master_seed: u64,
}

pub(crate) fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub(crate) fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

impl Default for ScenarioConfig {
    /// Three users, two jammers and the reference array parameters
    /// (16 × 9 antennas, 8 paths, 4λ regions, λ/2 spacing).
    fn default() -> Self {
        let wavelength = 0.1;
        let p_max = dbm_to_watts(10.0);
        let mut cfg = ScenarioConfig {
            n_tx: 16,
            n_rx: 9,
            n_users: 3,
            n_jammers: 2,
            n_paths: 8,
            wavelength,
            tx_region: 4.0 * wavelength,
            rx_region: 4.0 * wavelength,
            min_spacing: wavelength / 2.0,
            p_max,
            noise_power: dbm_to_watts(-70.0),
            min_rate: 1.0,
            ref_gain: db_to_linear(-30.0),
            path_loss_exp: 2.6,
            q_elev: 5,
            q_azim: 5,
            jammer_powers: Vec::new(),
            uncertainty_deg: 4.0,
            bs_position: [0.0, 0.0, 30.0],
            jammer_positions: vec![[4.0, -13.5, 48.5], [-0.5, -8.5, 66.0]],
            user_directions_deg: vec![(-40.0, 30.0), (-30.0, 50.0), (-20.0, 70.0)],
            user_radius: 100.0,
            master_seed: 0,
        };
        cfg.set_sjnr_db(-20.0);
        cfg
    }
}

impl ScenarioConfig {
    /// Sets jammer powers from a signal-to-jamming-plus-noise ratio
    /// `Pmax / Σ p_J` (dB), split equally across jammers.
    pub fn set_sjnr_db(&mut self, sjnr_db: f64) {
        let total = self.p_max * 10f64.powf(-sjnr_db / 10.0);
        let r = self.n_jammers.max(1) as f64;
        self.jammer_powers = vec![total / r; self.n_jammers];
    }

    pub fn total_jammer_power(&self) -> f64 {
        self.jammer_powers.iter().sum()
    }

    /// Sets both moving regions to `ratio · λ`.
    pub fn set_region_wavelengths(&mut self, ratio: f64) {
        self.tx_region = ratio * self.wavelength;
        self.rx_region = ratio * self.wavelength;
    }

    pub fn num_uncertainty_samples(&self) -> usize {
        self.q_elev * self.q_azim
    }

    fn grid_side(region: f64, spacing: f64) -> usize {
        (region / spacing + 1e-9).floor() as usize + 1
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("n_tx", self.n_tx),
            ("n_rx", self.n_rx),
            ("n_users", self.n_users),
            ("n_jammers", self.n_jammers),
            ("n_paths", self.n_paths),
            ("q_elev", self.q_elev),
            ("q_azim", self.q_azim),
        ];
        for (field, v) in counts {
            if v < 1 {
                return Err(Error::config(field, "must be at least 1"));
            }
        }
        let positive = [
            ("wavelength", self.wavelength),
            ("tx_region", self.tx_region),
            ("rx_region", self.rx_region),
            ("min_spacing", self.min_spacing),
            ("p_max", self.p_max),
            ("noise_power", self.noise_power),
            ("ref_gain", self.ref_gain),
            ("user_radius", self.user_radius),
        ];
        for (field, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(field, format!("must be positive, got {v}")));
            }
        }
        if !(self.min_rate >= 0.0) {
            return Err(Error::config("min_rate", "must be non-negative"));
        }
        if !(self.uncertainty_deg >= 0.0) {
            return Err(Error::config("uncertainty_deg", "must be non-negative"));
        }
        if self.min_spacing > self.tx_region {
            return Err(Error::config(
                "min_spacing",
                format!(
                    "D = {} exceeds the transmit region side Wt = {}",
                    self.min_spacing, self.tx_region
                ),
            ));
        }
        if self.min_spacing > self.rx_region {
            return Err(Error::config(
                "min_spacing",
                format!(
                    "D = {} exceeds the receive region side Wr = {}",
                    self.min_spacing, self.rx_region
                ),
            ));
        }
        let gt = Self::grid_side(self.tx_region, self.min_spacing);
        if gt * gt < self.n_tx {
            return Err(Error::config(
                "n_tx",
                format!("a {gt}x{gt} grid with spacing D cannot host {} antennas", self.n_tx),
            ));
        }
        let gr = Self::grid_side(self.rx_region, self.min_spacing);
        if gr * gr < self.n_rx {
            return Err(Error::config(
                "n_rx",
                format!("a {gr}x{gr} grid with spacing D cannot host {} antennas", self.n_rx),
            ));
        }
        if self.jammer_positions.len() != self.n_jammers {
            return Err(Error::config(
                "jammer_positions",
                format!("expected {} positions", self.n_jammers),
            ));
        }
        if self.jammer_powers.len() != self.n_jammers {
            return Err(Error::config(
                "jammer_powers",
                format!("expected {} powers", self.n_jammers),
            ));
        }
        if self.jammer_powers.iter().any(|p| !(*p >= 0.0)) {
            return Err(Error::config("jammer_powers", "must be non-negative"));
        }
        if self.user_directions_deg.len() != self.n_users {
            return Err(Error::config(
                "user_directions_deg",
                format!("expected {} directions", self.n_users),
            ));
        }
        Ok(())
    }
}
