//! Shared problem data: a channel realization, antenna layouts and beamformers.

use rand::Rng;

use crate::channel::{
    assemble_user_channel, draw_path_geometry, sampled_jammer_channels, PathGeometry,
    ScenarioConfig, UncertaintySet,
};
use crate::error::{Error, Result};
use crate::linalg::{min_pairwise_distance, CMatrix, CVector, Position};

/// One drawn channel realization together with the uncertainty grid used to
/// evaluate jammer channels.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    pub cfg: ScenarioConfig,
    pub geom: PathGeometry,
    pub unc: UncertaintySet,
}

impl Realization {
    pub fn new(cfg: ScenarioConfig, geom: PathGeometry) -> Self {
        let unc = UncertaintySet::centered(cfg.uncertainty_deg, cfg.q_elev, cfg.q_azim);
        Realization { cfg, geom, unc }
    }

    pub fn draw<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Result<Self> {
        cfg.validate()?;
        let geom = draw_path_geometry(cfg, rng);
        Ok(Realization::new(cfg.clone(), geom))
    }

    /// Same channels with a different uncertainty sampling density.
    pub fn with_grid(&self, q_elev: usize, q_azim: usize) -> Self {
        Realization {
            cfg: self.cfg.clone(),
            geom: self.geom.clone(),
            unc: UncertaintySet::centered(self.cfg.uncertainty_deg, q_elev, q_azim),
        }
    }

    pub fn user_channel(&self, k: usize, tx: &[Position], rx: &[Position]) -> CMatrix {
        assemble_user_channel(tx, rx, &self.geom.users[k], self.cfg.wavelength)
            .expect("realization links are consistent")
    }

    /// Sampled jammer channels at user `k`, indexed `[jammer][sample]`.
    pub fn jammer_channels(&self, k: usize, rx: &[Position]) -> Vec<Vec<CVector>> {
        self.geom
            .jammers
            .iter()
            .map(|links| {
                sampled_jammer_channels(rx, &links[k], &self.unc, self.cfg.wavelength)
                    .expect("realization links are consistent")
            })
            .collect()
    }

    /// `Σ_r p_r Σ_s μ_s ĝ ĝᴴ` at user `k`.
    pub fn jammer_covariance(&self, k: usize, rx: &[Position]) -> CMatrix {
        let m = rx.len();
        let mut acc = CMatrix::zeros(m, m);
        for (r, chans) in self.jammer_channels(k, rx).iter().enumerate() {
            let p = self.cfg.jammer_powers[r];
            for (g, &mu) in chans.iter().zip(&self.unc.weights) {
                acc += (g * g.adjoint()).scale(p * mu);
            }
        }
        acc
    }

    /// Jammer covariance at user `k` for the single sampled offset `s`
    /// (all jammers at the same offset).
    pub fn jammer_covariance_at(&self, k: usize, rx: &[Position], s: usize) -> CMatrix {
        let m = rx.len();
        let mut acc = CMatrix::zeros(m, m);
        for (r, chans) in self.jammer_channels(k, rx).iter().enumerate() {
            let g = &chans[s];
            acc += (g * g.adjoint()).scale(self.cfg.jammer_powers[r]);
        }
        acc
    }
}

/// Continuous antenna positions: the BS array and one array per user.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub tx: Vec<Position>,
    pub rx: Vec<Vec<Position>>,
}

fn check_array(p: &[Position], side: f64, spacing: f64, what: &str) -> Result<()> {
    for q in p {
        if !(0.0..=side).contains(&q.x) || !(0.0..=side).contains(&q.y) {
            return Err(Error::Layout(format!(
                "{what} antenna at ({:.4}, {:.4}) outside [0, {side}]²",
                q.x, q.y
            )));
        }
    }
    let d = min_pairwise_distance(p);
    if d < spacing - 1e-6 {
        return Err(Error::Layout(format!(
            "{what} antennas {d:.6} m apart, minimum is {spacing}"
        )));
    }
    Ok(())
}

impl Layout {
    /// Region membership and spacing (`≥ D − 1e−6`).
    pub fn check(&self, cfg: &ScenarioConfig) -> Result<()> {
        if self.tx.len() != cfg.n_tx || self.rx.len() != cfg.n_users {
            return Err(Error::Dimension("layout does not match the scenario".into()));
        }
        check_array(&self.tx, cfg.tx_region, cfg.min_spacing, "transmit")?;
        for (k, r) in self.rx.iter().enumerate() {
            if r.len() != cfg.n_rx {
                return Err(Error::Dimension(format!("user {k} has {} antennas", r.len())));
            }
            check_array(r, cfg.rx_region, cfg.min_spacing, &format!("user {k}"))?;
        }
        Ok(())
    }
}

/// Precoders (columns of `w`), decoders and, for the discrete pipeline, the
/// per-user power split.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerSet {
    pub w: CMatrix,
    pub v: Vec<CVector>,
    pub p: Vec<f64>,
}

impl BeamformerSet {
    pub fn power(&self) -> f64 {
        self.w.norm_squared()
    }

    /// Rescales `w` to total power `p_max`.
    pub fn rescale(&mut self, p_max: f64) {
        let n = self.w.norm();
        if n > 0.0 {
            self.w.scale_mut(p_max.sqrt() / n);
        }
        self.p = self.w.column_iter().map(|c| c.norm_squared()).collect();
    }
}
