//! SINR, rate and beampattern evaluation.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::channel::PathAngle;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector, Position, C64};
use crate::model::{BeamformerSet, Layout, Realization};

/// SINR of user `k` with decoder `v`, channel `h` (`M × N`), precoders `w`,
/// jammer covariance `jam` (already power-weighted) and noise power `noise`.
pub fn sinr(v: &CVector, h: &CMatrix, w: &CMatrix, k: usize, jam: &CMatrix, noise: f64) -> Result<f64> {
    let vn = v.norm_squared();
    if vn == 0.0 {
        return Err(Error::ZeroDecoder);
    }
    if h.nrows() != v.len() || h.ncols() != w.nrows() || jam.nrows() != v.len() || k >= w.ncols() {
        return Err(Error::Dimension("sinr operands do not conform".into()));
    }
    let eff = h.adjoint() * v;
    let mut signal = 0.0;
    let mut interference = 0.0;
    for (i, wi) in w.column_iter().enumerate() {
        let p = eff.dotc(&wi).norm_sqr();
        if i == k {
            signal = p;
        } else {
            interference += p;
        }
    }
    let jamming = v.dotc(&(jam * v)).re.max(0.0);
    Ok(signal / (interference + jamming + noise * vn))
}

/// `Σ_r p_r g_r g_rᴴ` for one jammer channel per jammer.
pub fn jammer_covariance_from_channels(channels: &[CVector], powers: &[f64]) -> CMatrix {
    let m = channels.first().map_or(0, |g| g.len());
    let mut acc = CMatrix::zeros(m, m);
    for (g, p) in channels.iter().zip(powers) {
        acc += (g * g.adjoint()).scale(*p);
    }
    acc
}

/// Per-user rates (bits/s/Hz) against the sample-averaged jammer covariance
/// of `real.unc`. This is the objective the optimizers work on.
pub fn robust_user_rates(real: &Realization, layout: &Layout, bf: &BeamformerSet) -> Vec<f64> {
    (0..real.cfg.n_users)
        .map(|k| {
            let h = real.user_channel(k, &layout.tx, &layout.rx[k]);
            let jam = real.jammer_covariance(k, &layout.rx[k]);
            sinr(&bf.v[k], &h, &bf.w, k, &jam, real.cfg.noise_power)
                .map_or(0.0, |g| (1.0 + g).log2())
        })
        .collect()
}

pub fn robust_sum_rate(real: &Realization, layout: &Layout, bf: &BeamformerSet) -> f64 {
    robust_user_rates(real, layout, bf).iter().sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    /// Rates at the worst sampled jammer offset.
    pub user_rates: Vec<f64>,
    pub sum_rate: f64,
    /// Each user's minimum rate over all sampled offsets.
    pub user_min_rates: Vec<f64>,
    /// SINRs at the worst sampled offset (linear).
    pub sinr: Vec<f64>,
    pub qos_ok: bool,
    pub relax_level: u32,
    pub trace: Vec<f64>,
}

/// Worst case over the sampled jammer offsets of `real.unc` (all jammers
/// share the offset) of the sum rate.
pub fn worst_case_sum_rate(real: &Realization, layout: &Layout, bf: &BeamformerSet) -> MetricRecord {
    let k_users = real.cfg.n_users;
    let s_count = real.unc.len();
    // sinrs[s][k]
    let mut sinrs = vec![vec![0.0; k_users]; s_count];
    for k in 0..k_users {
        let h = real.user_channel(k, &layout.tx, &layout.rx[k]);
        let chans = real.jammer_channels(k, &layout.rx[k]);
        for (s, row) in sinrs.iter_mut().enumerate() {
            let per: Vec<CVector> = chans.iter().map(|c| c[s].clone()).collect();
            let jam = jammer_covariance_from_channels(&per, &real.cfg.jammer_powers);
            row[k] = sinr(&bf.v[k], &h, &bf.w, k, &jam, real.cfg.noise_power).unwrap_or(0.0);
        }
    }
    let rates: Vec<Vec<f64>> = sinrs
        .iter()
        .map(|row| row.iter().map(|g| (1.0 + g).log2()).collect())
        .collect();
    let (worst, _) = rates
        .iter()
        .map(|r| r.iter().sum::<f64>())
        .enumerate()
        .fold((0, f64::INFINITY), |a, (i, v)| if v < a.1 { (i, v) } else { a });
    let user_min_rates: Vec<f64> = (0..k_users)
        .map(|k| rates.iter().map(|r| r[k]).fold(f64::INFINITY, f64::min))
        .collect();
    let qos_ok = user_min_rates.iter().all(|r| *r >= real.cfg.min_rate - 1e-6);
    MetricRecord {
        sum_rate: rates[worst].iter().sum(),
        user_rates: rates[worst].clone(),
        user_min_rates,
        sinr: sinrs[worst].clone(),
        qos_ok,
        relax_level: 0,
        trace: Vec::new(),
    }
}

/// Smallest `ℓ ≤ max_relax` with every per-user worst-case rate at least
/// `factor^ℓ · min_rate − 1e−6`, or `max_relax + 1` if none.
pub fn achieved_relax_level(real: &Realization, layout: &Layout, bf: &BeamformerSet, factor: f64, max_relax: u32) -> u32 {
    let worst = worst_case_sum_rate(real, layout, bf).user_min_rates;
    (0..=max_relax)
        .find(|&l| {
            let target = real.cfg.min_rate * factor.powi(l as i32);
            worst.iter().all(|r| *r >= target - 1e-6)
        })
        .unwrap_or(max_relax + 1)
}

/// Elevation and azimuth axes of a beampattern, radians.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleGrid {
    pub elevations: Vec<f64>,
    pub azimuths: Vec<f64>,
}

impl AngleGrid {
    /// `n × n` points over `[−90°, 90°]²`.
    pub fn uniform(n: usize) -> Self {
        let axis: Vec<f64> = if n <= 1 {
            vec![0.0]
        } else {
            (0..n).map(|i| -PI / 2.0 + PI * i as f64 / (n - 1) as f64).collect()
        };
        AngleGrid {
            elevations: axis.clone(),
            azimuths: axis,
        }
    }
}

impl Default for AngleGrid {
    fn default() -> Self {
        AngleGrid::uniform(181)
    }
}

/// Array gain `|a(θ,φ)ᴴ x|²` in dB, normalized to a 0 dB peak; indexed
/// `[elevation][azimuth]`.
fn beampattern(x: &CVector, positions: &[Position], grid: &AngleGrid, wavelength: f64) -> Vec<Vec<f64>> {
    let kappa = 2.0 * PI / wavelength;
    let raw: Vec<Vec<f64>> = grid
        .elevations
        .iter()
        .map(|&el| {
            grid.azimuths
                .iter()
                .map(|&az| {
                    let p = PathAngle::new(el, az).dircos();
                    let mut acc = C64::new(0.0, 0.0);
                    for (pos, xi) in positions.iter().zip(x.iter()) {
                        acc += C64::from_polar(1.0, -kappa * p.dot(pos)) * xi;
                    }
                    acc.norm_sqr()
                })
                .collect()
        })
        .collect();
    let peak = raw.iter().flatten().copied().fold(0.0, f64::max);
    raw.into_iter()
        .map(|row| {
            row.into_iter()
                .map(|g| {
                    if peak > 0.0 {
                        (10.0 * (g / peak).log10()).max(-300.0)
                    } else {
                        -300.0
                    }
                })
                .collect()
        })
        .collect()
}

pub fn transmit_beampattern(w: &CVector, tx: &[Position], grid: &AngleGrid, wavelength: f64) -> Vec<Vec<f64>> {
    beampattern(w, tx, grid, wavelength)
}

pub fn receive_beampattern(v: &CVector, rx: &[Position], grid: &AngleGrid, wavelength: f64) -> Vec<Vec<f64>> {
    beampattern(v, rx, grid, wavelength)
}

/// Unnormalized `|a(θ,φ)ᴴ x|²` at one direction.
pub fn array_gain(x: &CVector, positions: &[Position], angle: PathAngle, wavelength: f64) -> f64 {
    let kappa = 2.0 * PI / wavelength;
    let p = angle.dircos();
    positions
        .iter()
        .zip(x.iter())
        .map(|(pos, xi)| C64::from_polar(1.0, -kappa * p.dot(pos)) * xi)
        .sum::<C64>()
        .norm_sqr()
}
