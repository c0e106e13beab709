//! Fixed and random antenna layouts, beamformed with the position blocks of
//! the alternating optimization switched off.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::ScenarioConfig;
use crate::continuous::{ao_solve, AoOptions, AoSolution};
use crate::error::{Error, Result};
use crate::linalg::Position;
use crate::model::{Layout, Realization};

/// `count` antennas on a λ/2 square grid from the region origin, filled row by
/// row with `ceil(√count)` columns.
fn half_wavelength_grid(count: usize, cfg: &ScenarioConfig, side: f64, what: &str) -> Result<Vec<Position>> {
    let pitch = cfg.wavelength / 2.0;
    if pitch < cfg.min_spacing - 1e-12 {
        return Err(Error::Layout(format!(
            "λ/2 = {pitch} is below the minimum spacing {}",
            cfg.min_spacing
        )));
    }
    let cols = (count as f64).sqrt().ceil() as usize;
    let rows = count.div_ceil(cols);
    let extent = (cols.max(rows) - 1) as f64 * pitch;
    if extent > side + 1e-12 {
        return Err(Error::Layout(format!(
            "{what} grid needs {extent} m but the region side is {side} m"
        )));
    }
    Ok((0..count)
        .map(|i| Position::new((i % cols) as f64 * pitch, (i / cols) as f64 * pitch))
        .collect())
}

/// Fixed-position arrays: every array on a λ/2 grid anchored at its region
/// origin.
pub fn fpa_layout(cfg: &ScenarioConfig) -> Result<Layout> {
    let tx = half_wavelength_grid(cfg.n_tx, cfg, cfg.tx_region, "transmit")?;
    let rx = half_wavelength_grid(cfg.n_rx, cfg, cfg.rx_region, "receive")?;
    Ok(Layout {
        tx,
        rx: vec![rx; cfg.n_users],
    })
}

const MAX_REJECTIONS: usize = 10_000;

fn random_array(rng: &mut ChaCha8Rng, count: usize, side: f64, spacing: f64, rejections: &mut usize) -> Result<Vec<Position>> {
    let mut out: Vec<Position> = Vec::with_capacity(count);
    while out.len() < count {
        let p = Position::new(rng.random_range(0.0..=side), rng.random_range(0.0..=side));
        if out.iter().all(|q| (p - q).norm() >= spacing) {
            out.push(p);
        } else {
            *rejections += 1;
            if *rejections >= MAX_REJECTIONS {
                return Err(Error::Layout(format!(
                    "gave up placing {count} antennas with spacing {spacing} in a {side} m region"
                )));
            }
        }
    }
    Ok(out)
}

/// Random-position arrays by sequential rejection sampling.
pub fn rpa_layout(cfg: &ScenarioConfig, seed: u64) -> Result<Layout> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rejections = 0;
    let tx = random_array(&mut rng, cfg.n_tx, cfg.tx_region, cfg.min_spacing, &mut rejections)?;
    let rx = (0..cfg.n_users)
        .map(|_| random_array(&mut rng, cfg.n_rx, cfg.rx_region, cfg.min_spacing, &mut rejections))
        .collect::<Result<Vec<_>>>()?;
    Ok(Layout { tx, rx })
}

/// Decoders and precoders optimized with the antennas held at `layout`.
pub fn optimize_fixed_positions(layout: &Layout, real: &Realization) -> Result<AoSolution> {
    optimize_fixed_positions_with(layout, real, &AoOptions::fixed_positions())
}

pub fn optimize_fixed_positions_with(layout: &Layout, real: &Realization, opts: &AoOptions) -> Result<AoSolution> {
    let opts = AoOptions {
        optimize_rx: false,
        optimize_tx: false,
        ..*opts
    };
    ao_solve(real, layout, &opts)
}
