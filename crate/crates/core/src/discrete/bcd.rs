use log::{debug, warn};
use nalgebra::Vector2;

use super::grid::{build_dictionary_channels, Dictionary, GridLayout};
use super::power::{power_allocation_from, PowerOptions};
use super::receiver::receiver_block;
use super::transmitter::{build_mm_somp_matrices, transmitter_block};
use crate::baselines::fpa_layout;
use crate::continuous::{initial_precoders, mmse_decoder, PrecoderOptions};
use crate::channel::ScenarioConfig;
use crate::error::Result;
use crate::linalg::{CMatrix, CVector, Position, RMatrix};
use crate::metrics::{achieved_relax_level, robust_user_rates, worst_case_sum_rate};
use crate::model::{BeamformerSet, Layout, Realization};

#[derive(Debug, Clone, Copy)]
pub struct BcdOptions {
    /// Placements of the λ/2 pattern per axis for [`bcd_solve`]; `None`
    /// tries every translation by whole grid steps.
    pub starts_per_axis: Option<usize>,
    pub max_iters: usize,
    /// Relative sum-rate change that ends the loop.
    pub tol: f64,
    pub power: PowerOptions,
    /// Keep the starting point and the best iterate so far after every
    /// iteration.
    pub keep_snapshots: bool,
}

impl Default for BcdOptions {
    fn default() -> Self {
        BcdOptions {
            starts_per_axis: None,
            max_iters: 30,
            tol: 1e-4,
            power: PowerOptions::default(),
            keep_snapshots: false,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct BcdTrace {
    /// Robust sum rate (bits/s/Hz) at the starting point.
    pub initial: f64,
    /// Robust sum rate after each iteration.
    pub sum_rates: Vec<f64>,
    /// Worst case over the sampled offsets of the sum rate, at the start and
    /// after each iteration.
    pub worst_case: Vec<f64>,
    /// Power allocation fell back to max-min at that iteration.
    pub power_fallback: Vec<bool>,
}

#[derive(Debug, Clone)]
pub struct BcdSolution {
    pub grid: GridLayout,
    pub bf: BeamformerSet,
    pub trace: BcdTrace,
    /// At least 1 when the returned iterate needed the max-min power
    /// fallback; otherwise the relaxation step met by the per-user worst-case
    /// rates, as in the continuous solver.
    pub relax_level: u32,
    pub snapshots: Vec<(GridLayout, BeamformerSet)>,
}

/// Per-user effective channel over the transmit grid and effective noise
/// `vᴴC ᴴ O C v + σ²‖v‖²`.
fn effective(dict: &Dictionary, real: &Realization, k: usize, support: &[usize], v: &CVector) -> (CVector, f64) {
    let h = dict.h[k].select_rows(support).adjoint() * v;
    let mut noise = real.cfg.noise_power * v.norm_squared();
    for (chans, p) in dict.g[k].iter().zip(&real.cfg.jammer_powers) {
        for (g, mu) in chans.iter().zip(&real.unc.weights) {
            noise += p * mu * g.select_rows(support).dotc(v).norm_sqr();
        }
    }
    (h, noise)
}

/// MMSE decoders on fixed supports.
fn refresh_decoders(dict: &Dictionary, real: &Realization, grid: &GridLayout, w: &CMatrix) -> Result<Vec<CVector>> {
    (0..real.cfg.n_users)
        .map(|k| {
            let rows = &grid.rx_support[k];
            let h = dict.h[k].select_rows(rows).select_columns(&grid.tx_support);
            let m = rows.len();
            let mut jam = CMatrix::zeros(m, m);
            for (chans, p) in dict.g[k].iter().zip(&real.cfg.jammer_powers) {
                for (g, mu) in chans.iter().zip(&real.unc.weights) {
                    let g = g.select_rows(rows);
                    jam += (&g * g.adjoint()).scale(p * mu);
                }
            }
            mmse_decoder(&h, w, k, &jam, real.cfg.noise_power)
        })
        .collect()
}

fn beamformers(w: CMatrix, v: Vec<CVector>) -> BeamformerSet {
    let p = w.column_iter().map(|c| c.norm_squared()).collect();
    BeamformerSet { w, v, p }
}

struct Iterate {
    grid: GridLayout,
    bf: BeamformerSet,
    rate: f64,
    worst: f64,
    qos: bool,
    fallback: bool,
}

impl Iterate {
    /// Meeting every minimum rate first, then the worst-case sum rate.
    fn better_than(&self, other: &Iterate) -> bool {
        (self.qos, self.worst) > (other.qos, other.worst)
    }
}

fn evaluate(real: &Realization, grid: GridLayout, bf: BeamformerSet, fallback: bool) -> Iterate {
    let layout = grid.to_layout();
    let rates = robust_user_rates(real, &layout, &bf);
    let qos = rates.iter().all(|r| *r >= real.cfg.min_rate - 1e-6);
    Iterate {
        rate: rates.iter().sum(),
        worst: worst_case_sum_rate(real, &layout, &bf).sum_rate,
        grid,
        bf,
        qos,
        fallback,
    }
}

/// The fixed λ/2 arrays translated by whole grid steps to `n × n`
/// placements spread evenly over the free room in each region, the
/// origin-anchored one first. Duplicates are dropped. `None` uses one
/// placement per grid step of the larger free room.
pub fn start_layouts(cfg: &ScenarioConfig, n: Option<usize>) -> Result<Vec<Layout>> {
    let fpa = fpa_layout(cfg)?;
    let room = |p: &[Position], side: f64| side - p.iter().map(|q| q.x.max(q.y)).fold(0.0, f64::max);
    let (room_t, room_r) = (room(&fpa.tx, cfg.tx_region), room(&fpa.rx[0], cfg.rx_region));
    let steps = |frac: f64, free: f64| (frac * free / cfg.min_spacing + 1e-9).floor() * cfg.min_spacing;
    let n = n.unwrap_or_else(|| (room_t.max(room_r) / cfg.min_spacing + 1e-9).floor() as usize + 1);
    let mut seen = Vec::new();
    let mut out = Vec::new();
    for i in 0..n.max(1) {
        for j in 0..n.max(1) {
            let fx = if n > 1 { i as f64 / (n - 1) as f64 } else { 0.0 };
            let fy = if n > 1 { j as f64 / (n - 1) as f64 } else { 0.0 };
            let shift = [steps(fx, room_t), steps(fy, room_t), steps(fx, room_r), steps(fy, room_r)];
            if seen.contains(&shift) {
                continue;
            }
            seen.push(shift);
            let mut l = fpa.clone();
            for p in l.tx.iter_mut() {
                *p += Vector2::new(shift[0], shift[1]);
            }
            for p in l.rx.iter_mut().flatten() {
                *p += Vector2::new(shift[2], shift[3]);
            }
            out.push(l);
        }
    }
    Ok(out)
}

/// Block coordinate descent over the receive block (decoders and receive
/// supports by RLS-SOMP), the transmit block (precoder directions and
/// transmit support by RLS-SOMP on the rate bound) and the power split.
///
/// Runs the iteration from every layout of [`start_layouts`] and keeps the
/// best result by the same rule as within one run.
pub fn bcd_solve(real: &Realization, opts: &BcdOptions) -> Result<BcdSolution> {
    let base = GridLayout::new(real);
    let dict = build_dictionary_channels(&base.grid_t, &base.grid_r, real)?;
    let mut best: Option<(BcdSolution, Iterate)> = None;
    for start in start_layouts(&real.cfg, opts.starts_per_axis)? {
        let mut grid = base.clone();
        grid.snap(&start)?;
        let out = run(real, &dict, grid, opts)?;
        if best.as_ref().is_none_or(|(_, b)| out.1.better_than(b)) {
            best = Some(out);
        }
    }
    Ok(best.expect("at least one start layout").0)
}

/// BCD started from `start` snapped to the grid, with the continuous
/// pipeline's initial precoders. The greedy blocks are not monotone, so the
/// best iterate seen is returned: one meeting every minimum rate (robust
/// rates) if any, and among those the largest worst-case sum rate over the
/// sampled offsets.
pub fn bcd_solve_from(real: &Realization, start: &Layout, opts: &BcdOptions) -> Result<BcdSolution> {
    let mut grid = GridLayout::new(real);
    grid.snap(start)?;
    let dict = build_dictionary_channels(&grid.grid_t, &grid.grid_r, real)?;
    Ok(run(real, &dict, grid, opts)?.0)
}

fn run(real: &Realization, dict: &Dictionary, mut grid: GridLayout, opts: &BcdOptions) -> Result<(BcdSolution, Iterate)> {
    let cfg = &real.cfg;
    let layout = grid.to_layout();
    let mut w = initial_precoders(real, &layout);
    let v = refresh_decoders(dict, real, &grid, &w)?;
    let mut best = evaluate(real, grid.clone(), beamformers(w.clone(), v), false);
    let mut trace = BcdTrace {
        initial: best.rate,
        worst_case: vec![best.worst],
        ..BcdTrace::default()
    };
    let mut snapshots = Vec::new();
    if opts.keep_snapshots {
        snapshots.push((best.grid.clone(), best.bf.clone()));
    }
    let min_rates = vec![cfg.min_rate; cfg.n_users];
    let mut prev = best.rate;

    for it in 0..opts.max_iters {
        let mut v = Vec::with_capacity(cfg.n_users);
        for k in 0..cfg.n_users {
            let run = |fixed: Option<&[usize]>| {
                receiver_block(
                    &dict.h[k],
                    &dict.g[k],
                    &grid.tx_support,
                    &w,
                    k,
                    cfg.n_rx,
                    &cfg.jammer_powers,
                    &real.unc.weights,
                    cfg.noise_power,
                    cfg.p_max,
                    fixed,
                )
            };
            let greedy = run(None)?;
            let kept = run(Some(&grid.rx_support[k]))?;
            let out = if kept.mse < greedy.mse { kept } else { greedy };
            grid.rx_support[k] = out.support;
            v.push(out.v);
        }

        let (hhat, sigma2): (Vec<CVector>, Vec<f64>) = (0..cfg.n_users)
            .map(|k| effective(dict, real, k, &grid.rx_support[k], &v[k]))
            .unzip();
        let mats = build_mm_somp_matrices(&hhat, &grid.tx_support, &w, &sigma2, cfg.p_max, &min_rates);
        let greedy = transmitter_block(&mats, &hhat, cfg.n_tx, None);
        let kept = transmitter_block(&mats, &hhat, cfg.n_tx, Some(&grid.tx_support));
        let tx = match (greedy, kept) {
            (Ok(g), Ok(k)) => {
                if k.objective < g.objective {
                    k
                } else {
                    g
                }
            }
            (Ok(t), Err(_)) | (Err(_), Ok(t)) => t,
            (Err(e), Err(_)) => {
                warn!("transmit block failed at iteration {}: {e}", it + 1);
                break;
            }
        };
        let natural: Vec<f64> = tx.w.column_iter().map(|c| c.norm_squared()).collect();
        grid.tx_support = tx.support;

        let mut dirs = tx.w;
        for (k, mut col) in dirs.column_iter_mut().enumerate() {
            let norm = col.norm();
            if norm > 0.0 {
                col.scale_mut(1.0 / norm);
            } else {
                let h = hhat[k].select_rows(&grid.tx_support);
                let hn = h.norm().max(f64::MIN_POSITIVE);
                col.copy_from(&h.scale(1.0 / hn));
            }
        }
        let kk = cfg.n_users;
        let gains = RMatrix::from_fn(kk, kk, |k, i| {
            hhat[k].select_rows(&grid.tx_support).dotc(&dirs.column(i)).norm_sqr()
        });
        let power = power_allocation_from(&gains, &sigma2, &min_rates, cfg.p_max, Some(&natural), &opts.power);
        w = dirs;
        for (k, mut col) in w.column_iter_mut().enumerate() {
            col.scale_mut(power.p[k].sqrt());
        }

        let v = refresh_decoders(dict, real, &grid, &w)?;
        let cur = evaluate(real, grid.clone(), beamformers(w.clone(), v), power.infeasible);
        debug!("bcd iteration {}: robust sum rate {:.6}", it + 1, cur.rate);
        trace.sum_rates.push(cur.rate);
        trace.worst_case.push(cur.worst);
        trace.power_fallback.push(power.infeasible);
        let rate = cur.rate;
        if cur.better_than(&best) {
            best = cur;
        }
        if opts.keep_snapshots {
            snapshots.push((best.grid.clone(), best.bf.clone()));
        }
        if (rate - prev).abs() <= opts.tol * prev.abs().max(f64::MIN_POSITIVE) {
            break;
        }
        prev = rate;
    }

    let sol = BcdSolution {
        relax_level: u32::from(best.fallback).max(achieved_relax_level(
            real,
            &best.grid.to_layout(),
            &best.bf,
            PrecoderOptions::default().relax_factor,
            PrecoderOptions::default().max_relax,
        )),
        grid: best.grid.clone(),
        bf: best.bf.clone(),
        trace,
        snapshots,
    };
    Ok((sol, best))
}
