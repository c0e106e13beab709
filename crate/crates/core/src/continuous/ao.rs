use log::debug;

use super::mm::{build_mm_state, MmState};
use super::precoder::{solve_precoder, PrecoderOptions};
use super::receive::{mmse_decoder, optimize_receive_positions, InnerOptions};
use super::transmit::{effective_noise, optimize_transmit_positions};
use crate::error::Result;
use crate::linalg::{principal_right_singular, CMatrix, CVector};
use crate::metrics::{achieved_relax_level, robust_sum_rate};
use crate::model::{BeamformerSet, Layout, Realization};

#[derive(Debug, Clone, Copy)]
pub struct AoOptions {
    pub max_outer: usize,
    /// Relative change of the sum rate that ends the outer loop.
    pub outer_tol: f64,
    pub inner: InnerOptions,
    pub precoder: PrecoderOptions,
    pub optimize_rx: bool,
    pub optimize_tx: bool,
    /// Keep the starting layout and beamformers and those after every outer
    /// iteration.
    pub keep_snapshots: bool,
}

impl Default for AoOptions {
    fn default() -> Self {
        AoOptions {
            max_outer: 30,
            outer_tol: 1e-4,
            inner: InnerOptions::default(),
            precoder: PrecoderOptions::default(),
            optimize_rx: true,
            optimize_tx: true,
            keep_snapshots: false,
        }
    }
}

impl AoOptions {
    /// Beamforming only; antenna positions stay where they start.
    pub fn fixed_positions() -> Self {
        AoOptions {
            optimize_rx: false,
            optimize_tx: false,
            ..AoOptions::default()
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct AoTrace {
    /// Robust sum rate (bits/s/Hz) at the starting point.
    pub initial: f64,
    /// Robust sum rate after each outer iteration.
    pub sum_rates: Vec<f64>,
    /// Dinkelbach parameters of every receive-position run.
    pub kappas: Vec<Vec<f64>>,
    /// Summed normalized rate (nats) of every transmit-position run.
    pub transmit: Vec<Vec<f64>>,
    pub relax_levels: Vec<u32>,
    /// A position subproblem had no feasible point at some iteration.
    pub flagged: bool,
}

#[derive(Debug, Clone)]
pub struct AoSolution {
    pub layout: Layout,
    pub bf: BeamformerSet,
    pub trace: AoTrace,
    pub relax_level: u32,
    pub snapshots: Vec<(Layout, BeamformerSet)>,
}

/// Per-user principal right singular vectors of `H_k`, each with power
/// `Pmax / K`.
pub fn initial_precoders(real: &Realization, layout: &Layout) -> CMatrix {
    let cfg = &real.cfg;
    let mut w = CMatrix::zeros(cfg.n_tx, cfg.n_users);
    let amp = (cfg.p_max / cfg.n_users as f64).sqrt();
    for k in 0..cfg.n_users {
        let h = real.user_channel(k, &layout.tx, &layout.rx[k]);
        w.set_column(k, &principal_right_singular(&h).scale(amp));
    }
    w
}

pub fn mmse_decoders(real: &Realization, layout: &Layout, w: &CMatrix) -> Result<Vec<CVector>> {
    (0..real.cfg.n_users)
        .map(|k| {
            let h = real.user_channel(k, &layout.tx, &layout.rx[k]);
            let jam = real.jammer_covariance(k, &layout.rx[k]);
            mmse_decoder(&h, w, k, &jam, real.cfg.noise_power)
        })
        .collect()
}

fn beamformers(w: CMatrix, v: Vec<CVector>) -> BeamformerSet {
    let p = w.column_iter().map(|c| c.norm_squared()).collect();
    BeamformerSet { w, v, p }
}

/// Alternating optimization of decoders, receive positions, precoders and
/// transmit positions from `init`.
///
/// Each outer iteration: MMSE decoders; Dinkelbach/SCA receive positions per
/// user; rate-bound precoder update rescaled to `Pmax`; SCA transmit
/// positions; MMSE refresh. The first precoder update may trade sum rate for
/// the minimum-rate constraints; after that every block is non-decreasing in
/// the robust sum rate.
pub fn ao_solve(real: &Realization, init: &Layout, opts: &AoOptions) -> Result<AoSolution> {
    let cfg = &real.cfg;
    init.check(cfg)?;
    let mut layout = init.clone();
    let mut w = initial_precoders(real, &layout);
    let mut v = mmse_decoders(real, &layout, &w)?;
    let mut trace = AoTrace {
        initial: robust_sum_rate(real, &layout, &beamformers(w.clone(), v.clone())),
        ..AoTrace::default()
    };
    let min_rates = vec![cfg.min_rate; cfg.n_users];
    let mut relax_level = 0;
    let mut snapshots = Vec::new();
    if opts.keep_snapshots {
        snapshots.push((layout.clone(), beamformers(w.clone(), v.clone())));
    }

    for it in 0..opts.max_outer {
        if opts.optimize_rx {
            for k in 0..cfg.n_users {
                let out = optimize_receive_positions(real, k, &w, &v[k], &layout.tx, &layout.rx[k], &opts.inner)?;
                trace.flagged |= out.flagged;
                layout.rx[k] = out.rx;
                trace.kappas.push(out.kappas);
            }
        }

        let noise: Vec<f64> = (0..cfg.n_users)
            .map(|k| effective_noise(real, k, &v[k], &layout.rx[k]))
            .collect();
        let states: Vec<MmState> = (0..cfg.n_users)
            .map(|k| {
                let h = real.user_channel(k, &layout.tx, &layout.rx[k]).adjoint() * &v[k];
                build_mm_state(&w, k, &h, noise[k], cfg.p_max)
            })
            .collect();
        let out = solve_precoder(&states, &w, &min_rates, it == 0, &opts.precoder);
        relax_level = out.relax_level;
        trace.relax_levels.push(relax_level);
        w = out.w;
        let norm = w.norm();
        if norm > 0.0 {
            w.scale_mut(cfg.p_max.sqrt() / norm);
        }

        if opts.optimize_tx {
            let active = (relax_level <= opts.precoder.max_relax).then(|| {
                let f = opts.precoder.relax_factor.powi(relax_level as i32);
                min_rates.iter().map(|g| g * f).collect::<Vec<_>>()
            });
            let out = optimize_transmit_positions(real, &w, &v, &layout.rx, &layout.tx, active.as_deref(), &opts.inner)?;
            trace.flagged |= out.flagged;
            layout.tx = out.tx;
            trace.transmit.push(out.objective);
        }

        v = mmse_decoders(real, &layout, &w)?;
        let rate = robust_sum_rate(real, &layout, &beamformers(w.clone(), v.clone()));
        debug!("outer iteration {}: robust sum rate {rate:.6}", it + 1);
        let prev = trace.sum_rates.last().copied();
        trace.sum_rates.push(rate);
        if opts.keep_snapshots {
            snapshots.push((layout.clone(), beamformers(w.clone(), v.clone())));
        }
        if let Some(p) = prev {
            if (rate - p).abs() <= opts.outer_tol * p.abs().max(f64::MIN_POSITIVE) {
                break;
            }
        }
    }

    let bf = beamformers(w, v);
    // The constraints above hold for the averaged jammer covariance; the
    // reported level is also reached by every sampled offset.
    let relax_level = relax_level.max(achieved_relax_level(
        real,
        &layout,
        &bf,
        opts.precoder.relax_factor,
        opts.precoder.max_relax,
    ));
    Ok(AoSolution {
        layout,
        bf,
        trace,
        relax_level,
        snapshots,
    })
}
