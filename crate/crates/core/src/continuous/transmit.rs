use log::warn;

use super::mm::{build_mm_state, normalized_rate, MmState};
use super::receive::InnerOptions;
use super::surrogate::{modulus_surrogate, real_part_surrogate, BoundSense};
use super::{region_bounds, spacing_constraints};
use crate::channel::field_response_matrix;
use crate::error::Result;
use crate::linalg::{stack_positions, unstack_positions, CMatrix, CVector, Position};
use crate::model::Realization;
use crate::solvers::{solve_qcqp, QcqpProblem, QcqpStatus, QuadraticSurrogate};

#[derive(Debug, Clone)]
pub struct TransmitOutcome {
    pub tx: Vec<Position>,
    /// Summed normalized rate (nats) after every accepted step, starting at
    /// the initial layout.
    pub objective: Vec<f64>,
    pub flagged: bool,
}

/// Effective noise `vᴴJv + σ²‖v‖²` of user `k`.
pub(crate) fn effective_noise(real: &Realization, k: usize, v: &CVector, rx: &[Position]) -> f64 {
    let jam = real.jammer_covariance(k, rx);
    v.dotc(&(jam * v)).re.max(0.0) + real.cfg.noise_power * v.norm_squared()
}

/// Summed normalized rate (nats) for transmit positions `tx` with everything
/// else fixed.
pub fn transmit_objective(
    real: &Realization,
    w: &CMatrix,
    v: &[CVector],
    rx: &[Vec<Position>],
    tx: &[Position],
    noise: &[f64],
) -> f64 {
    (0..real.cfg.n_users)
        .map(|k| {
            let h = real.user_channel(k, tx, &rx[k]).adjoint() * &v[k];
            normalized_rate(w, k, &h, noise[k], real.cfg.p_max)
        })
        .sum()
}

/// Upper bound on user `k`'s bound penalty `2Re(F12 c) + F22 s` as a
/// function of the transmit positions.
fn user_penalty_surrogate(
    real: &Realization,
    k: usize,
    st: &MmState,
    b: &CVector,
    w: &CMatrix,
    t0: &[Position],
) -> QuadraticSurrogate {
    let lambda = real.cfg.wavelength;
    let dir = real.geom.users[k].tx_dircos();
    let mut total = real_part_surrogate(&(b * st.f12.conj()), &w.column(k).into_owned(), t0, &dir, lambda)
        .scale(2.0);
    if st.f22 > 0.0 {
        for wi in w.column_iter() {
            let s = modulus_surrogate(b, &wi.into_owned(), t0, &dir, lambda, BoundSense::Upper);
            total.add_assign(&s.scale(st.f22));
        }
    }
    total.c += st.f22 * st.noise * w.norm_squared() / st.p_max;
    total
}

/// SCA over the transmit positions. Every step rebuilds the rate bounds at
/// the current positions, minimizes a convex upper bound of the summed
/// penalties under the region box, linearized spacing and (when given) the
/// per-user minimum rates, and keeps the step only if the true objective
/// improves.
pub fn optimize_transmit_positions(
    real: &Realization,
    w: &CMatrix,
    v: &[CVector],
    rx: &[Vec<Position>],
    tx_init: &[Position],
    min_rates_bits: Option<&[f64]>,
    opts: &InnerOptions,
) -> Result<TransmitOutcome> {
    let cfg = &real.cfg;
    let noise: Vec<f64> = (0..cfg.n_users)
        .map(|k| effective_noise(real, k, &v[k], &rx[k]))
        .collect();
    // b_k = conj(Σ_k) F_k(R_k) v_k
    let paths: Vec<CVector> = (0..cfg.n_users)
        .map(|k| {
            let link = &real.geom.users[k];
            let f = field_response_matrix(&rx[k], &link.rx_dircos(), cfg.wavelength);
            (f * &v[k]).component_mul(&link.gains.map(|g| g.conj()))
        })
        .collect();
    let mut tx = tx_init.to_vec();
    let mut obj = transmit_objective(real, w, v, rx, &tx, &noise);
    let mut trace = vec![obj];
    let mut flagged = false;
    let (lower, upper) = region_bounds(tx.len(), cfg.tx_region);
    for _ in 0..opts.max_iters {
        let states: Vec<MmState> = (0..cfg.n_users)
            .map(|k| {
                let h = real.user_channel(k, &tx, &rx[k]).adjoint() * &v[k];
                build_mm_state(w, k, &h, noise[k], cfg.p_max)
            })
            .collect();
        let x0 = stack_positions(&tx);
        let per_user: Vec<QuadraticSurrogate> = (0..cfg.n_users)
            .map(|k| user_penalty_surrogate(real, k, &states[k], &paths[k], w, &tx))
            .collect();
        let mut objective = QuadraticSurrogate::zeros(x0.len());
        for s in &per_user {
            objective.add_assign(s);
        }
        let mut problem = QcqpProblem::new(objective.clone());
        if let Some(rates) = min_rates_bits {
            for (k, s) in per_user.iter().enumerate() {
                let budget = states[k].penalty_budget(rates[k] * std::f64::consts::LN_2);
                if s.eval(&x0) <= budget {
                    let mut g = s.clone();
                    g.c -= budget;
                    problem.quadratic.push(g);
                }
            }
        }
        problem.affine = spacing_constraints(&tx, cfg.min_spacing);
        problem.lower = Some(lower.clone());
        problem.upper = Some(upper.clone());
        let sol = solve_qcqp(&problem, &x0, &opts.qcqp)?;
        if let QcqpStatus::Infeasible { constraint, .. } = sol.status {
            warn!("transmit positions: no interior point (constraint {constraint})");
            flagged = true;
            break;
        }
        let gain = objective.eval(&x0) - objective.eval(&sol.x);
        if !(gain > 1e-12 * objective.eval(&x0).abs().max(1.0)) {
            break;
        }
        let cand = unstack_positions(&sol.x);
        let next = transmit_objective(real, w, v, rx, &cand, &noise);
        if !(next > obj) {
            break;
        }
        tx = cand;
        let prev = obj;
        obj = next;
        trace.push(obj);
        if (obj - prev) / prev.abs().max(f64::MIN_POSITIVE) < opts.tol {
            break;
        }
    }
    Ok(TransmitOutcome {
        tx,
        objective: trace,
        flagged,
    })
}
