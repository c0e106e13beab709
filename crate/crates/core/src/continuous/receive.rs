use log::warn;

use super::surrogate::{modulus_surrogate, BoundSense};
use super::{region_bounds, spacing_constraints};
use crate::channel::field_response_matrix;
use crate::error::Result;
use crate::linalg::{hermitian_solve_vec, stack_positions, unstack_positions, CMatrix, CVector, Position};
use crate::metrics::sinr;
use crate::model::Realization;
use crate::solvers::{solve_qcqp, QcqpOptions, QcqpProblem, QcqpStatus, QuadraticSurrogate};

#[derive(Debug, Clone, Copy)]
pub struct InnerOptions {
    pub max_iters: usize,
    /// Relative objective change that ends the loop.
    pub tol: f64,
    pub qcqp: QcqpOptions,
}

impl Default for InnerOptions {
    fn default() -> Self {
        InnerOptions {
            max_iters: 20,
            tol: 1e-5,
            qcqp: QcqpOptions::default(),
        }
    }
}

/// `(H W Wᴴ Hᴴ + J + σ²I)⁻¹ H w_k`, with `J` the power-weighted jammer
/// covariance.
pub fn mmse_decoder(h: &CMatrix, w: &CMatrix, k: usize, jam: &CMatrix, noise: f64) -> Result<CVector> {
    let hw = h * w;
    let m = h.nrows();
    let cov = &hw * hw.adjoint() + jam + CMatrix::identity(m, m).scale(noise);
    hermitian_solve_vec(&cov, &hw.column(k).into_owned())
}

/// Robust SINR of user `k` for receive positions `rx` and a fixed decoder.
pub fn receive_sinr(real: &Realization, k: usize, w: &CMatrix, v: &CVector, tx: &[Position], rx: &[Position]) -> f64 {
    let h = real.user_channel(k, tx, rx);
    let jam = real.jammer_covariance(k, rx);
    sinr(v, &h, w, k, &jam, real.cfg.noise_power).unwrap_or(0.0)
}

#[derive(Debug, Clone)]
pub struct ReceiveOutcome {
    pub rx: Vec<Position>,
    /// Dinkelbach parameter after every accepted step, starting at the
    /// initial SINR.
    pub kappas: Vec<f64>,
    /// Set when a subproblem had no feasible point.
    pub flagged: bool,
}

/// Path-domain vectors `b` with `v ᴴ H_k w_i = conj(bᵢᴴ F(R) v)`.
fn desired_paths(real: &Realization, k: usize, w: &CMatrix, tx: &[Position]) -> Vec<CVector> {
    let link = &real.geom.users[k];
    let g = field_response_matrix(tx, &link.tx_dircos(), real.cfg.wavelength);
    w.column_iter()
        .map(|wi| (&g * wi).component_mul(&link.gains))
        .collect()
}

/// Upper bound on `−|S|² + κ (Σ_{i≠k} |I_i|² + Σ_r p_r Σ_s μ_s |J_{r,s}|² + σ²‖v‖²)`
/// around `r0`.
fn dinkelbach_surrogate(
    real: &Realization,
    k: usize,
    paths: &[CVector],
    v: &CVector,
    r0: &[Position],
    kappa: f64,
) -> QuadraticSurrogate {
    let lambda = real.cfg.wavelength;
    let rx_dir = real.geom.users[k].rx_dircos();
    let mut total = modulus_surrogate(&paths[k], v, r0, &rx_dir, lambda, BoundSense::Lower).scale(-1.0);
    for (i, b) in paths.iter().enumerate() {
        if i != k {
            total.add_assign(&modulus_surrogate(b, v, r0, &rx_dir, lambda, BoundSense::Upper).scale(kappa));
        }
    }
    for (r, links) in real.geom.jammers.iter().enumerate() {
        let link = &links[k];
        let p = real.cfg.jammer_powers[r];
        if p == 0.0 {
            continue;
        }
        for (&(dt, dp), &mu) in real.unc.samples.iter().zip(&real.unc.weights) {
            let dir = link.dircos_with_offset(dt, dp);
            let s = modulus_surrogate(&link.gains, v, r0, &dir, lambda, BoundSense::Upper);
            total.add_assign(&s.scale(kappa * p * mu));
        }
    }
    total.c += kappa * real.cfg.noise_power * v.norm_squared();
    total
}

/// Dinkelbach + SCA over user `k`'s receive positions with the precoders and
/// decoder held fixed. Each step minimizes a convex upper bound of
/// `−(|S|² − κ·(interference + jamming + noise))` under the region box and
/// linearized spacing constraints, then sets `κ` to the new SINR.
pub fn optimize_receive_positions(
    real: &Realization,
    k: usize,
    w: &CMatrix,
    v: &CVector,
    tx: &[Position],
    rx_init: &[Position],
    opts: &InnerOptions,
) -> Result<ReceiveOutcome> {
    let cfg = &real.cfg;
    let paths = desired_paths(real, k, w, tx);
    let mut rx = rx_init.to_vec();
    let mut kappa = receive_sinr(real, k, w, v, tx, &rx);
    let mut kappas = vec![kappa];
    let mut flagged = false;
    let (lower, upper) = region_bounds(rx.len(), cfg.rx_region);
    for _ in 0..opts.max_iters {
        let sur = dinkelbach_surrogate(real, k, &paths, v, &rx, kappa);
        let mut problem = QcqpProblem::new(sur.clone());
        problem.affine = spacing_constraints(&rx, cfg.min_spacing);
        problem.lower = Some(lower.clone());
        problem.upper = Some(upper.clone());
        let x0 = stack_positions(&rx);
        let sol = solve_qcqp(&problem, &x0, &opts.qcqp)?;
        if let QcqpStatus::Infeasible { constraint, .. } = sol.status {
            warn!("receive positions of user {k}: no interior point (constraint {constraint})");
            flagged = true;
            break;
        }
        let scale = {
            let h = real.user_channel(k, tx, &rx);
            (h.adjoint() * v).dotc(&w.column(k)).norm_sqr()
        };
        let gain = sur.eval(&x0) - sur.eval(&sol.x);
        if !(gain > 1e-12 * scale) {
            break;
        }
        let cand = unstack_positions(&sol.x);
        let next = receive_sinr(real, k, w, v, tx, &cand);
        if !(next > kappa) {
            break;
        }
        rx = cand;
        let prev = kappa;
        kappa = next;
        kappas.push(kappa);
        if (kappa - prev) / prev.max(f64::MIN_POSITIVE) < opts.tol {
            break;
        }
    }
    Ok(ReceiveOutcome { rx, kappas, flagged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::C64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rc(rng: &mut ChaCha8Rng) -> C64 {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    }

    #[test]
    fn single_user_mmse_is_matched_filter() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = CMatrix::from_fn(3, 4, |_, _| rc(&mut rng));
        let w = CMatrix::from_fn(4, 1, |_, _| rc(&mut rng));
        let v = mmse_decoder(&h, &w, 0, &CMatrix::zeros(3, 3), 0.1).unwrap();
        let hw = &h * &w;
        let cos = hw.column(0).dotc(&v).norm() / (hw.norm() * v.norm());
        assert!((cos - 1.0).abs() < 1e-10);
        let zero = mmse_decoder(&h, &CMatrix::zeros(4, 1), 0, &CMatrix::zeros(3, 3), 0.1).unwrap();
        assert_eq!(zero.norm(), 0.0);
    }

    #[test]
    fn mmse_beats_random_decoders() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let h = CMatrix::from_fn(4, 4, |_, _| rc(&mut rng));
        let w = CMatrix::from_fn(4, 3, |_, _| rc(&mut rng));
        let g = CVector::from_fn(4, |_, _| rc(&mut rng));
        let jam = (&g * g.adjoint()).scale(2.0);
        let v = mmse_decoder(&h, &w, 1, &jam, 0.05).unwrap();
        let best = sinr(&v, &h, &w, 1, &jam, 0.05).unwrap();
        for _ in 0..100 {
            let mut u = CVector::from_fn(4, |_, _| rc(&mut rng));
            u.unscale_mut(u.norm());
            assert!(sinr(&u, &h, &w, 1, &jam, 0.05).unwrap() <= best * (1.0 + 1e-12));
        }
    }
}
