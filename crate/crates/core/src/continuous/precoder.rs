use log::debug;

use super::mm::MmState;
use crate::linalg::{complexify, realify, realify_hermitian, vec_of, CMatrix, CVector, RVector};
use crate::solvers::{solve_qcqp, QcqpOptions, QcqpProblem, QcqpStatus, QuadraticSurrogate};

#[derive(Debug, Clone, Copy)]
pub struct PrecoderOptions {
    /// Factor applied to every minimum rate per relaxation step.
    pub relax_factor: f64,
    pub max_relax: u32,
    pub qcqp: QcqpOptions,
}

impl Default for PrecoderOptions {
    fn default() -> Self {
        PrecoderOptions {
            relax_factor: 0.9,
            max_relax: 5,
            qcqp: QcqpOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PrecoderOutcome {
    pub w: CMatrix,
    /// Number of relaxation steps applied; `max_relax + 1` means the rate
    /// constraints were dropped.
    pub relax_level: u32,
    pub surrogate_prev: f64,
    pub surrogate_new: f64,
}

/// `Σ_k (2 Re(F12_k h_kᴴ w_k) + F22_k s_k(W))`, the part of the summed rate
/// bounds that depends on `W` (to be minimized).
pub fn precoder_surrogate(states: &[MmState], w: &CMatrix) -> f64 {
    states.iter().map(|s| s.penalty(w)).sum()
}

/// Unconstrained minimizer `w_i = −A⁻¹ h_i conj(F12_i)`.
pub fn closed_form_precoder(states: &[MmState], n: usize) -> Option<CMatrix> {
    let zeta: f64 = states.iter().map(|s| s.f22 * s.noise / s.p_max).sum();
    if !(zeta > 0.0) {
        return None;
    }
    let mut a = CMatrix::identity(n, n).scale(zeta);
    for s in states {
        a += (&s.h * s.h.adjoint()).scale(s.f22);
    }
    let chol = a.cholesky()?;
    let mut w = CMatrix::zeros(n, states.len());
    for (i, s) in states.iter().enumerate() {
        let rhs = &s.h * (-s.f12.conj());
        w.set_column(i, &chol.solve(&rhs));
    }
    Some(w)
}

fn block_diag(blocks: usize, m: &CMatrix) -> CMatrix {
    let n = m.nrows();
    let mut out = CMatrix::zeros(n * blocks, n * blocks);
    for b in 0..blocks {
        out.view_mut((b * n, b * n), (n, n)).copy_from(m);
    }
    out
}

fn linear_term(states: &[MmState], n: usize, only: Option<usize>) -> RVector {
    let k = states.len();
    let mut g = CVector::zeros(n * k);
    for (i, s) in states.iter().enumerate() {
        if only.is_some_and(|o| o != i) {
            continue;
        }
        g.rows_mut(i * n, n).copy_from(&(&s.h * s.f12.conj()));
    }
    -realify(&g).scale(2.0)
}

fn satisfies(states: &[MmState], w: &CMatrix, rates: &[f64]) -> bool {
    states
        .iter()
        .zip(rates)
        .all(|(s, r)| s.penalty(w) <= s.penalty_budget(*r) + 1e-9)
}

/// Minimizes the summed rate bound subject to per-user bound constraints
/// `LB_k(W) ≥ Γ_k ln 2`. When no precoder meets the constraints, all
/// minimum rates are scaled by `relax_factor` and the solve repeated.
///
/// Without `allow_restoration` only relaxation levels at which `w_prev`
/// already satisfies the constraints are tried, which keeps the bound
/// monotone.
pub fn solve_precoder(
    states: &[MmState],
    w_prev: &CMatrix,
    min_rates_bits: &[f64],
    allow_restoration: bool,
    opts: &PrecoderOptions,
) -> PrecoderOutcome {
    let n = w_prev.nrows();
    let kk = states.len();
    let prev = precoder_surrogate(states, w_prev);
    let cf = closed_form_precoder(states, n);
    let finish = |w: CMatrix, level: u32| PrecoderOutcome {
        surrogate_new: precoder_surrogate(states, &w),
        w,
        relax_level: level,
        surrogate_prev: prev,
    };

    for level in 0..=opts.max_relax {
        let factor = opts.relax_factor.powi(level as i32);
        let rates: Vec<f64> = min_rates_bits
            .iter()
            .map(|g| g * factor * std::f64::consts::LN_2)
            .collect();
        let prev_ok = satisfies(states, w_prev, &rates);
        if !allow_restoration && !prev_ok {
            continue;
        }
        if let Some(w) = &cf {
            if satisfies(states, w, &rates) {
                return finish(w.clone(), level);
            }
        }
        let mut a = CMatrix::zeros(n, n);
        let zeta: f64 = states.iter().map(|s| s.f22 * s.noise / s.p_max).sum();
        for s in states {
            a += (&s.h * s.h.adjoint()).scale(s.f22);
        }
        a += CMatrix::identity(n, n).scale(zeta);
        let objective = QuadraticSurrogate::new(
            realify_hermitian(&block_diag(kk, &a)),
            linear_term(states, n, None),
            0.0,
        );
        let mut problem = QcqpProblem::new(objective);
        for (i, (s, r)) in states.iter().zip(&rates).enumerate() {
            let q = (&s.h * s.h.adjoint()).scale(s.f22)
                + CMatrix::identity(n, n).scale(s.f22 * s.noise / s.p_max);
            problem.quadratic.push(QuadraticSurrogate::new(
                realify_hermitian(&block_diag(kk, &q)),
                linear_term(states, n, Some(i)),
                -s.penalty_budget(*r),
            ));
        }
        let x0 = realify(&vec_of(w_prev));
        match solve_qcqp(&problem, &x0, &opts.qcqp) {
            Ok(sol) => match sol.status {
                QcqpStatus::Infeasible { constraint, violation } => {
                    debug!("precoder level {level}: user {constraint} infeasible by {violation:e}");
                }
                _ => {
                    let w = CMatrix::from_column_slice(n, kk, complexify(&sol.x).as_slice());
                    if satisfies(states, &w, &rates) {
                        return finish(w, level);
                    }
                }
            },
            Err(e) => debug!("precoder level {level}: {e}"),
        }
    }
    let level = opts.max_relax + 1;
    match cf {
        Some(w) => finish(w, level),
        None => finish(w_prev.clone(), level),
    }
}

#[cfg(test)]
mod tests {
    use super::super::mm::{build_mm_state, normalized_rate};
    use super::*;
    use crate::linalg::C64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rc(rng: &mut ChaCha8Rng) -> C64 {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    }

    #[test]
    fn single_user_converges_to_matched_filter() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = CVector::from_fn(4, |_, _| rc(&mut rng));
        let mut w = CMatrix::from_fn(4, 1, |_, _| rc(&mut rng));
        let mut last = f64::NEG_INFINITY;
        for _ in 0..30 {
            let st = build_mm_state(&w, 0, &h, 0.5, 1.0);
            w = solve_precoder(&[st], &w, &[0.0], true, &PrecoderOptions::default()).w;
            let r = normalized_rate(&w, 0, &h, 0.5, 1.0);
            assert!(r >= last - 1e-12);
            last = r;
        }
        let cos = h.dotc(&w.column(0)).norm() / (h.norm() * w.norm());
        assert!((cos - 1.0).abs() < 1e-9);
    }

    #[test]
    fn surrogate_never_increases_from_feasible_start() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let hs: Vec<CVector> = (0..3).map(|_| CVector::from_fn(4, |_, _| rc(&mut rng))).collect();
            let w = CMatrix::from_fn(4, 3, |_, _| rc(&mut rng));
            let states: Vec<_> = hs
                .iter()
                .enumerate()
                .map(|(k, h)| build_mm_state(&w, k, h, 0.2, 1.0))
                .collect();
            let rates: Vec<f64> = states.iter().map(|s| 0.5 * s.rate0 / std::f64::consts::LN_2).collect();
            let out = solve_precoder(&states, &w, &rates, true, &PrecoderOptions::default());
            assert!(out.surrogate_new <= out.surrogate_prev + 1e-8 * out.surrogate_prev.abs().max(1.0));
            assert_eq!(out.relax_level, 0);
            for (s, r) in states.iter().zip(&rates) {
                assert!(s.lower_bound(&out.w) >= r * std::f64::consts::LN_2 - 1e-8);
            }
        }
    }

    #[test]
    fn unreachable_rates_are_relaxed_then_dropped() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = CVector::from_fn(2, |_, _| rc(&mut rng));
        let w = CMatrix::from_fn(2, 1, |_, _| rc(&mut rng));
        let st = build_mm_state(&w, 0, &h, 1.0, 1.0);
        let out = solve_precoder(&[st], &w, &[1e3], true, &PrecoderOptions::default());
        assert_eq!(out.relax_level, 6);
    }
}
