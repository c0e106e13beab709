//! Continuous antenna-position design by alternating optimization over the
//! decoders, receive positions, precoders and transmit positions.

mod ao;
mod mm;
mod precoder;
mod receive;
mod surrogate;
mod transmit;

pub use ao::{ao_solve, initial_precoders, mmse_decoders, AoOptions, AoSolution, AoTrace};
pub use mm::{build_mm_state, normalized_rate, signal_terms, MmState};
pub use precoder::{
    closed_form_precoder, precoder_surrogate, solve_precoder, PrecoderOptions, PrecoderOutcome,
};
pub use receive::{
    mmse_decoder, optimize_receive_positions, receive_sinr, InnerOptions, ReceiveOutcome,
};
pub use surrogate::{
    bilinear_value, build_receive_surrogate, build_transmit_surrogate, modulus_surrogate,
    real_part_surrogate, BoundSense,
};
pub use transmit::{optimize_transmit_positions, transmit_objective, TransmitOutcome};

use crate::linalg::{Position, RVector};

/// Box bounds `[0, side]` on stacked positions.
pub(crate) fn region_bounds(n: usize, side: f64) -> (RVector, RVector) {
    (RVector::zeros(2 * n), RVector::from_element(2 * n, side))
}

/// `uᵀ(x_m − x_m') ≥ D` with `u` the unit direction between the two antennas
/// at `x0`; it implies `‖x_m − x_m'‖ ≥ D` and holds at `x0` whenever the
/// spacing does.
pub(crate) fn spacing_constraints(x0: &[Position], spacing: f64) -> Vec<(RVector, f64)> {
    let n = x0.len();
    let mut out = Vec::new();
    for m in 0..n {
        for mp in (m + 1)..n {
            let d = x0[m] - x0[mp];
            let norm = d.norm();
            if norm == 0.0 {
                continue;
            }
            let u = d / norm;
            let mut a = RVector::zeros(2 * n);
            a[m] = -u.x;
            a[mp] = u.x;
            a[n + m] = -u.y;
            a[n + mp] = u.y;
            out.push((a, -spacing));
        }
    }
    out
}
