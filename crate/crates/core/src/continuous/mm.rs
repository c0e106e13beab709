//! Minorizer of a user's rate as a function of the precoders.
//!
//! With `c = hᴴw_k` and `s = Σ_i |hᴴw_i|² + σ̄²‖W‖²/Pmax`, the normalized
//! rate is `ln(u ᴴ D⁻¹ u)` for `D = [[1, c̄], [c, s]]`, `u = e_1`. That map is
//! convex in `D`, so its tangent at `D0` gives the concave lower bound
//! `ln(uᴴD0⁻¹u) − tr(F (D − D0))` with `F = D0⁻¹uuᴴD0⁻¹ / (uᴴD0⁻¹u)`.

use crate::linalg::{CMatrix, CVector, C64};

/// Expansion of one user's rate bound at the previous precoders.
#[derive(Debug, Clone, PartialEq)]
pub struct MmState {
    /// `D0 = [[1, c̄0], [c0, s0]]`.
    pub d: [[C64; 2]; 2],
    pub f11: f64,
    pub f12: C64,
    pub f21: C64,
    pub f22: f64,
    /// Rate at the expansion point, nats.
    pub rate0: f64,
    /// `tr(F D0)`.
    pub trace0: f64,
    pub h: CVector,
    pub noise: f64,
    pub k: usize,
    pub p_max: f64,
}

/// `(hᴴw_k, Σ_i |hᴴw_i|² + σ̄²‖W‖²/Pmax)`.
pub fn signal_terms(w: &CMatrix, k: usize, h: &CVector, noise: f64, p_max: f64) -> (C64, f64) {
    let c = h.dotc(&w.column(k));
    let mut s = noise * w.norm_squared() / p_max;
    for wi in w.column_iter() {
        s += h.dotc(&wi).norm_sqr();
    }
    (c, s)
}

/// `ln(1 + |hᴴw_k|² / (Σ_{i≠k} |hᴴw_i|² + σ̄²‖W‖²/Pmax))`, nats.
pub fn normalized_rate(w: &CMatrix, k: usize, h: &CVector, noise: f64, p_max: f64) -> f64 {
    let (c, s) = signal_terms(w, k, h, noise, p_max);
    let rest = s - c.norm_sqr();
    if rest <= 0.0 {
        return f64::INFINITY;
    }
    (s / rest).ln()
}

pub fn build_mm_state(w_prev: &CMatrix, k: usize, h: &CVector, noise: f64, p_max: f64) -> MmState {
    let (c, s) = signal_terms(w_prev, k, h, noise, p_max);
    let rest = s - c.norm_sqr();
    // A user with no signal, interference or noise has rate zero everywhere
    // along this expansion; its bound is the constant zero.
    let (f11, f12, f22) = if s > 0.0 {
        (s / rest, -c.conj() / rest, c.norm_sqr() / (s * rest))
    } else {
        (1.0, C64::new(0.0, 0.0), 0.0)
    };
    let f21 = f12.conj();
    MmState {
        d: [[C64::new(1.0, 0.0), c.conj()], [c, C64::new(s, 0.0)]],
        f11,
        f12,
        f21,
        f22,
        rate0: f11.ln(),
        trace0: f11 + 2.0 * (f12 * c).re + f22 * s,
        h: h.clone(),
        noise,
        k,
        p_max,
    }
}

impl MmState {
    /// `2 Re(F12 c) + F22 s` at `w`; the rate bound is `rate0 + trace0 − F11`
    /// minus this.
    pub fn penalty(&self, w: &CMatrix) -> f64 {
        let (c, s) = signal_terms(w, self.k, &self.h, self.noise, self.p_max);
        2.0 * (self.f12 * c).re + self.f22 * s
    }

    /// Largest `penalty` keeping the bound at or above `rate` (nats).
    pub fn penalty_budget(&self, rate: f64) -> f64 {
        self.rate0 + self.trace0 - self.f11 - rate
    }

    pub fn lower_bound(&self, w: &CMatrix) -> f64 {
        self.rate0 + self.trace0 - self.f11 - self.penalty(w)
    }

    /// `|F22 − F21 F12 / F11|`.
    pub fn block_identity_defect(&self) -> f64 {
        (C64::new(self.f22, 0.0) - self.f21 * self.f12 / self.f11).norm()
    }
}
