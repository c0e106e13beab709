//! Quadratic bounds on field-response bilinear forms.
//!
//! For `A(X)[l, m] = exp(jκ p_l·x_m)` both `|bᴴA(X)a|²` and `Re(bᴴA(X)a)`
//! are weighted sums of cosines `w cos(ξᵀx + φ)` in the stacked positions
//! `x = [x_1..x_n, y_1..y_n]`. Each cosine is bounded by its second-order
//! Taylor expansion with curvature `±1`, which gives a quadratic that touches
//! the true value at the expansion point.

use std::f64::consts::PI;

use nalgebra::Vector2;

use crate::channel::PathAngle;
use crate::linalg::{stack_positions, CVector, Position, RMatrix, RVector, C64};
use crate::solvers::QuadraticSurrogate;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundSense {
    /// Surrogate lies above the true function (convex).
    Upper,
    /// Surrogate lies below the true function (concave).
    Lower,
}

struct Accumulator {
    q: RMatrix,
    nu: RVector,
    c: f64,
    x0: RVector,
}

impl Accumulator {
    fn new(x0: &[Position]) -> Self {
        let n = x0.len();
        Accumulator {
            q: RMatrix::zeros(2 * n, 2 * n),
            nu: RVector::zeros(2 * n),
            c: 0.0,
            x0: stack_positions(x0),
        }
    }

    /// Adds the bound of `w cos(ξᵀx + φ)` with `ψ0 = ξᵀx0 + φ`; `xi` lists
    /// the nonzero entries of `ξ`.
    fn add(&mut self, w: f64, psi0: f64, xi: &[(usize, f64)], sense: BoundSense) {
        let delta: f64 = xi.iter().map(|(i, v)| v * self.x0[*i]).sum();
        let sgn = match sense {
            BoundSense::Upper => 1.0,
            BoundSense::Lower => -1.0,
        };
        let (s, c) = psi0.sin_cos();
        for &(i, vi) in xi {
            for &(j, vj) in xi {
                self.q[(i, j)] += sgn * 0.5 * w * vi * vj;
            }
            self.nu[i] += w * (s + sgn * delta) * vi;
        }
        self.c += w * (c + s * delta + sgn * 0.5 * delta * delta);
    }

    fn finish(self) -> QuadraticSurrogate {
        QuadraticSurrogate::new(self.q, self.nu, self.c)
    }
}

fn xi_entries(n: usize, m1: usize, k1: Vector2<f64>, m2: usize, k2: Vector2<f64>) -> ([(usize, f64); 4], usize) {
    let mut out = [(0usize, 0.0); 4];
    if m1 == m2 {
        let d = k1 - k2;
        out[0] = (m1, d.x);
        out[1] = (n + m1, d.y);
        (out, 2)
    } else {
        out[0] = (m1, k1.x);
        out[1] = (n + m1, k1.y);
        out[2] = (m2, -k2.x);
        out[3] = (n + m2, -k2.y);
        (out, 4)
    }
}

/// Quadratic bound on `|bᴴA(X)a|²` around `x0`, in the form
/// `xᵀQx − νᵀx + c` over the stacked positions.
pub fn modulus_surrogate(
    b: &CVector,
    a: &CVector,
    x0: &[Position],
    dircos: &[Vector2<f64>],
    wavelength: f64,
    sense: BoundSense,
) -> QuadraticSurrogate {
    let kappa = 2.0 * PI / wavelength;
    let n = x0.len();
    let mut acc = Accumulator::new(x0);
    // z_{l,m} = conj(b_l) a_m exp(jκ p_l·x0_m), indexed l·n + m.
    let mut amp = Vec::with_capacity(dircos.len() * n);
    let mut ang = Vec::with_capacity(dircos.len() * n);
    let mut kv = Vec::with_capacity(dircos.len() * n);
    let mut idx = Vec::with_capacity(dircos.len() * n);
    for (l, p) in dircos.iter().enumerate() {
        for (m, x) in x0.iter().enumerate() {
            let z = b[l].conj() * a[m] * C64::from_polar(1.0, kappa * p.dot(x));
            if z.norm() == 0.0 {
                continue;
            }
            amp.push(z.norm());
            ang.push(z.arg());
            kv.push(p * kappa);
            idx.push(m);
        }
    }
    let terms = amp.len();
    for i in 0..terms {
        // Diagonal pair: ξ = 0, constant contribution.
        acc.c += amp[i] * amp[i];
        for j in (i + 1)..terms {
            // (i, j) and (j, i) contribute identically.
            let w = 2.0 * amp[i] * amp[j];
            let (xi, len) = xi_entries(n, idx[i], kv[i], idx[j], kv[j]);
            acc.add(w, ang[i] - ang[j], &xi[..len], sense);
        }
    }
    acc.finish()
}

/// Upper bound on `Re(bᴴA(X)a)` around `x0`.
pub fn real_part_surrogate(
    b: &CVector,
    a: &CVector,
    x0: &[Position],
    dircos: &[Vector2<f64>],
    wavelength: f64,
) -> QuadraticSurrogate {
    let kappa = 2.0 * PI / wavelength;
    let n = x0.len();
    let mut acc = Accumulator::new(x0);
    for (l, p) in dircos.iter().enumerate() {
        for (m, x) in x0.iter().enumerate() {
            let z = b[l].conj() * a[m] * C64::from_polar(1.0, kappa * p.dot(x));
            let w = z.norm();
            if w == 0.0 {
                continue;
            }
            let k = p * kappa;
            acc.add(w, z.arg(), &[(m, k.x), (n + m, k.y)], BoundSense::Upper);
        }
    }
    acc.finish()
}

/// `bᴴA(X)a` evaluated directly.
pub fn bilinear_value(b: &CVector, a: &CVector, x: &[Position], dircos: &[Vector2<f64>], wavelength: f64) -> C64 {
    let kappa = 2.0 * PI / wavelength;
    let mut acc = C64::new(0.0, 0.0);
    for (l, p) in dircos.iter().enumerate() {
        for (m, xm) in x.iter().enumerate() {
            acc += b[l].conj() * C64::from_polar(1.0, kappa * p.dot(xm)) * a[m];
        }
    }
    acc
}

/// Bound on `|bᴴF(R)a|²` over the receive positions of one user.
pub fn build_receive_surrogate(
    b: &CVector,
    a: &CVector,
    r0: &[Position],
    rx_angles: &[PathAngle],
    wavelength: f64,
    sense: BoundSense,
) -> QuadraticSurrogate {
    let p: Vec<_> = rx_angles.iter().map(PathAngle::dircos).collect();
    modulus_surrogate(b, a, r0, &p, wavelength, sense)
}

/// Upper bound on `Re(bᴴG(T)a)` over the transmit positions.
pub fn build_transmit_surrogate(
    b: &CVector,
    a: &CVector,
    t0: &[Position],
    tx_angles: &[PathAngle],
    wavelength: f64,
) -> QuadraticSurrogate {
    let p: Vec<_> = tx_angles.iter().map(PathAngle::dircos).collect();
    real_part_surrogate(b, a, t0, &p, wavelength)
}
