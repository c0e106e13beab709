use super::somp::{rls_somp, SompProblem};
use crate::continuous::{build_mm_state, MmState};
use crate::error::Result;
use crate::linalg::{CMatrix, CVector, C64};
use crate::solvers::support_restricted_rls;

/// Rate-bound expansion for the transmit block, written as a ridge
/// regression `‖M^{1/2} − M^{−1/2} N Ĥ W‖_F² + ζ2‖W‖_F²` over the grid.
#[derive(Debug, Clone)]
pub struct MmSompMatrices {
    /// Diagonal of `M`: `F11` per user.
    pub m: Vec<f64>,
    /// Diagonal of `N`: `−F12` per user.
    pub n: Vec<C64>,
    pub zeta2: f64,
    pub states: Vec<MmState>,
    /// Bound budget per user, nats: `ln(uᴴD0⁻¹u) + tr(F D0) − Γ_k ln 2`.
    pub gamma_hat: Vec<f64>,
}

/// Effective channels `ĥ_k = Ĥ_kᴴ C_k v_k` over the whole transmit grid, as
/// the rows of a `K × G_t` matrix `Ĥ` (row `k` is `ĥ_kᴴ`).
pub fn stacked_effective(hhat: &[CVector]) -> CMatrix {
    let gt = hhat.first().map_or(0, |h| h.len());
    let mut out = CMatrix::zeros(hhat.len(), gt);
    for (k, h) in hhat.iter().enumerate() {
        out.row_mut(k).copy_from(&h.adjoint());
    }
    out
}

pub fn build_mm_somp_matrices(
    hhat: &[CVector],
    tx_support: &[usize],
    w_prev: &CMatrix,
    sigma2: &[f64],
    p_max: f64,
    min_rates_bits: &[f64],
) -> MmSompMatrices {
    let states: Vec<MmState> = hhat
        .iter()
        .enumerate()
        .map(|(k, h)| build_mm_state(w_prev, k, &h.select_rows(tx_support), sigma2[k], p_max))
        .collect();
    let zeta2 = states.iter().map(|s| s.f22 * s.noise / p_max).sum();
    MmSompMatrices {
        m: states.iter().map(|s| s.f11).collect(),
        n: states.iter().map(|s| -s.f12).collect(),
        zeta2,
        gamma_hat: states
            .iter()
            .zip(min_rates_bits)
            .map(|(s, g)| s.rate0 + s.trace0 - g * std::f64::consts::LN_2)
            .collect(),
        states,
    }
}

impl MmSompMatrices {
    /// `(Y, Dict) = (M^{1/2}, M^{−1/2} N Ĥ)`.
    pub fn regression(&self, hhat: &[CVector]) -> (CMatrix, CMatrix) {
        let k = self.m.len();
        let mut y = CMatrix::zeros(k, k);
        let mut dict = stacked_effective(hhat);
        for i in 0..k {
            let r = self.m[i].sqrt();
            y[(i, i)] = C64::new(r, 0.0);
            let f = self.n[i] / r;
            for v in dict.row_mut(i).iter_mut() {
                *v *= f;
            }
        }
        (y, dict)
    }

    /// Ridge objective at a grid precoder `w_grid` (`G_t × K`).
    pub fn objective(&self, hhat: &[CVector], w_grid: &CMatrix) -> f64 {
        let (y, dict) = self.regression(hhat);
        (y - dict * w_grid).norm_squared() + self.zeta2 * w_grid.norm_squared()
    }
}

#[derive(Debug, Clone)]
pub struct TransmitterOutcome {
    /// Nonzero rows of the grid precoder, `N × K`, in support order.
    pub w: CMatrix,
    pub support: Vec<usize>,
    /// Ridge objective at the output.
    pub objective: f64,
}

/// Row-sparse precoder and transmit support by RLS-SOMP on the ridge form
/// of the bound. With `fixed` the support is kept and only the precoder is
/// refitted.
pub fn transmitter_block(
    mats: &MmSompMatrices,
    hhat: &[CVector],
    n_tx: usize,
    fixed: Option<&[usize]>,
) -> Result<TransmitterOutcome> {
    let (y, dict) = mats.regression(hhat);
    let (w, support) = match fixed {
        Some(s) => (support_restricted_rls(&y, &dict, s, mats.zeta2)?, s.to_vec()),
        None => {
            let sol = rls_somp(&SompProblem {
                y,
                dict,
                zeta: mats.zeta2,
                sparsity: n_tx,
            })?;
            (sol.x, sol.support)
        }
    };
    let mut dense = CMatrix::zeros(hhat.first().map_or(0, |h| h.len()), w.ncols());
    for (j, &g) in support.iter().enumerate() {
        dense.row_mut(g).copy_from(&w.row(j));
    }
    Ok(TransmitterOutcome {
        objective: mats.objective(hhat, &dense),
        w,
        support,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::continuous::closed_form_precoder;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rc(rng: &mut ChaCha8Rng) -> C64 {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    }

    #[test]
    fn full_support_matches_closed_form_precoder() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let hhat: Vec<CVector> = (0..3).map(|_| CVector::from_fn(5, |_, _| rc(&mut rng))).collect();
        let support = [0, 1, 2, 3, 4];
        let w0 = CMatrix::from_fn(5, 3, |_, _| rc(&mut rng));
        let mats = build_mm_somp_matrices(&hhat, &support, &w0, &[0.2, 0.3, 0.4], 1.5, &[1.0; 3]);
        assert!(mats.m.iter().all(|m| *m >= 1.0));
        let out = transmitter_block(&mats, &hhat, 5, None).unwrap();
        let dense = {
            let mut d = CMatrix::zeros(5, 3);
            for (j, &g) in out.support.iter().enumerate() {
                d.row_mut(g).copy_from(&out.w.row(j));
            }
            d
        };
        let cf = closed_form_precoder(&mats.states, 5).unwrap();
        assert!((dense - cf).norm() < 1e-10);
    }

    #[test]
    fn dominant_column_is_selected_first() {
        let mut h = CVector::from_element(3, C64::new(0.1, 0.0));
        h[1] = C64::new(3.0, 0.0);
        let hhat = vec![h];
        let w0 = CMatrix::from_element(1, 1, C64::new(1.0, 0.0));
        let mats = build_mm_somp_matrices(&hhat, &[0], &w0, &[0.5], 1.0, &[0.0]);
        let out = transmitter_block(&mats, &hhat, 1, None).unwrap();
        assert_eq!(out.support, vec![1]);
    }
}
