use super::somp::{rls_somp, SompProblem};
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector, C64};
use crate::solvers::support_restricted_rls;

/// Worst-case MSE system for one user: stacks `(Ĥ_k B w_i)ᴴ` for every user
/// `i`, then `α ĝᴴ` for every jammer and sampled offset (jammer-major) with
/// `α = sqrt(p_r ω μ_s)`. The result is `(K + R·S) × G_r`.
pub fn build_ek(
    h_k: &CMatrix,
    tx_support: &[usize],
    w: &CMatrix,
    jam: &[Vec<CVector>],
    powers: &[f64],
    weights: &[f64],
    omega: f64,
) -> Result<CMatrix> {
    if tx_support.len() != w.nrows() {
        return Err(Error::Dimension(format!(
            "{} transmit antennas selected for a {}-row precoder",
            tx_support.len(),
            w.nrows()
        )));
    }
    if jam.len() != powers.len() {
        return Err(Error::Dimension(format!("{} jammers, {} powers", jam.len(), powers.len())));
    }
    let gr = h_k.nrows();
    let hb = h_k.select_columns(tx_support);
    let hw = &hb * w;
    let samples: usize = jam.iter().map(Vec::len).sum();
    let mut e = CMatrix::zeros(w.ncols() + samples, gr);
    for i in 0..w.ncols() {
        e.row_mut(i).copy_from(&hw.column(i).adjoint());
    }
    let mut row = w.ncols();
    for (chans, &p) in jam.iter().zip(powers) {
        if chans.len() != weights.len() {
            return Err(Error::Dimension("jammer samples and weights differ".into()));
        }
        for (g, &mu) in chans.iter().zip(weights) {
            if g.len() != gr {
                return Err(Error::Dimension("jammer channel length differs from the grid".into()));
            }
            let alpha = (p * omega * mu).sqrt();
            e.row_mut(row).copy_from(&g.adjoint().scale(alpha));
            row += 1;
        }
    }
    Ok(e)
}

/// `‖e_k − E C v‖² + ζ1‖v‖²` with `C` the selection of `rx_support`.
pub fn ek_objective(e: &CMatrix, k: usize, rx_support: &[usize], v: &CVector, zeta1: f64) -> f64 {
    let mut r = -(e.select_columns(rx_support) * v);
    r[k] += C64::new(1.0, 0.0);
    r.norm_squared() + zeta1 * v.norm_squared()
}

#[derive(Debug, Clone)]
pub struct ReceiverOutcome {
    pub v: CVector,
    pub support: Vec<usize>,
    pub zeta1: f64,
    /// Regularized worst-case MSE at the output.
    pub mse: f64,
}

/// Decoder and receive positions of user `k` by RLS-SOMP on `(e_k, E_k)`
/// with `ζ1 = ωσ²` and sparsity `n_rx`. With `fixed` the support is kept and
/// only the decoder is refitted.
#[allow(clippy::too_many_arguments)]
pub fn receiver_block(
    h_k: &CMatrix,
    jam: &[Vec<CVector>],
    tx_support: &[usize],
    w: &CMatrix,
    k: usize,
    n_rx: usize,
    powers: &[f64],
    weights: &[f64],
    noise: f64,
    p_max: f64,
    fixed: Option<&[usize]>,
) -> Result<ReceiverOutcome> {
    let omega = w.norm_squared() / p_max;
    let e = build_ek(h_k, tx_support, w, jam, powers, weights, omega)?;
    let mut y = CMatrix::zeros(e.nrows(), 1);
    y[(k, 0)] = C64::new(1.0, 0.0);
    let zeta1 = omega * noise;
    let (x, support) = match fixed {
        Some(s) => (support_restricted_rls(&y, &e, s, zeta1)?, s.to_vec()),
        None => {
            let sol = rls_somp(&SompProblem {
                y,
                dict: e.clone(),
                zeta: zeta1,
                sparsity: n_rx,
            })?;
            (sol.x, sol.support)
        }
    };
    let v = x.column(0).into_owned();
    Ok(ReceiverOutcome {
        mse: ek_objective(&e, k, &support, &v, zeta1),
        v,
        support,
        zeta1,
    })
}
