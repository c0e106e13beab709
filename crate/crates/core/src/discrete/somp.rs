use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::solvers::support_restricted_rls;

/// `min ‖Y − D X‖_F² + ζ‖X‖_F²` over `X` with exactly `sparsity` nonzero rows.
#[derive(Debug, Clone)]
pub struct SompProblem {
    pub y: CMatrix,
    pub dict: CMatrix,
    pub zeta: f64,
    pub sparsity: usize,
}

#[derive(Debug, Clone)]
pub struct SompSolution {
    /// Nonzero rows, in the order of `support`.
    pub x: CMatrix,
    /// Selected dictionary columns in selection order.
    pub support: Vec<usize>,
    /// `‖Y − D_Λ X‖_F` after each selection.
    pub residuals: Vec<f64>,
}

impl SompSolution {
    /// Row-sparse coefficient matrix over the whole dictionary width.
    pub fn dense(&self, width: usize) -> CMatrix {
        let mut out = CMatrix::zeros(width, self.x.ncols());
        for (j, &g) in self.support.iter().enumerate() {
            out.row_mut(g).copy_from(&self.x.row(j));
        }
        out
    }
}

/// Greedy simultaneous OMP with a ridge-regularized refit after every
/// selection. Ties in the correlation go to the lowest column index.
pub fn rls_somp(p: &SompProblem) -> Result<SompSolution> {
    let width = p.dict.ncols();
    if p.y.nrows() != p.dict.nrows() {
        return Err(Error::Dimension(format!(
            "measurement has {} rows, dictionary {}",
            p.y.nrows(),
            p.dict.nrows()
        )));
    }
    if p.sparsity > width {
        return Err(Error::InvalidSupport(format!(
            "sparsity {} exceeds dictionary width {width}",
            p.sparsity
        )));
    }
    let mut support = Vec::with_capacity(p.sparsity);
    let mut residual = p.y.clone();
    let mut residuals = Vec::with_capacity(p.sparsity);
    let mut x = CMatrix::zeros(0, p.y.ncols());
    for _ in 0..p.sparsity {
        let corr = p.dict.adjoint() * &residual;
        let mut best = None;
        let mut best_val = f64::NEG_INFINITY;
        for g in 0..width {
            if support.contains(&g) {
                continue;
            }
            let val = corr.row(g).norm_squared();
            if val.is_nan() {
                return Err(Error::Dimension(format!("dictionary column {g} is not finite")));
            }
            if val > best_val {
                best_val = val;
                best = Some(g);
            }
        }
        support.push(best.expect("sparsity does not exceed width"));
        x = support_restricted_rls(&p.y, &p.dict, &support, p.zeta)?;
        residual = &p.y - p.dict.select_columns(&support) * &x;
        residuals.push(residual.norm());
    }
    Ok(SompSolution { x, support, residuals })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::C64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_mat(rng: &mut ChaCha8Rng, r: usize, c: usize) -> CMatrix {
        CMatrix::from_fn(r, c, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    #[test]
    fn picks_the_matching_orthonormal_column() {
        let d = CMatrix::identity(3, 3);
        let y = d.columns(2, 1).into_owned();
        let s = rls_somp(&SompProblem { y, dict: d, zeta: 0.0, sparsity: 1 }).unwrap();
        assert_eq!(s.support, vec![2]);
        assert!((s.x[(0, 0)] - C64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(s.residuals[0] < 1e-15);
    }

    #[test]
    fn full_sparsity_is_the_ridge_solution() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let d = rand_mat(&mut rng, 6, 4);
        let y = rand_mat(&mut rng, 6, 2);
        let s = rls_somp(&SompProblem { y: y.clone(), dict: d.clone(), zeta: 0.3, sparsity: 4 }).unwrap();
        let full = (d.adjoint() * &d + CMatrix::identity(4, 4).scale(0.3))
            .lu()
            .solve(&(d.adjoint() * &y))
            .unwrap();
        assert!((s.dense(4) - full).norm() < 1e-12);
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let d = CMatrix::identity(3, 3);
        let y = CMatrix::from_element(3, 1, C64::new(1.0, 0.0));
        let s = rls_somp(&SompProblem { y, dict: d, zeta: 0.0, sparsity: 2 }).unwrap();
        assert_eq!(s.support, vec![0, 1]);
    }

    #[test]
    fn residual_never_grows_without_ridge() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let d = rand_mat(&mut rng, 8, 6);
            let y = rand_mat(&mut rng, 8, 3);
            let s = rls_somp(&SompProblem { y: y.clone(), dict: d, zeta: 0.0, sparsity: 5 }).unwrap();
            let mut last = y.norm();
            for r in &s.residuals {
                assert!(*r <= last + 1e-12);
                last = *r;
            }
        }
    }

    #[test]
    fn sparsity_above_width_is_rejected() {
        let p = SompProblem {
            y: CMatrix::zeros(2, 1),
            dict: CMatrix::zeros(2, 1),
            zeta: 1.0,
            sparsity: 2,
        };
        assert!(rls_somp(&p).is_err());
    }
}
