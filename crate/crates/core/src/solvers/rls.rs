use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};

/// Ridge solution `(D_Λᴴ D_Λ + ζI)⁻¹ D_Λᴴ Y` on the columns `support` of `dict`.
pub fn support_restricted_rls(
    y: &CMatrix,
    dict: &CMatrix,
    support: &[usize],
    zeta: f64,
) -> Result<CMatrix> {
    if y.nrows() != dict.nrows() {
        return Err(Error::Dimension(format!(
            "measurement has {} rows, dictionary {}",
            y.nrows(),
            dict.nrows()
        )));
    }
    if zeta < 0.0 || !zeta.is_finite() {
        return Err(Error::InvalidSupport(format!("regularizer {zeta} must be ≥ 0")));
    }
    let width = dict.ncols();
    for (i, &s) in support.iter().enumerate() {
        if s >= width {
            return Err(Error::InvalidSupport(format!(
                "index {s} outside dictionary width {width}"
            )));
        }
        if support[..i].contains(&s) {
            return Err(Error::InvalidSupport(format!("index {s} repeated")));
        }
    }
    let d = dict.select_columns(support);
    let mut gram = d.adjoint() * &d;
    if zeta == 0.0 && !support.is_empty() {
        let eig = gram.clone().symmetric_eigenvalues();
        let max = eig.iter().copied().fold(0.0, f64::max);
        let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
        if max == 0.0 || min <= 1e-12 * max {
            return Err(Error::Singular);
        }
    }
    for i in 0..gram.nrows() {
        gram[(i, i)] += C64::new(zeta, 0.0);
    }
    let rhs = d.adjoint() * y;
    if gram.nrows() == 0 {
        return Ok(CMatrix::zeros(0, y.ncols()));
    }
    match gram.clone().cholesky() {
        Some(ch) => Ok(ch.solve(&rhs)),
        None => gram.lu().solve(&rhs).ok_or(Error::Singular),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_mat(rng: &mut ChaCha8Rng, r: usize, c: usize) -> CMatrix {
        CMatrix::from_fn(r, c, |_, _| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    #[test]
    fn orthonormal_columns_without_ridge() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let q = rand_mat(&mut rng, 6, 4).qr().q();
        let y = rand_mat(&mut rng, 6, 2);
        let x = support_restricted_rls(&y, &q, &[0, 2], 0.0).unwrap();
        let expect = q.select_columns(&[0, 2]).adjoint() * &y;
        assert!((x - expect).norm() < 1e-12);
    }

    #[test]
    fn large_ridge_shrinks_to_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let d = rand_mat(&mut rng, 5, 4);
        let y = rand_mat(&mut rng, 5, 3);
        let zeta = 1e8;
        let x = support_restricted_rls(&y, &d, &[0, 1, 3], zeta).unwrap();
        assert!(x.norm() <= d.norm() * y.norm() / zeta);
    }

    #[test]
    fn matches_normal_equations_and_is_stationary() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = rand_mat(&mut rng, 6, 3);
        let y = rand_mat(&mut rng, 6, 2);
        let zeta = 0.5;
        let x = support_restricted_rls(&y, &d, &[0, 1, 2], zeta).unwrap();
        let mut a = d.adjoint() * &d;
        for i in 0..3 {
            a[(i, i)] += C64::new(zeta, 0.0);
        }
        let oracle = a.try_inverse().unwrap() * d.adjoint() * &y;
        assert!((&x - oracle).norm() < 1e-12);
        let resid = d.adjoint() * (&y - &d * &x) - x.scale(zeta);
        assert!(resid.norm() < 1e-8 * (1.0 + y.norm()));
    }

    #[test]
    fn rank_deficient_without_ridge_is_an_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut d = rand_mat(&mut rng, 4, 3);
        let c0 = d.column(0).into_owned();
        d.set_column(1, &c0);
        let y = rand_mat(&mut rng, 4, 1);
        assert!(matches!(
            support_restricted_rls(&y, &d, &[0, 1], 0.0),
            Err(Error::Singular)
        ));
        assert!(support_restricted_rls(&y, &d, &[0, 1], 0.1).is_ok());
    }

    #[test]
    fn invalid_supports_are_rejected() {
        let d = CMatrix::identity(3, 3);
        let y = CMatrix::zeros(3, 1);
        assert!(support_restricted_rls(&y, &d, &[0, 0], 0.1).is_err());
        assert!(support_restricted_rls(&y, &d, &[3], 0.1).is_err());
    }
}
