//! Small dense complex linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, Vector2};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;
pub type RMatrix = DMatrix<f64>;
pub type RVector = DVector<f64>;
/// A point in an antenna moving region, meters.
pub type Position = Vector2<f64>;

pub const J: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn cis(phase: f64) -> C64 {
    C64::from_polar(1.0, phase)
}

/// Solves `A x = b` for Hermitian positive definite `A`, falling back to LU.
pub fn hermitian_solve(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if let Some(chol) = a.clone().cholesky() {
        return Ok(chol.solve(b));
    }
    a.clone().lu().solve(b).ok_or(Error::Singular)
}

pub fn hermitian_solve_vec(a: &CMatrix, b: &CVector) -> Result<CVector> {
    if let Some(chol) = a.clone().cholesky() {
        return Ok(chol.solve(b));
    }
    a.clone().lu().solve(b).ok_or(Error::Singular)
}

/// `‖A − Aᴴ‖_F`.
pub fn hermitian_defect(a: &CMatrix) -> f64 {
    (a - a.adjoint()).norm()
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue_hermitian(a: &CMatrix) -> f64 {
    let sym = (a + a.adjoint()).scale(0.5);
    sym.symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

pub fn min_eigenvalue_symmetric(a: &RMatrix) -> f64 {
    if a.nrows() == 0 {
        return 0.0;
    }
    let sym = (a + a.transpose()).scale(0.5);
    sym.symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Principal right singular vector of `h` (unit norm).
pub fn principal_right_singular(h: &CMatrix) -> CVector {
    let gram = h.adjoint() * h;
    let eig = gram.symmetric_eigen();
    let (idx, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &v)| {
            if v > best.1 {
                (i, v)
            } else {
                best
            }
        });
    let v = eig.eigenvectors.column(idx).into_owned();
    let n = v.norm();
    if n > 0.0 {
        v.unscale(n)
    } else {
        v
    }
}

/// Stacks complex `x` into `[Re x; Im x]`.
pub fn realify(x: &CVector) -> RVector {
    let n = x.len();
    RVector::from_fn(2 * n, |i, _| if i < n { x[i].re } else { x[i - n].im })
}

pub fn complexify(x: &RVector) -> CVector {
    let n = x.len() / 2;
    CVector::from_fn(n, |i, _| C64::new(x[i], x[i + n]))
}

/// Real representation of a Hermitian quadratic form:
/// `xᴴ Q x = [Re x; Im x]ᵀ [[Re Q, −Im Q]; [Im Q, Re Q]] [Re x; Im x]`.
pub fn realify_hermitian(q: &CMatrix) -> RMatrix {
    let n = q.nrows();
    let mut out = RMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let v = q[(i, j)];
            out[(i, j)] = v.re;
            out[(i + n, j + n)] = v.re;
            out[(i, j + n)] = -v.im;
            out[(i + n, j)] = v.im;
        }
    }
    (&out + out.transpose()).scale(0.5)
}

/// Column-major `vec` of a complex matrix.
pub fn vec_of(m: &CMatrix) -> CVector {
    CVector::from_column_slice(m.as_slice())
}

pub fn unvec(v: &CVector, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_column_slice(rows, cols, v.as_slice())
}

/// `vec(T)` for an `n×2` position matrix: all x coordinates, then all y.
pub fn stack_positions(p: &[Position]) -> RVector {
    let n = p.len();
    RVector::from_fn(2 * n, |i, _| if i < n { p[i].x } else { p[i - n].y })
}

pub fn unstack_positions(v: &RVector) -> Vec<Position> {
    let n = v.len() / 2;
    (0..n).map(|i| Position::new(v[i], v[i + n])).collect()
}

pub fn min_pairwise_distance(p: &[Position]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..p.len() {
        for j in (i + 1)..p.len() {
            best = best.min((p[i] - p[j]).norm());
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn realified_quadratic_form_matches_complex() {
        let q = CMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(2.0, 0.0),
                C64::new(0.5, -0.3),
                C64::new(0.5, 0.3),
                C64::new(1.0, 0.0),
            ],
        );
        let x = CVector::from_vec(vec![C64::new(0.3, -1.1), C64::new(-0.7, 0.4)]);
        let direct = (x.adjoint() * &q * &x)[(0, 0)].re;
        let xr = realify(&x);
        let real = (xr.transpose() * realify_hermitian(&q) * &xr)[(0, 0)];
        assert!((direct - real).abs() < 1e-12);
        assert_eq!(complexify(&xr), x);
    }

    #[test]
    fn position_stacking_roundtrip() {
        let p = vec![Position::new(0.1, 0.2), Position::new(0.3, 0.4)];
        let v = stack_positions(&p);
        assert_eq!(v.as_slice(), &[0.1, 0.3, 0.2, 0.4]);
        assert_eq!(unstack_positions(&v), p);
    }
}
