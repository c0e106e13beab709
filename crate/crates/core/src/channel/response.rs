use std::f64::consts::PI;

use nalgebra::Vector2;

use super::{LinkGeometry, PathAngle};
use crate::error::{Error, Result};
use crate::linalg::{cis, CMatrix, CVector, Position};

/// `[exp(j 2π/λ · p_l · x)]_l` for in-plane direction cosines `p_l`.
pub fn field_response(x: &Position, dircos: &[Vector2<f64>], wavelength: f64) -> CVector {
    let k = 2.0 * PI / wavelength;
    CVector::from_iterator(dircos.len(), dircos.iter().map(|p| cis(k * p.dot(x))))
}

/// `L × M` matrix whose columns are the field responses at `positions`.
pub fn field_response_matrix(
    positions: &[Position],
    dircos: &[Vector2<f64>],
    wavelength: f64,
) -> CMatrix {
    let k = 2.0 * PI / wavelength;
    CMatrix::from_fn(dircos.len(), positions.len(), |l, m| {
        cis(k * dircos[l].dot(&positions[m]))
    })
}

pub fn transmit_field_response(t: &Position, tx_angles: &[PathAngle], wavelength: f64) -> CVector {
    let p: Vec<_> = tx_angles.iter().map(PathAngle::dircos).collect();
    field_response(t, &p, wavelength)
}

pub fn receive_field_response(r: &Position, rx_angles: &[PathAngle], wavelength: f64) -> CVector {
    let p: Vec<_> = rx_angles.iter().map(PathAngle::dircos).collect();
    field_response(r, &p, wavelength)
}

/// `H = F(R)ᴴ Σ G(T)` (`M × N`).
pub fn assemble_user_channel(
    tx: &[Position],
    rx: &[Position],
    link: &LinkGeometry,
    wavelength: f64,
) -> Result<CMatrix> {
    let l = link.num_paths();
    if link.tx.len() != l || link.rx.len() != l {
        return Err(Error::Dimension(format!(
            "link has {} tx / {} rx angles for {} path gains",
            link.tx.len(),
            link.rx.len(),
            l
        )));
    }
    if tx.is_empty() || rx.is_empty() {
        return Err(Error::Dimension("empty antenna position list".into()));
    }
    let mut sg = field_response_matrix(tx, &link.tx_dircos(), wavelength);
    for (li, gain) in link.gains.iter().enumerate() {
        for v in sg.row_mut(li).iter_mut() {
            *v *= gain;
        }
    }
    let f = field_response_matrix(rx, &link.rx_dircos(), wavelength);
    Ok(f.adjoint() * sg)
}

/// `g = F(R)ᴴ Σ 1` for a single-antenna transmitter.
pub fn assemble_jammer_channel(
    rx: &[Position],
    dircos: &[Vector2<f64>],
    gains: &CVector,
    wavelength: f64,
) -> Result<CVector> {
    if dircos.len() != gains.len() {
        return Err(Error::Dimension(format!(
            "{} arrival angles for {} path gains",
            dircos.len(),
            gains.len()
        )));
    }
    if rx.is_empty() {
        return Err(Error::Dimension("empty antenna position list".into()));
    }
    let f = field_response_matrix(rx, dircos, wavelength);
    Ok(f.adjoint() * gains)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::C64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_c(rng: &mut ChaCha8Rng) -> C64 {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    }

    fn rand_angle(rng: &mut ChaCha8Rng) -> PathAngle {
        PathAngle::new(rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5))
    }

    fn rand_link(rng: &mut ChaCha8Rng, l: usize) -> LinkGeometry {
        LinkGeometry {
            tx: (0..l).map(|_| rand_angle(rng)).collect(),
            rx: (0..l).map(|_| rand_angle(rng)).collect(),
            gains: CVector::from_fn(l, |_, _| rand_c(rng)),
        }
    }

    #[test]
    fn origin_response_is_all_ones() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let angles: Vec<_> = (0..5).map(|_| rand_angle(&mut rng)).collect();
        let t = transmit_field_response(&Position::zeros(), &angles, 0.1);
        let r = receive_field_response(&Position::zeros(), &angles, 0.1);
        for v in t.iter().chain(r.iter()) {
            assert_eq!(*v, C64::new(1.0, 0.0));
        }
    }

    #[test]
    fn half_wavelength_shift_flips_sign() {
        let t = Position::new(0.05, 0.0);
        let v = transmit_field_response(&t, &[PathAngle::new(0.0, PI / 2.0)], 0.1);
        assert!((v[0] - C64::new(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn hand_evaluated_phase() {
        let (x, y, lambda) = (0.03, 0.04, 0.1);
        let (theta, phi) = (PI / 6.0, PI / 4.0);
        let rho = x * theta.cos() * phi.sin() + y * theta.sin();
        let expect = C64::new(0.0, 2.0 * PI * rho / lambda).exp();
        let v = transmit_field_response(&Position::new(x, y), &[PathAngle::new(theta, phi)], lambda);
        assert!((v[0] - expect).norm() < 1e-14);
    }

    #[test]
    fn responses_are_unit_modulus_and_consistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let angles: Vec<_> = (0..6).map(|_| rand_angle(&mut rng)).collect();
        for _ in 0..100 {
            let p = Position::new(rng.random_range(0.0..0.4), rng.random_range(0.0..0.4));
            let r = receive_field_response(&p, &angles, 0.1);
            let t = transmit_field_response(&p, &angles, 0.1);
            assert_eq!(r, t);
            for v in r.iter() {
                assert!((v.norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn scalar_channel_at_origin_is_path_gain() {
        let s = C64::new(0.3, -0.4);
        let link = LinkGeometry {
            tx: vec![PathAngle::new(0.2, 0.1)],
            rx: vec![PathAngle::new(-0.3, 0.7)],
            gains: CVector::from_element(1, s),
        };
        let o = [Position::zeros()];
        let h = assemble_user_channel(&o, &o, &link, 0.1).unwrap();
        assert!((h[(0, 0)] - s).norm() < 1e-15);
        assert!((h[(0, 0)].norm() - s.norm()).abs() < 1e-15);
    }

    #[test]
    fn zero_prm_gives_zero_channel() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut link = rand_link(&mut rng, 3);
        link.gains.fill(C64::new(0.0, 0.0));
        let tx = [Position::new(0.1, 0.0), Position::new(0.0, 0.2)];
        let h = assemble_user_channel(&tx, &tx, &link, 0.1).unwrap();
        assert_eq!(h.norm(), 0.0);
    }

    #[test]
    fn channel_matches_triple_loop_and_is_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let lambda = 0.1;
        let link = rand_link(&mut rng, 3);
        let tx: Vec<_> = (0..2)
            .map(|_| Position::new(rng.random_range(0.0..0.4), rng.random_range(0.0..0.4)))
            .collect();
        let rx: Vec<_> = (0..2)
            .map(|_| Position::new(rng.random_range(0.0..0.4), rng.random_range(0.0..0.4)))
            .collect();
        let h = assemble_user_channel(&tx, &rx, &link, lambda).unwrap();
        let bound: f64 = link.gains.iter().map(|g| g.norm()).sum();
        let k = 2.0 * PI / lambda;
        for m in 0..2 {
            for n in 0..2 {
                let mut acc = C64::new(0.0, 0.0);
                for l in 0..3 {
                    let (tr, tt) = (link.rx[l], link.tx[l]);
                    let rho_r = rx[m].x * tr.elevation.cos() * tr.azimuth.sin()
                        + rx[m].y * tr.elevation.sin();
                    let rho_t = tx[n].x * tt.elevation.cos() * tt.azimuth.sin()
                        + tx[n].y * tt.elevation.sin();
                    let f = C64::new(0.0, k * rho_r).exp();
                    let g = C64::new(0.0, k * rho_t).exp();
                    acc += f.conj() * link.gains[l] * g;
                }
                assert!((h[(m, n)] - acc).norm() < 1e-13);
                assert!(h[(m, n)].norm() <= bound + 1e-12);
            }
        }
    }

    #[test]
    fn channel_is_linear_in_prm() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = rand_link(&mut rng, 4);
        let mut b = a.clone();
        b.gains = CVector::from_fn(4, |_, _| rand_c(&mut rng));
        let mut sum = a.clone();
        sum.gains = &a.gains + &b.gains;
        let tx: Vec<_> = (0..3)
            .map(|_| Position::new(rng.random_range(0.0..0.4), rng.random_range(0.0..0.4)))
            .collect();
        let rx = tx[..2].to_vec();
        let ha = assemble_user_channel(&tx, &rx, &a, 0.1).unwrap();
        let hb = assemble_user_channel(&tx, &rx, &b, 0.1).unwrap();
        let hs = assemble_user_channel(&tx, &rx, &sum, 0.1).unwrap();
        assert!((&hs - (ha + hb)).norm() <= 1e-10 * hs.norm());
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut link = rand_link(&mut rng, 3);
        link.tx.pop();
        let p = [Position::zeros()];
        assert!(matches!(
            assemble_user_channel(&p, &p, &link, 0.1),
            Err(Error::Dimension(_))
        ));
        let dircos = vec![Vector2::new(0.1, 0.2)];
        assert!(assemble_jammer_channel(&p, &dircos, &CVector::zeros(2), 0.1).is_err());
    }

    #[test]
    fn jammer_channel_cases() {
        let s = C64::new(-0.2, 0.9);
        let p = [Position::zeros()];
        let g = assemble_jammer_channel(&p, &[Vector2::new(0.3, 0.1)], &CVector::from_element(1, s), 0.1)
            .unwrap();
        assert!((g[0].norm() - s.norm()).abs() < 1e-15);

        // Σ = I and every antenna at the origin → each entry is L.
        let l = 4;
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let dircos: Vec<_> = (0..l).map(|_| rand_angle(&mut rng).dircos()).collect();
        let ones = CVector::from_element(l, C64::new(1.0, 0.0));
        let g = assemble_jammer_channel(&[Position::zeros(); 3], &dircos, &ones, 0.1).unwrap();
        for v in g.iter() {
            assert!((v - C64::new(l as f64, 0.0)).norm() < 1e-12);
        }

        // Brute-force sum over paths.
        let gains = CVector::from_fn(l, |_, _| rand_c(&mut rng));
        let rx: Vec<_> = (0..3)
            .map(|_| Position::new(rng.random_range(0.0..0.4), rng.random_range(0.0..0.4)))
            .collect();
        let g = assemble_jammer_channel(&rx, &dircos, &gains, 0.1).unwrap();
        for m in 0..3 {
            let mut acc = C64::new(0.0, 0.0);
            for li in 0..l {
                let phase = 2.0 * PI / 0.1 * (rx[m].x * dircos[li].x + rx[m].y * dircos[li].y);
                acc += C64::new(0.0, -phase).exp() * gains[li];
            }
            assert!((g[m] - acc).norm() < 1e-13);
        }
    }
}
