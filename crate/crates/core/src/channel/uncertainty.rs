use super::{assemble_jammer_channel, JammerLink};
use crate::error::Result;
use crate::linalg::{CMatrix, CVector, Position};

/// Angular offset box around the nominal jammer arrival angles, radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleBounds {
    pub theta_l: f64,
    pub theta_u: f64,
    pub phi_l: f64,
    pub phi_u: f64,
}

impl AngleBounds {
    /// `[−w/2, w/2]` on both axes for a full width `w` in degrees.
    pub fn symmetric_deg(width_deg: f64) -> Self {
        let h = width_deg.to_radians() / 2.0;
        AngleBounds {
            theta_l: -h,
            theta_u: h,
            phi_l: -h,
            phi_u: h,
        }
    }
}

/// Uniformly sampled angular offsets with equal weights. Sample `i·Q2 + j`
/// is `(θ(i), φ(j))`.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertaintySet {
    pub bounds: AngleBounds,
    pub q_elev: usize,
    pub q_azim: usize,
    pub samples: Vec<(f64, f64)>,
    pub weights: Vec<f64>,
}

impl UncertaintySet {
    /// Grid centered on the nominal angles. An axis with a single sample sits
    /// at the nominal angle.
    pub fn centered(width_deg: f64, q_elev: usize, q_azim: usize) -> Self {
        let mut b = AngleBounds::symmetric_deg(width_deg);
        if q_elev == 1 {
            b.theta_l = 0.0;
            b.theta_u = 0.0;
        }
        if q_azim == 1 {
            b.phi_l = 0.0;
            b.phi_u = 0.0;
        }
        sample_uncertainty_grid(b, q_elev, q_azim)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

fn axis(lo: f64, hi: f64, q: usize) -> Vec<f64> {
    if q <= 1 {
        return vec![lo];
    }
    let step = (hi - lo) / (q - 1) as f64;
    (0..q).map(|i| lo + i as f64 * step).collect()
}

pub fn sample_uncertainty_grid(bounds: AngleBounds, q_elev: usize, q_azim: usize) -> UncertaintySet {
    let thetas = axis(bounds.theta_l, bounds.theta_u, q_elev);
    let phis = axis(bounds.phi_l, bounds.phi_u, q_azim);
    let samples: Vec<(f64, f64)> = thetas
        .iter()
        .flat_map(|&t| phis.iter().map(move |&p| (t, p)))
        .collect();
    let w = 1.0 / samples.len().max(1) as f64;
    UncertaintySet {
        bounds,
        q_elev,
        q_azim,
        weights: vec![w; samples.len()],
        samples,
    }
}

/// Jammer channel at every sampled offset. The offset is applied to all
/// paths of the link.
pub fn sampled_jammer_channels(
    rx: &[Position],
    link: &JammerLink,
    unc: &UncertaintySet,
    wavelength: f64,
) -> Result<Vec<CVector>> {
    unc.samples
        .iter()
        .map(|&(dt, dp)| {
            assemble_jammer_channel(rx, &link.dircos_with_offset(dt, dp), &link.gains, wavelength)
        })
        .collect()
}

/// `p_J Σ μ ĝ ĝᴴ` over the sampled jammer channels.
pub fn worst_case_jammer_covariance(
    unc: &UncertaintySet,
    link: &JammerLink,
    rx: &[Position],
    jammer_power: f64,
    wavelength: f64,
) -> Result<CMatrix> {
    let chans = sampled_jammer_channels(rx, link, unc, wavelength)?;
    let m = rx.len();
    let mut acc = CMatrix::zeros(m, m);
    for (g, &w) in chans.iter().zip(&unc.weights) {
        acc += (g * g.adjoint()).scale(w * jammer_power);
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::PathAngle;
    use crate::linalg::{hermitian_defect, min_eigenvalue_hermitian, C64};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_link(rng: &mut ChaCha8Rng, l: usize) -> JammerLink {
        JammerLink {
            rx: (0..l)
                .map(|_| PathAngle::new(rng.random_range(-1.4..1.4), rng.random_range(-1.4..1.4)))
                .collect(),
            gains: CVector::from_fn(l, |_, _| {
                C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            }),
        }
    }

    #[test]
    fn single_sample_grid() {
        let b = AngleBounds {
            theta_l: 0.1,
            theta_u: 0.3,
            phi_l: -0.2,
            phi_u: 0.0,
        };
        let u = sample_uncertainty_grid(b, 1, 1);
        assert_eq!(u.samples, vec![(0.1, -0.2)]);
        assert_eq!(u.weights, vec![1.0]);
    }

    #[test]
    fn five_elevation_samples_at_one_degree() {
        let b = AngleBounds {
            theta_l: 0.0,
            theta_u: 4f64.to_radians(),
            phi_l: 0.0,
            phi_u: 0.0,
        };
        let u = sample_uncertainty_grid(b, 5, 1);
        for (i, s) in u.samples.iter().enumerate() {
            assert!((s.0.to_degrees() - i as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn weights_are_uniform() {
        let u = sample_uncertainty_grid(AngleBounds::symmetric_deg(4.0), 3, 2);
        assert_eq!(u.len(), 6);
        for w in &u.weights {
            assert!((w - 1.0 / 6.0).abs() < 1e-15);
        }
        assert!((u.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(u, sample_uncertainty_grid(AngleBounds::symmetric_deg(4.0), 3, 2));
    }

    #[test]
    fn centered_single_sample_is_nominal() {
        let u = UncertaintySet::centered(4.0, 1, 1);
        assert_eq!(u.samples, vec![(0.0, 0.0)]);
        let u = UncertaintySet::centered(4.0, 3, 3);
        assert!((u.samples[4].0).abs() < 1e-15 && (u.samples[4].1).abs() < 1e-15);
    }

    #[test]
    fn one_sample_covariance_is_rank_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let link = random_link(&mut rng, 3);
        let rx = [Position::new(0.0, 0.0), Position::new(0.05, 0.0), Position::new(0.0, 0.05)];
        let u = UncertaintySet::centered(0.0, 1, 1);
        let cov = worst_case_jammer_covariance(&u, &link, &rx, 1.0, 0.1).unwrap();
        let g = &sampled_jammer_channels(&rx, &link, &u, 0.1).unwrap()[0];
        assert!((&cov - g * g.adjoint()).norm() < 1e-12);
    }

    #[test]
    fn covariance_is_hermitian_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let link = random_link(&mut rng, 4);
            let rx: Vec<_> = (0..4)
                .map(|_| Position::new(rng.random_range(0.0..0.4), rng.random_range(0.0..0.4)))
                .collect();
            let u = UncertaintySet::centered(10.0, 3, 4);
            let cov = worst_case_jammer_covariance(&u, &link, &rx, 2.5, 0.1).unwrap();
            assert!(hermitian_defect(&cov) < 1e-12);
            assert!(min_eigenvalue_hermitian(&cov) >= -1e-10);
        }
    }
}
