use std::f64::consts::FRAC_PI_2;

use nalgebra::{Vector2, Vector3};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use super::ScenarioConfig;
use crate::linalg::{C64, CMatrix, CVector};

/// Elevation/azimuth pair of one propagation path, radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathAngle {
    pub elevation: f64,
    pub azimuth: f64,
}

impl PathAngle {
    pub fn new(elevation: f64, azimuth: f64) -> Self {
        PathAngle { elevation, azimuth }
    }

    pub fn from_degrees(elevation: f64, azimuth: f64) -> Self {
        PathAngle::new(elevation.to_radians(), azimuth.to_radians())
    }

    /// In-plane direction cosines `(cos θ sin φ, sin θ)`.
    #[inline]
    pub fn dircos(&self) -> Vector2<f64> {
        Vector2::new(
            self.elevation.cos() * self.azimuth.sin(),
            self.elevation.sin(),
        )
    }

    pub fn offset(&self, d_elev: f64, d_azim: f64) -> Self {
        PathAngle::new(self.elevation + d_elev, self.azimuth + d_azim)
    }
}

/// Unit vector of `(θ, φ)` in the array frame (boresight along z).
pub fn direction_vector(angle: PathAngle) -> Vector3<f64> {
    let (st, ct) = angle.elevation.sin_cos();
    let (sp, cp) = angle.azimuth.sin_cos();
    Vector3::new(ct * sp, st, ct * cp)
}

/// Inverse of [`direction_vector`] with the azimuth folded into
/// `[−π/2, π/2]`. Folding keeps both direction cosines, so planar field
/// responses are unchanged.
pub fn direction_angles(dir: &Vector3<f64>) -> PathAngle {
    let u = dir.normalize();
    let elevation = u.y.clamp(-1.0, 1.0).asin();
    let mut azimuth = u.x.atan2(u.z);
    if azimuth > FRAC_PI_2 {
        azimuth = std::f64::consts::PI - azimuth;
    } else if azimuth < -FRAC_PI_2 {
        azimuth = -std::f64::consts::PI - azimuth;
    }
    PathAngle::new(elevation, azimuth)
}

/// Paths of the base-station → user link. Path `l` leaves the BS along
/// `tx[l]`, arrives along `rx[l]` and carries the complex gain `gains[l]`
/// (the diagonal of the path response matrix).
#[derive(Debug, Clone, PartialEq)]
pub struct LinkGeometry {
    pub tx: Vec<PathAngle>,
    pub rx: Vec<PathAngle>,
    pub gains: CVector,
}

impl LinkGeometry {
    pub fn num_paths(&self) -> usize {
        self.gains.len()
    }

    pub fn prm(&self) -> CMatrix {
        CMatrix::from_diagonal(&self.gains)
    }

    pub fn tx_dircos(&self) -> Vec<Vector2<f64>> {
        self.tx.iter().map(PathAngle::dircos).collect()
    }

    pub fn rx_dircos(&self) -> Vec<Vector2<f64>> {
        self.rx.iter().map(PathAngle::dircos).collect()
    }
}

/// Paths of a single-antenna jammer → user link (nominal arrival angles).
#[derive(Debug, Clone, PartialEq)]
pub struct JammerLink {
    pub rx: Vec<PathAngle>,
    pub gains: CVector,
}

impl JammerLink {
    pub fn prm(&self) -> CMatrix {
        CMatrix::from_diagonal(&self.gains)
    }

    /// Direction cosines with the same angular offset applied to every path.
    pub fn dircos_with_offset(&self, d_elev: f64, d_azim: f64) -> Vec<Vector2<f64>> {
        self.rx
            .iter()
            .map(|a| a.offset(d_elev, d_azim).dircos())
            .collect()
    }
}

/// One channel realization: a link per user and a link per (jammer, user).
#[derive(Debug, Clone, PartialEq)]
pub struct PathGeometry {
    pub users: Vec<LinkGeometry>,
    /// Indexed `[jammer][user]`.
    pub jammers: Vec<Vec<JammerLink>>,
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> C64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re * s, im * s)
}

fn path_gains<R: Rng + ?Sized>(rng: &mut R, l: usize, mean_gain: f64) -> CVector {
    CVector::from_fn(l, |i, _| {
        let var = if i == 0 {
            mean_gain
        } else {
            mean_gain / (l - 1) as f64
        };
        complex_gaussian(rng, var)
    })
}

fn random_angle<R: Rng + ?Sized>(rng: &mut R, dist: &Uniform<f64>) -> PathAngle {
    PathAngle::new(dist.sample(rng), dist.sample(rng))
}

/// Draws a realization. The first path of every link is the line of sight
/// between the nodes; the other paths have angles drawn uniformly over
/// `[−π/2, π/2]²`. Path gains are `CN(0, ρ d^{−α})` for the line of sight and
/// `CN(0, ρ d^{−α}/(L−1))` for the rest.
pub fn draw_path_geometry<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> PathGeometry {
    let l = cfg.n_paths;
    let uni = Uniform::new_inclusive(-FRAC_PI_2, FRAC_PI_2).expect("valid angle range");
    let bs = Vector3::from(cfg.bs_position);

    let user_pos: Vec<Vector3<f64>> = cfg
        .user_directions_deg
        .iter()
        .map(|&(el, az)| bs + cfg.user_radius * direction_vector(PathAngle::from_degrees(el, az)))
        .collect();

    let users = cfg
        .user_directions_deg
        .iter()
        .zip(&user_pos)
        .map(|(&(el, az), pos)| {
            let mut tx = vec![PathAngle::from_degrees(el, az)];
            let mut rx = vec![direction_angles(&(bs - pos))];
            for _ in 1..l {
                tx.push(random_angle(rng, &uni));
                rx.push(random_angle(rng, &uni));
            }
            let d = (pos - bs).norm();
            let gains = path_gains(rng, l, cfg.ref_gain * d.powf(-cfg.path_loss_exp));
            LinkGeometry { tx, rx, gains }
        })
        .collect();

    let jammers = cfg
        .jammer_positions
        .iter()
        .map(|jp| {
            let jp = Vector3::from(*jp);
            user_pos
                .iter()
                .map(|pos| {
                    let mut rx = vec![direction_angles(&(jp - pos))];
                    for _ in 1..l {
                        rx.push(random_angle(rng, &uni));
                    }
                    let d = (jp - pos).norm();
                    let gains = path_gains(rng, l, cfg.ref_gain * d.powf(-cfg.path_loss_exp));
                    JammerLink { rx, gains }
                })
                .collect()
        })
        .collect();

    PathGeometry { users, jammers }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn direction_roundtrip_preserves_cosines() {
        for &(el, az) in &[(-40.0, 30.0), (40.0, -150.0), (10.0, 120.0), (0.0, 0.0)] {
            let a = PathAngle::from_degrees(el, az);
            let back = direction_angles(&direction_vector(a));
            assert!((a.dircos() - back.dircos()).norm() < 1e-12);
            assert!(back.azimuth.abs() <= FRAC_PI_2 + 1e-12);
            assert!(back.elevation.abs() <= FRAC_PI_2 + 1e-12);
        }
    }

    #[test]
    fn user_to_bs_direction_is_reversed() {
        // Seen from user 1 the BS lies at (40°, −150°), i.e. (40°, −30°) folded.
        let a = direction_angles(&-direction_vector(PathAngle::from_degrees(-40.0, 30.0)));
        assert!((a.elevation.to_degrees() - 40.0).abs() < 1e-9);
        let expect = PathAngle::from_degrees(40.0, -150.0).dircos();
        assert!((a.dircos() - expect).norm() < 1e-12);
    }

    #[test]
    fn drawn_geometry_shapes_and_ranges() {
        let cfg = ScenarioConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g = draw_path_geometry(&cfg, &mut rng);
        assert_eq!(g.users.len(), 3);
        assert_eq!(g.jammers.len(), 2);
        for link in &g.users {
            assert_eq!(link.num_paths(), cfg.n_paths);
            for a in link.tx.iter().chain(&link.rx) {
                assert!(a.elevation.abs() <= FRAC_PI_2 + 1e-12);
                assert!(a.azimuth.abs() <= FRAC_PI_2 + 1e-12);
            }
            let prm = link.prm();
            for i in 0..prm.nrows() {
                for j in 0..prm.ncols() {
                    if i != j {
                        assert_eq!(prm[(i, j)], C64::new(0.0, 0.0));
                    }
                }
            }
        }
        let again = draw_path_geometry(&cfg, &mut ChaCha8Rng::seed_from_u64(7));
        assert_eq!(g, again);
    }
}
