use crate::channel::{assemble_user_channel, sampled_jammer_channels};
use crate::error::{Error, Result};
use crate::linalg::{min_pairwise_distance, CMatrix, CVector, Position};
use crate::model::{Layout, Realization};

/// Square lattice with step `spacing` covering `[0, side]²`, indexed
/// `row · n + col` with `n = floor(side / spacing) + 1` points per axis.
pub fn build_grid(side: f64, spacing: f64) -> Vec<Position> {
    assert!(spacing > 0.0 && side >= 0.0, "grid needs D > 0 and W ≥ 0");
    let n = (side / spacing + 1e-9).floor() as usize + 1;
    (0..n * n)
        .map(|i| Position::new((i % n) as f64 * spacing, (i / n) as f64 * spacing))
        .collect()
}

/// Candidate positions and the selected supports. Every user shares the same
/// receive grid because all receive regions have the same size.
#[derive(Debug, Clone, PartialEq)]
pub struct GridLayout {
    pub grid_t: Vec<Position>,
    pub grid_r: Vec<Position>,
    pub tx_support: Vec<usize>,
    pub rx_support: Vec<Vec<usize>>,
}

fn check_support(support: &[usize], size: usize, width: usize, what: &str) -> Result<()> {
    if support.len() != size {
        return Err(Error::InvalidSupport(format!(
            "{what} support has {} entries, expected {size}",
            support.len()
        )));
    }
    for (i, &s) in support.iter().enumerate() {
        if s >= width {
            return Err(Error::InvalidSupport(format!("{what} index {s} outside grid of {width}")));
        }
        if support[..i].contains(&s) {
            return Err(Error::InvalidSupport(format!("{what} index {s} repeated")));
        }
    }
    Ok(())
}

/// `G × n` 0/1 matrix whose column `j` selects grid point `support[j]`.
pub fn selection_matrix(support: &[usize], width: usize) -> CMatrix {
    let mut b = CMatrix::zeros(width, support.len());
    for (j, &g) in support.iter().enumerate() {
        b[(g, j)] = 1.0.into();
    }
    b
}

impl GridLayout {
    pub fn new(real: &Realization) -> Self {
        let cfg = &real.cfg;
        GridLayout {
            grid_t: build_grid(cfg.tx_region, cfg.min_spacing),
            grid_r: build_grid(cfg.rx_region, cfg.min_spacing),
            tx_support: Vec::new(),
            rx_support: vec![Vec::new(); cfg.n_users],
        }
    }

    pub fn tx_selection(&self) -> CMatrix {
        selection_matrix(&self.tx_support, self.grid_t.len())
    }

    pub fn rx_selection(&self, k: usize) -> CMatrix {
        selection_matrix(&self.rx_support[k], self.grid_r.len())
    }

    /// Support sizes, uniqueness and index ranges.
    pub fn validate(&self, n_tx: usize, n_rx: usize) -> Result<()> {
        check_support(&self.tx_support, n_tx, self.grid_t.len(), "transmit")?;
        for (k, s) in self.rx_support.iter().enumerate() {
            check_support(s, n_rx, self.grid_r.len(), &format!("user {k}"))?;
        }
        Ok(())
    }

    /// Selected positions, in support order.
    pub fn to_layout(&self) -> Layout {
        Layout {
            tx: self.tx_support.iter().map(|&i| self.grid_t[i]).collect(),
            rx: self
                .rx_support
                .iter()
                .map(|s| s.iter().map(|&i| self.grid_r[i]).collect())
                .collect(),
        }
    }

    /// Grid indices of the points nearest to `layout`; fails if two antennas
    /// map to the same point.
    pub fn snap(&mut self, layout: &Layout) -> Result<()> {
        fn nearest(grid: &[Position], p: &[Position], what: &str) -> Result<Vec<usize>> {
            let mut out: Vec<usize> = Vec::with_capacity(p.len());
            for q in p {
                let (best, _) = grid
                    .iter()
                    .enumerate()
                    .map(|(i, g)| (i, (g - q).norm()))
                    .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
                if out.contains(&best) {
                    return Err(Error::Layout(format!("two {what} antennas snap to grid point {best}")));
                }
                out.push(best);
            }
            Ok(out)
        }
        self.tx_support = nearest(&self.grid_t, &layout.tx, "transmit")?;
        self.rx_support = layout
            .rx
            .iter()
            .map(|r| nearest(&self.grid_r, r, "receive"))
            .collect::<Result<_>>()?;
        Ok(())
    }

    /// Smallest distance between selected antennas over all arrays.
    pub fn min_spacing(&self) -> f64 {
        let l = self.to_layout();
        l.rx.iter()
            .map(|r| min_pairwise_distance(r))
            .fold(min_pairwise_distance(&l.tx), f64::min)
    }
}

/// Channels between every pair of grid points: `h[k]` is `G_r × G_t` and
/// `g[k][r][s]` is jammer `r`'s channel at sampled offset `s` over `G_r`.
#[derive(Debug, Clone)]
pub struct Dictionary {
    pub h: Vec<CMatrix>,
    pub g: Vec<Vec<Vec<CVector>>>,
}

pub fn build_dictionary_channels(grid_t: &[Position], grid_r: &[Position], real: &Realization) -> Result<Dictionary> {
    if grid_t.is_empty() || grid_r.is_empty() {
        return Err(Error::Dimension("empty candidate grid".into()));
    }
    let lambda = real.cfg.wavelength;
    let h = real
        .geom
        .users
        .iter()
        .map(|link| assemble_user_channel(grid_t, grid_r, link, lambda))
        .collect::<Result<Vec<_>>>()?;
    let g = (0..real.cfg.n_users)
        .map(|k| {
            real.geom
                .jammers
                .iter()
                .map(|links| sampled_jammer_channels(grid_r, &links[k], &real.unc, lambda))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dictionary { h, g })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ScenarioConfig;
    use rand::seq::index::sample;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn table_grid_has_81_points() {
        let g = build_grid(0.4, 0.05);
        assert_eq!(g.len(), 81);
        assert!((min_pairwise_distance(&g) - 0.05).abs() < 1e-12);
        assert!(g.iter().all(|p| p.x <= 0.4 + 1e-12 && p.y <= 0.4 + 1e-12));
    }

    #[test]
    fn zero_side_is_one_point() {
        assert_eq!(build_grid(0.0, 0.05), vec![Position::new(0.0, 0.0)]);
    }

    #[test]
    fn restricted_dictionary_matches_direct_assembly() {
        let mut cfg = ScenarioConfig::default();
        cfg.n_tx = 8;
        cfg.n_rx = 4;
        cfg.n_paths = 4;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let real = Realization::draw(&cfg, &mut rng).unwrap();
        let mut gl = GridLayout::new(&real);
        let dict = build_dictionary_channels(&gl.grid_t, &gl.grid_r, &real).unwrap();
        for _ in 0..10 {
            gl.tx_support = sample(&mut rng, gl.grid_t.len(), 8).into_vec();
            gl.rx_support = (0..cfg.n_users)
                .map(|_| sample(&mut rng, gl.grid_r.len(), 4).into_vec())
                .collect();
            gl.validate(8, 4).unwrap();
            let layout = gl.to_layout();
            let b = gl.tx_selection();
            for k in 0..cfg.n_users {
                let c = gl.rx_selection(k);
                let restricted = c.adjoint() * &dict.h[k] * &b;
                let direct = real.user_channel(k, &layout.tx, &layout.rx[k]);
                assert!((restricted - direct).norm() < 1e-12);
                let jam = real.jammer_channels(k, &layout.rx[k]);
                for (r, chans) in jam.iter().enumerate() {
                    for (s, g) in chans.iter().enumerate() {
                        assert!((c.adjoint() * &dict.g[k][r][s] - g).norm() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn supports_are_checked() {
        let mut gl = GridLayout {
            grid_t: build_grid(0.1, 0.05),
            grid_r: build_grid(0.1, 0.05),
            tx_support: vec![0, 1, 1],
            rx_support: vec![vec![0]],
        };
        assert!(gl.validate(3, 1).is_err());
        gl.tx_support = vec![0, 1, 9];
        assert!(gl.validate(3, 1).is_err());
        gl.tx_support = vec![0, 1, 8];
        gl.validate(3, 1).unwrap();
        assert!(gl.min_spacing() >= 0.05 - 1e-12);
    }
}
