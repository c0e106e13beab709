use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::ScenarioConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Sum rate per iteration; the sweep sets the SJNR (dB).
    Convergence,
    /// Sweep over the region side in wavelengths.
    RegionSize,
    /// Sweep over the jammer angular uncertainty width (degrees).
    Uncertainty,
    /// Sweep over the SJNR (dB).
    Sjnr,
    /// Beampatterns of the first seed; the sweep sets the SJNR (dB).
    Beampattern,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [
        ExperimentKind::Convergence,
        ExperimentKind::RegionSize,
        ExperimentKind::Uncertainty,
        ExperimentKind::Sjnr,
        ExperimentKind::Beampattern,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Convergence => "convergence",
            ExperimentKind::RegionSize => "region_size",
            ExperimentKind::Uncertainty => "uncertainty",
            ExperimentKind::Sjnr => "sjnr",
            ExperimentKind::Beampattern => "beampattern",
        }
    }

    pub fn default_sweep(self) -> Vec<f64> {
        match self {
            ExperimentKind::Convergence | ExperimentKind::Beampattern => vec![-20.0],
            ExperimentKind::RegionSize => vec![1.0, 2.0, 3.0, 4.0],
            ExperimentKind::Uncertainty => vec![0.0, 2.0, 4.0, 6.0, 8.0],
            ExperimentKind::Sjnr => vec![-30.0, -25.0, -20.0, -15.0, -10.0],
        }
    }

    /// `base` with the swept parameter set to `value`.
    pub fn apply(self, base: &ScenarioConfig, value: f64) -> ScenarioConfig {
        let mut cfg = base.clone();
        match self {
            ExperimentKind::RegionSize => cfg.set_region_wavelengths(value),
            ExperimentKind::Uncertainty => cfg.uncertainty_deg = value,
            _ => cfg.set_sjnr_db(value),
        }
        cfg
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ContinuousAo,
    DiscreteBcd,
    Fpa,
    Rpa,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::ContinuousAo, Method::DiscreteBcd, Method::Fpa, Method::Rpa];

    pub fn name(self) -> &'static str {
        match self {
            Method::ContinuousAo => "continuous_ao",
            Method::DiscreteBcd => "discrete_bcd",
            Method::Fpa => "fpa",
            Method::Rpa => "rpa",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Full,
    Desk,
}

impl Scale {
    pub fn name(self) -> &'static str {
        match self {
            Scale::Full => "full",
            Scale::Desk => "desk",
        }
    }
}

macro_rules! named_enum {
    ($t:ty, $what:literal, [$($v:expr),*]) => {
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }

        impl FromStr for $t {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                [$($v),*]
                    .into_iter()
                    .find(|v: &$t| v.name() == s)
                    .ok_or_else(|| {
                        let names: Vec<&str> = [$($v),*].iter().map(|v: &$t| v.name()).collect();
                        Error::config($what, format!("unknown value `{s}`, expected one of {}", names.join(", ")))
                    })
            }
        }
    };
}

named_enum!(ExperimentKind, "experiment.kind", [
    ExperimentKind::Convergence,
    ExperimentKind::RegionSize,
    ExperimentKind::Uncertainty,
    ExperimentKind::Sjnr,
    ExperimentKind::Beampattern
]);
named_enum!(Method, "experiment.methods", [Method::ContinuousAo, Method::DiscreteBcd, Method::Fpa, Method::Rpa]);
named_enum!(Scale, "experiment.scale", [Scale::Full, Scale::Desk]);

/// A validated experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub sweep: Vec<f64>,
    pub num_seeds: usize,
    pub scale: Scale,
    pub methods: Vec<Method>,
    /// Elevation and azimuth samples of the evaluation grid.
    pub eval_grid: usize,
    /// Leave the sweep index out of the seed derivation so every sweep value
    /// sees the same realizations.
    pub paired_sweeps: bool,
    /// Points per axis of the beampattern angle grid.
    pub pattern_points: usize,
}

impl ExperimentSpec {
    pub fn validate(&self, cfg: &ScenarioConfig) -> Result<()> {
        if self.sweep.is_empty() {
            return Err(Error::config("experiment.sweep", "must not be empty"));
        }
        if self.sweep.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("experiment.sweep", "values must be finite"));
        }
        if self.num_seeds < 1 {
            return Err(Error::config("experiment.num_seeds", "must be at least 1"));
        }
        if self.methods.is_empty() {
            return Err(Error::config("experiment.methods", "must not be empty"));
        }
        let mut sorted = self.methods.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != self.methods.len() {
            return Err(Error::config("experiment.methods", "lists a method twice"));
        }
        if self.eval_grid < cfg.q_elev.max(cfg.q_azim) {
            return Err(Error::config(
                "experiment.eval_grid",
                format!("must be at least the optimization grid ({}x{})", cfg.q_elev, cfg.q_azim),
            ));
        }
        if self.pattern_points < 1 {
            return Err(Error::config("experiment.pattern_points", "must be at least 1"));
        }
        for &v in &self.sweep {
            self.kind.apply(cfg, v).validate()?;
        }
        Ok(())
    }
}

/// `[scenario]` table. Every field is optional; missing fields keep the
/// defaults of the chosen scale.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub n_tx: Option<usize>,
    pub n_rx: Option<usize>,
    pub n_users: Option<usize>,
    pub n_jammers: Option<usize>,
    pub n_paths: Option<usize>,
    pub wavelength: Option<f64>,
    pub tx_region: Option<f64>,
    pub rx_region: Option<f64>,
    /// Both region sides in wavelengths.
    pub region_wavelengths: Option<f64>,
    pub min_spacing: Option<f64>,
    pub p_max: Option<f64>,
    pub p_max_dbm: Option<f64>,
    pub noise_power: Option<f64>,
    pub noise_dbm: Option<f64>,
    pub min_rate: Option<f64>,
    pub ref_gain: Option<f64>,
    pub ref_gain_db: Option<f64>,
    pub path_loss_exp: Option<f64>,
    pub q_elev: Option<usize>,
    pub q_azim: Option<usize>,
    pub jammer_powers: Option<Vec<f64>>,
    pub sjnr_db: Option<f64>,
    pub uncertainty_deg: Option<f64>,
    pub bs_position: Option<[f64; 3]>,
    pub jammer_positions: Option<Vec<[f64; 3]>>,
    pub user_directions_deg: Option<Vec<(f64, f64)>>,
    pub user_radius: Option<f64>,
    pub master_seed: Option<u64>,
}

/// `[experiment]` table.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    pub kind: Option<ExperimentKind>,
    pub sweep: Option<Vec<f64>>,
    pub num_seeds: Option<usize>,
    pub scale: Option<Scale>,
    pub methods: Option<Vec<Method>>,
    pub eval_grid: Option<usize>,
    pub paired_sweeps: Option<bool>,
    pub pattern_points: Option<usize>,
}

/// A configuration file as written, before defaults are filled in.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub scenario: ScenarioFile,
    #[serde(default)]
    pub experiment: ExperimentFile,
}

fn one_of<T: Copy>(a: Option<T>, b: Option<T>, names: (&str, &str)) -> Result<Option<(T, bool)>> {
    match (a, b) {
        (Some(_), Some(_)) => Err(Error::config(names.0, format!("conflicts with `{}`", names.1))),
        (Some(x), None) => Ok(Some((x, false))),
        (None, Some(x)) => Ok(Some((x, true))),
        (None, None) => Ok(None),
    }
}

fn db(x: f64) -> f64 {
    10f64.powf(x / 10.0)
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Defaults, then the desk overrides (`N = 8`, `M = 4`, `L = 4`,
    /// `3 × 3` uncertainty grid) if requested, then the fields of the file.
    pub fn resolve(&self) -> Result<(ScenarioConfig, ExperimentSpec)> {
        let e = &self.experiment;
        let kind = e.kind.unwrap_or(ExperimentKind::Sjnr);
        let scale = e.scale.unwrap_or(Scale::Full);
        let cfg = self.scenario.resolve(scale)?;
        let spec = ExperimentSpec {
            kind,
            sweep: e.sweep.clone().unwrap_or_else(|| kind.default_sweep()),
            num_seeds: e.num_seeds.unwrap_or(10),
            scale,
            methods: e.methods.clone().unwrap_or_else(|| Method::ALL.to_vec()),
            eval_grid: e.eval_grid.unwrap_or(11),
            paired_sweeps: e.paired_sweeps.unwrap_or(false),
            pattern_points: e.pattern_points.unwrap_or(181),
        };
        spec.validate(&cfg)?;
        Ok((cfg, spec))
    }
}

impl ScenarioFile {
    pub fn resolve(&self, scale: Scale) -> Result<ScenarioConfig> {
        let mut cfg = ScenarioConfig::default();
        if scale == Scale::Desk {
            cfg.n_tx = 8;
            cfg.n_rx = 4;
            cfg.n_paths = 4;
            cfg.q_elev = 3;
            cfg.q_azim = 3;
        }
        macro_rules! set {
            ($($f:ident),*) => {$(
                if let Some(v) = self.$f.clone() {
                    cfg.$f = v;
                }
            )*};
        }
        set!(
            n_tx, n_rx, n_users, n_jammers, n_paths, wavelength, min_spacing, min_rate,
            path_loss_exp, q_elev, q_azim, uncertainty_deg, bs_position, jammer_positions,
            user_directions_deg, user_radius, master_seed
        );
        if self.min_spacing.is_none() {
            cfg.min_spacing = cfg.wavelength / 2.0;
        }
        if let Some(r) = self.region_wavelengths {
            if self.tx_region.is_some() || self.rx_region.is_some() {
                return Err(Error::config("scenario.region_wavelengths", "conflicts with `tx_region`/`rx_region`"));
            }
            cfg.set_region_wavelengths(r);
        } else {
            // Regions follow the wavelength unless given.
            cfg.set_region_wavelengths(4.0);
            set!(tx_region, rx_region);
        }
        let names = |a, b| (a, b);
        if let Some((v, is_db)) = one_of(self.p_max, self.p_max_dbm, names("scenario.p_max", "p_max_dbm"))? {
            cfg.p_max = if is_db { db(v - 30.0) } else { v };
        }
        if let Some((v, is_db)) = one_of(self.noise_power, self.noise_dbm, names("scenario.noise_power", "noise_dbm"))? {
            cfg.noise_power = if is_db { db(v - 30.0) } else { v };
        }
        if let Some((v, is_db)) = one_of(self.ref_gain, self.ref_gain_db, names("scenario.ref_gain", "ref_gain_db"))? {
            cfg.ref_gain = if is_db { db(v) } else { v };
        }
        match (&self.jammer_powers, self.sjnr_db) {
            (Some(_), Some(_)) => return Err(Error::config("scenario.jammer_powers", "conflicts with `sjnr_db`")),
            (Some(p), None) => cfg.jammer_powers = p.clone(),
            (None, s) => cfg.set_sjnr_db(s.unwrap_or(-20.0)),
        }
        if self.n_jammers.is_some() && self.jammer_positions.is_none() {
            return Err(Error::config("scenario.jammer_positions", "required when n_jammers is set"));
        }
        if self.n_users.is_some() && self.user_directions_deg.is_none() {
            return Err(Error::config("scenario.user_directions_deg", "required when n_users is set"));
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Reads and validates a configuration file.
pub fn load_config(path: impl AsRef<Path>) -> Result<(ScenarioConfig, ExperimentSpec)> {
    ConfigFile::read(path)?.resolve()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_reference_defaults() {
        let (cfg, spec) = ConfigFile::parse("").unwrap().resolve().unwrap();
        assert_eq!(cfg, ScenarioConfig::default());
        assert_eq!((cfg.n_tx, cfg.n_rx, cfg.n_paths), (16, 9, 8));
        assert!((cfg.p_max - 0.01).abs() < 1e-15);
        assert!((cfg.noise_power - 1e-10).abs() < 1e-22);
        assert!((cfg.ref_gain - 1e-3).abs() < 1e-15);
        assert_eq!(cfg.min_rate, 1.0);
        assert!((cfg.tx_region - 4.0 * cfg.wavelength).abs() < 1e-15);
        assert!((cfg.min_spacing - cfg.wavelength / 2.0).abs() < 1e-15);
        assert_eq!(cfg.path_loss_exp, 2.6);
        assert_eq!(spec.scale, Scale::Full);
    }

    #[test]
    fn desk_overrides_then_file_fields() {
        let text = "[experiment]\nscale = \"desk\"\n[scenario]\nn_paths = 2\n";
        let (cfg, _) = ConfigFile::parse(text).unwrap().resolve().unwrap();
        assert_eq!((cfg.n_tx, cfg.n_rx, cfg.n_paths, cfg.q_elev, cfg.q_azim), (8, 4, 2, 3, 3));
    }

    #[test]
    fn spacing_above_region_is_rejected_by_name() {
        let err = ConfigFile::parse("[scenario]\nmin_spacing = 1.0\n").unwrap().resolve().unwrap_err();
        assert!(err.to_string().contains("min_spacing"), "{err}");
    }

    #[test]
    fn sjnr_sweep_sets_equal_jammer_powers() {
        let text = "[experiment]\nkind = \"sjnr\"\nsweep = [-30, -25, -20, -15, -10]\n";
        let (cfg, spec) = ConfigFile::parse(text).unwrap().resolve().unwrap();
        for &s in &spec.sweep {
            let c = spec.kind.apply(&cfg, s);
            let total = cfg.p_max * 10f64.powf(-s / 10.0);
            for p in &c.jammer_powers {
                assert!((p - total / 2.0).abs() <= 1e-12 * total);
            }
        }
    }

    #[test]
    fn unknown_fields_and_values_are_named() {
        let err = ConfigFile::parse("[scenario]\nn_antennas = 3\n").unwrap_err();
        assert!(err.to_string().contains("n_antennas"), "{err}");
        let err = ConfigFile::parse("[experiment]\nkind = \"sweep\"\n").unwrap_err();
        assert!(err.to_string().contains("sweep"), "{err}");
        let err = ConfigFile::parse("[experiment]\nnum_seeds = 0\n").unwrap().resolve().unwrap_err();
        assert!(err.to_string().contains("num_seeds"), "{err}");
        let err = ConfigFile::parse("[experiment]\nsweep = []\n").unwrap().resolve().unwrap_err();
        assert!(err.to_string().contains("sweep"), "{err}");
    }

    #[test]
    fn conflicting_units_are_rejected() {
        let err = ConfigFile::parse("[scenario]\np_max = 0.01\np_max_dbm = 10\n").unwrap().resolve().unwrap_err();
        assert!(err.to_string().contains("p_max"), "{err}");
    }

    #[test]
    fn names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        for k in ExperimentKind::ALL {
            assert_eq!(k.name().parse::<ExperimentKind>().unwrap(), k);
        }
        assert!("fast".parse::<Scale>().is_err());
    }
}
