//! Robust anti-jamming beamforming and fluid-antenna position design for
//! multi-user MIMO downlinks.

pub mod baselines;
pub mod channel;
pub mod continuous;
pub mod discrete;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod solvers;

pub use channel::{PathGeometry, ScenarioConfig, UncertaintySet};
pub use continuous::{AoOptions, AoSolution};
pub use discrete::{BcdOptions, BcdSolution, GridLayout};
pub use error::{Error, Result};
pub use harness::{ExperimentKind, ExperimentSpec, Method, Scale};
pub use metrics::MetricRecord;
pub use model::{BeamformerSet, Layout, Realization};
