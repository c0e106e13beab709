//! Field-response channel synthesis.
//!
//! Channels follow the planar field-response model: every antenna array lies
//! in its local x–y plane with boresight along z, and a propagation path with
//! elevation `θ` and azimuth `φ` has direction cosines
//! `(cos θ sin φ, sin θ)` in that plane. A path's phase at position `(x, y)`
//! relative to the region origin is `2π/λ · (x cos θ sin φ + y sin θ)`.

mod config;
mod geometry;
mod response;
mod uncertainty;

pub use config::ScenarioConfig;
pub use geometry::{
    direction_angles, direction_vector, draw_path_geometry, JammerLink, LinkGeometry, PathAngle,
    PathGeometry,
};
pub use response::{
    assemble_jammer_channel, assemble_user_channel, field_response, field_response_matrix,
    receive_field_response, transmit_field_response,
};
pub use uncertainty::{
    sample_uncertainty_grid, sampled_jammer_channels, worst_case_jammer_covariance, AngleBounds,
    UncertaintySet,
};
