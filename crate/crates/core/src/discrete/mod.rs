//! Discrete antenna-position design: positions restricted to a square grid
//! with the minimum spacing as its step, selected jointly with the
//! beamformers by regularized simultaneous OMP inside block coordinate
//! descent.

mod bcd;
mod grid;
mod power;
mod receiver;
mod somp;
mod transmitter;

pub use bcd::{bcd_solve, bcd_solve_from, start_layouts, BcdOptions, BcdSolution, BcdTrace};
pub use grid::{build_dictionary_channels, build_grid, selection_matrix, Dictionary, GridLayout};
pub use power::{power_allocation, power_allocation_from, power_rates, PowerOptions, PowerOutcome};
pub use receiver::{build_ek, ek_objective, receiver_block, ReceiverOutcome};
pub use somp::{rls_somp, SompProblem, SompSolution};
pub use transmitter::{
    build_mm_somp_matrices, stacked_effective, transmitter_block, MmSompMatrices, TransmitterOutcome,
};
