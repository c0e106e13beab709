//! Subproblem solvers shared by the continuous and discrete pipelines.

mod qcqp;
mod rls;

pub use qcqp::{
    solve_qcqp, QcqpOptions, QcqpProblem, QcqpSolution, QcqpStatus, QuadraticSurrogate,
};
pub use rls::support_restricted_rls;
