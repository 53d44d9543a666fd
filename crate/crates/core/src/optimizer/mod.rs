//! Dense SQP solver and the lunar-capture shooting transcription.

mod fd;
pub mod qp;
mod sqp;

pub use fd::{fd_jacobian, fd_jacobian_bounded};
pub use sqp::{
    solve_sqp, solve_sqp_with_callback, Evaluation, IterationRecord, NlpProblem, NlpSolution, SqpOptions, SqpStatus,
};

pub mod capture;
