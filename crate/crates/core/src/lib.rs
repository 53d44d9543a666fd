//! Low-thrust lunar capture and circularization for a small electric-propulsion spacecraft
//! released on a lunar flyby.
//!
//! The crate propagates Earth–Moon–Sun–Jupiter dynamics with lunar harmonics and finite burns,
//! plans impulsive insertions, optimizes the capture burns with an SQP solver and runs the
//! true-anomaly gated circularization. [`mission`] strings the phases together and [`io`]
//! reads scenarios and writes run directories.

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod astro;
pub mod constants;
pub mod dynamics;
pub mod ephemeris;
pub mod io;
pub mod maneuver;
pub mod mission;
pub mod optimizer;
pub mod planner;
pub mod propagator;

pub use astro::{Body, Epoch, KeplerianElements, StateVector, Vec3};
pub use dynamics::{ForceConfig, ThrustCommand, ThrustFrame};
pub use maneuver::Spacecraft;
pub use mission::{MissionConfig, MissionError, Outcome, OutcomeClass};
pub use optimizer::capture::{CaptureConstraints, CaptureDesign};
pub use propagator::{propagate, propagate_to_event, EventSpec, Tolerances, Trajectory};
