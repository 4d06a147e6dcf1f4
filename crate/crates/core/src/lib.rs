//! Simulator for a single-servo soft decapod robot whose legs are bent by
//! closed bellows transmissions.
//!
//! The layers build on each other: [`geometry`] maps curvature to leg bend,
//! [`transmission`] solves the gas balance between the servo-squeezed input
//! and the leg bellows, [`gait`] turns servo phase into leg contacts, and
//! [`locomotion`] integrates a calibrated stride model into body motion.

pub mod cli;
pub mod config;
pub mod gait;
pub mod geometry;
pub mod locomotion;
pub mod plot;
pub mod transmission;

pub use config::{ConfigError, RobotConfig};
pub use gait::{
    GaitEngine, GaitError, GaitMode, GaitSample, PhaseRole, ScheduleSegment, ServoSchedule,
};
pub use geometry::{BellowsUnit, BendState, GeometryError, SegmentGeometry, SizeClass};
pub use locomotion::{
    Calibration, CalibrationTargets, LocomotionError, PlannerOptions, Pose, Trajectory,
};
pub use transmission::{
    BeltCoupling, ClosedSystem, Equilibrium, Group, InputUnit, LegId, TransmissionError,
};
