//! Planning and link simulation for a UAV-carried reflective relay.
//!
//! A base station's signal reaches a moving ground terminal by bouncing off
//! a passive reflecting surface mounted under a UAV. The surface applies a
//! per-element phase shift, so pointing the UAV well and aligning the
//! phases are what make the link work. This crate plans where the UAV
//! should be and evaluates the link along the way:
//!
//! * [`geometry`]: vectors, boxes, line-of-sight tests against a box world.
//! * [`world`]: scenario description (map, stations, terminal route,
//!   limits, radio parameters) with strict validation and JSON I/O.
//! * [`kinematics`]: discrete UAV motion, speed and acceleration checks,
//!   actuation energy.
//! * [`channel`]: array responses, reflection phase alignment, SNR and
//!   achievable rate.
//! * [`tube`]: the first planning pass, an exact minimum-energy dynamic
//!   program over sampled candidate poses that yields a tube of freedom
//!   spheres.
//! * [`refine`]: the second pass, a per-slot position refinement inside
//!   the tube that tightens the link distance product.
//! * [`pipeline`]: end-to-end runs producing the JSON/CSV artifacts the
//!   command-line tool emits.
//!
//! Every random draw flows from one master seed through labeled streams
//! ([`seeds`]), so identical inputs give byte-identical outputs.

// Negated float comparisons like `!(dt > 0.0)` are deliberate NaN guards
// in validation paths; the positive form would silently accept NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod geometry;
pub mod kinematics;
pub mod pipeline;
pub mod refine;
pub mod seeds;
pub mod tube;
pub mod world;

pub use channel::{LinkBudget, LinkSample, PhaseVector, SteeringVector};
pub use geometry::{Aabb, GeometryError, Segment, Vec3};
pub use kinematics::{ControlInput, KinematicsError, Pose};
pub use refine::{EvalReport, RefinedTrajectory, SlotReport};
pub use tube::{Stage1Output, TubePath};
pub use world::{KinematicLimits, Scenario, ScenarioError, Violation};

use thiserror::Error;

/// Runs the guide's code blocks as doctests, so the book in `book/` cannot
/// drift from the API it documents.
#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub struct Introduction;
    #[doc = include_str!("../../../book/src/scenario.md")]
    pub struct Scenario;
    #[doc = include_str!("../../../book/src/geometry.md")]
    pub struct Geometry;
    #[doc = include_str!("../../../book/src/kinematics.md")]
    pub struct Kinematics;
    #[doc = include_str!("../../../book/src/channel.md")]
    pub struct Channel;
    #[doc = include_str!("../../../book/src/tube.md")]
    pub struct Tube;
    #[doc = include_str!("../../../book/src/refinement.md")]
    pub struct Refinement;
    #[doc = include_str!("../../../book/src/cli.md")]
    pub struct Cli;
}

/// Why planning failed. The route-point index `k` and slot index `epsilon`
/// locate the failure for diagnostics.
#[derive(Debug, Error)]
pub enum PlanError {
    /// No sampled candidate at route point `k` survived filtering.
    #[error("no feasible candidate at route point {k}")]
    NoCandidates { k: usize },
    /// No speed-feasible transition into route point `k`.
    #[error("no speed-feasible transition into route point {k}")]
    NoEdges { k: usize },
    /// Transitions exist but no acceleration-consistent path spans the route.
    #[error("no acceleration-consistent path spans the route")]
    NoPath,
    /// A refinement slot has no position with line of sight and adequate SNR.
    #[error("no feasible position in slot {epsilon} of segment {k}")]
    SlotInfeasible { k: usize, epsilon: usize },
    /// Exhaustive enumeration was requested on an instance too large for it.
    #[error("enumeration needs {estimate} path visits, guard is {guard}")]
    EnumerationTooLarge { estimate: u128, guard: u128 },
    #[error(transparent)]
    Kinematics(#[from] kinematics::KinematicsError),
    #[error(transparent)]
    Geometry(#[from] geometry::GeometryError),
}
