//! Discrete-step flight model: poses, per-step control inputs, speed and
//! acceleration limits, and the weighted actuation-energy functional.
//!
//! A step covers one leg of the ground route and lasts `dt` seconds. The
//! translational components of an input are rates in m/s; the turn component
//! `omega` is the wrapped heading change over the whole step, in radians per
//! step, matching how the turn limit is specified.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Vec3;
use crate::world::KinematicLimits;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum KinematicsError {
    #[error("step duration must be positive, got {0}")]
    NonPositiveDt(f64),
    #[error("inputs and durations differ in length: {inputs} vs {dts}")]
    LengthMismatch { inputs: usize, dts: usize },
}

/// Position plus panel heading. Heading is wrapped to `[0, 2*pi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub position: Vec3,
    pub heading: f64,
}

impl Pose {
    pub fn new(position: Vec3, heading: f64) -> Self {
        Pose { position, heading: wrap_angle(heading) }
    }
}

/// Control applied over one step: translational rates in m/s, heading
/// change in rad/step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlInput {
    pub vx: f64,
    pub vy: f64,
    pub u: f64,
    pub omega: f64,
}

impl ControlInput {
    /// Hover: the reference state before the first step.
    pub const ZERO: ControlInput = ControlInput { vx: 0.0, vy: 0.0, u: 0.0, omega: 0.0 };

    pub fn horizontal_speed(&self) -> f64 {
        self.vx.hypot(self.vy)
    }
}

/// Wraps an angle into `[0, 2*pi)`.
pub fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(std::f64::consts::TAU);
    // rem_euclid can round up to the modulus itself.
    if w == std::f64::consts::TAU {
        0.0
    } else {
        w
    }
}

/// Wraps an angle difference into `(-pi, pi]`, the shortest turn.
pub fn wrap_angle_diff(a: f64) -> f64 {
    let w = a.rem_euclid(std::f64::consts::TAU);
    if w > std::f64::consts::PI {
        w - std::f64::consts::TAU
    } else {
        w
    }
}

/// Recovers the control input that moves `prev` to `next` in `dt` seconds.
///
/// Translation components are displacement over `dt`; the turn component is
/// the wrapped heading difference for the whole step.
pub fn step_input(prev: &Pose, next: &Pose, dt: f64) -> Result<ControlInput, KinematicsError> {
    if !(dt > 0.0) {
        return Err(KinematicsError::NonPositiveDt(dt));
    }
    let d = next.position - prev.position;
    Ok(ControlInput {
        vx: d.x / dt,
        vy: d.y / dt,
        u: d.z / dt,
        omega: wrap_angle_diff(next.heading - prev.heading),
    })
}

/// True iff the input respects all speed limits, boundaries included:
/// horizontal speed norm, climb rate magnitude, turn magnitude.
pub fn check_speed(input: &ControlInput, lim: &KinematicLimits) -> bool {
    input.horizontal_speed() <= lim.v_max
        && input.u.abs() <= lim.u_max
        && input.omega.abs() <= lim.w_max
}

/// True iff the change from `prev` to `cur` over `dt` seconds respects the
/// acceleration limits. The horizontal bound applies to the change of the
/// speed norm, not to the components.
pub fn check_accel(
    prev: &ControlInput,
    cur: &ControlInput,
    dt: f64,
    lim: &KinematicLimits,
) -> Result<bool, KinematicsError> {
    if !(dt > 0.0) {
        return Err(KinematicsError::NonPositiveDt(dt));
    }
    let dv = (cur.horizontal_speed() - prev.horizontal_speed()).abs() / dt;
    let du = (cur.u - prev.u).abs() / dt;
    let dw = (cur.omega - prev.omega).abs() / dt;
    Ok(dv <= lim.vdot_max && du <= lim.udot_max && dw <= lim.wdot_max)
}

/// Energy contribution of one step given the previous step's input.
///
/// `alpha1` weighs sustained actuation (sum of component magnitudes),
/// `alpha2` weighs input change rate against the previous step.
pub fn step_energy_term(
    prev: &ControlInput,
    cur: &ControlInput,
    dt: f64,
    alpha1: f64,
    alpha2: f64,
) -> f64 {
    let hold = cur.vx.abs() + cur.vy.abs() + cur.u.abs() + cur.omega.abs();
    let switch = (cur.vx - prev.vx).abs()
        + (cur.vy - prev.vy).abs()
        + (cur.u - prev.u).abs()
        + (cur.omega - prev.omega).abs();
    alpha1 * hold + alpha2 * switch / dt
}

/// Total actuation energy of an input sequence, summed in step order.
///
/// The first step's change term is measured against hover (zero input).
pub fn trajectory_energy(
    inputs: &[ControlInput],
    dts: &[f64],
    alpha1: f64,
    alpha2: f64,
) -> Result<f64, KinematicsError> {
    if inputs.len() != dts.len() {
        return Err(KinematicsError::LengthMismatch { inputs: inputs.len(), dts: dts.len() });
    }
    let mut prev = ControlInput::ZERO;
    let mut total = 0.0;
    for (cur, &dt) in inputs.iter().zip(dts) {
        if !(dt > 0.0) {
            return Err(KinematicsError::NonPositiveDt(dt));
        }
        total += step_energy_term(&prev, cur, dt, alpha1, alpha2);
        prev = *cur;
    }
    Ok(total)
}
