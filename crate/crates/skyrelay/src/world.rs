//! Scenario description: the obstacle world, base stations, the terminal's
//! ground route with its timetable, kinematic and radio parameters, and
//! planner settings. Scenarios load from a single JSON document and are
//! validated before any planning runs.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Aabb, Vec3};

/// Obstacle map: closed boxes inside an overall bounding volume.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OccupancyWorld {
    pub bounds: Aabb,
    #[serde(default)]
    pub boxes: Vec<Aabb>,
}

impl OccupancyWorld {
    pub fn empty(bounds: Aabb) -> Self {
        OccupancyWorld { bounds, boxes: Vec::new() }
    }

    /// Straight-line visibility between two points in this world.
    pub fn los_clear(&self, a: Vec3, b: Vec3) -> bool {
        crate::geometry::los_clear(a, b, &self.boxes)
    }
}

/// Fixed transmitter site. Usually mounted above street level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseStation {
    pub position: Vec3,
}

/// One point of the terminal's ground route together with the time the
/// terminal takes to reach it from the previous point. The first waypoint
/// carries `travel_time_s = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RouteWaypoint {
    /// Terminal position; z is normally 0 (street level) but may be raised
    /// to model an elevated antenna.
    pub position: Vec3,
    pub travel_time_s: f64,
}

/// Hard motion limits for the relay platform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KinematicLimits {
    /// Horizontal speed ceiling (m/s), applied to the speed norm.
    pub v_max: f64,
    /// Climb/descent rate ceiling (m/s).
    pub u_max: f64,
    /// Turn ceiling per planning step (rad/step).
    pub w_max: f64,
    /// Flight corridor floor (m).
    pub z_min: f64,
    /// Flight corridor ceiling (m).
    pub z_max: f64,
    /// Horizontal speed-change ceiling (m/s per s).
    pub vdot_max: f64,
    /// Climb-rate change ceiling (m/s per s).
    pub udot_max: f64,
    /// Turn-rate change ceiling (rad/step per s).
    pub wdot_max: f64,
}

/// Radio parameters. Log-scale fields carry dB suffixes in their names;
/// they are converted to linear form exactly once, see
/// [`crate::channel::LinkBudget`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelParams {
    /// Transmit power (dBm).
    pub p_bs_dbm: f64,
    /// Noise power (dBm).
    pub noise_dbm: f64,
    /// Reference channel gain at 1 m (dB).
    pub rho_db: f64,
    /// Path-loss exponent, at least 2.
    pub gamma: f64,
    /// Carrier wavelength (m).
    pub lambda_m: f64,
    /// Reflector element spacing (m).
    pub d_m: f64,
    /// Number of reflector elements.
    pub m_elements: usize,
    /// Minimum acceptable SNR, linear.
    pub snr_min: f64,
    /// Common phase offset applied by the reflector controller, in
    /// `[0, 2*pi)`. Has no effect on link quality.
    #[serde(default)]
    pub varpi: f64,
}

/// Planner knobs shared by both planning passes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlannerConfig {
    /// Candidate poses drawn per route point.
    pub q_per_point: usize,
    /// Radius of the freedom sphere kept around each chosen pose (m).
    pub sphere_radius_m: f64,
    /// Maximum horizontal offset of a candidate from its route point (m).
    pub max_horiz_offset_m: f64,
    /// Slots each route leg is split into for refinement.
    pub slots_per_segment: usize,
    /// Random positions tried inside each slot sphere, in addition to the
    /// sphere center.
    pub b_per_slot: usize,
    /// Weight of sustained actuation in the energy functional.
    pub alpha1: f64,
    /// Weight of actuation change in the energy functional.
    pub alpha2: f64,
    /// Master seed for all randomized steps.
    pub rng_seed: u64,
    /// Also require the base station and the terminal on the panel's facing
    /// side. Off by default: the panel can be mounted facing either way.
    #[serde(default)]
    pub enable_same_side: bool,
    /// Reject candidate spheres that overlap an earlier-accepted sphere at
    /// the same route point, spreading candidates out. Off by default.
    #[serde(default)]
    pub enforce_sphere_dispersion: bool,
}

/// Complete planning problem, the unit that loads from one JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub world: OccupancyWorld,
    pub base_stations: Vec<BaseStation>,
    pub route: Vec<RouteWaypoint>,
    pub limits: KinematicLimits,
    pub channel: ChannelParams,
    pub planner: PlannerConfig,
}

impl Scenario {
    /// Number of route legs (route points minus one).
    pub fn segment_count(&self) -> usize {
        self.route.len().saturating_sub(1)
    }

    /// Leg durations in seconds, one per leg, in route order.
    pub fn leg_durations(&self) -> Vec<f64> {
        self.route.iter().skip(1).map(|w| w.travel_time_s).collect()
    }

    /// Total mission time in seconds.
    pub fn total_time(&self) -> f64 {
        self.route.iter().map(|w| w.travel_time_s).sum()
    }
}

/// One validation failure, addressed by the JSON path of the offending field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub field: String,
    pub rule: String,
}

impl Violation {
    fn new(field: impl Into<String>, rule: impl Into<String>) -> Self {
        Violation { field: field.into(), rule: rule.into() }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.rule)
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse scenario: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid scenario: {}", format_violations(.0))]
    Invalid(Vec<Violation>),
}

fn format_violations(vs: &[Violation]) -> String {
    vs.iter().map(Violation::to_string).collect::<Vec<_>>().join("; ")
}

/// Checks every declared invariant and returns all failures as data, one
/// entry per offending field.
pub fn validate_scenario(s: &Scenario) -> Vec<Violation> {
    let mut v = Vec::new();

    if !s.world.bounds.is_well_formed() {
        v.push(Violation::new("world.bounds", "min must not exceed max on any axis"));
    }
    for (i, b) in s.world.boxes.iter().enumerate() {
        let field = format!("world.boxes[{i}]");
        if !b.is_well_formed() {
            v.push(Violation::new(&field, "min must not exceed max on any axis"));
        } else if !s.world.bounds.encloses(b) {
            v.push(Violation::new(&field, "must lie inside world.bounds"));
        }
    }

    if s.base_stations.is_empty() {
        v.push(Violation::new("base_stations", "at least one base station is required"));
    }
    for (i, bs) in s.base_stations.iter().enumerate() {
        let field = format!("base_stations[{i}].position");
        if !bs.position.is_finite() {
            v.push(Violation::new(&field, "must be finite"));
        } else if bs.position.z < 0.0 {
            v.push(Violation::new(&field, "must not be below ground"));
        } else if !s.world.bounds.contains(bs.position) {
            v.push(Violation::new(&field, "must lie inside world.bounds"));
        }
    }

    if s.route.len() < 2 {
        v.push(Violation::new("route", "at least two waypoints are required"));
    }
    for (i, w) in s.route.iter().enumerate() {
        if !w.position.is_finite() {
            v.push(Violation::new(format!("route[{i}].position"), "must be finite"));
        } else if w.position.z < 0.0 {
            v.push(Violation::new(format!("route[{i}].position"), "must not be below ground"));
        } else if !s.world.bounds.contains(w.position) {
            v.push(Violation::new(format!("route[{i}].position"), "must lie inside world.bounds"));
        }
        if i == 0 {
            if w.travel_time_s != 0.0 {
                v.push(Violation::new("route[0].travel_time_s", "must be 0 for the first waypoint"));
            }
        } else if !(w.travel_time_s > 0.0 && w.travel_time_s.is_finite()) {
            v.push(Violation::new(format!("route[{i}].travel_time_s"), "must be positive"));
        }
    }

    let lim = &s.limits;
    for (name, val) in [
        ("limits.v_max", lim.v_max),
        ("limits.u_max", lim.u_max),
        ("limits.w_max", lim.w_max),
        ("limits.vdot_max", lim.vdot_max),
        ("limits.udot_max", lim.udot_max),
        ("limits.wdot_max", lim.wdot_max),
    ] {
        if !(val > 0.0 && val.is_finite()) {
            v.push(Violation::new(name, "must be positive"));
        }
    }
    if !(lim.z_min >= 0.0 && lim.z_min.is_finite()) {
        v.push(Violation::new("limits.z_min", "must be nonnegative"));
    } else if !(lim.z_min < lim.z_max) {
        v.push(Violation::new("limits.z_min", "must be less than z_max"));
    }

    let ch = &s.channel;
    for (name, val) in [
        ("channel.p_bs_dbm", ch.p_bs_dbm),
        ("channel.noise_dbm", ch.noise_dbm),
        ("channel.rho_db", ch.rho_db),
    ] {
        if !val.is_finite() {
            v.push(Violation::new(name, "must be finite"));
        }
    }
    if !(ch.gamma >= 2.0 && ch.gamma.is_finite()) {
        v.push(Violation::new("channel.gamma", "must be at least 2"));
    }
    if !(ch.lambda_m > 0.0 && ch.lambda_m.is_finite()) {
        v.push(Violation::new("channel.lambda_m", "must be positive"));
    }
    if !(ch.d_m > 0.0 && ch.d_m.is_finite()) {
        v.push(Violation::new("channel.d_m", "must be positive"));
    }
    if ch.m_elements < 1 {
        v.push(Violation::new("channel.m_elements", "must be at least 1"));
    }
    if !(ch.snr_min > 0.0 && ch.snr_min.is_finite()) {
        v.push(Violation::new("channel.snr_min", "must be positive"));
    }
    if !(0.0..std::f64::consts::TAU).contains(&ch.varpi) {
        v.push(Violation::new("channel.varpi", "must lie in [0, 2*pi)"));
    }

    let pl = &s.planner;
    if pl.q_per_point < 1 {
        v.push(Violation::new("planner.q_per_point", "must be at least 1"));
    }
    if !(pl.sphere_radius_m > 0.0 && pl.sphere_radius_m.is_finite()) {
        v.push(Violation::new("planner.sphere_radius_m", "must be positive"));
    }
    if !(pl.max_horiz_offset_m >= 0.0 && pl.max_horiz_offset_m.is_finite()) {
        v.push(Violation::new("planner.max_horiz_offset_m", "must be nonnegative"));
    }
    if pl.slots_per_segment < 1 {
        v.push(Violation::new("planner.slots_per_segment", "must be at least 1"));
    }
    if pl.b_per_slot < 1 {
        v.push(Violation::new("planner.b_per_slot", "must be at least 1"));
    }
    if !(pl.alpha1 >= 0.0 && pl.alpha1.is_finite()) {
        v.push(Violation::new("planner.alpha1", "must be nonnegative"));
    }
    if !(pl.alpha2 >= 0.0 && pl.alpha2.is_finite()) {
        v.push(Violation::new("planner.alpha2", "must be nonnegative"));
    }

    v
}

/// Parses and validates a scenario from a JSON string.
pub fn scenario_from_json(text: &str) -> Result<Scenario, ScenarioError> {
    let s: Scenario = serde_json::from_str(text)?;
    let violations = validate_scenario(&s);
    if violations.is_empty() {
        Ok(s)
    } else {
        Err(ScenarioError::Invalid(violations))
    }
}

/// Serializes a scenario with object keys sorted, so equal scenarios always
/// produce byte-identical documents.
pub fn scenario_to_json(s: &Scenario) -> String {
    // Going through Value sorts map keys.
    let value = serde_json::to_value(s).expect("scenario serialization cannot fail");
    let mut text = serde_json::to_string_pretty(&value).expect("value printing cannot fail");
    text.push('\n');
    text
}

/// Loads and validates a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    scenario_from_json(&std::fs::read_to_string(path)?)
}

/// Writes a scenario in the same JSON format `load_scenario` reads, with
/// sorted keys. Loading the result yields an identical scenario.
pub fn save_scenario(path: impl AsRef<Path>, s: &Scenario) -> Result<(), ScenarioError> {
    std::fs::write(path, scenario_to_json(s))?;
    Ok(())
}
