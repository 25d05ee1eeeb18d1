//! Second planning pass: per-slot refinement inside the tube.
//!
//! Each route leg is cut into equal time slots. For every slot the terminal
//! position, the freedom-sphere center and the heading are interpolated
//! from the tube, a handful of alternative positions is drawn inside the
//! sphere, and the feasible position minimizing the product of the two
//! link distances is kept. The distance product is what the aligned
//! reflection gain decays with, so minimizing it per slot maximizes the
//! slot's SNR; slots are independent, which is why a per-slot argmin is
//! exact for the summed objective.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{
    bs_ris_gain, cascaded_gain, optimal_phases, rate, ris_mt_gain, slot_cost, snr, LinkBudget,
};
use crate::geometry::{aoa_cosine, aod_cosine, distance, Vec3};
use crate::kinematics::{wrap_angle, wrap_angle_diff};
use crate::seeds::{rng_for, FADING, SLOT_POINTS};
use crate::tube::TubePath;
use crate::world::{KinematicLimits, Scenario};
use crate::PlanError;

/// One refinement slot: where the terminal is, where the UAV may be, and
/// how long the slot lasts. `k` is the segment (1-based), `epsilon` the
/// slot within it (1-based); `epsilon = E` lands exactly on tube node `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotSphere {
    pub k: usize,
    pub epsilon: usize,
    pub center: Vec3,
    pub heading: f64,
    pub radius: f64,
    pub mt_position: Vec3,
    pub dt: f64,
}

/// The position chosen for one slot with its link figures. `snr` and
/// `rate` are the deterministic reflection-only values used for planning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotReport {
    pub k: usize,
    pub epsilon: usize,
    pub position: Vec3,
    pub heading: f64,
    pub serving_bs: usize,
    pub phases: Vec<f64>,
    pub aoa_cos: f64,
    pub aod_cos: f64,
    pub snr: f64,
    pub rate: f64,
}

/// Consecutive slot positions implying a speed beyond a limit. The tube
/// guarantees sphere-to-sphere reachability, not point-to-point, so these
/// are advisory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedWarning {
    /// Linear slot index the motion leads into (0 = tube start to first slot).
    pub slot_index: usize,
    pub axis: String,
    pub speed: f64,
    pub limit: f64,
}

/// Output of the refinement pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinedTrajectory {
    pub slots: Vec<SlotReport>,
    /// Sum over slots of the distance product, accumulated in slot order.
    pub objective: f64,
    pub warnings: Vec<SpeedWarning>,
}

/// Per-slot link evaluation. `snr`/`rate` repeat the planning values;
/// the faded variants add a random direct station-to-terminal path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSlot {
    pub k: usize,
    pub epsilon: usize,
    pub snr: f64,
    pub rate: f64,
    pub snr_faded: f64,
    pub rate_faded: f64,
    pub dist_bs_uav: f64,
    pub dist_uav_mt: f64,
}

/// Aggregate link statistics over the refined trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub slots: Vec<EvalSlot>,
    pub min_snr: f64,
    pub mean_snr: f64,
    pub min_snr_faded: f64,
    pub mean_snr_faded: f64,
    pub min_rate: f64,
    pub mean_rate: f64,
    /// Rate integrated over slot durations, bit/Hz.
    pub rate_seconds: f64,
    pub rate_seconds_faded: f64,
}

fn lerp_heading(a: f64, b: f64, t: f64) -> f64 {
    wrap_angle(a + wrap_angle_diff(b - a) * t)
}

/// Interpolates the tube and the terminal route into per-slot spheres, in
/// slot order. The linear index of slot `(k, epsilon)` is
/// `(k - 1) * E + (epsilon - 1)`.
pub fn slot_spheres(tube: &TubePath, scenario: &Scenario) -> Vec<SlotSphere> {
    let e_slots = scenario.planner.slots_per_segment;
    let legs = scenario.leg_durations();
    let mut out = Vec::with_capacity(legs.len() * e_slots);
    for k in 1..tube.nodes.len() {
        let a = &tube.nodes[k - 1];
        let b = &tube.nodes[k];
        let ra = scenario.route[k - 1].position;
        let rb = scenario.route[k].position;
        let dt = legs[k - 1] / e_slots as f64;
        for epsilon in 1..=e_slots {
            let t = epsilon as f64 / e_slots as f64;
            out.push(SlotSphere {
                k,
                epsilon,
                center: a.pose.position.lerp(b.pose.position, t),
                heading: lerp_heading(a.pose.heading, b.pose.heading, t),
                radius: b.radius.min(a.radius),
                mt_position: ra.lerp(rb, t),
                dt,
            });
        }
    }
    out
}

/// The slot center followed by `b` points uniform in the sphere, altitude
/// clamped to the flight corridor. Clamping moves a point toward the
/// center's altitude, so it stays inside the sphere.
pub fn sample_slot_positions(
    sphere: &SlotSphere,
    b: usize,
    lim: &KinematicLimits,
    rng: &mut impl Rng,
) -> Vec<Vec3> {
    let mut out = Vec::with_capacity(b + 1);
    out.push(sphere.center);
    for _ in 0..b {
        let dir = loop {
            let v = Vec3::new(
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
            );
            let n = v.norm();
            if n > 1e-12 {
                break v * (1.0 / n);
            }
        };
        let r = sphere.radius * rng.gen_range(0.0..1.0f64).cbrt();
        let p = sphere.center + dir * r;
        out.push(Vec3::new(p.x, p.y, p.z.clamp(lim.z_min, lim.z_max)));
    }
    out
}

struct SlotChoice {
    report: SlotReport,
    cost: f64,
}

/// Picks the feasible candidate with the smallest distance product for one
/// slot. Ties resolve to the earliest candidate, so the center wins when
/// it is optimal. `None` if no candidate has line of sight and adequate
/// SNR toward any station.
fn choose_slot_position(
    sphere: &SlotSphere,
    candidates: &[Vec3],
    scenario: &Scenario,
    lb: &LinkBudget,
) -> Result<Option<SlotChoice>, PlanError> {
    let mt = sphere.mt_position;
    let mut best: Option<(f64, usize, usize, f64)> = None; // cost, cand idx, bs, snr
    for (ci, &p) in candidates.iter().enumerate() {
        if !scenario.world.los_clear(p, mt) {
            continue;
        }
        let mut serving: Option<(usize, f64)> = None;
        for (bi, bs) in scenario.base_stations.iter().enumerate() {
            if distance(bs.position, p) == 0.0 || distance(p, mt) == 0.0 {
                continue;
            }
            if !scenario.world.los_clear(bs.position, p) {
                continue;
            }
            let up = bs_ris_gain(bs.position, p, lb)?;
            let down = ris_mt_gain(p, mt, lb)?;
            let phases = optimal_phases(aoa_cosine(bs.position, p)?, aod_cosine(p, mt)?, lb);
            let g = cascaded_gain(&up, &phases, &down);
            let s = snr(num_complex::Complex64::new(0.0, 0.0), g, lb);
            if serving.is_none_or(|(_, cur)| s > cur) {
                serving = Some((bi, s));
            }
        }
        let Some((bi, s)) = serving else { continue };
        if s < lb.snr_min {
            continue;
        }
        let cost = slot_cost(scenario.base_stations[bi].position, p, mt);
        if best.is_none_or(|(c, ..)| cost < c) {
            best = Some((cost, ci, bi, s));
        }
    }
    let Some((cost, ci, bi, s)) = best else { return Ok(None) };
    let p = candidates[ci];
    let bs = scenario.base_stations[bi].position;
    let aoa = aoa_cosine(bs, p)?;
    let aod = aod_cosine(p, mt)?;
    let phases = optimal_phases(aoa, aod, lb);
    Ok(Some(SlotChoice {
        report: SlotReport {
            k: sphere.k,
            epsilon: sphere.epsilon,
            position: p,
            heading: sphere.heading,
            serving_bs: bi,
            phases: phases.phases,
            aoa_cos: aoa,
            aod_cos: aod,
            snr: s,
            rate: rate(s),
        },
        cost,
    }))
}

fn speed_warnings(
    start: Vec3,
    slots: &[SlotReport],
    spheres: &[SlotSphere],
    lim: &KinematicLimits,
) -> Vec<SpeedWarning> {
    let mut warnings = Vec::new();
    let mut prev = start;
    for (i, (slot, sphere)) in slots.iter().zip(spheres).enumerate() {
        let d = slot.position - prev;
        let horizontal = d.horizontal_norm() / sphere.dt;
        let vertical = (d.z / sphere.dt).abs();
        if horizontal > lim.v_max {
            warnings.push(SpeedWarning {
                slot_index: i,
                axis: "horizontal".into(),
                speed: horizontal,
                limit: lim.v_max,
            });
        }
        if vertical > lim.u_max {
            warnings.push(SpeedWarning {
                slot_index: i,
                axis: "vertical".into(),
                speed: vertical,
                limit: lim.u_max,
            });
        }
        prev = slot.position;
    }
    warnings
}

/// Runs the refinement pass over a planned tube. Slots are processed in
/// parallel with per-slot seed streams; results are reassembled in slot
/// order, so the output is deterministic. Fails with the first infeasible
/// slot in slot order.
pub fn select_refined_trajectory(
    tube: &TubePath,
    scenario: &Scenario,
    lb: &LinkBudget,
    master_seed: u64,
) -> Result<RefinedTrajectory, PlanError> {
    let spheres = slot_spheres(tube, scenario);
    let picks: Vec<Result<Option<SlotChoice>, PlanError>> = spheres
        .par_iter()
        .enumerate()
        .map(|(i, sphere)| {
            let mut rng = rng_for(master_seed, SLOT_POINTS, i as u64);
            let candidates =
                sample_slot_positions(sphere, scenario.planner.b_per_slot, &scenario.limits, &mut rng);
            choose_slot_position(sphere, &candidates, scenario, lb)
        })
        .collect();

    let mut slots = Vec::with_capacity(spheres.len());
    let mut objective = 0.0;
    for (sphere, pick) in spheres.iter().zip(picks) {
        match pick? {
            Some(choice) => {
                objective += choice.cost;
                slots.push(choice.report);
            }
            None => {
                return Err(PlanError::SlotInfeasible { k: sphere.k, epsilon: sphere.epsilon })
            }
        }
    }
    let warnings = speed_warnings(tube.nodes[0].pose.position, &slots, &spheres, &scenario.limits);
    Ok(RefinedTrajectory { slots, objective, warnings })
}

/// Evaluates the refined trajectory slot by slot, adding a random direct
/// station-to-terminal fade on top of the deterministic reflection path.
/// Fading draws come from per-slot seed streams, so the report is
/// reproducible and independent of thread count.
pub fn evaluate_trajectory(
    traj: &RefinedTrajectory,
    scenario: &Scenario,
    lb: &LinkBudget,
    master_seed: u64,
) -> Result<EvalReport, PlanError> {
    let e_slots = scenario.planner.slots_per_segment;
    let legs = scenario.leg_durations();
    let evaluated: Vec<Result<EvalSlot, PlanError>> = traj
        .slots
        .par_iter()
        .enumerate()
        .map(|(i, slot)| {
            let t = slot.epsilon as f64 / e_slots as f64;
            let mt = scenario.route[slot.k - 1]
                .position
                .lerp(scenario.route[slot.k].position, t);
            let bs = scenario.base_stations[slot.serving_bs].position;
            let up = bs_ris_gain(bs, slot.position, lb)?;
            let down = ris_mt_gain(slot.position, mt, lb)?;
            let phases = optimal_phases(aoa_cosine(bs, slot.position)?, aod_cosine(slot.position, mt)?, lb);
            let g = cascaded_gain(&up, &phases, &down);
            let planning_snr = snr(num_complex::Complex64::new(0.0, 0.0), g, lb);
            let mut rng = rng_for(master_seed, FADING, i as u64);
            let direct = crate::channel::direct_gain(bs, mt, lb, &mut rng)?;
            let faded_snr = snr(direct, g, lb);
            Ok(EvalSlot {
                k: slot.k,
                epsilon: slot.epsilon,
                snr: planning_snr,
                rate: rate(planning_snr),
                snr_faded: faded_snr,
                rate_faded: rate(faded_snr),
                dist_bs_uav: distance(bs, slot.position),
                dist_uav_mt: distance(slot.position, mt),
            })
        })
        .collect();

    let mut slots = Vec::with_capacity(evaluated.len());
    for s in evaluated {
        slots.push(s?);
    }
    let n = slots.len() as f64;
    let mut report = EvalReport {
        min_snr: f64::INFINITY,
        mean_snr: 0.0,
        min_snr_faded: f64::INFINITY,
        mean_snr_faded: 0.0,
        min_rate: f64::INFINITY,
        mean_rate: 0.0,
        rate_seconds: 0.0,
        rate_seconds_faded: 0.0,
        slots: Vec::new(),
    };
    for s in &slots {
        let dt = legs[s.k - 1] / e_slots as f64;
        report.min_snr = report.min_snr.min(s.snr);
        report.mean_snr += s.snr / n;
        report.min_snr_faded = report.min_snr_faded.min(s.snr_faded);
        report.mean_snr_faded += s.snr_faded / n;
        report.min_rate = report.min_rate.min(s.rate);
        report.mean_rate += s.rate / n;
        report.rate_seconds += s.rate * dt;
        report.rate_seconds_faded += s.rate_faded * dt;
    }
    report.slots = slots;
    Ok(report)
}
