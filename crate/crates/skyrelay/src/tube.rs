//! First planning pass: a coarse relay path built over the terminal's route
//! points.
//!
//! For every route point a handful of candidate poses is drawn inside a
//! cylinder around it, kept only if the relay there sees both a base
//! station and the terminal and clears the minimum link quality. Candidates
//! at consecutive route points are joined by speed-feasible transitions,
//! and an exact dynamic program over (layer, incoming transition) states
//! picks the acceleration-consistent path of minimum actuation energy. The
//! result is a tube: one freedom sphere per route point around the chosen
//! pose, inside which the second pass may move.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{aligned_gain_magnitude, LinkBudget};
use crate::geometry::{distance, same_side_check, Vec3};
use crate::kinematics::{
    check_accel, check_speed, step_energy_term, step_input, wrap_angle, ControlInput, Pose,
};
use crate::world::{KinematicLimits, PlannerConfig, RouteWaypoint, Scenario};
use crate::PlanError;

/// Candidate relay pose `q` above route point `k`, carrying the freedom
/// sphere the tube will keep around it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CandidateNode {
    pub k: usize,
    pub q: usize,
    pub pose: Pose,
    pub sphere_radius: f64,
}

/// A candidate that survived filtering, with the station that serves it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServedCandidate {
    pub node: CandidateNode,
    pub serving_bs: usize,
    /// Link quality at the sphere center with aligned phases, linear.
    pub snr: f64,
}

/// Speed-feasible transition between candidates in consecutive layers,
/// indexed into the layer vectors, carrying its control input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub input: ControlInput,
}

/// Candidate layers plus the speed-feasible transitions between them.
/// `edges[s]` joins `layers[s]` to `layers[s + 1]` over `dts[s]` seconds.
#[derive(Debug, Clone)]
pub struct LayeredGraph {
    pub layers: Vec<Vec<ServedCandidate>>,
    pub edges: Vec<Vec<Edge>>,
    pub dts: Vec<f64>,
}

/// One sphere of the planned tube. `input` is the control that reaches this
/// node from the previous one; the first node has none.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TubeNode {
    pub k: usize,
    pub pose: Pose,
    pub radius: f64,
    pub serving_bs: usize,
    pub input: Option<ControlInput>,
    pub cumulative_energy: f64,
}

/// The selected minimum-energy sphere sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TubePath {
    pub nodes: Vec<TubeNode>,
    pub total_energy: f64,
    /// Which sampled candidate was chosen at each route point.
    pub q_sequence: Vec<usize>,
}

/// Everything the first pass produces.
#[derive(Debug, Clone)]
pub struct Stage1Output {
    pub tube: TubePath,
    pub graph: LayeredGraph,
    /// Paths through the graph satisfying speed and acceleration limits.
    pub valid_path_count: u64,
    /// Size of the raw candidate combination space before any pruning,
    /// counted per transition pair.
    pub trajectory_space: f64,
}

/// Draws `q_per_point` poses uniformly over the cylinder around one route
/// point: horizontal offset within `max_horiz_offset_m`, altitude within
/// the flight corridor, heading uniform. Each candidate owns its generator,
/// keyed by the packed index `k * 4096 + q` on the candidate stream, so a
/// sample never depends on how many other candidates were drawn before it.
/// The packing supports up to 4096 samples per route point.
pub fn sample_candidates(
    k: usize,
    waypoint: &RouteWaypoint,
    planner: &PlannerConfig,
    lim: &KinematicLimits,
    master_seed: u64,
) -> Vec<CandidateNode> {
    (0..planner.q_per_point)
        .map(|q| {
            let mut rng = crate::seeds::rng_for(
                master_seed,
                crate::seeds::CANDIDATES,
                k as u64 * 4096 + q as u64,
            );
            // Area-uniform disk sample.
            let radius = planner.max_horiz_offset_m * rng.gen_range(0.0..1.0f64).sqrt();
            let angle = rng.gen_range(0.0..std::f64::consts::TAU);
            let z = rng.gen_range(lim.z_min..=lim.z_max);
            let heading = wrap_angle(rng.gen_range(0.0..std::f64::consts::TAU));
            let position = Vec3::new(
                waypoint.position.x + radius * angle.cos(),
                waypoint.position.y + radius * angle.sin(),
                z,
            );
            CandidateNode {
                k,
                q,
                pose: Pose { position, heading },
                sphere_radius: planner.sphere_radius_m,
            }
        })
        .collect()
}

/// Keeps candidates whose freedom sphere stays clear of every building
/// (conservative inflated-box test) and that reach at least one base
/// station with line of sight on both legs and aligned-phase SNR at or
/// above the minimum. Each survivor records the station with the highest
/// SNR. Zero survivors at a route point mean the instance is infeasible
/// there; the caller surfaces that.
pub fn filter_candidates(
    nodes: &[CandidateNode],
    scenario: &Scenario,
    lb: &LinkBudget,
) -> Vec<ServedCandidate> {
    let kept: Vec<Option<ServedCandidate>> = nodes
        .par_iter()
        .map(|node| {
            let pos = node.pose.position;
            let mt = scenario.route[node.k].position;
            let sphere_blocked = scenario
                .world
                .boxes
                .iter()
                .any(|b| b.inflate(node.sphere_radius).contains(pos));
            if sphere_blocked || !scenario.world.los_clear(pos, mt) {
                return None;
            }
            let mut best: Option<(usize, f64)> = None;
            for (i, bs) in scenario.base_stations.iter().enumerate() {
                if distance(bs.position, pos) == 0.0 || distance(pos, mt) == 0.0 {
                    continue;
                }
                if !scenario.world.los_clear(bs.position, pos) {
                    continue;
                }
                if scenario.planner.enable_same_side
                    && !same_side_check(bs.position, pos, node.pose.heading, mt)
                {
                    continue;
                }
                let mag = aligned_gain_magnitude(bs.position, pos, mt, lb);
                let snr = lb.p_bs_w * mag * mag / lb.noise_w;
                if best.is_none_or(|(_, s)| snr > s) {
                    best = Some((i, snr));
                }
            }
            let (serving_bs, snr) = best?;
            (snr >= lb.snr_min).then_some(ServedCandidate { node: *node, serving_bs, snr })
        })
        .collect();

    let mut out: Vec<ServedCandidate> = kept.into_iter().flatten().collect();
    if scenario.planner.enforce_sphere_dispersion {
        let mut spaced: Vec<ServedCandidate> = Vec::with_capacity(out.len());
        for c in out {
            let overlaps = spaced.iter().any(|s| {
                distance(s.node.pose.position, c.node.pose.position)
                    < s.node.sphere_radius + c.node.sphere_radius
            });
            if !overlaps {
                spaced.push(c);
            }
        }
        out = spaced;
    }
    out
}

/// Joins consecutive layers with every transition that satisfies the speed
/// limits over the leg duration.
pub fn build_layered_graph(
    layers: Vec<Vec<ServedCandidate>>,
    dts: Vec<f64>,
    lim: &KinematicLimits,
) -> Result<LayeredGraph, PlanError> {
    assert_eq!(layers.len(), dts.len() + 1, "one layer per route point");
    let mut edges = Vec::with_capacity(dts.len());
    for (s, &dt) in dts.iter().enumerate() {
        let rows: Vec<Vec<Edge>> = layers[s]
            .par_iter()
            .enumerate()
            .map(|(i, a)| {
                let mut row = Vec::new();
                for (j, b) in layers[s + 1].iter().enumerate() {
                    let input = match step_input(&a.node.pose, &b.node.pose, dt) {
                        Ok(u) => u,
                        Err(_) => continue, // durations are validated positive
                    };
                    if check_speed(&input, lim) {
                        row.push(Edge { from: i, to: j, input });
                    }
                }
                row
            })
            .collect();
        edges.push(rows.into_iter().flatten().collect());
    }
    Ok(LayeredGraph { layers, edges, dts })
}

#[derive(Clone)]
struct PathState {
    cost: f64,
    nodes: Vec<usize>,
}

fn better(cost: f64, nodes: &[usize], incumbent: &Option<PathState>) -> bool {
    match incumbent {
        None => true,
        Some(b) => cost < b.cost || (cost == b.cost && nodes < b.nodes.as_slice()),
    }
}

/// Exact minimum-energy path through the graph.
///
/// The state space is (segment, incoming transition), which is what the
/// acceleration limits couple; energy accumulates segment by segment in
/// path order, starting against hover. Ties in energy resolve to the
/// lexicographically smallest candidate-index sequence, so the result is
/// invariant to candidate order up to that rule.
pub fn min_energy_path(
    graph: &LayeredGraph,
    alpha1: f64,
    alpha2: f64,
    lim: &KinematicLimits,
) -> Result<TubePath, PlanError> {
    for (k, layer) in graph.layers.iter().enumerate() {
        if layer.is_empty() {
            return Err(PlanError::NoCandidates { k });
        }
    }
    for (s, es) in graph.edges.iter().enumerate() {
        if es.is_empty() {
            return Err(PlanError::NoEdges { k: s + 1 });
        }
    }

    let segs = graph.dts.len();
    let mut cur: Vec<Option<PathState>> = vec![None; graph.edges[0].len()];
    for (ei, e) in graph.edges[0].iter().enumerate() {
        if check_accel(&ControlInput::ZERO, &e.input, graph.dts[0], lim)? {
            let cost = step_energy_term(&ControlInput::ZERO, &e.input, graph.dts[0], alpha1, alpha2);
            let nodes = vec![e.from, e.to];
            if better(cost, &nodes, &cur[ei]) {
                cur[ei] = Some(PathState { cost, nodes });
            }
        }
    }

    for s in 1..segs {
        let mut next: Vec<Option<PathState>> = vec![None; graph.edges[s].len()];
        for (fi, f) in graph.edges[s].iter().enumerate() {
            for (ei, e) in graph.edges[s - 1].iter().enumerate() {
                if e.to != f.from {
                    continue;
                }
                let Some(st) = &cur[ei] else { continue };
                if !check_accel(&e.input, &f.input, graph.dts[s], lim)? {
                    continue;
                }
                let cost = st.cost + step_energy_term(&e.input, &f.input, graph.dts[s], alpha1, alpha2);
                let mut nodes = st.nodes.clone();
                nodes.push(f.to);
                if better(cost, &nodes, &next[fi]) {
                    next[fi] = Some(PathState { cost, nodes });
                }
            }
        }
        cur = next;
    }

    let mut best: Option<PathState> = None;
    for st in cur.into_iter().flatten() {
        if better(st.cost, &st.nodes, &best) {
            best = Some(st);
        }
    }
    let best = best.ok_or(PlanError::NoPath)?;
    Ok(assemble_tube(graph, &best.nodes, alpha1, alpha2, best.cost))
}

fn edge_between(graph: &LayeredGraph, s: usize, from: usize, to: usize) -> &Edge {
    graph.edges[s]
        .iter()
        .find(|e| e.from == from && e.to == to)
        .expect("selected path uses a graph edge")
}

fn assemble_tube(
    graph: &LayeredGraph,
    node_path: &[usize],
    alpha1: f64,
    alpha2: f64,
    dp_cost: f64,
) -> TubePath {
    let mut nodes = Vec::with_capacity(node_path.len());
    let mut q_sequence = Vec::with_capacity(node_path.len());
    let mut prev_input = ControlInput::ZERO;
    let mut acc = 0.0;
    for (k, &idx) in node_path.iter().enumerate() {
        let cand = &graph.layers[k][idx];
        let input = (k > 0).then(|| edge_between(graph, k - 1, node_path[k - 1], idx).input);
        if let Some(u) = input {
            acc += step_energy_term(&prev_input, &u, graph.dts[k - 1], alpha1, alpha2);
            prev_input = u;
        }
        nodes.push(TubeNode {
            k,
            pose: cand.node.pose,
            radius: cand.node.sphere_radius,
            serving_bs: cand.serving_bs,
            input,
            cumulative_energy: acc,
        });
        q_sequence.push(cand.node.q);
    }
    // Replaying the sum in path order reproduces the DP total exactly.
    debug_assert_eq!(acc.to_bits(), dp_cost.to_bits());
    TubePath { nodes, total_energy: acc, q_sequence }
}

/// Number of speed-valid node paths, before acceleration pruning. This is
/// the amount of work full enumeration would visit.
fn speed_valid_path_count(graph: &LayeredGraph) -> u128 {
    let mut cnt: Vec<u128> = vec![1; graph.layers[0].len()];
    for (s, es) in graph.edges.iter().enumerate() {
        let mut next = vec![0u128; graph.layers[s + 1].len()];
        for e in es {
            next[e.to] = next[e.to].saturating_add(cnt[e.from]);
        }
        cnt = next;
    }
    cnt.iter().fold(0u128, |a, &b| a.saturating_add(b))
}

/// Paths satisfying both speed and acceleration limits, counted exactly by
/// a dynamic program over transition states.
pub fn count_valid_paths(graph: &LayeredGraph, lim: &KinematicLimits) -> Result<u64, PlanError> {
    let segs = graph.dts.len();
    if segs == 0 {
        return Ok(graph.layers[0].len() as u64);
    }
    let mut cur: Vec<u128> = Vec::with_capacity(graph.edges[0].len());
    for e in &graph.edges[0] {
        let ok = check_accel(&ControlInput::ZERO, &e.input, graph.dts[0], lim)?;
        cur.push(ok as u128);
    }
    for s in 1..segs {
        let mut next = vec![0u128; graph.edges[s].len()];
        for (fi, f) in graph.edges[s].iter().enumerate() {
            for (ei, e) in graph.edges[s - 1].iter().enumerate() {
                if e.to == f.from
                    && cur[ei] > 0
                    && check_accel(&e.input, &f.input, graph.dts[s], lim)?
                {
                    next[fi] = next[fi].saturating_add(cur[ei]);
                }
            }
        }
        cur = next;
    }
    let total = cur.iter().fold(0u128, |a, &b| a.saturating_add(b));
    Ok(u64::try_from(total).unwrap_or(u64::MAX))
}

/// Exhaustively lists every speed- and acceleration-valid path with its
/// energy, in lexicographic candidate-index order. Guarded: refuses
/// instances whose speed-valid path count exceeds `guard` (default 10^6 via
/// [`ENUMERATION_GUARD`]). Energies accumulate in the same order as the
/// dynamic program, so minima agree bit for bit.
pub fn enumerate_valid_paths(
    graph: &LayeredGraph,
    alpha1: f64,
    alpha2: f64,
    lim: &KinematicLimits,
    guard: u128,
) -> Result<Vec<(Vec<usize>, f64)>, PlanError> {
    let estimate = speed_valid_path_count(graph);
    if estimate > guard {
        return Err(PlanError::EnumerationTooLarge { estimate, guard });
    }
    let segs = graph.dts.len();
    // Adjacency sorted by target index, giving lexicographic visit order.
    let adj: Vec<Vec<Vec<&Edge>>> = graph
        .edges
        .iter()
        .enumerate()
        .map(|(s, es)| {
            let mut rows = vec![Vec::new(); graph.layers[s].len()];
            for e in es {
                rows[e.from].push(e);
            }
            for row in &mut rows {
                row.sort_by_key(|e| e.to);
            }
            rows
        })
        .collect();

    let mut out = Vec::new();
    let mut path = Vec::with_capacity(segs + 1);
    for start in 0..graph.layers[0].len() {
        path.push(start);
        descend(graph, &adj, lim, alpha1, alpha2, 0, &ControlInput::ZERO, 0.0, &mut path, &mut out)?;
        path.pop();
    }
    Ok(out)
}

/// Default enumeration guard: at most one million speed-valid paths.
pub const ENUMERATION_GUARD: u128 = 1_000_000;

#[allow(clippy::too_many_arguments)]
fn descend(
    graph: &LayeredGraph,
    adj: &[Vec<Vec<&Edge>>],
    lim: &KinematicLimits,
    alpha1: f64,
    alpha2: f64,
    s: usize,
    prev_input: &ControlInput,
    energy: f64,
    path: &mut Vec<usize>,
    out: &mut Vec<(Vec<usize>, f64)>,
) -> Result<(), PlanError> {
    if s == graph.dts.len() {
        out.push((path.clone(), energy));
        return Ok(());
    }
    let from = *path.last().expect("path holds the start node");
    for e in &adj[s][from] {
        if !check_accel(prev_input, &e.input, graph.dts[s], lim)? {
            continue;
        }
        let term = step_energy_term(prev_input, &e.input, graph.dts[s], alpha1, alpha2);
        path.push(e.to);
        descend(graph, adj, lim, alpha1, alpha2, s + 1, &e.input, energy + term, path, out)?;
        path.pop();
    }
    Ok(())
}

/// Energy of an explicit node-index path through the graph, accumulated in
/// path order; `None` if some hop has no edge.
pub fn path_energy(
    graph: &LayeredGraph,
    node_path: &[usize],
    alpha1: f64,
    alpha2: f64,
) -> Option<f64> {
    if node_path.len() != graph.dts.len() + 1 {
        return None;
    }
    let mut prev = ControlInput::ZERO;
    let mut acc = 0.0;
    for s in 0..graph.dts.len() {
        let e = graph.edges[s]
            .iter()
            .find(|e| e.from == node_path[s] && e.to == node_path[s + 1])?;
        acc += step_energy_term(&prev, &e.input, graph.dts[s], alpha1, alpha2);
        prev = e.input;
    }
    Some(acc)
}

/// Draws `n` complete valid paths uniformly-by-extension from the pruned
/// graph: a backward viability pass marks transitions that can still reach
/// the final layer, then forward walks choose uniformly among viable
/// continuations, so every walk completes. Returns fewer than `n` (possibly
/// zero) paths only when the graph admits none.
pub fn sample_valid_paths(
    graph: &LayeredGraph,
    lim: &KinematicLimits,
    n: usize,
    rng: &mut impl Rng,
) -> Result<Vec<Vec<usize>>, PlanError> {
    let segs = graph.dts.len();
    if segs == 0 {
        return Ok(Vec::new());
    }
    let mut viable: Vec<Vec<bool>> = graph.edges.iter().map(|es| vec![false; es.len()]).collect();
    for v in &mut viable[segs - 1] {
        *v = true;
    }
    for s in (0..segs - 1).rev() {
        for (ei, e) in graph.edges[s].iter().enumerate() {
            let mut ok = false;
            for (fi, f) in graph.edges[s + 1].iter().enumerate() {
                if f.from == e.to
                    && viable[s + 1][fi]
                    && check_accel(&e.input, &f.input, graph.dts[s + 1], lim)?
                {
                    ok = true;
                    break;
                }
            }
            viable[s][ei] = ok;
        }
    }
    let mut starts = Vec::new();
    for (ei, e) in graph.edges[0].iter().enumerate() {
        if viable[0][ei] && check_accel(&ControlInput::ZERO, &e.input, graph.dts[0], lim)? {
            starts.push(ei);
        }
    }
    if starts.is_empty() {
        return Ok(Vec::new());
    }

    let mut paths = Vec::with_capacity(n);
    for _ in 0..n {
        let mut ei = starts[rng.gen_range(0..starts.len())];
        let mut path = vec![graph.edges[0][ei].from, graph.edges[0][ei].to];
        // Index addresses edges[s], edges[s - 1], viable[s], and dts[s].
        #[allow(clippy::needless_range_loop)]
        for s in 1..segs {
            let e = &graph.edges[s - 1][ei];
            let mut options = Vec::new();
            for (fi, f) in graph.edges[s].iter().enumerate() {
                if f.from == e.to
                    && viable[s][fi]
                    && check_accel(&e.input, &f.input, graph.dts[s], lim)?
                {
                    options.push(fi);
                }
            }
            // Viability of the incoming edge guarantees a continuation.
            ei = options[rng.gen_range(0..options.len())];
            path.push(graph.edges[s][ei].to);
        }
        paths.push(path);
    }
    Ok(paths)
}

/// Runs the complete first pass on a scenario: per-point sampling with
/// seeds derived from `master_seed`, filtering, graph construction, path
/// counting, and the exact energy minimization.
pub fn plan_tube(
    scenario: &Scenario,
    lb: &LinkBudget,
    master_seed: u64,
) -> Result<Stage1Output, PlanError> {
    let points = scenario.route.len();
    let mut layers = Vec::with_capacity(points);
    for (k, waypoint) in scenario.route.iter().enumerate() {
        let nodes = sample_candidates(k, waypoint, &scenario.planner, &scenario.limits, master_seed);
        let kept = filter_candidates(&nodes, scenario, lb);
        if kept.is_empty() {
            return Err(PlanError::NoCandidates { k });
        }
        layers.push(kept);
    }

    let graph = build_layered_graph(layers, scenario.leg_durations(), &scenario.limits)?;
    for (s, es) in graph.edges.iter().enumerate() {
        if es.is_empty() {
            return Err(PlanError::NoEdges { k: s + 1 });
        }
    }
    let valid_path_count = count_valid_paths(&graph, &scenario.limits)?;
    let tube = min_energy_path(&graph, scenario.planner.alpha1, scenario.planner.alpha2, &scenario.limits)?;
    let q = scenario.planner.q_per_point as f64;
    let trajectory_space = (q * q).powi(scenario.segment_count() as i32);
    Ok(Stage1Output { tube, graph, valid_path_count, trajectory_space })
}
