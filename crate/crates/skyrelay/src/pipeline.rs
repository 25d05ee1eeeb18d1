//! End-to-end runs: load a scenario, plan, refine, evaluate, and write the
//! artifact files the command-line tool promises.
//!
//! Artifacts are serialized with a fixed field order and the shortest
//! round-trip float representation, so a rerun with identical inputs
//! produces byte-identical `tube_path.json`, `trajectory.json` and
//! `slots.csv`. `summary.json` additionally records wall time, so it is
//! exempt from that guarantee.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::channel::LinkBudget;
use crate::refine::{
    evaluate_trajectory, select_refined_trajectory, EvalReport, RefinedTrajectory, SlotReport,
    SpeedWarning,
};
use crate::seeds::{rng_for, ORACLE};
use crate::tube::{
    enumerate_valid_paths, path_energy, plan_tube, sample_valid_paths, Stage1Output, TubeNode,
    ENUMERATION_GUARD,
};
use crate::world::{load_scenario, scenario_to_json, Scenario, ScenarioError};
use crate::PlanError;

/// How far to run the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageSelection {
    /// Tube planning only.
    Stage1,
    /// Tube planning, slot refinement and link evaluation.
    Full,
}

/// One pipeline invocation.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub scenario_path: PathBuf,
    /// Replaces the scenario's own seed when set.
    pub seed_override: Option<u64>,
    pub out_dir: PathBuf,
    pub stage: StageSelection,
    /// Also write `trajectory_points.csv` with per-slot geometry for
    /// plotting the flight path.
    pub emit_plots: bool,
    /// Cross-check the selected tube against an independent path oracle.
    pub oracle: bool,
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed artifact: {0}")]
    Malformed(String),
    #[error("oracle mismatch: {0}")]
    OracleMismatch(String),
}

impl PipelineError {
    /// Process exit code for this failure: 2 for scenario problems, 3 when
    /// tube planning finds no feasible path, 4 when a refinement slot is
    /// infeasible, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Scenario(_) => 2,
            PipelineError::Plan(
                PlanError::NoCandidates { .. } | PlanError::NoEdges { .. } | PlanError::NoPath,
            ) => 3,
            PipelineError::Plan(PlanError::SlotInfeasible { .. }) => 4,
            _ => 1,
        }
    }
}

/// Hash of the canonical scenario serialization (sorted keys), hex-encoded.
/// Ties every artifact back to the exact scenario that produced it.
pub fn scenario_hash(scenario: &Scenario) -> String {
    let canonical = scenario_to_json(scenario);
    let digest = Sha256::digest(canonical.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// `tube_path.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TubeArtifact {
    pub scenario_hash: String,
    pub seed: u64,
    pub total_energy: f64,
    pub valid_path_count: u64,
    pub trajectory_space: f64,
    pub q_sequence: Vec<usize>,
    pub nodes: Vec<TubeNode>,
}

/// `trajectory.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectoryArtifact {
    pub scenario_hash: String,
    pub seed: u64,
    pub objective: f64,
    pub slot_count: usize,
    pub slots: Vec<SlotReport>,
    pub warnings: Vec<SpeedWarning>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SegmentSummary {
    pub k: usize,
    pub travel_time_s: f64,
    pub slot_dt_s: f64,
}

/// Result of the tube cross-check: exhaustive when the instance is small
/// enough to enumerate, sampled dominance otherwise.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleReport {
    pub mode: String,
    pub paths_checked: usize,
    pub agreed: bool,
}

/// `summary.json`. Refinement fields are present only on full runs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Summary {
    pub scenario_hash: String,
    pub seed: u64,
    pub stage: String,
    pub total_energy: f64,
    pub valid_path_count: u64,
    pub trajectory_space: f64,
    pub segments: Vec<SegmentSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slot_count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub objective: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_snr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_snr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_snr_faded: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_snr_faded: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate_seconds: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate_seconds_faded: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub speed_warning_count: Option<usize>,
    pub wall_time_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleReport>,
}

/// Paths of everything a run wrote, plus the parsed summary.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub tube_path_file: PathBuf,
    pub trajectory_file: Option<PathBuf>,
    pub slots_csv_file: Option<PathBuf>,
    pub plot_points_file: Option<PathBuf>,
    pub summary_file: PathBuf,
    pub summary: Summary,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    let mut s = serde_json::to_string_pretty(value)
        .map_err(|e| PipelineError::Malformed(e.to_string()))?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

fn slots_csv(hash: &str, seed: u64, eval: &EvalReport) -> String {
    use std::fmt::Write;
    let mut s = format!("# scenario_hash={hash} seed={seed}\n");
    s.push_str("slot_index,snr,rate,dist_bs_uav,dist_uav_mt\n");
    for (i, slot) in eval.slots.iter().enumerate() {
        writeln!(s, "{i},{},{},{},{}", slot.snr, slot.rate, slot.dist_bs_uav, slot.dist_uav_mt)
            .expect("writing to a String cannot fail");
    }
    s
}

fn plot_points_csv(hash: &str, seed: u64, traj: &RefinedTrajectory) -> String {
    use std::fmt::Write;
    let mut s = format!("# scenario_hash={hash} seed={seed}\n");
    s.push_str("slot_index,k,epsilon,x,y,z,heading\n");
    for (i, slot) in traj.slots.iter().enumerate() {
        let p = slot.position;
        writeln!(s, "{i},{},{},{},{},{},{}", slot.k, slot.epsilon, p.x, p.y, p.z, slot.heading)
            .expect("writing to a String cannot fail");
    }
    s
}

fn check_against_oracle(
    stage1: &Stage1Output,
    scenario: &Scenario,
    seed: u64,
) -> Result<OracleReport, PipelineError> {
    let a1 = scenario.planner.alpha1;
    let a2 = scenario.planner.alpha2;
    let lim = &scenario.limits;
    let selected = stage1.tube.total_energy;
    match enumerate_valid_paths(&stage1.graph, a1, a2, lim, ENUMERATION_GUARD) {
        Ok(all) => {
            let min = all.iter().map(|(_, e)| *e).fold(f64::INFINITY, f64::min);
            if all.is_empty() || min.to_bits() != selected.to_bits() {
                return Err(PipelineError::OracleMismatch(format!(
                    "exhaustive minimum {min} differs from selected {selected}"
                )));
            }
            Ok(OracleReport { mode: "exhaustive".into(), paths_checked: all.len(), agreed: true })
        }
        Err(PlanError::EnumerationTooLarge { .. }) => {
            let mut rng = rng_for(seed, ORACLE, 0);
            let paths = sample_valid_paths(&stage1.graph, lim, 1000, &mut rng).map_err(PipelineError::Plan)?;
            if paths.is_empty() {
                return Err(PipelineError::OracleMismatch(
                    "sampler found no valid path although one was selected".into(),
                ));
            }
            for p in &paths {
                let e = path_energy(&stage1.graph, p, a1, a2)
                    .expect("sampled paths follow graph edges");
                if e < selected {
                    return Err(PipelineError::OracleMismatch(format!(
                        "sampled path with energy {e} beats selected {selected}"
                    )));
                }
            }
            Ok(OracleReport { mode: "sampled".into(), paths_checked: paths.len(), agreed: true })
        }
        Err(e) => Err(e.into()),
    }
}

/// Machine-readable description of a planning failure, or `None` for
/// failures that are not about feasibility.
pub fn infeasibility_report(err: &PipelineError) -> Option<serde_json::Value> {
    let PipelineError::Plan(p) = err else { return None };
    let (kind, k, epsilon) = match p {
        PlanError::NoCandidates { k } => ("no_candidates", Some(*k), None),
        PlanError::NoEdges { k } => ("no_edges", Some(*k), None),
        PlanError::NoPath => ("no_path", None, None),
        PlanError::SlotInfeasible { k, epsilon } => ("slot_infeasible", Some(*k), Some(*epsilon)),
        _ => return None,
    };
    Some(serde_json::json!({
        "error": kind,
        "message": p.to_string(),
        "k": k,
        "epsilon": epsilon,
        "exit_code": err.exit_code(),
    }))
}

/// Runs the pipeline and writes artifacts into `out_dir`. On a planning
/// failure an `infeasibility.json` describing it is written there before
/// the error is returned.
pub fn run_pipeline(cfg: &RunConfig) -> Result<RunArtifacts, PipelineError> {
    fs::create_dir_all(&cfg.out_dir)?;
    match run_inner(cfg) {
        Ok(artifacts) => Ok(artifacts),
        Err(err) => {
            if let Some(report) = infeasibility_report(&err) {
                let _ = write_json(&cfg.out_dir.join("infeasibility.json"), &report);
            }
            Err(err)
        }
    }
}

fn run_inner(cfg: &RunConfig) -> Result<RunArtifacts, PipelineError> {
    let t0 = Instant::now();
    let mut scenario = load_scenario(&cfg.scenario_path)?;
    // The hash identifies the scenario file; an overridden seed is
    // recorded separately in every artifact's `seed` field.
    let hash = scenario_hash(&scenario);
    if let Some(seed) = cfg.seed_override {
        scenario.planner.rng_seed = seed;
    }
    let seed = scenario.planner.rng_seed;
    let lb = LinkBudget::from(&scenario.channel);

    let stage1 = plan_tube(&scenario, &lb, seed)?;
    let oracle = cfg.oracle.then(|| check_against_oracle(&stage1, &scenario, seed)).transpose()?;

    let tube_path_file = cfg.out_dir.join("tube_path.json");
    write_json(
        &tube_path_file,
        &TubeArtifact {
            scenario_hash: hash.clone(),
            seed,
            total_energy: stage1.tube.total_energy,
            valid_path_count: stage1.valid_path_count,
            trajectory_space: stage1.trajectory_space,
            q_sequence: stage1.tube.q_sequence.clone(),
            nodes: stage1.tube.nodes.clone(),
        },
    )?;

    let e_slots = scenario.planner.slots_per_segment;
    let legs = scenario.leg_durations();
    let segments: Vec<SegmentSummary> = legs
        .iter()
        .enumerate()
        .map(|(i, &t)| SegmentSummary {
            k: i + 1,
            travel_time_s: t,
            slot_dt_s: t / e_slots as f64,
        })
        .collect();

    let mut summary = Summary {
        scenario_hash: hash.clone(),
        seed,
        stage: "stage1".into(),
        total_energy: stage1.tube.total_energy,
        valid_path_count: stage1.valid_path_count,
        trajectory_space: stage1.trajectory_space,
        segments,
        slot_count: None,
        objective: None,
        min_snr: None,
        mean_snr: None,
        min_snr_faded: None,
        mean_snr_faded: None,
        min_rate: None,
        mean_rate: None,
        rate_seconds: None,
        rate_seconds_faded: None,
        speed_warning_count: None,
        wall_time_s: 0.0,
        oracle,
    };

    let mut trajectory_file = None;
    let mut slots_csv_file = None;
    let mut plot_points_file = None;
    if cfg.stage == StageSelection::Full {
        let traj = select_refined_trajectory(&stage1.tube, &scenario, &lb, seed)?;
        let file = cfg.out_dir.join("trajectory.json");
        write_json(
            &file,
            &TrajectoryArtifact {
                scenario_hash: hash.clone(),
                seed,
                objective: traj.objective,
                slot_count: traj.slots.len(),
                slots: traj.slots.clone(),
                warnings: traj.warnings.clone(),
            },
        )?;
        trajectory_file = Some(file);

        let eval = evaluate_trajectory(&traj, &scenario, &lb, seed)?;
        let file = cfg.out_dir.join("slots.csv");
        fs::write(&file, slots_csv(&hash, seed, &eval))?;
        slots_csv_file = Some(file);
        if cfg.emit_plots {
            let file = cfg.out_dir.join("trajectory_points.csv");
            fs::write(&file, plot_points_csv(&hash, seed, &traj))?;
            plot_points_file = Some(file);
        }

        summary.stage = "full".into();
        summary.slot_count = Some(traj.slots.len());
        summary.objective = Some(traj.objective);
        summary.min_snr = Some(eval.min_snr);
        summary.mean_snr = Some(eval.mean_snr);
        summary.min_snr_faded = Some(eval.min_snr_faded);
        summary.mean_snr_faded = Some(eval.mean_snr_faded);
        summary.min_rate = Some(eval.min_rate);
        summary.mean_rate = Some(eval.mean_rate);
        summary.rate_seconds = Some(eval.rate_seconds);
        summary.rate_seconds_faded = Some(eval.rate_seconds_faded);
        summary.speed_warning_count = Some(traj.warnings.len());
    }

    summary.wall_time_s = t0.elapsed().as_secs_f64();
    let summary_file = cfg.out_dir.join("summary.json");
    write_json(&summary_file, &summary)?;

    Ok(RunArtifacts {
        tube_path_file,
        trajectory_file,
        slots_csv_file,
        plot_points_file,
        summary_file,
        summary,
    })
}

/// Formats a previously written `summary.json` for reading; never
/// recomputes anything.
pub fn report_summary(out_dir: &Path) -> Result<String, PipelineError> {
    let raw = fs::read_to_string(out_dir.join("summary.json"))?;
    let s: Summary =
        serde_json::from_str(&raw).map_err(|e| PipelineError::Malformed(e.to_string()))?;
    let mut out = String::new();
    out.push_str(&format!("scenario {}  seed {}  stage {}\n", s.scenario_hash, s.seed, s.stage));
    out.push_str(&format!(
        "tube: energy {:.4}, {} valid paths, raw space {:.3e}\n",
        s.total_energy, s.valid_path_count, s.trajectory_space
    ));
    for seg in &s.segments {
        out.push_str(&format!(
            "  segment {}: {:.2} s travel, {:.3} s per slot\n",
            seg.k, seg.travel_time_s, seg.slot_dt_s
        ));
    }
    if let (Some(n), Some(obj)) = (s.slot_count, s.objective) {
        out.push_str(&format!("refined: {n} slots, distance-product objective {obj:.4e}\n"));
    }
    if let (Some(min), Some(mean)) = (s.min_snr, s.mean_snr) {
        out.push_str(&format!("snr: min {min:.4e}, mean {mean:.4e}\n"));
    }
    if let (Some(min), Some(mean)) = (s.min_snr_faded, s.mean_snr_faded) {
        out.push_str(&format!("snr with fading: min {min:.4e}, mean {mean:.4e}\n"));
    }
    if let (Some(rs), Some(rsf)) = (s.rate_seconds, s.rate_seconds_faded) {
        out.push_str(&format!("rate over route: {rs:.4} bit/Hz ({rsf:.4} with fading)\n"));
    }
    if let Some(w) = s.speed_warning_count {
        out.push_str(&format!("speed warnings: {w}\n"));
    }
    if let Some(o) = &s.oracle {
        out.push_str(&format!(
            "oracle: {} over {} paths, {}\n",
            o.mode,
            o.paths_checked,
            if o.agreed { "agreed" } else { "MISMATCH" }
        ));
    }
    out.push_str(&format!("wall time {:.3} s\n", s.wall_time_s));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::tests::open_field_scenario;
    use crate::world::save_scenario;

    fn run_cfg(dir: &Path, scenario_file: &Path, stage: StageSelection) -> RunConfig {
        RunConfig {
            scenario_path: scenario_file.to_path_buf(),
            seed_override: None,
            out_dir: dir.to_path_buf(),
            stage,
            emit_plots: true,
            oracle: false,
        }
    }

    #[test]
    fn full_run_writes_all_artifacts() {
        let tmp = tempfile::tempdir().unwrap();
        let scenario_file = tmp.path().join("scenario.json");
        save_scenario(&scenario_file, &open_field_scenario()).unwrap();
        let out = tmp.path().join("out");
        let artifacts =
            run_pipeline(&run_cfg(&out, &scenario_file, StageSelection::Full)).unwrap();
        assert!(artifacts.tube_path_file.exists());
        assert!(artifacts.trajectory_file.as_ref().unwrap().exists());
        assert!(artifacts.slots_csv_file.as_ref().unwrap().exists());
        assert!(artifacts.plot_points_file.as_ref().unwrap().exists());
        assert!(artifacts.summary_file.exists());

        let s = &artifacts.summary;
        let scenario = open_field_scenario();
        assert_eq!(s.stage, "full");
        assert_eq!(s.seed, scenario.planner.rng_seed);
        assert_eq!(s.scenario_hash, scenario_hash(&scenario));
        assert_eq!(
            s.slot_count.unwrap(),
            scenario.segment_count() * scenario.planner.slots_per_segment
        );
        assert!(s.valid_path_count > 0);
        assert!(s.min_snr.unwrap() <= s.mean_snr.unwrap());

        let tube: TubeArtifact =
            serde_json::from_str(&fs::read_to_string(&artifacts.tube_path_file).unwrap()).unwrap();
        assert_eq!(tube.nodes.len(), scenario.route.len());
        assert_eq!(tube.scenario_hash, s.scenario_hash);

        let csv = fs::read_to_string(artifacts.slots_csv_file.as_ref().unwrap()).unwrap();
        let mut lines = csv.lines();
        assert!(lines.next().unwrap().starts_with("# scenario_hash="));
        assert_eq!(lines.next().unwrap(), "slot_index,snr,rate,dist_bs_uav,dist_uav_mt");
        assert_eq!(lines.count(), s.slot_count.unwrap());

        let pts = fs::read_to_string(artifacts.plot_points_file.as_ref().unwrap()).unwrap();
        let mut lines = pts.lines();
        assert!(lines.next().unwrap().starts_with("# scenario_hash="));
        assert_eq!(lines.next().unwrap(), "slot_index,k,epsilon,x,y,z,heading");
        assert_eq!(lines.count(), s.slot_count.unwrap());
    }

    #[test]
    fn plots_are_optional_but_slots_are_not() {
        let tmp = tempfile::tempdir().unwrap();
        let scenario_file = tmp.path().join("scenario.json");
        save_scenario(&scenario_file, &open_field_scenario()).unwrap();
        let mut cfg = run_cfg(&tmp.path().join("out"), &scenario_file, StageSelection::Full);
        cfg.emit_plots = false;
        let artifacts = run_pipeline(&cfg).unwrap();
        assert!(artifacts.slots_csv_file.as_ref().unwrap().exists());
        assert!(artifacts.plot_points_file.is_none());
    }

    #[test]
    fn reruns_are_byte_identical() {
        let tmp = tempfile::tempdir().unwrap();
        let scenario_file = tmp.path().join("scenario.json");
        save_scenario(&scenario_file, &open_field_scenario()).unwrap();
        let a = run_pipeline(&run_cfg(&tmp.path().join("a"), &scenario_file, StageSelection::Full))
            .unwrap();
        let b = run_pipeline(&run_cfg(&tmp.path().join("b"), &scenario_file, StageSelection::Full))
            .unwrap();
        for (x, y) in [
            (&a.tube_path_file, &b.tube_path_file),
            (a.trajectory_file.as_ref().unwrap(), b.trajectory_file.as_ref().unwrap()),
            (a.slots_csv_file.as_ref().unwrap(), b.slots_csv_file.as_ref().unwrap()),
        ] {
            assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap());
        }
    }

    #[test]
    fn stage1_run_skips_refinement_artifacts() {
        let tmp = tempfile::tempdir().unwrap();
        let scenario_file = tmp.path().join("scenario.json");
        save_scenario(&scenario_file, &open_field_scenario()).unwrap();
        let out = tmp.path().join("out");
        let artifacts =
            run_pipeline(&run_cfg(&out, &scenario_file, StageSelection::Stage1)).unwrap();
        assert!(artifacts.trajectory_file.is_none());
        assert!(artifacts.slots_csv_file.is_none());
        assert_eq!(artifacts.summary.stage, "stage1");
        assert!(artifacts.summary.min_snr.is_none());
        assert!(!out.join("trajectory.json").exists());
    }

    #[test]
    fn seed_override_is_recorded() {
        let tmp = tempfile::tempdir().unwrap();
        let scenario_file = tmp.path().join("scenario.json");
        save_scenario(&scenario_file, &open_field_scenario()).unwrap();
        let mut cfg = run_cfg(&tmp.path().join("out"), &scenario_file, StageSelection::Stage1);
        cfg.seed_override = Some(7);
        let artifacts = run_pipeline(&cfg).unwrap();
        assert_eq!(artifacts.summary.seed, 7);
        // The hash covers the file content, not the override.
        assert_eq!(artifacts.summary.scenario_hash, scenario_hash(&open_field_scenario()));
    }

    #[test]
    fn oracle_confirms_small_instances_exhaustively() {
        let tmp = tempfile::tempdir().unwrap();
        let scenario_file = tmp.path().join("scenario.json");
        save_scenario(&scenario_file, &open_field_scenario()).unwrap();
        let mut cfg = run_cfg(&tmp.path().join("out"), &scenario_file, StageSelection::Stage1);
        cfg.oracle = true;
        let artifacts = run_pipeline(&cfg).unwrap();
        let oracle = artifacts.summary.oracle.unwrap();
        assert_eq!(oracle.mode, "exhaustive");
        assert!(oracle.agreed);
        assert!(oracle.paths_checked > 0);
    }

    #[test]
    fn infeasible_scenario_reports_and_maps_exit_codes() {
        let tmp = tempfile::tempdir().unwrap();
        let scenario_file = tmp.path().join("scenario.json");
        let mut s = open_field_scenario();
        s.channel.snr_min = f64::MAX;
        save_scenario(&scenario_file, &s).unwrap();
        let out = tmp.path().join("out");
        let err = run_pipeline(&run_cfg(&out, &scenario_file, StageSelection::Full)).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        let report: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out.join("infeasibility.json")).unwrap())
                .unwrap();
        assert_eq!(report["error"], "no_candidates");
        assert_eq!(report["k"], 0);
        assert_eq!(report["exit_code"], 3);
    }

    #[test]
    fn scenario_errors_exit_with_two() {
        let tmp = tempfile::tempdir().unwrap();
        let scenario_file = tmp.path().join("scenario.json");
        fs::write(&scenario_file, "{\"not\": \"a scenario\"}").unwrap();
        let err = run_pipeline(&run_cfg(&tmp.path().join("out"), &scenario_file, StageSelection::Full))
            .unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn report_renders_summary_without_recomputation() {
        let tmp = tempfile::tempdir().unwrap();
        let scenario_file = tmp.path().join("scenario.json");
        save_scenario(&scenario_file, &open_field_scenario()).unwrap();
        let out = tmp.path().join("out");
        run_pipeline(&run_cfg(&out, &scenario_file, StageSelection::Full)).unwrap();
        let text = report_summary(&out).unwrap();
        assert!(text.contains("stage full"));
        assert!(text.contains("tube: energy"));
        assert!(text.contains("snr: min"));
        assert!(report_summary(tmp.path()).is_err());
    }
}
