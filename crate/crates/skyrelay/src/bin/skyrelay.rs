use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use skyrelay::pipeline::{
    infeasibility_report, report_summary, run_pipeline, RunConfig, StageSelection,
};
use skyrelay::world::{load_scenario, ScenarioError};

#[derive(Parser)]
#[command(
    name = "skyrelay",
    version,
    about = "Plan and evaluate a UAV-carried reflective relay link"
)]
struct Cli {
    /// Worker threads for the parallel phases (0 uses all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StageArg {
    /// Tube planning only.
    Stage1,
    /// Tube planning, slot refinement and link evaluation.
    Full,
}

#[derive(Subcommand)]
enum Command {
    /// Plan a trajectory for a scenario and write artifacts.
    Plan {
        /// Scenario JSON file.
        #[arg(long)]
        scenario: PathBuf,
        /// Override the scenario's random seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory for artifacts.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = StageArg::Full)]
        stage: StageArg,
        /// Also write trajectory_points.csv with per-slot geometry for
        /// plotting the flight path.
        #[arg(long)]
        emit_plots: bool,
        /// Cross-check the selected tube against an independent path oracle.
        #[arg(long)]
        oracle: bool,
    },
    /// Check a scenario file and list any violations.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Print the summary of a previous run without recomputing it.
    Report {
        /// Directory a plan run wrote its artifacts into.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn plan(
    scenario: PathBuf,
    seed: Option<u64>,
    out: PathBuf,
    stage: StageArg,
    emit_plots: bool,
    oracle: bool,
) -> u8 {
    let cfg = RunConfig {
        scenario_path: scenario,
        seed_override: seed,
        out_dir: out,
        stage: match stage {
            StageArg::Stage1 => StageSelection::Stage1,
            StageArg::Full => StageSelection::Full,
        },
        emit_plots,
        oracle,
    };
    match run_pipeline(&cfg) {
        Ok(artifacts) => {
            println!("wrote {}", artifacts.tube_path_file.display());
            if let Some(f) = &artifacts.trajectory_file {
                println!("wrote {}", f.display());
            }
            if let Some(f) = &artifacts.slots_csv_file {
                println!("wrote {}", f.display());
            }
            if let Some(f) = &artifacts.plot_points_file {
                println!("wrote {}", f.display());
            }
            println!("wrote {}", artifacts.summary_file.display());
            let s = &artifacts.summary;
            println!(
                "tube energy {:.4} over {} segments, {} valid paths",
                s.total_energy,
                s.segments.len(),
                s.valid_path_count
            );
            if let (Some(n), Some(min)) = (s.slot_count, s.min_snr) {
                println!("{n} slots, min snr {min:.4e}, warnings {}", s.speed_warning_count.unwrap_or(0));
            }
            0
        }
        Err(err) => {
            eprintln!("error: {err}");
            if let Some(report) = infeasibility_report(&err) {
                println!("{report}");
            }
            err.exit_code() as u8
        }
    }
}

fn validate(scenario: PathBuf) -> u8 {
    match load_scenario(&scenario) {
        Ok(s) => {
            println!(
                "ok: {} route points, {} base stations, {} boxes, {} reflecting elements",
                s.route.len(),
                s.base_stations.len(),
                s.world.boxes.len(),
                s.channel.m_elements
            );
            0
        }
        Err(ScenarioError::Invalid(violations)) => {
            for v in &violations {
                eprintln!("violation: {v}");
            }
            eprintln!("{} violation(s)", violations.len());
            2
        }
        Err(err) => {
            eprintln!("error: {err}");
            2
        }
    }
}

fn report(out: PathBuf) -> u8 {
    match report_summary(&out) {
        Ok(text) => {
            print!("{text}");
            0
        }
        Err(err) => {
            eprintln!("error: {err}");
            1
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        // Ignore failure: the global pool can already be initialized.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global();
    }
    let code = match cli.command {
        Command::Plan { scenario, seed, out, stage, emit_plots, oracle } => {
            plan(scenario, seed, out, stage, emit_plots, oracle)
        }
        Command::Validate { scenario } => validate(scenario),
        Command::Report { out } => report(out),
    };
    ExitCode::from(code)
}
