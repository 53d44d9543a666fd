//! `cislunar`: command-line front end for the mission design library.
//!
//! Every subcommand writes into `<out>/<subcommand>/`, where `<out>` is `--out`,
//! `$CISLUNAR_RUN_DIR` or `runs`. Exit status: 0 success, 1 domain failure, 2 usage error.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};

use cislunar_core::astro::Body;
use cislunar_core::constants::SECONDS_PER_DAY;
use cislunar_core::ephemeris::EphemerisTable;
use cislunar_core::io::{
    echo_scenario, events_csv, parse_scenario_file, report, trajectory_csv, RunDir, ScenarioError,
};
use cislunar_core::mission::{
    classify_outcome, impulsive_table, milestone_report, run_capture, run_mission, run_pre_transition, run_trade_study,
    run_uncontrolled_with, CircularizationStop, MissionConfig, MissionError, OutcomeClass,
};
use cislunar_core::Trajectory;

#[derive(Parser, Debug)]
#[command(
    name = "cislunar",
    version,
    about = "Low-thrust lunar capture and circularization design"
)]
struct Cli {
    /// Scenario file (`section.key = value` lines); defaults apply to anything not set.
    #[arg(long, global = true, value_name = "FILE")]
    scenario: Option<PathBuf>,
    /// Optimizer multi-start seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Use the fast tolerance profile everywhere.
    #[arg(long, global = true)]
    fast: bool,
    /// Output root; each run writes to `<DIR>/<subcommand>`.
    #[arg(long, global = true, value_name = "DIR", env = "CISLUNAR_RUN_DIR")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Ballistic propagation of the separation state.
    Propagate {
        #[arg(long, default_value_t = 30.0, value_name = "DAYS")]
        until: f64,
    },
    /// Impulsive insertion ΔV at the uncontrolled flyby perilune.
    Plan {
        /// Target eccentricity; repeat for several.
        #[arg(long = "ecc", value_name = "E", default_values_t = [0.0, 0.2, 0.4, 0.6, 0.8])]
        ecc: Vec<f64>,
    },
    /// Phase 1 and the optimized Phase 2 capture.
    Optimize,
    /// Full mission through circularization.
    Circularize {
        #[arg(long, value_name = "N")]
        passes: Option<usize>,
    },
    /// Capture-constraint trade study.
    Trade,
    /// Baseline, impulsive table, full mission and milestones.
    Report,
    /// Samples the built-in ephemeris into a table file.
    ExportEphemeris {
        #[arg(long, default_value_t = 2.0, value_name = "Y")]
        years: f64,
    },
}

enum Failure {
    Usage(anyhow::Error),
    Domain(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Domain(e)
    }
}

impl From<MissionError> for Failure {
    fn from(e: MissionError) -> Self {
        Failure::Domain(e.into())
    }
}

impl From<cislunar_core::io::IoError> for Failure {
    fn from(e: cislunar_core::io::IoError) -> Self {
        Failure::Domain(e.into())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Domain(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn load_config(cli: &Cli) -> Result<MissionConfig, Failure> {
    let mut cfg = match &cli.scenario {
        Some(path) => parse_scenario_file(path).map_err(|e| match e {
            ScenarioError::Read { .. } => Failure::Usage(e.into()),
            e => Failure::Usage(anyhow!("{}: {e}", path.display())),
        })?,
        None => MissionConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.optimizer.seed = seed;
    }
    if cli.fast {
        cfg.forces.rel_tol = cfg.forces.inner_rel_tol;
    }
    if let Command::Circularize { passes: Some(n) } = cli.command {
        cfg.phases.passes = n;
    }
    if let Command::Propagate { until } = cli.command {
        cfg.phases.uncontrolled_days = until;
    }
    cfg.validate().map_err(|e| Failure::Usage(e.into()))?;
    Ok(cfg)
}

fn write_tracks(
    dir: &RunDir,
    traj: &Trajectory,
    cfg: &MissionConfig,
    forces: &cislunar_core::ForceConfig,
) -> Result<(), Failure> {
    let t0 = cfg.initial_state.epoch;
    dir.write("trajectory.csv", &trajectory_csv(traj, forces, t0, cfg.output.step_s)?)?;
    dir.write("events.csv", &events_csv(traj, forces, t0)?)?;
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cfg = load_config(&cli)?;
    let name = match cli.command {
        Command::Propagate { .. } => "propagate",
        Command::Plan { .. } => "plan",
        Command::Optimize => "optimize",
        Command::Circularize { .. } => "circularize",
        Command::Trade => "trade",
        Command::Report => "report",
        Command::ExportEphemeris { .. } => "export-ephemeris",
    };
    let dir = RunDir::create(cli.out.as_deref(), name)?;
    dir.write("scenario.txt", &echo_scenario(&cfg))?;
    let clock = Instant::now();

    match &cli.command {
        Command::Propagate { .. } => {
            let forces = cfg.base_forces()?;
            let u = run_uncontrolled_with(&cfg, &forces)?;
            write_tracks(&dir, &u.trajectory, &cfg, &forces)?;
            let text = report::uncontrolled_text(&u);
            dir.write("report.txt", &text)?;
            print!("{text}");
        }
        Command::Plan { ecc } => {
            let forces = cfg.base_forces()?;
            let u = run_uncontrolled_with(&cfg, &forces)?;
            let table = impulsive_table(&cfg, &u, &forces, ecc, 6000.0)?;
            let text = report::impulsive_text(&table);
            dir.write("report.txt", &text)?;
            print!("{text}");
        }
        Command::Optimize => {
            let forces = cfg.mission_forces()?;
            let mut traj = run_pre_transition(&cfg, &forces)?;
            eprintln!("optimizing capture ({} starts)", cfg.optimizer.starts);
            let cap = run_capture(&cfg, traj.final_state(), &forces, cfg.optimizer.constraints, |_, _| {})?;
            traj.append(cap.trajectory.clone());
            write_tracks(&dir, &traj, &cfg, &forces)?;
            dir.write("solution.txt", &report::solution_text(&cap, &cfg))?;
            dir.write("iterations.log", &report::iterations_log(&cap))?;
            let m = milestone_report(&traj, &cfg, &forces)?;
            let text = format!(
                "{}\nruntime_s = {:.1}\n",
                report::milestone_text(&m),
                clock.elapsed().as_secs_f64()
            );
            dir.write("report.txt", &text)?;
            print!("{}", report::solution_text(&cap, &cfg));
            if !cap.feasible() {
                return Err(Failure::Domain(anyhow!(
                    "no feasible capture design ({})",
                    cap.outcome.solution.status
                )));
            }
        }
        Command::Circularize { .. } | Command::Report => {
            let full = matches!(cli.command, Command::Report);
            let forces = cfg.mission_forces()?;
            let mut text = String::new();
            if full {
                let base = cfg.base_forces()?;
                let u = run_uncontrolled_with(&cfg, &base)?;
                text.push_str(&report::uncontrolled_text(&u));
                let table = impulsive_table(&cfg, &u, &base, &[0.0, 0.2, 0.4, 0.6, 0.8], 6000.0)?;
                text.push('\n');
                text.push_str(&report::impulsive_text(&table));
                text.push('\n');
            }
            eprintln!(
                "running mission ({} starts, {} passes)",
                cfg.optimizer.starts, cfg.phases.passes
            );
            let m = run_mission(&cfg, true, |_, _| {})?;
            write_tracks(&dir, &m.trajectory, &cfg, &forces)?;
            dir.write("solution.txt", &report::solution_text(&m.capture, &cfg))?;
            dir.write("iterations.log", &report::iterations_log(&m.capture))?;
            let c = m.circularization.as_ref().expect("circularization requested");
            text.push_str(&report::circularization_text(c));
            let outcome = classify_outcome(&m.trajectory, &forces, &cfg.tolerances(), cfg.phases.classify_days)?;
            text.push('\n');
            text.push_str(&report::outcome_text(&outcome));
            text.push('\n');
            text.push_str(&report::milestone_text(&milestone_report(
                &m.trajectory,
                &cfg,
                &forces,
            )?));
            text.push_str(&format!("\nruntime_s = {:.1}\n", clock.elapsed().as_secs_f64()));
            dir.write("report.txt", &text)?;
            print!("{text}");
            if c.stop == CircularizationStop::Impacted || outcome.class == OutcomeClass::Impacted {
                return Err(Failure::Domain(anyhow!("spacecraft impacted the Moon")));
            }
            if outcome.class == OutcomeClass::Escaped {
                return Err(Failure::Domain(anyhow!("spacecraft escaped the Moon")));
            }
        }
        Command::Trade => {
            eprintln!("running 7 trade cells");
            let cells = run_trade_study(&cfg)?;
            let table = report::trade_csv(&cells);
            dir.write("trade.csv", &table)?;
            let text = format!(
                "{}\nruntime_s = {:.1}\n",
                report::trade_text(&cells),
                clock.elapsed().as_secs_f64()
            );
            dir.write("report.txt", &text)?;
            print!("{table}");
        }
        Command::ExportEphemeris { years } => {
            if years.is_nan() || *years <= 0.0 {
                return Err(Failure::Usage(anyhow!("--years must be positive")));
            }
            let forces = cfg.base_forces()?;
            let start = cfg.initial_state.epoch;
            let end = start + years * 365.25 * SECONDS_PER_DAY;
            let table = EphemerisTable::sample(
                forces.ephemeris.as_ref(),
                &[Body::Moon, Body::Sun, Body::Jupiter],
                start,
                end,
                cfg.output.step_s,
            )
            .context("sampling ephemeris")?;
            let path = dir.file("ephemeris.txt");
            table.write(&path).context("writing ephemeris table")?;
            println!("{}", path.display());
        }
    }
    eprintln!("wrote {}", dir.path().display());
    Ok(())
}
