use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use elastocap_sim::config::Config;
use elastocap_sim::{Outcome, ProbeField, SimError, Simulation, Snapshot};

#[derive(Parser)]
#[command(name = "elastocap", version, about = "Droplets on soft substrates: diffuse-interface flow coupled to a hyperelastic solid")]
struct Cli {
    /// error, warn, info, debug or trace
    #[arg(long, global = true, default_value = "info")]
    verbosity: log::LevelFilter,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output.directory`.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Stop after this many steps.
        #[arg(long)]
        max_steps: Option<usize>,
        /// Continue from a checkpoint of the same configuration.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Check a configuration without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print a field value from a snapshot.
    Probe {
        #[arg(long)]
        snapshot: PathBuf,
        /// Point `x,y` in μm, current configuration.
        #[arg(long, value_parser = parse_point)]
        at: [f64; 2],
        #[arg(long, value_enum)]
        field: Field,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Field {
    P,
    Phi,
    U,
}

fn parse_point(s: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected x,y but got `{s}`"));
    }
    let x = parts[0].trim().parse::<f64>().map_err(|e| e.to_string())?;
    let y = parts[1].trim().parse::<f64>().map_err(|e| e.to_string())?;
    Ok([x, y])
}

fn run(command: Command) -> Result<(), SimError> {
    match command {
        Command::Validate { config } => {
            let cfg = Config::load(&config)?;
            let d = cfg.validate()?;
            let sc = elastocap_sim::Scenario::build(cfg)?;
            println!(
                "ok: {} fluid cells, {} unknowns, {:.2} cells per ε, {} steps",
                sc.spaces.mesh.num_cells(),
                sc.spaces.n_dofs(),
                d.cells_per_epsilon,
                sc.config.total_steps()
            );
            Ok(())
        }
        Command::Run { config, output, max_steps, resume } => {
            let mut cfg = Config::load(&config)?;
            if let Some(dir) = output {
                cfg.output.directory = dir;
            }
            let dir = cfg.output.directory.clone();
            let mut sim = match &resume {
                Some(cp) => Simulation::resume(cfg, cp)?,
                None => Simulation::new(cfg)?,
            };
            sim.attach_output(&dir)?;
            let outcome = sim.run(max_steps)?;
            let last = sim.record.last().expect("initial row");
            let how = match outcome {
                Outcome::Finished => "reached t_end",
                Outcome::Steady => "reached steady state",
                Outcome::StepLimit => "stopped at the step limit",
            };
            println!(
                "{how} at step {} (t = {} ms): Δp = {:.3} Pa, energy {:.9e}, phase drift {:.3e}",
                last.step,
                last.time_ms,
                last.pressure_probe,
                last.free_energy,
                sim.phase_drift()
            );
            Ok(())
        }
        Command::Probe { snapshot, at, field } => {
            let snap = Snapshot::read(&snapshot)?;
            let f = match field {
                Field::P => ProbeField::Pressure,
                Field::Phi => ProbeField::Phi,
                Field::U => ProbeField::Velocity,
            };
            let v = snap
                .probe(at, f)
                .ok_or_else(|| SimError::Format(format!("point ({}, {}) lies outside the fluid mesh", at[0], at[1])))?;
            let text: Vec<String> = v.iter().map(|x| format!("{x:.10e}")).collect();
            println!("{}", text.join(" "));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    env_logger::Builder::new().filter_level(cli.verbosity).format_timestamp(None).init();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
