use clap::{Parser, Subcommand};
use harness::config::Config;
use harness::experiments::{
    density_points, eq_summary, model_summary, predictions, recurrence_rows, run_criterion, Outcome, Setup,
};
use harness::report::{DatFile, Report};
use harness::{run_experiment, ExperimentId, HarnessError};
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "bulkscale", version, about = "Deformed bulk-scaling experiments")]
struct Cli {
    /// working precision in decimal digits (overrides the config)
    #[arg(long, global = true)]
    precision: Option<u32>,
    /// TOML configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// output directory for reports
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// worker threads
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Equilibrium measure summary and density samples
    Eqmeasure,
    /// Recurrence coefficients over the n-grid
    Recurrence,
    /// Scaled kernel against the limiting kernel (criterion A2)
    Kernel,
    /// Solve the model problem at the configured s
    ModelRhp,
    /// Predicted recurrence coefficients
    Predict,
    /// Run one acceptance criterion (A1..A9) and print PASS/FAIL
    Verify { id: String },
    /// Run an experiment (E1..E6) and write CSV/JSON/.dat reports
    Report {
        /// experiment id; defaults to the config's
        id: Option<String>,
        /// print the default config for the experiment and exit
        #[arg(long)]
        print_config: bool,
    },
}

fn config_for(cli: &Cli, default: ExperimentId) -> Result<Config, HarnessError> {
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default_for(default),
    };
    if let Some(d) = cli.precision {
        cfg.precision = d;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_json<T: Serialize>(v: &T) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializable"));
}

/// Report without acceptance criteria, for the single-stage commands.
fn bare_report(cfg: Config, out: Outcome) -> Report {
    Report {
        experiment: cfg.experiment,
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg,
        criteria: Vec::new(),
        rows: out.rows,
        dat: out.dat,
        runtimes: BTreeMap::new(),
    }
}

fn run(cli: &Cli) -> Result<bool, HarnessError> {
    let io = |e: std::io::Error| HarnessError::Stage { stage: "output".into(), msg: e.to_string() };
    match &cli.cmd {
        Cmd::Eqmeasure => {
            let cfg = config_for(cli, ExperimentId::E1)?;
            let setup = Setup::new(&cfg)?;
            print_json(&eq_summary(&setup));
            let d = DatFile {
                name: "density".into(),
                columns: ("x".into(), "phi_V".into()),
                points: density_points(&setup, 200),
            };
            std::fs::create_dir_all(&cli.out).map_err(io)?;
            std::fs::write(cli.out.join("density.dat"), d.render()).map_err(io)?;
            Ok(true)
        }
        Cmd::Recurrence => {
            let cfg = config_for(cli, ExperimentId::E2)?;
            let setup = Setup::new(&cfg)?;
            let rows = recurrence_rows(&setup)?;
            let rep = bare_report(cfg, Outcome { rows, dat: Vec::new() });
            print!("{}", rep.csv().map_err(|e| HarnessError::Stage { stage: "csv".into(), msg: e.to_string() })?);
            Ok(true)
        }
        Cmd::Kernel => {
            let cfg = config_for(cli, ExperimentId::E1)?;
            let setup = Setup::new(&cfg)?;
            let mut out = Outcome::default();
            let c = run_criterion("A2", &setup, &mut out)?;
            println!("{}", c.line());
            Ok(c.pass)
        }
        Cmd::ModelRhp => {
            let cfg = config_for(cli, ExperimentId::E4)?;
            print_json(&model_summary(&Setup::new(&cfg)?)?);
            Ok(true)
        }
        Cmd::Predict => {
            let cfg = config_for(cli, ExperimentId::E2)?;
            print_json(&predictions(&Setup::new(&cfg)?)?);
            Ok(true)
        }
        Cmd::Verify { id } => {
            let owner = ExperimentId::owning(id).ok_or_else(|| HarnessError::UnknownCriterion(id.clone()))?;
            let cfg = config_for(cli, owner)?;
            let setup = Setup::new(&cfg)?;
            let mut out = Outcome::default();
            let c = run_criterion(id, &setup, &mut out)?;
            println!("{}", c.line());
            Ok(c.pass)
        }
        Cmd::Report { id, print_config } => {
            let mut cfg = match id {
                Some(e) => {
                    let e: ExperimentId = e.parse()?;
                    let mut c = config_for(cli, e)?;
                    c.experiment = e;
                    c
                }
                None => config_for(cli, ExperimentId::E3)?,
            };
            if *print_config {
                print!("{}", cfg.to_toml()?);
                return Ok(true);
            }
            if let Some(d) = cli.precision {
                cfg.precision = d;
            }
            let rep = run_experiment(&cfg)?;
            for c in &rep.criteria {
                println!("{}", c.line());
            }
            for p in rep.write(&cli.out, cfg.output.dat).map_err(io)? {
                eprintln!("wrote {}", p.display());
            }
            Ok(rep.pass())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("warning: thread pool: {e}");
        }
    }
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
