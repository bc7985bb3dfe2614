use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Parser, Subcommand};
use cnls::config::{Config, Task};
use cnls::pipeline::Overrides;
use cnls::{run_to_dir, scenarios};

#[derive(Parser)]
#[command(name = "cnls", version, about = "Ground states of coupled nonlinear Schrödinger systems")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run scenarios from a config file and/or the bundled set.
    Run(RunArgs),
    /// List the bundled scenarios, or print them as TOML.
    Scenarios {
        #[arg(long)]
        toml: bool,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    /// TOML config (or a report.json to re-run its echoed config).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Bundled scenario by name; repeatable. `all` selects every bundled scenario.
    #[arg(long = "scenario")]
    scenario: Vec<String>,
    /// Replace the task of every selected scenario.
    #[arg(long, value_parser = parse_task)]
    task: Option<Task>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tol_split: Option<f64>,
    #[arg(long)]
    tol_g: Option<f64>,
    #[arg(long)]
    tol_e: Option<f64>,
    #[arg(long)]
    zero_tol_factor: Option<f64>,
}

fn parse_task(s: &str) -> Result<Task, String> {
    serde_json::from_value(serde_json::Value::String(s.into())).map_err(|_| format!("unknown task '{s}'"))
}

fn run(args: RunArgs) -> Result<i32> {
    let mut cfg = match &args.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    for name in &args.scenario {
        if name == "all" {
            cfg.scenarios.extend(scenarios::bundled_scenarios());
        } else {
            match scenarios::find(name) {
                Some(s) => cfg.scenarios.push(s),
                None => bail!("no bundled scenario named '{name}' (see `cnls scenarios`)"),
            }
        }
    }
    if let Some(t) = args.task {
        for s in &mut cfg.scenarios {
            s.task = t;
        }
    }
    cfg.validate()?;
    let ov = Overrides { tol_split: args.tol_split, tol_g: args.tol_g, tol_e: args.tol_e, zero_tol_factor: args.zero_tol_factor };
    let report = run_to_dir(cfg, args.seed, &ov, args.jobs, &args.out)?;
    for s in &report.scenarios {
        match &s.error {
            Some(e) => eprintln!("{}: error: {e}", s.name),
            None => eprintln!("{}: ok", s.name),
        }
    }
    eprintln!("report written to {}", args.out.join("report.json").display());
    Ok(report.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.cmd {
        Cmd::Scenarios { toml } => {
            if toml {
                print!("{}", scenarios::BUNDLED_TOML.trim_start());
            } else {
                for s in scenarios::bundled_scenarios() {
                    println!("{:28} {}", s.name, s.task.name());
                }
            }
            Ok(0)
        }
        Cmd::Run(a) => run(a),
    };
    match code {
        Ok(c) => ExitCode::from(c as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
