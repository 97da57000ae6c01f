use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use fogmarl::harness::{replay, run_experiment, HarnessError};
use fogmarl::scenario::{Arm, Scenario};

#[derive(Parser)]
#[command(name = "fogmarl", version, about = "Fog load-balancing experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run every (arm, seed) of a scenario and write the results.
    Run {
        scenario: PathBuf,
        /// Comma-separated subset of the scenario's seeds.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        /// Comma-separated arms, e.g. DRL-realtime,Fastest-interval,Random.
        #[arg(long, value_delimiter = ',')]
        arms: Option<Vec<Arm>>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Check a scenario and print its diagnostics.
    Validate { scenario: PathBuf },
    /// Write the topology a scenario generates for one seed as JSON.
    ExportTopology {
        scenario: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute the summary of a persisted evaluation log.
    Replay { event_log: PathBuf },
    /// Print the default full-scale scenario.
    Defaults,
}

fn load(path: &PathBuf) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Scenario::from_toml(&text).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.cmd {
        Cmd::Run {
            scenario,
            seeds,
            arms,
            out,
        } => {
            let mut s = load(&scenario)?;
            if let Some(seeds) = seeds {
                s.seeds = seeds;
            }
            if let Some(arms) = arms {
                s.arms = arms;
            }
            for w in s.validate().warnings {
                eprintln!("warning: {w}");
            }
            match run_experiment(&s) {
                Ok(exp) => {
                    exp.write(&out)?;
                    for (arm, rows) in exp.aggregates() {
                        let wait = rows.iter().find(|(n, _)| *n == "avg_wait").map(|(_, iv)| iv);
                        if let Some(iv) = wait {
                            println!("{arm:<18} avg_wait {:.4} ± {:.4}", iv.mean, iv.half_width);
                        }
                    }
                    println!("wrote {}", out.display());
                    Ok(ExitCode::SUCCESS)
                }
                Err(HarnessError::ConfigInvalid(errs)) => {
                    for e in errs {
                        eprintln!("error: {e}");
                    }
                    Ok(ExitCode::from(2))
                }
                Err(e) => Err(e.into()),
            }
        }
        Cmd::Validate { scenario } => {
            let d = load(&scenario)?.validate();
            for w in &d.warnings {
                println!("warning: {w}");
            }
            for e in &d.errors {
                println!("error: {e}");
            }
            if d.is_ok() {
                println!("ok");
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(2))
            }
        }
        Cmd::ExportTopology { scenario, seed, out } => {
            let topo = load(&scenario)?
                .topology_for(seed)
                .map_err(anyhow::Error::msg)?;
            let json = topo.to_json();
            match out {
                Some(p) => std::fs::write(&p, json).with_context(|| format!("writing {}", p.display()))?,
                None => println!("{json}"),
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Replay { event_log } => {
            let s = replay(&event_log)?;
            for (name, v) in s.metrics() {
                println!("{name},{v}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Defaults => {
            print!("{}", Scenario::default().to_toml());
            Ok(ExitCode::SUCCESS)
        }
    }
}
