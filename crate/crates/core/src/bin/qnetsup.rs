//! `qnetsup list` and `qnetsup run <scenario|all>`.

use clap::{Parser, Subcommand};
use qnetsup::network::topology::TopologySpec;
use qnetsup::scenarios::{reports_json, run_all, run_scenario, Codewords, RunConfig, SCENARIOS};
use qnetsup::Error;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "qnetsup", version, about = "Superposed requests on entanglement-based quantum networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the available scenarios.
    List,
    /// Run one scenario, or `all`, and emit a JSON report.
    Run {
        scenario: String,
        /// Seed; falls back to QNETSUP_SEED, then 0.
        #[arg(long)]
        seed: Option<u64>,
        /// Sample measurement outcomes instead of taking the most likely one.
        #[arg(long)]
        sample: bool,
        /// Aggregate K sampled repetitions against the deterministic run.
        #[arg(long, value_name = "K")]
        reps: Option<usize>,
        #[arg(long, value_name = "FILE.json")]
        out: Option<std::path::PathBuf>,
        /// Network description for the `custom` scenario.
        #[arg(long, value_name = "FILE.json")]
        topology: Option<std::path::PathBuf>,
        /// Random draws per sampled sweep.
        #[arg(long, default_value_t = 20)]
        draws: usize,
        /// Receivers in the multiple-destination scenario.
        #[arg(long, default_value_t = 3)]
        destinations: usize,
        /// Codeword pair for the encoding scenario, e.g. `000,111`.
        #[arg(long)]
        codewords: Option<String>,
    },
}

fn seed(flag: Option<u64>) -> Result<u64, Error> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var("QNETSUP_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("QNETSUP_SEED `{v}` is not an unsigned integer"))),
        Err(_) => Ok(0),
    }
}

fn run(command: Command) -> Result<bool, Error> {
    match command {
        Command::List => {
            for (name, about, _) in SCENARIOS {
                println!("{name:<22} {about}");
            }
            println!("{:<22} user topology and branch programs (needs --topology)", "custom");
            Ok(true)
        }
        Command::Run {
            scenario,
            seed: s,
            sample,
            reps,
            out,
            topology,
            draws,
            destinations,
            codewords,
        } => {
            let topology = match topology {
                Some(p) => {
                    let text = std::fs::read_to_string(&p)
                        .map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
                    Some(TopologySpec::from_json(&text)?)
                }
                None => None,
            };
            let codewords = match codewords {
                Some(t) => Codewords::parse(&t)?,
                None => Codewords::repetition(),
            };
            if destinations < 2 {
                return Err(Error::Config("--destinations must be at least 2".into()));
            }
            let reps = reps.unwrap_or(1);
            if reps == 0 {
                return Err(Error::Config("--reps must be positive".into()));
            }
            let cfg = RunConfig {
                seed: seed(s)?,
                sample: sample || reps > 1,
                draws,
                destinations,
                codewords,
                topology,
                rep: 0,
            };
            let reports = if scenario == "all" {
                run_all(&cfg, reps)?
            } else {
                vec![run_scenario(&scenario, &cfg, reps)?]
            };
            for r in &reports {
                let status = if r.passed() { "pass" } else { "FAIL" };
                eprintln!("{:<22} {status}  ({:.0} ms)", r.scenario, r.wall_time_ms);
                for c in r.failures() {
                    eprintln!("    failed: {}", c.name);
                }
            }
            let json = reports_json(&reports);
            match out {
                Some(p) => std::fs::write(&p, json)
                    .map_err(|e| Error::Config(format!("cannot write {}: {e}", p.display())))?,
                None => print!("{json}"),
            }
            Ok(reports.iter().all(|r| r.passed()))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
