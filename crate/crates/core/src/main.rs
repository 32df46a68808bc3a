use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lienf::scenario::{list_scenarios, run, write_outputs, Overrides, Scenario};

#[derive(Parser)]
#[command(name = "lienf", version, about = "Run Lie groupoid verification scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file, or a built-in scenario by name.
    Run {
        config: String,
        /// Tolerance for every check.
        #[arg(long)]
        tol: Option<f64>,
        /// Sample budget for every check.
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Directory for report.json and the defect tables.
        #[arg(long, default_value = "lienf-out")]
        out: PathBuf,
    },
    /// List built-in scenarios whose name contains the filter.
    List {
        #[arg(default_value = "")]
        filter: String,
    },
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::List { filter } => {
            for name in list_scenarios(&filter) {
                println!("{name}");
            }
            ExitCode::SUCCESS
        }
        Command::Run {
            config,
            tol,
            samples,
            seed,
            out,
        } => {
            let path = PathBuf::from(&config);
            let scenario = if path.exists() { Scenario::load(&path) } else { Scenario::builtin(&config) };
            let result = scenario.and_then(|sc| {
                let r = run(&sc, &Overrides { tol, samples, seed })?;
                write_outputs(&r, &out)?;
                Ok(r)
            });
            match result {
                Ok(r) => {
                    for o in &r.checks {
                        let verdict = if o.report.pass { "pass" } else { "FAIL" };
                        println!("{:<14} {verdict}  tol {:.1e}, {} samples", o.check.name(), o.tol, o.samples);
                        let parts = if o.report.components.is_empty() { std::slice::from_ref(&o.report) } else { &o.report.components[..] };
                        for c in parts {
                            println!("  {:<24} {:.3e}  (tol {:.1e})", c.op, c.max_defect, c.tol);
                            for n in c.notes.iter().filter(|_| !c.pass) {
                                println!("    {n}");
                            }
                        }
                    }
                    println!("{}: {}  ({:.1} s, hash {})", r.scenario, if r.pass { "pass" } else { "FAIL" }, r.wall_time_s, &r.hash[..16]);
                    if r.pass {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(1)
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            }
        }
    }
}
