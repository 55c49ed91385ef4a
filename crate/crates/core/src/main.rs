use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Parser, Subcommand};
use serde_json::json;

use chemoflow::driver::{self, ExitStatus, RunConfig, RunReport, Simulation};
use chemoflow::exponents;
use chemoflow::Error;

#[derive(Parser)]
#[command(name = "chemoflow", version, about = "Regularized chemotaxis-fluid simulator and estimate auditor")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation and audit it.
    Run {
        config: PathBuf,
        /// Resume from this checkpoint instead of the initial data.
        #[arg(long)]
        restart: Option<PathBuf>,
        /// Override the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Short-horizon invariant suite, no output files.
    Verify { config: PathBuf },
    /// Exponent bookkeeping for the bootstrap argument.
    #[command(group(ArgGroup::new("mode").required(true).args(["p", "delta"])))]
    Exponents {
        #[arg(long, default_value_t = 1.0)]
        m0: f64,
        #[arg(long)]
        p: Option<f64>,
        /// Target exponent for the interpolation table (defaults to the range midpoint).
        #[arg(long, requires = "p")]
        m: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Runs the configuration once per ε value.
    SweepEps {
        config: PathBuf,
        #[arg(long, num_args = 1.., required = true)]
        values: Vec<f64>,
    },
}

fn print_report(report: &RunReport) {
    println!("{}", serde_json::to_string_pretty(report).unwrap_or_default());
    if let Some(e) = &report.error {
        eprintln!("error: {e}");
    }
}

fn status(s: ExitStatus) -> ExitCode {
    ExitCode::from(s.code() as u8)
}

fn config_failure(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    status(ExitStatus::from_error(e))
}

fn exponents_cmd(m0: f64, p: Option<f64>, m: Option<f64>, delta: Option<f64>) -> Result<serde_json::Value, Error> {
    if let Some(delta) = delta {
        let s = exponents::bootstrap_schedule(delta)?;
        return Ok(json!({ "bootstrap": s, "limit": s.limit() }));
    }
    let p = p.expect("clap enforces p or delta");
    let range = exponents::admissible_m_range(m0, p)?;
    let m = m.unwrap_or(0.5 * (range.lower + range.upper));
    let table = exponents::bootstrap_exponents_unchecked(m0, m, p)?;
    let gradient_interpolation = exponents::gradient_interpolation(p).ok();
    Ok(json!({
        "p": p,
        "p_prime": exponents::p_prime(p)?,
        "m0": m0,
        "admissible_m_range": range,
        "m": m,
        "interpolation": table,
        "gradient_interpolation": gradient_interpolation,
        "max_integrability": exponents::max_integrability(p),
    }))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, restart, out } => {
            let mut cfg = match RunConfig::load(&config) {
                Ok(c) => c,
                Err(e) => return config_failure(&e),
            };
            if let Some(out) = out {
                cfg.output.dir = out;
            }
            let report = match restart {
                None => driver::run(cfg, true),
                Some(path) => {
                    let resumed = Simulation::load_checkpoint(&path).and_then(|mut cp| {
                        cp.config.output = cfg.output.clone();
                        let mut sim = Simulation::from_checkpoint(cp, Some(cfg.time.t_end))?;
                        sim.enable_output()?;
                        Ok(sim)
                    });
                    match resumed {
                        Ok(mut sim) => driver::finish(&mut sim),
                        Err(e) => return config_failure(&e),
                    }
                }
            };
            print_report(&report);
            status(report.status)
        }
        Command::Verify { config } => match RunConfig::load(&config) {
            Ok(cfg) => {
                let report = driver::verify(cfg);
                print_report(&report);
                status(report.status)
            }
            Err(e) => config_failure(&e),
        },
        Command::Exponents { m0, p, m, delta } => match exponents_cmd(m0, p, m, delta) {
            Ok(v) => {
                println!("{}", serde_json::to_string_pretty(&v).unwrap_or_default());
                ExitCode::SUCCESS
            }
            Err(e) => config_failure(&e),
        },
        Command::SweepEps { config, values } => {
            let cfg = match RunConfig::load(&config) {
                Ok(c) => c,
                Err(e) => return config_failure(&e),
            };
            let entries = driver::sweep_eps(&cfg, &values, true);
            println!("{}", serde_json::to_string_pretty(&entries).unwrap_or_default());
            let worst = entries.iter().map(|e| e.report.status.code()).max().unwrap_or(0);
            ExitCode::from(worst as u8)
        }
    }
}
