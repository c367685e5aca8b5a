use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use pdmplab::config::{load_config, Overrides, Scenario};
use pdmplab::runner::{error_kind, run_scenario};

#[derive(Parser)]
#[command(name = "pdmplab", version, about = "Piecewise deterministic Markov process experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario configuration (TOML, or JSON with a .json extension).
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: u64,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    replicas: Option<u64>,
    #[arg(long)]
    horizon: Option<f64>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    config: PathBuf,
    /// Scenario to validate against when the file does not name one.
    #[arg(long)]
    scenario: Option<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Moments of the switched Malthus model.
    Malthus(RunArgs),
    /// Lyapunov exponent scan of a planar switched linear system.
    Planar(RunArgs),
    /// Coupled trajectories against the contraction bound.
    Coupling(RunArgs),
    /// Branching population: many-to-one and uniform sampling checks.
    Branching(RunArgs),
    /// Integrate-and-fire averaging study.
    Ifire(RunArgs),
    /// Gene expression concentration profile.
    Gene(RunArgs),
    /// Noise versus mean expression scan.
    Cvscan(RunArgs),
    /// Check a configuration file without running it.
    Validate(ValidateArgs),
}

fn fail(code: u8, body: serde_json::Value) -> ExitCode {
    eprintln!("{}", json!({ "status": "error", "error": body }));
    ExitCode::from(code)
}

fn configure_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("PDMPLAB_THREADS") else { return Ok(()) };
    let n: usize = v.trim().parse().map_err(|_| format!("PDMPLAB_THREADS must be a positive integer, got {v:?}"))?;
    if n == 0 {
        return Err("PDMPLAB_THREADS must be at least 1".into());
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (scenario, args) = match cli.cmd {
        Cmd::Validate(v) => {
            let expected = match v.scenario.as_deref().map(|s| (s, Scenario::from_name(s))) {
                Some((s, None)) => {
                    return fail(2, json!({ "kind": "config", "message": format!("unknown scenario {s:?}") }))
                }
                Some((_, sc)) => sc,
                None => None,
            };
            return match load_config(&v.config, expected, Overrides::default()) {
                Ok(c) => {
                    println!("{}", json!({ "status": "ok", "config": c.echo() }));
                    ExitCode::SUCCESS
                }
                Err(e) => fail(2, json!({ "kind": "config", "message": e.to_string(), "issues": e.issues })),
            };
        }
        Cmd::Malthus(a) => (Scenario::Malthus, a),
        Cmd::Planar(a) => (Scenario::Planar, a),
        Cmd::Coupling(a) => (Scenario::Coupling, a),
        Cmd::Branching(a) => (Scenario::Branching, a),
        Cmd::Ifire(a) => (Scenario::Ifire, a),
        Cmd::Gene(a) => (Scenario::Gene, a),
        Cmd::Cvscan(a) => (Scenario::Cvscan, a),
    };
    if let Err(m) = configure_threads() {
        return fail(2, json!({ "kind": "config", "message": m }));
    }
    let overrides = Overrides { seed: args.seed, replicas: args.replicas, horizon: args.horizon };
    let cfg = match load_config(&args.config, Some(scenario), overrides) {
        Ok(c) => c,
        Err(e) => {
            return fail(
                2,
                json!({ "kind": "config", "scenario": scenario.name(), "message": e.to_string(), "issues": e.issues }),
            )
        }
    };
    match run_scenario(&cfg, &args.out) {
        Ok(m) => {
            println!("{}", json!({ "status": "ok", "scenario": scenario.name(), "outputs": m.outputs }));
            ExitCode::SUCCESS
        }
        Err(e) => fail(1, json!({ "kind": error_kind(&e), "scenario": scenario.name(), "message": e.to_string() })),
    }
}
