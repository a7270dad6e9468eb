mod config;
mod error;
mod family;
mod output;
mod simulate;
mod trace;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::builder::PossibleValuesParser;
use clap::{Args, Parser, Subcommand};
use laplacian_growth::verify;

use crate::config::TraceConfig;
use crate::error::CliError;

/// Laplacian growth simulations, N=1 family sweeps and verification checks.
///
/// Exit codes: 0 success, 2 validation error, 3 numerical failure or failed check, 4 I/O error.
#[derive(Debug, Parser)]
#[command(name = "lgrowth", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a pump schedule and write snapshot contours and a manifest.
    Simulate(SimulateArgs),
    /// Sweep the N=1 family over a (mu, T) grid.
    Family(FamilyArgs),
    /// Solve one N=1 instance and write its curve and boundary contour.
    Trace(TraceArgs),
    /// Run a verification suite and print a JSON report.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// TOML config, or a manifest.json from an earlier run.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    snapshot_every: Option<f64>,
    #[arg(long)]
    moments: Option<usize>,
}

#[derive(Debug, Args)]
struct FamilyArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    p: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    q: Option<f64>,
    /// Also write the traced contour of every solved point.
    #[arg(long)]
    contours: bool,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Args)]
struct TraceArgs {
    /// Optional TOML config with a [trace] section; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    p: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    q: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    mu: Option<f64>,
    #[arg(long = "T", allow_hyphen_values = true)]
    t: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(default_value = "all", value_parser = PossibleValuesParser::new(verify::selector_names()))]
    selector: String,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn override_field<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn simulate(args: SimulateArgs) -> Result<(), CliError> {
    let mut config = config::load(&args.config)?;
    let cfg = config
        .simulate
        .as_mut()
        .ok_or_else(|| CliError::Invalid("missing [simulate] section".into()))?;
    override_field(&mut cfg.output, args.output);
    override_field(&mut cfg.step, args.step);
    override_field(&mut cfg.samples, args.samples);
    override_field(&mut cfg.moments, args.moments);
    if args.snapshot_every.is_some() {
        cfg.snapshot_every = args.snapshot_every;
    }
    simulate::run(&config)
}

fn family(args: FamilyArgs) -> Result<(), CliError> {
    let mut config = config::load(&args.config)?;
    let cfg = config.family.as_mut().ok_or_else(|| CliError::Invalid("missing [family] section".into()))?;
    override_field(&mut cfg.output, args.output);
    override_field(&mut cfg.p, args.p);
    override_field(&mut cfg.q, args.q);
    cfg.contours |= args.contours;
    if args.threads.is_some() {
        cfg.threads = args.threads;
    }
    family::run(&config)
}

fn trace(args: TraceArgs) -> Result<(), CliError> {
    let base = match &args.config {
        Some(path) => config::load(path)?.trace,
        None => None,
    };
    let cfg = match base {
        Some(mut cfg) => {
            override_field(&mut cfg.output, args.output);
            override_field(&mut cfg.p, args.p);
            override_field(&mut cfg.q, args.q);
            override_field(&mut cfg.mu, args.mu);
            override_field(&mut cfg.t, args.t);
            override_field(&mut cfg.samples, args.samples);
            cfg
        }
        None => {
            let need = |name: &str, v: Option<f64>| {
                v.ok_or_else(|| CliError::Invalid(format!("trace.{name}: required (flag --{name} or [trace] section)")))
            };
            TraceConfig {
                output: args.output.unwrap_or_else(config::default_trace_output),
                p: need("p", args.p)?,
                q: need("q", args.q)?,
                mu: need("mu", args.mu)?,
                t: need("T", args.t)?,
                samples: args.samples.unwrap_or_else(config::default_trace_samples),
            }
        }
    };
    trace::run(&cfg)
}

fn run_verify(args: VerifyArgs) -> Result<(), CliError> {
    let report = verify::run_selector(&args.selector)?;
    for c in &report.criteria {
        eprintln!("{}", c.summary());
    }
    match &args.output {
        Some(path) => output::write_json(path, &report)?,
        None => {
            println!("{}", serde_json::to_string_pretty(&report).map_err(laplacian_growth::Error::from)?);
        }
    }
    if report.passed {
        Ok(())
    } else {
        let failed: Vec<String> = report.criteria.iter().filter(|c| !c.passed).map(|c| c.id.to_string()).collect();
        Err(CliError::Failed(format!("failed checks: {}", failed.join(", "))))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Family(a) => family(a),
        Command::Trace(a) => trace(a),
        Command::Verify(a) => run_verify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
