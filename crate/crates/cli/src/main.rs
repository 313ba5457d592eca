//! `rtmon`: static check, replay and live monitoring, corpus verification.
//!
//! Exit codes: 0 success, 1 specification, transport or monitor failure,
//! 2 a trigger fired under `--fail-on-trigger`, 64 usage or configuration error.

mod corpus_cmd;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_TRIGGERED: u8 = 2;
pub const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(name = "rtmon", version, about = "Stream-based runtime monitor")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and analyze a specification and print its analysis table.
    Check {
        spec: PathBuf,
    },
    /// Monitor a source until it ends or the process is interrupted.
    Run(run::RunArgs),
    /// Inspect and verify the bundled specification corpus.
    Corpus {
        #[command(subcommand)]
        command: corpus_cmd::CorpusCommand,
    },
    /// Generate a geofence specification from a polygon file.
    Geofence(GeofenceArgs),
}

#[derive(Args)]
struct GeofenceArgs {
    /// One `lat, lon` pair per line.
    polygon: PathBuf,
    /// Write the specification here instead of stdout.
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long, default_value = "lat")]
    lat: String,
    #[arg(long, default_value = "lon")]
    lon: String,
    #[arg(long, default_value = "vel_east")]
    vel_x: String,
    #[arg(long, default_value = "vel_north")]
    vel_y: String,
    /// Treat coordinates as plane x = lon, y = lat instead of projecting.
    #[arg(long)]
    planar: bool,
    /// Prediction horizon in seconds.
    #[arg(long, default_value_t = 10.0)]
    horizon: f64,
    /// Sample the position at this rate instead of on every position event.
    #[arg(long)]
    sample_rate: Option<u32>,
}

/// A failure carrying its exit code; the message goes to stderr.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Failure {
        Failure { code: EXIT_USAGE, message: message.into() }
    }

    pub fn failed(message: impl Into<String>) -> Failure {
        Failure { code: EXIT_FAILURE, message: message.into() }
    }
}

fn check(spec: &PathBuf) -> Result<u8, Failure> {
    let text = std::fs::read_to_string(spec).map_err(|e| Failure::usage(format!("cannot read {}: {e}", spec.display())))?;
    let typed = run::analyze(&text, spec)?;
    print!("{typed}");
    Ok(0)
}

fn geofence(args: &GeofenceArgs) -> Result<u8, Failure> {
    use rtmon::corpus::geofence::{generate_geofence_spec, GeofenceOptions, GeofencePolygon, Projection};
    let text = std::fs::read_to_string(&args.polygon)
        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", args.polygon.display())))?;
    let polygon = GeofencePolygon::parse(&text).map_err(|e| Failure::failed(format!("{}: {e}", args.polygon.display())))?;
    if !(args.horizon.is_finite() && args.horizon > 0.0) {
        return Err(Failure::usage("--horizon must be a positive number of seconds"));
    }
    let options = GeofenceOptions {
        lat: args.lat.clone(),
        lon: args.lon.clone(),
        vel_x: args.vel_x.clone(),
        vel_y: args.vel_y.clone(),
        projection: if args.planar { Projection::Planar } else { Projection::Equirectangular },
        horizon: args.horizon,
        sample_rate_hz: args.sample_rate,
    };
    let spec = generate_geofence_spec(&polygon, &options);
    // names clashing with generated streams surface here rather than at run time
    run::analyze(&spec, &args.polygon)?;
    match &args.output {
        Some(path) => std::fs::write(path, spec).map_err(|e| Failure::failed(format!("cannot write {}: {e}", path.display())))?,
        None => print!("{spec}"),
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Check { spec } => check(spec),
        Command::Run(args) => run::run(args),
        Command::Corpus { command } => corpus_cmd::corpus(command),
        Command::Geofence(args) => geofence(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
