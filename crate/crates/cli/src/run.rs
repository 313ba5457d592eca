use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use clap::{Args, ValueEnum};
use rtmon::adapter::{InputSchema, MappingConfig, SourceSchema, TimeMode, VerdictFormat};
use rtmon::analysis::TypedSpecification;
use rtmon::io::{open_sink, open_source, BinaryFrameSchema, Pipeline, PipelineOptions, SinkSpec, SourceKind};

use crate::{Failure, EXIT_FAILURE, EXIT_TRIGGERED};

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TimeArg {
    Data,
    Realtime,
}

#[derive(Args)]
pub struct RunArgs {
    spec: PathBuf,
    /// csv:<path>, csv:-, tcp-listen:<addr>, tcp-connect:<addr>, udp:<addr>,
    /// binary:<path> or binary-tcp:<addr>.
    #[arg(long, value_parser = |s: &str| s.parse::<SourceKind>())]
    source: SourceKind,
    /// Take timestamps from the records or from the arrival clock.
    #[arg(long, value_enum, default_value = "data")]
    time: TimeArg,
    /// Data time mode only: replay speed factor; 0 replays without delay.
    #[arg(long)]
    speed: Option<f64>,
    /// stdout, file:<path> or tcp:<addr>.
    #[arg(long, default_value = "stdout", value_parser = |s: &str| s.parse::<SinkSpec>())]
    sink: SinkSpec,
    /// text, ndjson or csv.
    #[arg(long, default_value = "text", value_parser = |s: &str| s.parse::<VerdictFormat>())]
    format: VerdictFormat,
    /// Mapping config: time field, declared fields, renames, prefixes, scales.
    #[arg(long)]
    mapping: Option<PathBuf>,
    /// Frame layout for binary sources.
    #[arg(long)]
    frame_schema: Option<PathBuf>,
    /// Exit with code 2 if any trigger fired.
    #[arg(long)]
    fail_on_trigger: bool,
    /// Suppress the summary.
    #[arg(short, long, conflicts_with = "verbose")]
    quiet: bool,
    /// Also report the frozen field mapping.
    #[arg(short, long)]
    verbose: bool,
}

pub fn analyze(text: &str, origin: &Path) -> Result<TypedSpecification, Failure> {
    let ast = rtmon::lang::parse(text).map_err(|e| Failure::failed(format!("{}:{e}", origin.display())))?;
    rtmon::analysis::analyze(&ast).map_err(|errors| {
        let lines: Vec<String> = errors.0.iter().map(|e| format!("{}:{e}", origin.display())).collect();
        Failure::failed(lines.join("\n"))
    })
}

pub fn run(args: &RunArgs) -> Result<u8, Failure> {
    let time_mode = match args.time {
        TimeArg::Data => TimeMode::Data,
        TimeArg::Realtime => TimeMode::Realtime,
    };
    let speed = match (args.speed, time_mode) {
        (Some(_), TimeMode::Realtime) => return Err(Failure::usage("--speed applies to --time data only")),
        (Some(s), _) if !(s.is_finite() && s >= 0.0) => return Err(Failure::usage("--speed must be a non-negative number")),
        (s, _) => s.unwrap_or(0.0),
    };
    let frame = match (&args.frame_schema, args.source.is_binary()) {
        (Some(p), true) => Some(BinaryFrameSchema::load(p).map_err(|e| Failure::usage(e.to_string()))?),
        (None, true) => return Err(Failure::usage("binary sources need --frame-schema")),
        (Some(_), false) => return Err(Failure::usage("--frame-schema applies to binary sources only")),
        (None, false) => None,
    };
    let config = match &args.mapping {
        Some(p) => MappingConfig::load(p).map_err(|e| Failure::usage(e.to_string()))?,
        None => MappingConfig::default(),
    };
    let text = std::fs::read_to_string(&args.spec).map_err(|e| Failure::usage(format!("cannot read {}: {e}", args.spec.display())))?;
    let spec = analyze(&text, &args.spec)?;

    let inputs = InputSchema::of(&spec);
    let names: Vec<&str> = inputs.inputs.iter().map(|(n, _)| n.as_str()).collect();
    let declared = SourceSchema::from_paths(&config.declared_paths(&names));
    let stop = Arc::new(AtomicBool::new(false));
    {
        let stop = stop.clone();
        // a second interrupt while shutting down falls through to the default
        let _ = ctrlc::set_handler(move || {
            if stop.swap(true, Ordering::SeqCst) {
                std::process::exit(130);
            }
        });
    }
    let source = open_source(&args.source, &declared, frame.as_ref(), stop.clone()).map_err(|e| Failure::failed(e.to_string()))?;
    let options = PipelineOptions { time_mode, speed, format: args.format, stop, ..PipelineOptions::default() };
    let pipeline = Pipeline::new(spec, source.schema(), &config, options).map_err(|e| Failure::usage(e.to_string()))?;
    if args.verbose {
        eprintln!("source: {}", args.source);
        eprintln!("sink: {}", args.sink);
        for m in &pipeline.mapping().inputs {
            let scale = m.scale.map(|s| format!(" x {s}")).unwrap_or_default();
            eprintln!("input {} <- field {}{scale}", m.stream, m.field);
        }
    }
    let mut sink = open_sink(&args.sink).map_err(|e| Failure::failed(format!("cannot open sink {}: {e}", args.sink)))?;
    let summary = match pipeline.run(source, &mut sink) {
        Ok(summary) => summary,
        // a reader such as `head` closing stdout ends the run quietly
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe && matches!(args.sink, SinkSpec::Stdout) => return Ok(0),
        Err(e) => return Err(Failure::failed(format!("sink {}: {e}", args.sink))),
    };
    if !args.quiet {
        eprintln!("{summary}");
    }
    Ok(if summary.transport_error.is_some() || summary.fault.is_some() {
        EXIT_FAILURE
    } else if args.fail_on_trigger && summary.triggers_fired > 0 {
        EXIT_TRIGGERED
    } else {
        0
    })
}
