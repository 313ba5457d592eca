//! Executable UAV specifications with fixture traces and golden verdict
//! files.
//!
//! Each [`CorpusCase`] embeds its specification, CSV fixtures and the NDJSON
//! verdicts a data-mode replay of each fixture produces.
//!
//! ```
//! let case = rtmon::corpus::case("rcc").unwrap();
//! let fixture = case.fixture("gap").unwrap();
//! let (verdicts, summary) = rtmon::corpus::replay(case.spec, fixture.trace).unwrap();
//! assert_eq!(verdicts, fixture.golden);
//! assert_eq!(summary.triggers_fired, 2);
//! ```

pub mod geofence;
pub mod traces;

use std::io::Cursor;

use crate::adapter::{EventSource, MappingConfig, VerdictFormat};
use crate::io::{CsvSource, Pipeline, PipelineOptions, Summary};

#[derive(Debug, Clone, Copy)]
pub struct Fixture {
    pub name: &'static str,
    /// CSV with a `time` column in decimal seconds.
    pub trace: &'static str,
    /// NDJSON verdicts of a data-mode replay.
    pub golden: &'static str,
}

#[derive(Debug, Clone, Copy)]
pub struct CorpusCase {
    pub name: &'static str,
    pub title: &'static str,
    pub spec: &'static str,
    pub fixtures: &'static [Fixture],
}

impl CorpusCase {
    pub fn fixture(&self, name: &str) -> Option<&'static Fixture> {
        self.fixtures.iter().find(|f| f.name == name)
    }
}

macro_rules! fixtures {
    ($case:literal: $($name:literal),+ $(,)?) => {
        &[$(Fixture {
            name: $name,
            trace: include_str!(concat!("../../corpus/", $case, "/", $name, ".csv")),
            golden: include_str!(concat!("../../corpus/", $case, "/", $name, ".ndjson")),
        }),+]
    };
}

/// The polygon behind the geofence case.
pub const GEOFENCE_POLYGON: &str = include_str!("../../corpus/geofence/fence.txt");

pub static CASES: &[CorpusCase] = &[
    CorpusCase {
        name: "altitude",
        title: "average altitude over a sliding minute",
        spec: include_str!("../../corpus/altitude/spec.lola"),
        fixtures: fixtures!("altitude": "constant_400", "climb"),
    },
    CorpusCase {
        name: "fpd",
        title: "flight-phase detection",
        spec: include_str!("../../corpus/fpd/spec.lola"),
        fixtures: fixtures!("fpd": "idle", "ground_run_up", "async_rates", "no_phase", "short_flight"),
    },
    CorpusCase {
        name: "rcc",
        title: "remote-control computer: sequence numbers and fallback watchdog",
        spec: include_str!("../../corpus/rcc/spec.lola"),
        fixtures: fixtures!("rcc": "clean_increment", "gap", "fast_fallback", "slow_fallback", "fallback_at_200ms", "both_disconnected"),
    },
    CorpusCase {
        name: "daa",
        title: "detect-and-avoid: ADS-B cross-validation and sensor staleness",
        spec: include_str!("../../corpus/daa/spec.lola"),
        fixtures: fixtures!("daa": "matching", "divergence", "stale"),
    },
    CorpusCase {
        name: "geofence",
        title: "geofence breach detection and prediction",
        spec: include_str!("../../corpus/geofence/spec.lola"),
        fixtures: fixtures!("geofence": "hover", "eastward_breach"),
    },
];

pub fn case(name: &str) -> Option<&'static CorpusCase> {
    CASES.iter().find(|c| c.name == name)
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{0}")]
    Parse(#[from] crate::lang::ParseError),
    #[error("{0}")]
    Analysis(#[from] crate::analysis::AnalysisErrors),
    #[error("{0}")]
    Mapping(#[from] crate::adapter::MappingError),
    #[error("{0}")]
    Transport(#[from] crate::adapter::TransportError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

/// Replays a CSV trace in data mode with default mapping and returns the NDJSON verdicts.
pub fn replay(spec: &str, trace: &str) -> Result<(String, Summary), CorpusError> {
    let spec = crate::analysis::analyze(&crate::lang::parse(spec)?)?;
    let source = CsvSource::from_reader(Cursor::new(trace.as_bytes().to_vec()))?;
    let options = PipelineOptions { format: VerdictFormat::Ndjson, ..PipelineOptions::default() };
    let pipeline = Pipeline::new(spec, source.schema(), &MappingConfig::default(), options)?;
    let mut out = Vec::new();
    let summary = pipeline.run(Box::new(source), &mut out)?;
    Ok((String::from_utf8(out).expect("verdicts are utf-8"), summary))
}
