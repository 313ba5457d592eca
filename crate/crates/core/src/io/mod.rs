//! Concrete event sources and verdict sinks, plus the replay pipeline that
//! connects a source, a factory, a monitor and a sink.

mod binary;
mod csv_source;
mod ndjson;
mod replay;
mod sink;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::atomic::AtomicBool;
use std::sync::Arc;

pub use binary::{BinType, BinaryField, BinaryFrameSchema, BinarySource, Endian, SchemaError};
pub use csv_source::CsvSource;
pub use ndjson::{NdjsonDecoder, NdjsonListenSource, NdjsonStreamSource, UdpSource};
pub use replay::{Pipeline, PipelineOptions, Summary};
pub use sink::{open_sink, SinkSpec};

use crate::adapter::{EventSource, SourceSchema, TransportError};

/// Where records come from. Parsed from `csv:<path>`, `csv:-`,
/// `tcp-listen:<addr>`, `tcp-connect:<addr>`, `udp:<addr>`, `binary:<path>`
/// and `binary-tcp:<addr>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SourceKind {
    CsvFile(PathBuf),
    CsvStdin,
    NdjsonTcpListen(String),
    NdjsonTcpConnect(String),
    NdjsonUdp(String),
    BinaryFile(PathBuf),
    BinaryTcp(String),
}

impl SourceKind {
    pub fn is_binary(&self) -> bool {
        matches!(self, SourceKind::BinaryFile(_) | SourceKind::BinaryTcp(_))
    }

    /// NDJSON sources take their field declaration from the mapping config.
    pub fn is_self_describing(&self) -> bool {
        matches!(self, SourceKind::NdjsonTcpListen(_) | SourceKind::NdjsonTcpConnect(_) | SourceKind::NdjsonUdp(_))
    }
}

impl FromStr for SourceKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let (kind, arg) = s.split_once(':').ok_or_else(|| format!("source `{s}` must look like <kind>:<location>"))?;
        if arg.is_empty() {
            return Err(format!("source `{s}` is missing its location"));
        }
        Ok(match kind {
            "csv" if arg == "-" => SourceKind::CsvStdin,
            "csv" => SourceKind::CsvFile(arg.into()),
            "tcp-listen" => SourceKind::NdjsonTcpListen(arg.into()),
            "tcp-connect" => SourceKind::NdjsonTcpConnect(arg.into()),
            "udp" => SourceKind::NdjsonUdp(arg.into()),
            "binary" => SourceKind::BinaryFile(arg.into()),
            "binary-tcp" => SourceKind::BinaryTcp(arg.into()),
            _ => {
                return Err(format!(
                    "unknown source kind `{kind}`; expected csv, tcp-listen, tcp-connect, udp, binary or binary-tcp"
                ))
            }
        })
    }
}

impl fmt::Display for SourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SourceKind::CsvFile(p) => write!(f, "csv:{}", p.display()),
            SourceKind::CsvStdin => f.write_str("csv:-"),
            SourceKind::NdjsonTcpListen(a) => write!(f, "tcp-listen:{a}"),
            SourceKind::NdjsonTcpConnect(a) => write!(f, "tcp-connect:{a}"),
            SourceKind::NdjsonUdp(a) => write!(f, "udp:{a}"),
            SourceKind::BinaryFile(p) => write!(f, "binary:{}", p.display()),
            SourceKind::BinaryTcp(a) => write!(f, "binary-tcp:{a}"),
        }
    }
}

/// Opens a source. `declared` is the field declaration used by NDJSON
/// sources; binary sources require `frame`. Socket sources end when `stop` is set.
pub fn open_source(
    kind: &SourceKind,
    declared: &SourceSchema,
    frame: Option<&BinaryFrameSchema>,
    stop: Arc<AtomicBool>,
) -> Result<Box<dyn EventSource>, TransportError> {
    let need_frame = || frame.cloned().ok_or_else(|| TransportError("binary sources need a frame schema".into()));
    Ok(match kind {
        SourceKind::CsvFile(p) => Box::new(CsvSource::open(p)?),
        SourceKind::CsvStdin => Box::new(CsvSource::from_reader(std::io::stdin())?),
        SourceKind::NdjsonTcpListen(a) => Box::new(NdjsonListenSource::bind(a, declared.clone(), stop)?),
        SourceKind::NdjsonTcpConnect(a) => Box::new(NdjsonStreamSource::connect(a, declared.clone())?),
        SourceKind::NdjsonUdp(a) => Box::new(UdpSource::bind(a, declared.clone(), stop)?),
        SourceKind::BinaryFile(p) => Box::new(BinarySource::open(p, need_frame()?)?),
        SourceKind::BinaryTcp(a) => Box::new(BinarySource::connect(a, need_frame()?)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn source_strings_round_trip() {
        for s in ["csv:flight.csv", "csv:-", "tcp-listen:0.0.0.0:9000", "tcp-connect:127.0.0.1:9000", "udp:[::1]:7", "binary:f.bin", "binary-tcp:h:1"] {
            assert_eq!(s.parse::<SourceKind>().unwrap().to_string(), s);
        }
        assert!("mqtt:broker".parse::<SourceKind>().is_err());
        assert!("csv:".parse::<SourceKind>().is_err());
        assert!("flight.csv".parse::<SourceKind>().is_err());
    }

    #[test]
    fn binary_without_frame_is_rejected() {
        let stop = Arc::new(AtomicBool::new(false));
        let err = open_source(&SourceKind::BinaryFile("x.bin".into()), &SourceSchema::default(), None, stop).err().unwrap();
        assert!(err.0.contains("frame schema"));
    }
}
