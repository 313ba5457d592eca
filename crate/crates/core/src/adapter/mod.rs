//! Event conversion and verdict conversion between a system and a monitor.
//!
//! An [`EventSource`] acquires [`RawRecord`]s positioned by its declared
//! [`SourceSchema`]. An [`EventFactory`] validates, once, that the schema
//! covers every input stream and freezes an index-based [`FieldMapping`];
//! per record it only follows indices and coerces values. A
//! [`VerdictEncoder`] turns verdicts into sink payloads.

mod config;
mod factory;
mod verdict;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::analysis::TypedSpecification;
use crate::value::ValueType;

pub use config::{ConfigError, MappingConfig};
pub use factory::{
    ConversionError, ConversionErrorKind, EventFactory, FieldMapping, FieldPath, InputMapping, MappingError, MappingProblem,
    MappingProblemKind, TimeMode,
};
pub use verdict::{Health, VerdictEncoder, VerdictFormat};

/// The input streams of a specification with their types.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputSchema {
    pub inputs: Vec<(String, ValueType)>,
}

impl InputSchema {
    pub fn of(spec: &TypedSpecification) -> InputSchema {
        InputSchema { inputs: spec.inputs().iter().map(|s| (s.name.clone(), s.ty)).collect() }
    }
}

/// Type information a source may declare for a scalar field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScalarKind {
    /// Untyped: text or any self-describing scalar, checked on conversion.
    Dynamic,
    Bool,
    Int,
    UInt,
    Float,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FieldShape {
    Scalar(ScalarKind),
    /// A nested record; flattened to `<prefix>_<child>` names.
    Record(Vec<SourceField>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceField {
    pub name: String,
    pub shape: FieldShape,
}

impl SourceField {
    pub fn scalar(name: impl Into<String>, kind: ScalarKind) -> SourceField {
        SourceField { name: name.into(), shape: FieldShape::Scalar(kind) }
    }
}

/// The fields a source promises to deliver, in record order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SourceSchema {
    pub fields: Vec<SourceField>,
}

impl SourceSchema {
    /// Flat untyped fields, as delivered by CSV.
    pub fn untyped<S: AsRef<str>>(names: &[S]) -> SourceSchema {
        SourceSchema { fields: names.iter().map(|n| SourceField::scalar(n.as_ref(), ScalarKind::Dynamic)).collect() }
    }

    /// Parses dotted paths (`GPS.lat`) into nested untyped fields.
    pub fn from_paths<S: AsRef<str>>(paths: &[S]) -> SourceSchema {
        let mut schema = SourceSchema::default();
        for p in paths {
            let mut fields = &mut schema.fields;
            let parts: Vec<&str> = p.as_ref().split('.').collect();
            for (k, part) in parts.iter().enumerate() {
                let last = k + 1 == parts.len();
                let idx = match fields.iter().position(|f| f.name == *part) {
                    Some(i) => i,
                    None => {
                        let shape = if last { FieldShape::Scalar(ScalarKind::Dynamic) } else { FieldShape::Record(Vec::new()) };
                        fields.push(SourceField { name: part.to_string(), shape });
                        fields.len() - 1
                    }
                };
                if last {
                    break;
                }
                if let FieldShape::Scalar(_) = fields[idx].shape {
                    fields[idx].shape = FieldShape::Record(Vec::new());
                }
                let FieldShape::Record(children) = &mut fields[idx].shape else { unreachable!() };
                fields = children;
            }
        }
        schema
    }
}

/// A field value as delivered by a source, before coercion.
#[derive(Debug, Clone, PartialEq)]
pub enum RawValue {
    Text(String),
    Bool(bool),
    Int(i64),
    UInt(u64),
    Float(f64),
    /// Children positioned as in the declaring [`FieldShape::Record`].
    Record(Vec<Option<RawValue>>),
}

impl fmt::Display for RawValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RawValue::Text(s) => write!(f, "{s:?}"),
            RawValue::Bool(b) => write!(f, "{b}"),
            RawValue::Int(i) => write!(f, "{i}"),
            RawValue::UInt(u) => write!(f, "{u}"),
            RawValue::Float(x) => write!(f, "{x:?}"),
            RawValue::Record(_) => f.write_str("a record"),
        }
    }
}

/// One record; `values[i]` belongs to `schema.fields[i]`, `None` when absent.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRecord {
    pub values: Vec<Option<RawValue>>,
}

/// What a source yields besides end-of-stream.
#[derive(Debug, Clone, PartialEq)]
pub enum SourceItem {
    Record(RawRecord),
    /// A record that could not be read; the source continues after it.
    Malformed(String),
    /// A recoverable anomaly, such as skipped bytes or a truncated final frame.
    Warning(String),
}

/// A transport failure, distinct from end-of-stream.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("transport failure: {0}")]
pub struct TransportError(pub String);

impl From<std::io::Error> for TransportError {
    fn from(e: std::io::Error) -> TransportError {
        TransportError(e.to_string())
    }
}

/// Data acquisition. `next_item` blocks until an item, end-of-stream (`None`)
/// or a transport failure.
pub trait EventSource: Send {
    fn schema(&self) -> &SourceSchema;
    fn next_item(&mut self) -> Result<Option<SourceItem>, TransportError>;
}
