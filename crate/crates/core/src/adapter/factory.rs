//! Construction-time validated mapping from source records to monitor events.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::engine::Event;
use crate::time::Timestamp;
use crate::value::{Value, ValueType};

use super::{FieldShape, InputSchema, MappingConfig, RawRecord, RawValue, ScalarKind, SourceSchema};

/// Where record timestamps come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TimeMode {
    /// Read from the record's time field.
    Data,
    /// The arrival time supplied by the caller; record time is ignored.
    Realtime,
}

/// Index path into a record: top-level field, then nested children.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldPath(pub Vec<usize>);

impl FieldPath {
    fn get<'a>(&self, record: &'a RawRecord) -> Option<&'a RawValue> {
        let (first, rest) = self.0.split_first()?;
        let mut v = record.values.get(*first)?.as_ref()?;
        for &i in rest {
            match v {
                RawValue::Record(children) => v = children.get(i)?.as_ref()?,
                _ => return None,
            }
        }
        Some(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputMapping {
    pub stream: String,
    pub ty: ValueType,
    /// Flattened source field name.
    pub field: String,
    /// `None` only in factories built despite mapping problems.
    pub path: Option<FieldPath>,
    pub scale: Option<f64>,
}

/// The frozen, index-based mapping. `inputs[i]` feeds input stream `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldMapping {
    pub time_mode: TimeMode,
    pub time_field: String,
    pub time: Option<FieldPath>,
    pub inputs: Vec<InputMapping>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MappingProblemKind {
    /// An input stream has no source field.
    Unmatched,
    /// Two streams map to one field, or flattening produced a name twice.
    Duplicate,
    /// The declared field kind cannot hold the stream type, or a scale targets a non-float stream.
    TypeIncompatible,
    /// The config names a stream or record field that does not exist.
    UnknownName,
    /// Data time mode without a declared time field.
    NoTimeField,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MappingProblem {
    pub kind: MappingProblemKind,
    pub stream: Option<String>,
    pub field: String,
    pub detail: String,
}

impl fmt::Display for MappingProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.stream {
            Some(s) => write!(f, "input `{s}` (field `{}`): {}", self.field, self.detail),
            None => write!(f, "field `{}`: {}", self.field, self.detail),
        }
    }
}

/// Every problem found while validating a mapping.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct MappingError(pub Vec<MappingProblem>);

impl fmt::Display for MappingError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid field mapping:")?;
        for p in &self.0 {
            write!(f, "\n  {p}")?;
        }
        Ok(())
    }
}

impl MappingError {
    /// Streams reported as unmatched.
    pub fn unmatched(&self) -> Vec<&str> {
        self.0.iter().filter(|p| p.kind == MappingProblemKind::Unmatched).filter_map(|p| p.stream.as_deref()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConversionErrorKind {
    MissingField,
    TypeCoercion,
    TimeMissing,
    TimeRegression,
}

impl fmt::Display for ConversionErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConversionErrorKind::MissingField => "missing field",
            ConversionErrorKind::TypeCoercion => "type coercion",
            ConversionErrorKind::TimeMissing => "time missing",
            ConversionErrorKind::TimeRegression => "time regression",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{kind} in field `{field}`{}: {detail}", stream.as_ref().map(|s| format!(" for input `{s}`")).unwrap_or_default())]
pub struct ConversionError {
    pub kind: ConversionErrorKind,
    pub field: String,
    pub stream: Option<String>,
    pub detail: String,
}

/// Converts records into events using a frozen [`FieldMapping`].
#[derive(Debug, Clone)]
pub struct EventFactory {
    mapping: FieldMapping,
    last_time: Option<Timestamp>,
    skipped: u64,
}

struct FlatField {
    path: FieldPath,
    kind: ScalarKind,
}

fn flatten(schema: &SourceSchema, config: &MappingConfig, problems: &mut Vec<MappingProblem>) -> HashMap<String, FlatField> {
    fn walk(
        fields: &[super::SourceField],
        prefix: Option<&str>,
        path: &mut Vec<usize>,
        config: &MappingConfig,
        out: &mut HashMap<String, FlatField>,
        problems: &mut Vec<MappingProblem>,
    ) {
        for (i, f) in fields.iter().enumerate() {
            path.push(i);
            let name = match prefix {
                Some(p) => format!("{p}_{}", f.name),
                None => f.name.clone(),
            };
            match &f.shape {
                FieldShape::Scalar(kind) => {
                    if out.insert(name.clone(), FlatField { path: FieldPath(path.clone()), kind: *kind }).is_some() {
                        problems.push(MappingProblem {
                            kind: MappingProblemKind::Duplicate,
                            stream: None,
                            field: name,
                            detail: "declared twice after prefix flattening".into(),
                        });
                    }
                }
                FieldShape::Record(children) => {
                    let p = if prefix.is_none() { config.prefix_flatten.get(&f.name).cloned() } else { None }.unwrap_or(name);
                    walk(children, Some(&p), path, config, out, problems);
                }
            }
            path.pop();
        }
    }
    let mut out = HashMap::new();
    walk(&schema.fields, None, &mut Vec::new(), config, &mut out, problems);
    for key in config.prefix_flatten.keys() {
        if !schema.fields.iter().any(|f| &f.name == key && matches!(f.shape, FieldShape::Record(_))) {
            problems.push(MappingProblem {
                kind: MappingProblemKind::UnknownName,
                stream: None,
                field: key.clone(),
                detail: "prefix_flatten names no record field of the source".into(),
            });
        }
    }
    out
}

fn compatible(kind: ScalarKind, ty: ValueType) -> bool {
    match kind {
        ScalarKind::Dynamic => true,
        ScalarKind::Bool => ty == ValueType::Bool,
        ScalarKind::Int | ScalarKind::UInt => true,
        ScalarKind::Float => ty == ValueType::Float64,
    }
}

impl EventFactory {
    /// Validates the mapping; lists every problem on failure.
    pub fn new(schema: &SourceSchema, inputs: &InputSchema, config: &MappingConfig, mode: TimeMode) -> Result<EventFactory, MappingError> {
        let (factory, problems) = EventFactory::with_problems(schema, inputs, config, mode);
        if problems.is_empty() {
            Ok(factory)
        } else {
            Err(MappingError(problems))
        }
    }

    /// Builds a factory even when validation fails, leaving unmatched inputs
    /// without a source. Such inputs raise `MissingField` on every record.
    pub fn with_problems(
        schema: &SourceSchema,
        inputs: &InputSchema,
        config: &MappingConfig,
        mode: TimeMode,
    ) -> (EventFactory, Vec<MappingProblem>) {
        let mut problems = Vec::new();
        let flat = flatten(schema, config, &mut problems);
        let is_input = |s: &str| inputs.inputs.iter().any(|(n, _)| n == s);
        for stream in config.rename.keys().chain(config.scale.keys()) {
            if !is_input(stream) {
                problems.push(MappingProblem {
                    kind: MappingProblemKind::UnknownName,
                    stream: Some(stream.clone()),
                    field: config.field_for(stream).to_string(),
                    detail: "the mapping config names a stream the specification does not declare".into(),
                });
            }
        }
        let mut used: HashMap<&str, &str> = HashMap::new();
        let mut mapped = Vec::with_capacity(inputs.inputs.len());
        for (stream, ty) in &inputs.inputs {
            let field = config.field_for(stream);
            let mut problem = |kind, detail: String| {
                problems.push(MappingProblem { kind, stream: Some(stream.clone()), field: field.to_string(), detail })
            };
            let scale = config.scale.get(stream).copied();
            if scale.is_some() && *ty != ValueType::Float64 {
                problem(MappingProblemKind::TypeIncompatible, format!("scale applies to Float64 streams, not {ty}"));
            }
            let path = match flat.get(field) {
                None => {
                    problem(MappingProblemKind::Unmatched, "the source declares no such field".into());
                    None
                }
                Some(f) if !compatible(f.kind, *ty) => {
                    problem(MappingProblemKind::TypeIncompatible, format!("a {:?} field cannot feed a {ty} stream", f.kind));
                    None
                }
                Some(f) => {
                    if let Some(other) = used.insert(field, stream) {
                        problem(MappingProblemKind::Duplicate, format!("already mapped to input `{other}`"));
                    }
                    Some(f.path.clone())
                }
            };
            mapped.push(InputMapping { stream: stream.clone(), ty: *ty, field: field.to_string(), path, scale });
        }
        let time = flat.get(&config.time_field).map(|f| f.path.clone());
        if mode == TimeMode::Data && time.is_none() {
            problems.push(MappingProblem {
                kind: MappingProblemKind::NoTimeField,
                stream: None,
                field: config.time_field.clone(),
                detail: "data time mode needs a time field in the source".into(),
            });
        }
        let mapping = FieldMapping { time_mode: mode, time_field: config.time_field.clone(), time, inputs: mapped };
        (EventFactory::from_mapping(mapping), problems)
    }

    pub fn from_mapping(mapping: FieldMapping) -> EventFactory {
        EventFactory { mapping, last_time: None, skipped: 0 }
    }

    pub fn mapping(&self) -> &FieldMapping {
        &self.mapping
    }

    /// Records skipped because they carried no mapped field.
    pub fn skipped(&self) -> u64 {
        self.skipped
    }

    /// Converts one record. `Ok(None)` means skipped. `arrival` is used in
    /// realtime mode. A rejected record leaves the factory unchanged.
    pub fn create(&mut self, record: &RawRecord, arrival: Timestamp) -> Result<Option<Event>, ConversionError> {
        let m = &self.mapping;
        let mut values = Vec::with_capacity(m.inputs.len());
        for input in &m.inputs {
            let Some(path) = &input.path else {
                return Err(ConversionError {
                    kind: ConversionErrorKind::MissingField,
                    field: input.field.clone(),
                    stream: Some(input.stream.clone()),
                    detail: "the source does not provide this field".into(),
                });
            };
            let value = match path.get(record) {
                None => None,
                Some(raw) => {
                    let v = coerce(raw, input.ty).map_err(|detail| ConversionError {
                        kind: ConversionErrorKind::TypeCoercion,
                        field: input.field.clone(),
                        stream: Some(input.stream.clone()),
                        detail,
                    })?;
                    Some(match (v, input.scale) {
                        (Value::Float64(x), Some(s)) => Value::Float64(x * s),
                        (v, _) => v,
                    })
                }
            };
            values.push(value);
        }
        let time = match m.time_mode {
            TimeMode::Realtime => arrival,
            TimeMode::Data => {
                let time_err = |kind, detail: String| ConversionError { kind, field: m.time_field.clone(), stream: None, detail };
                let raw = m.time.as_ref().and_then(|p| p.get(record));
                let Some(raw) = raw else {
                    return Err(time_err(ConversionErrorKind::TimeMissing, "record has no timestamp".into()));
                };
                let t = parse_time(raw).map_err(|d| time_err(ConversionErrorKind::TypeCoercion, d))?;
                if let Some(last) = self.last_time {
                    if t < last {
                        return Err(time_err(ConversionErrorKind::TimeRegression, format!("{t}s is earlier than the previous record at {last}s")));
                    }
                }
                t
            }
        };
        if values.iter().all(Option::is_none) {
            self.skipped += 1;
            return Ok(None);
        }
        if m.time_mode == TimeMode::Data {
            self.last_time = Some(time);
        }
        Ok(Some(Event { time, values }))
    }
}

fn parse_time(raw: &RawValue) -> Result<Timestamp, String> {
    let bad = |what: String| format!("invalid timestamp {what}");
    match raw {
        RawValue::Text(s) => Timestamp::parse_seconds(s.trim()).map_err(|e| bad(e.0)),
        RawValue::Float(f) if *f >= 0.0 => Timestamp::from_secs_f64(*f).map_err(|e| bad(e.0)),
        RawValue::Int(i) if *i >= 0 => secs(*i as u64).ok_or_else(|| bad(i.to_string())),
        RawValue::UInt(u) => secs(*u).ok_or_else(|| bad(u.to_string())),
        other => Err(bad(other.to_string())),
    }
}

fn secs(s: u64) -> Option<Timestamp> {
    s.checked_mul(crate::time::NANOS_PER_SEC).map(Timestamp)
}

/// Strict coercion: no silent truncation or rounding.
pub(crate) fn coerce(raw: &RawValue, ty: ValueType) -> Result<Value, String> {
    let fail = || format!("cannot convert {raw} to {ty}");
    let int = |i: i128| Value::from_i128(i, ty).ok_or_else(|| format!("{i} is out of range for {ty}"));
    match (raw, ty) {
        (RawValue::Record(_), _) => Err(fail()),
        (RawValue::Text(s), _) => {
            let s = s.trim();
            match ty {
                ValueType::Float64 => s.parse::<f64>().map(Value::Float64).map_err(|_| fail()),
                ValueType::Bool => match s {
                    "true" | "1" => Ok(Value::Bool(true)),
                    "false" | "0" => Ok(Value::Bool(false)),
                    _ => Err(fail()),
                },
                _ => int(s.parse::<i128>().map_err(|_| fail())?),
            }
        }
        (RawValue::Bool(b), ValueType::Bool) => Ok(Value::Bool(*b)),
        (RawValue::Bool(_), _) => Err(fail()),
        (RawValue::Int(i), _) => integral(i128::from(*i), ty, raw),
        (RawValue::UInt(u), _) => integral(i128::from(*u), ty, raw),
        (RawValue::Float(f), ValueType::Float64) => Ok(Value::Float64(*f)),
        (RawValue::Float(_), ValueType::Bool) => Err(fail()),
        (RawValue::Float(f), _) => {
            if f.fract() != 0.0 || !f.is_finite() || f.abs() >= 2f64.powi(64) {
                return Err(format!("{f:?} is not an integer in range for {ty}"));
            }
            int(*f as i128)
        }
    }
}

fn integral(i: i128, ty: ValueType, raw: &RawValue) -> Result<Value, String> {
    match ty {
        ValueType::Bool => match i {
            0 => Ok(Value::Bool(false)),
            1 => Ok(Value::Bool(true)),
            _ => Err(format!("cannot convert {raw} to Bool")),
        },
        ValueType::Float64 => {
            let f = i as f64;
            if f as i128 != i {
                return Err(format!("{i} is not exactly representable as Float64"));
            }
            Ok(Value::Float64(f))
        }
        _ => Value::from_i128(i, ty).ok_or_else(|| format!("{i} is out of range for {ty}")),
    }
}

#[cfg(test)]
mod tests {
    use super::super::SourceField;
    use super::*;

    fn inputs(pairs: &[(&str, ValueType)]) -> InputSchema {
        InputSchema { inputs: pairs.iter().map(|&(n, t)| (n.to_string(), t)).collect() }
    }

    fn text(s: &str) -> Option<RawValue> {
        Some(RawValue::Text(s.to_string()))
    }

    #[test]
    fn coercion_table() {
        use ValueType::*;
        let t = |s: &str| RawValue::Text(s.into());
        assert_eq!(coerce(&t("350.0"), Float64), Ok(Value::Float64(350.0)));
        assert_eq!(coerce(&t(" 7 "), Int64), Ok(Value::Int64(7)));
        assert!(coerce(&t("3.0"), Int64).is_err());
        assert!(coerce(&t("300"), UInt8).is_err());
        assert!(coerce(&t("-1"), UInt64).is_err());
        assert_eq!(coerce(&t("1"), Bool), Ok(Value::Bool(true)));
        assert_eq!(coerce(&t("false"), Bool), Ok(Value::Bool(false)));
        assert!(coerce(&t("yes"), Bool).is_err());
        assert_eq!(coerce(&RawValue::Int(0), Bool), Ok(Value::Bool(false)));
        assert!(coerce(&RawValue::Int(2), Bool).is_err());
        assert_eq!(coerce(&RawValue::Float(500.0), Int64), Ok(Value::Int64(500)));
        assert!(coerce(&RawValue::Float(500.5), Int64).is_err());
        assert!(coerce(&RawValue::UInt(u64::MAX), Float64).is_err());
        assert_eq!(coerce(&RawValue::UInt(3), Float64), Ok(Value::Float64(3.0)));
        assert!(coerce(&RawValue::Bool(true), Int64).is_err());
    }

    #[test]
    fn converts_a_record() {
        let schema = SourceSchema::untyped(&["time", "altitude"]);
        let mut f = EventFactory::new(&schema, &inputs(&[("altitude", ValueType::Float64)]), &MappingConfig::default(), TimeMode::Data).unwrap();
        let e = f.create(&RawRecord { values: vec![text("12.5"), text("350.0")] }, Timestamp::ZERO).unwrap().unwrap();
        assert_eq!(e.time, Timestamp(12_500_000_000));
        assert_eq!(e.values, vec![Some(Value::Float64(350.0))]);
        assert_eq!(f.create(&RawRecord { values: vec![text("13"), None] }, Timestamp::ZERO), Ok(None));
        assert_eq!(f.skipped(), 1);
        let err = f.create(&RawRecord { values: vec![text("1"), text("1.0")] }, Timestamp::ZERO).unwrap_err();
        assert_eq!(err.kind, ConversionErrorKind::TimeRegression);
        let err = f.create(&RawRecord { values: vec![None, text("1.0")] }, Timestamp::ZERO).unwrap_err();
        assert_eq!(err.kind, ConversionErrorKind::TimeMissing);
    }

    #[test]
    fn superset_and_unmatched() {
        let schema = SourceSchema::untyped(&["GPS_lat", "GPS_lon", "time"]);
        let ins = inputs(&[("GPS_lat", ValueType::Float64), ("GPS_lon", ValueType::Float64)]);
        assert!(EventFactory::new(&schema, &ins, &MappingConfig::default(), TimeMode::Data).is_ok());
        let err = EventFactory::new(&SourceSchema::default(), &inputs(&[("altitude", ValueType::Float64)]), &MappingConfig::default(), TimeMode::Realtime)
            .unwrap_err();
        assert_eq!(err.unmatched(), ["altitude"]);
    }

    #[test]
    fn nested_records_flatten_with_prefix() {
        let schema = SourceSchema {
            fields: vec![
                SourceField::scalar("time", ScalarKind::Float),
                SourceField {
                    name: "GPS".into(),
                    shape: FieldShape::Record(vec![SourceField::scalar("lat", ScalarKind::Float), SourceField::scalar("lon", ScalarKind::Float)]),
                },
            ],
        };
        let ins = inputs(&[("GPS_lat", ValueType::Float64), ("GPS_lon", ValueType::Float64)]);
        let mut f = EventFactory::new(&schema, &ins, &MappingConfig::default(), TimeMode::Data).unwrap();
        let rec = RawRecord {
            values: vec![Some(RawValue::Float(1.0)), Some(RawValue::Record(vec![Some(RawValue::Float(49.1)), Some(RawValue::Float(8.2))]))],
        };
        let e = f.create(&rec, Timestamp::ZERO).unwrap().unwrap();
        assert_eq!(e.values, vec![Some(Value::Float64(49.1)), Some(Value::Float64(8.2))]);

        let mut cfg = MappingConfig::default();
        cfg.prefix_flatten.insert("GPS".into(), "pos".into());
        let err = EventFactory::new(&schema, &ins, &cfg, TimeMode::Data).unwrap_err();
        assert_eq!(err.unmatched(), ["GPS_lat", "GPS_lon"]);
        cfg.rename.insert("GPS_lat".into(), "pos_lat".into());
        cfg.rename.insert("GPS_lon".into(), "pos_lon".into());
        assert!(EventFactory::new(&schema, &ins, &cfg, TimeMode::Data).is_ok());
    }

    #[test]
    fn reports_every_problem() {
        let schema = SourceSchema {
            fields: vec![SourceField::scalar("a", ScalarKind::Float), SourceField::scalar("b", ScalarKind::Dynamic)],
        };
        let mut cfg = MappingConfig::default();
        cfg.rename.insert("y".into(), "b".into());
        cfg.rename.insert("ghost".into(), "a".into());
        cfg.scale.insert("z".into(), 2.0);
        let ins = inputs(&[("a", ValueType::Bool), ("b", ValueType::Int64), ("y", ValueType::Int64), ("z", ValueType::Int64)]);
        let err = EventFactory::new(&schema, &ins, &cfg, TimeMode::Data).unwrap_err();
        let kinds: Vec<MappingProblemKind> = err.0.iter().map(|p| p.kind).collect();
        use MappingProblemKind::*;
        assert_eq!(kinds, vec![UnknownName, TypeIncompatible, Duplicate, TypeIncompatible, Unmatched, NoTimeField]);
    }

    #[test]
    fn scale_and_realtime() {
        let schema = SourceSchema::untyped(&["alt_ft"]);
        let mut cfg = MappingConfig::default();
        cfg.rename.insert("altitude".into(), "alt_ft".into());
        cfg.scale.insert("altitude".into(), 0.5);
        let mut f = EventFactory::new(&schema, &inputs(&[("altitude", ValueType::Float64)]), &cfg, TimeMode::Realtime).unwrap();
        let e = f.create(&RawRecord { values: vec![text("3.0")] }, Timestamp(42)).unwrap().unwrap();
        assert_eq!(e.time, Timestamp(42));
        assert_eq!(e.values, vec![Some(Value::Float64(1.5))]);
    }

    #[test]
    fn lenient_factory_reports_missing_fields_at_runtime() {
        let schema = SourceSchema::untyped(&["time", "a"]);
        let ins = inputs(&[("a", ValueType::Int64), ("b", ValueType::Int64)]);
        let (mut f, problems) = EventFactory::with_problems(&schema, &ins, &MappingConfig::default(), TimeMode::Data);
        assert_eq!(problems.len(), 1);
        let err = f.create(&RawRecord { values: vec![text("0"), text("1")] }, Timestamp::ZERO).unwrap_err();
        assert_eq!(err.kind, ConversionErrorKind::MissingField);
        assert_eq!(err.stream.as_deref(), Some("b"));
    }

    #[test]
    fn frozen_mapping_round_trips() {
        let schema = SourceSchema::untyped(&["time", "x"]);
        let f = EventFactory::new(&schema, &inputs(&[("x", ValueType::UInt8)]), &MappingConfig::default(), TimeMode::Data).unwrap();
        let json = serde_json::to_string(f.mapping()).unwrap();
        let restored: FieldMapping = serde_json::from_str(&json).unwrap();
        assert_eq!(&restored, f.mapping());
    }

    fn raw() -> impl proptest::strategy::Strategy<Value = Option<RawValue>> {
        use proptest::prelude::*;
        let scalar = prop_oneof![
            any::<bool>().prop_map(RawValue::Bool),
            any::<i64>().prop_map(RawValue::Int),
            any::<u64>().prop_map(RawValue::UInt),
            any::<f64>().prop_map(RawValue::Float),
            "[-+0-9.eE a-z]{0,8}".prop_map(RawValue::Text),
            (0i64..400).prop_map(RawValue::Int),
        ];
        let value = scalar.prop_recursive(1, 4, 2, |inner| proptest::collection::vec(proptest::option::of(inner), 0..3).prop_map(RawValue::Record));
        proptest::option::of(value)
    }

    proptest::proptest! {
        #[test]
        fn conversion_is_total_and_survives_restoring(
            records in proptest::collection::vec(proptest::collection::vec(raw(), 4), 1..30),
            realtime in proptest::bool::ANY,
        ) {
            use ValueType::*;
            let schema = SourceSchema::untyped(&["time", "a", "b", "c"]);
            let ins = inputs(&[("a", Float64), ("b", UInt8), ("c", Bool)]);
            let mode = if realtime { TimeMode::Realtime } else { TimeMode::Data };
            let (mut live, _) = EventFactory::with_problems(&schema, &ins, &MappingConfig::default(), mode);
            let restored: FieldMapping = serde_json::from_str(&serde_json::to_string(live.mapping()).unwrap()).unwrap();
            let mut twin = EventFactory::from_mapping(restored);
            for (k, values) in records.into_iter().enumerate() {
                let rec = RawRecord { values };
                let arrival = Timestamp(k as u64);
                let a = live.create(&rec, arrival);
                proptest::prop_assert_eq!(&a, &twin.create(&rec, arrival));
                if let Ok(Some(e)) = a {
                    proptest::prop_assert_eq!(e.values.len(), 3);
                }
            }
            proptest::prop_assert_eq!(live.skipped(), twin.skipped());
        }
    }
}
