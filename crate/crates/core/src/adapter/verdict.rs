//! Verdict conversion into sink payloads. All formats are deterministic.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::analysis::TypedSpecification;
use crate::engine::Verdict;
use crate::time::Timestamp;
use crate::value::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerdictFormat {
    /// One line per fired trigger or warning.
    Text,
    /// One JSON object per verdict.
    Ndjson,
    /// One row per verdict, outputs in declaration order.
    Csv,
}

impl FromStr for VerdictFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "text" => Ok(VerdictFormat::Text),
            "ndjson" => Ok(VerdictFormat::Ndjson),
            "csv" => Ok(VerdictFormat::Csv),
            _ => Err(format!("unknown format `{s}`; expected text, ndjson or csv")),
        }
    }
}

/// A monitor-health notice: dropped records, transport failures, faults.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Health {
    pub time: Option<Timestamp>,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct VerdictEncoder {
    format: VerdictFormat,
    outputs: Vec<String>,
}

fn json_str(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

fn json_value(v: &Value) -> String {
    match v {
        Value::Float64(f) if f.is_nan() => "\"NaN\"".into(),
        Value::Float64(f) if f.is_infinite() => if *f > 0.0 { "\"inf\"" } else { "\"-inf\"" }.into(),
        other => other.to_string(),
    }
}

fn csv_line(fields: &[String]) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(fields).expect("writing to memory");
    String::from_utf8(w.into_inner().expect("flushing to memory")).expect("csv of utf-8 is utf-8")
}

impl VerdictEncoder {
    pub fn new(spec: &TypedSpecification, format: VerdictFormat) -> VerdictEncoder {
        VerdictEncoder { format, outputs: spec.output_streams().iter().map(|s| s.name.clone()).collect() }
    }

    pub fn format(&self) -> VerdictFormat {
        self.format
    }

    /// Emitted once before the first verdict.
    pub fn header(&self) -> String {
        match self.format {
            VerdictFormat::Csv => {
                let mut cols = vec!["time".to_string(), "kind".to_string()];
                cols.extend(self.outputs.iter().cloned());
                cols.push("triggers".into());
                cols.push("warnings".into());
                csv_line(&cols)
            }
            _ => String::new(),
        }
    }

    /// The payload for one verdict, newline-terminated; empty when the format shows nothing.
    pub fn encode(&self, v: &Verdict) -> String {
        match self.format {
            VerdictFormat::Ndjson => {
                let mut s = format!("{{\"time\":{},\"kind\":\"{}\",\"triggers\":[", v.time, v.kind);
                for (i, t) in v.triggers.iter().enumerate() {
                    if i > 0 {
                        s.push(',');
                    }
                    s.push_str(&json_str(&t.message));
                }
                s.push_str("],\"updates\":{");
                for (i, (name, value)) in v.updates.iter().enumerate() {
                    if i > 0 {
                        s.push(',');
                    }
                    let _ = write!(s, "{}:{}", json_str(name), json_value(value));
                }
                s.push('}');
                if !v.warnings.is_empty() {
                    let ws: Vec<String> = v.warnings.iter().map(|w| json_str(w)).collect();
                    let _ = write!(s, ",\"warnings\":[{}]", ws.join(","));
                }
                s.push_str("}\n");
                s
            }
            VerdictFormat::Text => {
                let mut s = String::new();
                for t in &v.triggers {
                    let _ = writeln!(s, "[{}] {}", v.time, t.message);
                }
                for w in &v.warnings {
                    let _ = writeln!(s, "[{}] warning: {w}", v.time);
                }
                s
            }
            VerdictFormat::Csv => {
                let mut row = vec![v.time.to_string(), v.kind.to_string()];
                for name in &self.outputs {
                    row.push(v.update(name).map(|x| x.to_string()).unwrap_or_default());
                }
                row.push(v.triggers.iter().map(|t| &*t.message).collect::<Vec<_>>().join(";"));
                row.push(v.warnings.join(";"));
                csv_line(&row)
            }
        }
    }

    pub fn encode_health(&self, h: &Health) -> String {
        let time = h.time.map(|t| t.to_string());
        match self.format {
            VerdictFormat::Ndjson => {
                format!("{{\"time\":{},\"kind\":\"health\",\"error\":{}}}\n", time.as_deref().unwrap_or("null"), json_str(&h.message))
            }
            VerdictFormat::Text => format!("[{}] health: {}\n", time.as_deref().unwrap_or("-"), h.message),
            VerdictFormat::Csv => {
                let mut row = vec![time.unwrap_or_default(), "health".to_string()];
                row.extend(self.outputs.iter().map(|_| String::new()));
                row.push(String::new());
                row.push(h.message.clone());
                csv_line(&row)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::engine::{CycleKind, FiredTrigger};

    fn spec() -> TypedSpecification {
        crate::analysis::analyze(
            &crate::lang::parse(
                "input altitude: Float
                 output average_alt @1Hz := altitude.aggregate(over: 60s, using: avg).defaults(to: 0.0)
                 trigger average_alt > 300.0",
            )
            .unwrap(),
        )
        .unwrap()
    }

    fn verdict() -> Verdict {
        Verdict {
            time: Timestamp::from_secs(1),
            kind: CycleKind::Deadline,
            triggers: vec![FiredTrigger { index: 0, message: Arc::from("average_alt > 300.0") }],
            updates: vec![(Arc::from("average_alt"), Value::Float64(400.0))],
            warnings: vec![],
        }
    }

    #[test]
    fn ndjson_shape() {
        let e = VerdictEncoder::new(&spec(), VerdictFormat::Ndjson);
        assert_eq!(
            e.encode(&verdict()),
            "{\"time\":1.0,\"kind\":\"deadline\",\"triggers\":[\"average_alt > 300.0\"],\"updates\":{\"average_alt\":400.0}}\n"
        );
        let line = e.encode_health(&Health { time: None, message: "bad \"row\"".into() });
        let parsed: serde_json::Value = serde_json::from_str(&line).unwrap();
        assert_eq!(parsed["kind"], "health");
        assert!(parsed["time"].is_null());
    }

    #[test]
    fn text_shows_only_violations() {
        let e = VerdictEncoder::new(&spec(), VerdictFormat::Text);
        assert_eq!(e.encode(&verdict()), "[1.0] average_alt > 300.0\n");
        let mut quiet = verdict();
        quiet.triggers.clear();
        assert_eq!(e.encode(&quiet), "");
    }

    #[test]
    fn csv_columns_follow_declaration_order() {
        let e = VerdictEncoder::new(&spec(), VerdictFormat::Csv);
        assert_eq!(e.header(), "time,kind,average_alt,triggers,warnings\n");
        assert_eq!(e.encode(&verdict()), "1.0,deadline,400.0,average_alt > 300.0,\n");
    }

    #[test]
    fn non_finite_floats_stay_valid_json() {
        let e = VerdictEncoder::new(&spec(), VerdictFormat::Ndjson);
        let mut v = verdict();
        v.updates[0].1 = Value::Float64(f64::NAN);
        v.warnings.push("nan".into());
        let parsed: serde_json::Value = serde_json::from_str(&e.encode(&v)).unwrap();
        assert_eq!(parsed["updates"]["average_alt"], "NaN");
        assert_eq!(parsed["warnings"][0], "nan");
    }
}
