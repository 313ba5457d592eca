//! Deterministic trace generators and their encodings for each source kind.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::adapter::RawValue;
use crate::io::{BinType, BinaryField, BinaryFrameSchema, Endian};
use crate::time::Timestamp;

/// Rows of typed values under named columns. The time column is implicit
/// and comes first in every encoding.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub columns: Vec<String>,
    pub rows: Vec<(Timestamp, Vec<Option<RawValue>>)>,
}

fn text(v: &RawValue) -> String {
    match v {
        RawValue::Text(s) => s.clone(),
        other => other.to_string(),
    }
}

impl Trace {
    pub fn new(columns: &[&str]) -> Trace {
        Trace { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, time: Timestamp, values: Vec<Option<RawValue>>) {
        debug_assert_eq!(values.len(), self.columns.len());
        self.rows.push((time, values));
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        let header: Vec<&str> = std::iter::once("time").chain(self.columns.iter().map(String::as_str)).collect();
        w.write_record(&header).expect("writing to memory");
        for (t, values) in &self.rows {
            let mut row = vec![t.to_string()];
            row.extend(values.iter().map(|v| v.as_ref().map(text).unwrap_or_default()));
            w.write_record(&row).expect("writing to memory");
        }
        String::from_utf8(w.into_inner().expect("flushing to memory")).expect("utf-8 in, utf-8 out")
    }

    /// One object per row; absent values are omitted.
    pub fn to_ndjson(&self) -> String {
        let mut s = String::new();
        for (t, values) in &self.rows {
            let _ = write!(s, "{{\"time\":{t}");
            for (c, v) in self.columns.iter().zip(values) {
                if let Some(v) = v {
                    let json = match v {
                        RawValue::Text(x) => serde_json::to_string(x).expect("strings serialize"),
                        other => other.to_string(),
                    };
                    let _ = write!(s, ",{}:{json}", serde_json::to_string(c).expect("strings serialize"));
                }
            }
            s.push_str("}\n");
        }
        s
    }

    /// A frame with an f64 time field followed by `types`, one per column.
    /// Float columns use NaN as the absent sentinel, integer columns their minimum.
    pub fn frame_schema(&self, types: &[BinType]) -> BinaryFrameSchema {
        let sentinel = |ty: BinType| match ty {
            BinType::F32 | BinType::F64 => Some(RawValue::Float(f64::NAN)),
            BinType::I8 => Some(RawValue::Int(i8::MIN.into())),
            BinType::I16 => Some(RawValue::Int(i16::MIN.into())),
            BinType::I32 => Some(RawValue::Int(i32::MIN.into())),
            BinType::I64 => Some(RawValue::Int(i64::MIN)),
            BinType::U8 => Some(RawValue::UInt(u8::MAX.into())),
            BinType::U16 => Some(RawValue::UInt(u16::MAX.into())),
            BinType::U32 => Some(RawValue::UInt(u32::MAX.into())),
            BinType::U64 => Some(RawValue::UInt(u64::MAX)),
            BinType::Bool => None,
        };
        let mut fields = vec![BinaryField { name: "time".into(), ty: BinType::F64, endian: Endian::Little, absent: None }];
        fields.extend(
            self.columns
                .iter()
                .zip(types)
                .map(|(c, &ty)| BinaryField { name: c.clone(), ty, endian: Endian::Little, absent: sentinel(ty) }),
        );
        BinaryFrameSchema { magic: vec![0xA5, 0x5A], fields }
    }

    pub fn to_binary(&self, schema: &BinaryFrameSchema) -> Result<Vec<u8>, String> {
        let mut out = Vec::with_capacity(self.rows.len() * schema.frame_len());
        for (t, values) in &self.rows {
            let mut all = vec![Some(RawValue::Float(t.as_secs_f64()))];
            all.extend(values.iter().cloned());
            out.extend(schema.encode(&all)?);
        }
        Ok(out)
    }
}

/// Columns of the flight-phase traces.
pub const FPD_COLUMNS: [&str; 3] = ["rpm", "src", "altitude"];

/// Binary field types matching [`FPD_COLUMNS`].
pub const FPD_BINARY_TYPES: [BinType; 3] = [BinType::I32, BinType::U8, BinType::F64];

/// A complete flight of about `events` records: idle, run-up, climb, hover,
/// descent, landed run-down, idle. Each of four rotors reports at 25Hz,
/// altitude at 10Hz, all with sub-millisecond jitter. Rotors 2 and 4 turn
/// the other way and report negative rpm.
pub fn fpd_flight(seed: u64, events: usize) -> Trace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // 110 records per second of flight
    let duration_ms = (events as u64 * 1000).div_ceil(110).max(1);
    let phase_at = |ms: u64| ms as f64 / duration_ms as f64;
    let rpm_at = |f: f64| match f {
        f if f < 0.10 => 0.0,
        f if f < 0.25 => 1200.0,
        f if f < 0.75 => 3200.0,
        f if f < 0.85 => 1200.0,
        _ => 0.0,
    };
    let alt_at = |f: f64| match f {
        f if f < 0.30 => 0.05,
        f if f < 0.40 => 0.05 + (f - 0.30) / 0.10 * 30.0,
        f if f < 0.60 => 30.05,
        f if f < 0.70 => 30.05 - (f - 0.60) / 0.10 * 30.0,
        _ => 0.05,
    };
    let mut rows: Vec<(u64, Vec<Option<RawValue>>)> = Vec::with_capacity(events + 16);
    let mut ms = 0;
    while rows.len() < events {
        let f = phase_at(ms);
        if ms % 40 < 8 && ms % 2 == 0 {
            let rotor = ms % 40 / 2 + 1;
            let base = rpm_at(f);
            let noise: f64 = if base > 0.0 { rng.gen_range(-40.0..40.0) } else { 0.0 };
            let signed = if rotor % 2 == 0 { -(base + noise) } else { base + noise };
            let jitter = rng.gen_range(0..900_000u64);
            rows.push((ms * 1_000_000 + jitter, vec![Some(RawValue::Int(signed.round() as i64)), Some(RawValue::UInt(rotor)), None]));
        }
        if ms % 100 == 5 {
            let alt = alt_at(f) + rng.gen_range(-0.02..0.02);
            let jitter = rng.gen_range(0..900_000u64);
            rows.push((ms * 1_000_000 + jitter, vec![None, None, Some(RawValue::Float((alt * 1000.0).round() / 1000.0))]));
        }
        ms += 1;
    }
    rows.truncate(events);
    rows.sort_by_key(|r| r.0);
    let mut t = Trace::new(&FPD_COLUMNS);
    for (ns, v) in rows {
        t.push(Timestamp(ns), v);
    }
    t
}
