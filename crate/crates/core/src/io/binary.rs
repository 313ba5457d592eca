//! Fixed-length binary frames described by a declarative schema.
//!
//! ```toml
//! magic = [0xA5, 0x5A]     # optional sync bytes preceding every frame
//! endian = "little"        # default for fields without their own
//!
//! [[field]]
//! name = "time"
//! type = "f64"
//!
//! [[field]]
//! name = "alt"
//! type = "i32"
//! endian = "big"
//! absent = -1              # value encoding "no reading in this frame"
//! ```

use std::fs::File;
use std::io::{BufReader, Read};
use std::net::TcpStream;
use std::path::Path;

use serde::Deserialize;

use crate::adapter::{EventSource, RawRecord, RawValue, ScalarKind, SourceField, SourceItem, SourceSchema, TransportError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Endian {
    Little,
    Big,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BinType {
    U8,
    U16,
    U32,
    U64,
    I8,
    I16,
    I32,
    I64,
    F32,
    F64,
    Bool,
}

impl BinType {
    pub fn width(self) -> usize {
        match self {
            BinType::U8 | BinType::I8 | BinType::Bool => 1,
            BinType::U16 | BinType::I16 => 2,
            BinType::U32 | BinType::I32 | BinType::F32 => 4,
            BinType::U64 | BinType::I64 | BinType::F64 => 8,
        }
    }

    fn kind(self) -> ScalarKind {
        match self {
            BinType::U8 | BinType::U16 | BinType::U32 | BinType::U64 => ScalarKind::UInt,
            BinType::I8 | BinType::I16 | BinType::I32 | BinType::I64 => ScalarKind::Int,
            BinType::F32 | BinType::F64 => ScalarKind::Float,
            BinType::Bool => ScalarKind::Bool,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinaryField {
    pub name: String,
    pub ty: BinType,
    pub endian: Endian,
    /// Decodes to an absent field. A NaN sentinel matches every NaN.
    pub absent: Option<RawValue>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinaryFrameSchema {
    pub magic: Vec<u8>,
    pub fields: Vec<BinaryField>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SchemaDoc {
    #[serde(default)]
    magic: Vec<u8>,
    #[serde(default = "little")]
    endian: Endian,
    field: Vec<FieldDoc>,
}

fn little() -> Endian {
    Endian::Little
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FieldDoc {
    name: String,
    #[serde(rename = "type")]
    ty: BinType,
    width: Option<usize>,
    endian: Option<Endian>,
    absent: Option<toml::Value>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid frame schema: {0}")]
pub struct SchemaError(pub String);

fn sentinel(name: &str, ty: BinType, v: &toml::Value) -> Result<RawValue, SchemaError> {
    let bad = || SchemaError(format!("field `{name}`: absent value {v} does not fit {ty:?}"));
    let raw = match (ty.kind(), v) {
        (ScalarKind::Float, toml::Value::Float(f)) => RawValue::Float(*f),
        (ScalarKind::Float, toml::Value::Integer(i)) => RawValue::Float(*i as f64),
        (ScalarKind::Int, toml::Value::Integer(i)) => RawValue::Int(*i),
        (ScalarKind::UInt, toml::Value::Integer(i)) => RawValue::UInt(u64::try_from(*i).map_err(|_| bad())?),
        (ScalarKind::Bool, toml::Value::Boolean(b)) => RawValue::Bool(*b),
        _ => return Err(bad()),
    };
    // the sentinel must survive an encode/decode round trip
    let mut buf = Vec::new();
    write_value(&mut buf, ty, Endian::Little, &raw).map_err(|_| bad())?;
    let back = read_value(&buf, ty, Endian::Little);
    if !same(&back, &raw) {
        return Err(bad());
    }
    Ok(raw)
}

fn same(a: &RawValue, b: &RawValue) -> bool {
    match (a, b) {
        (RawValue::Float(x), RawValue::Float(y)) => x == y || (x.is_nan() && y.is_nan()),
        _ => a == b,
    }
}

impl BinaryFrameSchema {
    pub fn parse(text: &str) -> Result<BinaryFrameSchema, SchemaError> {
        let doc: SchemaDoc = toml::from_str(text).map_err(|e| SchemaError(e.to_string()))?;
        if doc.field.is_empty() {
            return Err(SchemaError("a frame needs at least one field".into()));
        }
        let mut fields: Vec<BinaryField> = Vec::new();
        for f in doc.field {
            if fields.iter().any(|g| g.name == f.name) {
                return Err(SchemaError(format!("field `{}` declared twice", f.name)));
            }
            if let Some(w) = f.width {
                if w != f.ty.width() {
                    return Err(SchemaError(format!("field `{}`: {:?} is {} bytes wide, not {w}", f.name, f.ty, f.ty.width())));
                }
            }
            let absent = f.absent.as_ref().map(|v| sentinel(&f.name, f.ty, v)).transpose()?;
            fields.push(BinaryField { name: f.name, ty: f.ty, endian: f.endian.unwrap_or(doc.endian), absent });
        }
        Ok(BinaryFrameSchema { magic: doc.magic, fields })
    }

    pub fn load(path: &Path) -> Result<BinaryFrameSchema, SchemaError> {
        let text = std::fs::read_to_string(path).map_err(|e| SchemaError(format!("{}: {e}", path.display())))?;
        BinaryFrameSchema::parse(&text)
    }

    /// Total frame length including the magic bytes.
    pub fn frame_len(&self) -> usize {
        self.magic.len() + self.fields.iter().map(|f| f.ty.width()).sum::<usize>()
    }

    pub fn source_schema(&self) -> SourceSchema {
        SourceSchema { fields: self.fields.iter().map(|f| SourceField::scalar(&f.name, f.ty.kind())).collect() }
    }

    /// Encodes one frame; `None` writes the field's absent sentinel.
    pub fn encode(&self, values: &[Option<RawValue>]) -> Result<Vec<u8>, String> {
        if values.len() != self.fields.len() {
            return Err(format!("expected {} values, got {}", self.fields.len(), values.len()));
        }
        let mut out = self.magic.clone();
        for (f, v) in self.fields.iter().zip(values) {
            let v = match (v, &f.absent) {
                (Some(v), _) => v,
                (None, Some(s)) => s,
                (None, None) => return Err(format!("field `{}` has no absent sentinel", f.name)),
            };
            write_value(&mut out, f.ty, f.endian, v).map_err(|e| format!("field `{}`: {e}", f.name))?;
        }
        Ok(out)
    }

    /// Decodes a frame body (without magic).
    pub fn decode(&self, body: &[u8]) -> RawRecord {
        let mut at = 0;
        let values = self
            .fields
            .iter()
            .map(|f| {
                let w = f.ty.width();
                let v = read_value(&body[at..at + w], f.ty, f.endian);
                at += w;
                match &f.absent {
                    Some(s) if same(s, &v) => None,
                    _ => Some(v),
                }
            })
            .collect();
        RawRecord { values }
    }
}

macro_rules! put {
    ($out:expr, $v:expr, $e:expr) => {
        match $e {
            Endian::Little => $out.extend_from_slice(&$v.to_le_bytes()),
            Endian::Big => $out.extend_from_slice(&$v.to_be_bytes()),
        }
    };
}

fn write_value(out: &mut Vec<u8>, ty: BinType, e: Endian, v: &RawValue) -> Result<(), String> {
    let int: Option<i128> = match v {
        RawValue::Int(i) => Some(i128::from(*i)),
        RawValue::UInt(u) => Some(i128::from(*u)),
        _ => None,
    };
    let range = |lo: i128, hi: i128| int.filter(|i| (lo..=hi).contains(i)).ok_or_else(|| format!("{v} does not fit {ty:?}"));
    match ty {
        BinType::U8 => put!(out, range(0, u8::MAX.into())? as u8, e),
        BinType::U16 => put!(out, range(0, u16::MAX.into())? as u16, e),
        BinType::U32 => put!(out, range(0, u32::MAX.into())? as u32, e),
        BinType::U64 => put!(out, range(0, u64::MAX.into())? as u64, e),
        BinType::I8 => put!(out, range(i8::MIN.into(), i8::MAX.into())? as i8, e),
        BinType::I16 => put!(out, range(i16::MIN.into(), i16::MAX.into())? as i16, e),
        BinType::I32 => put!(out, range(i32::MIN.into(), i32::MAX.into())? as i32, e),
        BinType::I64 => put!(out, range(i64::MIN.into(), i64::MAX.into())? as i64, e),
        BinType::F32 | BinType::F64 => {
            let RawValue::Float(f) = v else { return Err(format!("{v} is not a float")) };
            if ty == BinType::F32 {
                put!(out, *f as f32, e)
            } else {
                put!(out, *f, e)
            }
        }
        BinType::Bool => match v {
            RawValue::Bool(b) => out.push(u8::from(*b)),
            _ => return Err(format!("{v} is not a boolean")),
        },
    }
    Ok(())
}

fn read_value(b: &[u8], ty: BinType, e: Endian) -> RawValue {
    macro_rules! get {
        ($t:ty) => {{
            let arr: [u8; std::mem::size_of::<$t>()] = b.try_into().expect("slice has the field width");
            match e {
                Endian::Little => <$t>::from_le_bytes(arr),
                Endian::Big => <$t>::from_be_bytes(arr),
            }
        }};
    }
    match ty {
        BinType::U8 => RawValue::UInt(get!(u8).into()),
        BinType::U16 => RawValue::UInt(get!(u16).into()),
        BinType::U32 => RawValue::UInt(get!(u32).into()),
        BinType::U64 => RawValue::UInt(get!(u64)),
        BinType::I8 => RawValue::Int(get!(i8).into()),
        BinType::I16 => RawValue::Int(get!(i16).into()),
        BinType::I32 => RawValue::Int(get!(i32).into()),
        BinType::I64 => RawValue::Int(get!(i64)),
        BinType::F32 => RawValue::Float(get!(f32).into()),
        BinType::F64 => RawValue::Float(get!(f64)),
        // any non-zero byte is true
        BinType::Bool => RawValue::Bool(b[0] != 0),
    }
}

/// Decodes frames from a byte stream, resynchronizing on the magic bytes.
pub struct BinarySource<R> {
    frame: BinaryFrameSchema,
    schema: SourceSchema,
    reader: R,
    buf: Vec<u8>,
    eof: bool,
    skipped_bytes: u64,
}

impl BinarySource<BufReader<File>> {
    pub fn open(path: &Path, frame: BinaryFrameSchema) -> Result<Self, TransportError> {
        let file = File::open(path).map_err(|e| TransportError(format!("{}: {e}", path.display())))?;
        Ok(BinarySource::new(BufReader::new(file), frame))
    }
}

impl BinarySource<TcpStream> {
    pub fn connect(addr: &str, frame: BinaryFrameSchema) -> Result<Self, TransportError> {
        let stream = TcpStream::connect(addr).map_err(|e| TransportError(format!("cannot connect to {addr}: {e}")))?;
        Ok(BinarySource::new(stream, frame))
    }
}

impl<R: Read + Send> BinarySource<R> {
    pub fn new(reader: R, frame: BinaryFrameSchema) -> Self {
        let schema = frame.source_schema();
        BinarySource { frame, schema, reader, buf: Vec::new(), eof: false, skipped_bytes: 0 }
    }

    /// Bytes discarded while searching for the magic marker.
    pub fn skipped_bytes(&self) -> u64 {
        self.skipped_bytes
    }

    fn fill(&mut self) -> Result<bool, TransportError> {
        let mut chunk = [0u8; 8192];
        loop {
            match self.reader.read(&mut chunk) {
                Ok(0) => {
                    self.eof = true;
                    return Ok(false);
                }
                Ok(n) => {
                    self.buf.extend_from_slice(&chunk[..n]);
                    return Ok(true);
                }
                Err(e) if e.kind() == std::io::ErrorKind::Interrupted => continue,
                Err(e) => return Err(e.into()),
            }
        }
    }
}

impl<R: Read + Send> EventSource for BinarySource<R> {
    fn schema(&self) -> &SourceSchema {
        &self.schema
    }

    fn next_item(&mut self) -> Result<Option<SourceItem>, TransportError> {
        let magic = self.frame.magic.clone();
        let len = self.frame.frame_len();
        loop {
            if !magic.is_empty() && self.buf.len() >= magic.len() {
                let found = self.buf.windows(magic.len()).position(|w| w == magic.as_slice());
                let skip = found.unwrap_or(self.buf.len() + 1 - magic.len());
                if skip > 0 {
                    self.buf.drain(..skip);
                    self.skipped_bytes += skip as u64;
                    if found.is_some() {
                        return Ok(Some(SourceItem::Warning(format!("skipped {skip} bytes before a frame marker"))));
                    }
                }
            }
            let synced = magic.is_empty() || self.buf.starts_with(&magic);
            if synced && self.buf.len() >= len {
                let record = self.frame.decode(&self.buf[magic.len()..len]);
                self.buf.drain(..len);
                return Ok(Some(SourceItem::Record(record)));
            }
            if self.eof {
                if self.buf.is_empty() {
                    return Ok(None);
                }
                let n = self.buf.len();
                self.buf.clear();
                return Ok(Some(SourceItem::Warning(format!("ignored a truncated final frame of {n} bytes"))));
            }
            self.fill()?;
        }
    }
}
