//! Scalar value types shared by the language, the engine and the adapters.

use std::fmt;

use serde::{Deserialize, Serialize};

/// The five scalar types a stream can carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ValueType {
    Bool,
    Int64,
    UInt64,
    UInt8,
    Float64,
}

impl ValueType {
    /// Parses a surface type name, including the `Float`, `Int` and `UInt` aliases.
    pub fn from_name(name: &str) -> Option<ValueType> {
        Some(match name {
            "Bool" => ValueType::Bool,
            "Int64" | "Int" => ValueType::Int64,
            "UInt64" | "UInt" => ValueType::UInt64,
            "UInt8" => ValueType::UInt8,
            "Float64" | "Float" => ValueType::Float64,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            ValueType::Bool => "Bool",
            ValueType::Int64 => "Int64",
            ValueType::UInt64 => "UInt64",
            ValueType::UInt8 => "UInt8",
            ValueType::Float64 => "Float64",
        }
    }

    pub fn is_numeric(self) -> bool {
        !matches!(self, ValueType::Bool)
    }

    pub fn is_integral(self) -> bool {
        matches!(self, ValueType::Int64 | ValueType::UInt64 | ValueType::UInt8)
    }

    /// The type arithmetic is carried out in. `UInt8` operands are widened.
    pub fn arithmetic(self) -> ValueType {
        match self {
            ValueType::UInt8 => ValueType::UInt64,
            other => other,
        }
    }
}

impl fmt::Display for ValueType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A runtime value of one of the [`ValueType`]s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value {
    Bool(bool),
    Int64(i64),
    UInt64(u64),
    UInt8(u8),
    Float64(f64),
}

impl Value {
    pub fn ty(&self) -> ValueType {
        match self {
            Value::Bool(_) => ValueType::Bool,
            Value::Int64(_) => ValueType::Int64,
            Value::UInt64(_) => ValueType::UInt64,
            Value::UInt8(_) => ValueType::UInt8,
            Value::Float64(_) => ValueType::Float64,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match *self {
            Value::Bool(b) => Some(b),
            _ => None,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Value::Float64(f) => Some(f),
            _ => None,
        }
    }

    /// Numeric view used by averaging; booleans count as 0/1.
    pub fn to_f64_lossy(&self) -> f64 {
        match *self {
            Value::Bool(b) => f64::from(u8::from(b)),
            Value::Int64(i) => i as f64,
            Value::UInt64(u) => u as f64,
            Value::UInt8(u) => f64::from(u),
            Value::Float64(f) => f,
        }
    }

    /// Converts an integer into a value of type `ty`, failing when out of range.
    pub fn from_i128(v: i128, ty: ValueType) -> Option<Value> {
        match ty {
            ValueType::Int64 => i64::try_from(v).ok().map(Value::Int64),
            ValueType::UInt64 => u64::try_from(v).ok().map(Value::UInt64),
            ValueType::UInt8 => u8::try_from(v).ok().map(Value::UInt8),
            ValueType::Float64 | ValueType::Bool => None,
        }
    }

    /// Integer view of an integral value.
    pub fn as_i128(&self) -> Option<i128> {
        match *self {
            Value::Int64(i) => Some(i128::from(i)),
            Value::UInt64(u) => Some(i128::from(u)),
            Value::UInt8(u) => Some(i128::from(u)),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int64(i) => write!(f, "{i}"),
            Value::UInt64(u) => write!(f, "{u}"),
            Value::UInt8(u) => write!(f, "{u}"),
            Value::Float64(x) => write!(f, "{x:?}"),
        }
    }
}
