//! Expression evaluation against the monitor state of the current cycle.

use std::cmp::Ordering;
use std::collections::VecDeque;

use crate::analysis::{Expr, StreamId};
use crate::lang::ast::BinaryOp;
use crate::value::{Value, ValueType};

use super::window::WindowStore;

/// Per-stream history, newest value last.
#[derive(Debug, Clone)]
pub(crate) struct History {
    pub values: VecDeque<Value>,
    pub capacity: usize,
    /// Cycle number of the latest write; 0 = never written.
    pub written: u64,
}

impl History {
    pub(crate) fn new(capacity: usize) -> History {
        History { values: VecDeque::with_capacity(capacity), capacity, written: 0 }
    }

    pub(crate) fn push(&mut self, v: Value, cycle: u64) {
        if self.values.len() == self.capacity {
            self.values.pop_front();
        }
        self.values.push_back(v);
        self.written = cycle;
    }

    pub(crate) fn clear(&mut self) {
        self.values.clear();
        self.written = 0;
    }
}

/// Read-only view of the state a single expression is evaluated against.
pub(crate) struct Scope<'a> {
    pub history: &'a [History],
    pub windows: &'a [WindowStore],
    pub layers: &'a [u32],
    pub cycle: u64,
    /// Layer of the node being evaluated.
    pub reader_layer: u32,
    /// Set when a comparison saw a NaN operand.
    pub saw_nan: bool,
}

pub(crate) type Fault = String;

impl Scope<'_> {
    fn written_now(&self, s: StreamId) -> bool {
        self.history[s].written == self.cycle
    }

    pub(crate) fn eval(&mut self, e: &Expr) -> Result<Value, Fault> {
        Ok(match e {
            Expr::Const(v) => *v,
            Expr::Sync(s) => {
                // layer safety: the target must be below the reader and already written
                if self.layers[*s] >= self.reader_layer || !self.written_now(*s) {
                    return Err(format!("layer violation: stream {s} read before it was evaluated in this cycle"));
                }
                *self.history[*s].values.back().expect("written stream has a value")
            }
            Expr::Offset { stream, by, default } => {
                let h = &self.history[*stream];
                let skip = usize::from(self.written_now(*stream));
                match h.values.len().checked_sub(by + skip) {
                    Some(i) => h.values[i],
                    None => self.eval(default)?,
                }
            }
            Expr::Hold { stream, default } => match self.history[*stream].values.back() {
                Some(v) => *v,
                None => self.eval(default)?,
            },
            Expr::Window { window, default } => match self.windows[*window].value()? {
                Some(v) => v,
                None => match default {
                    Some(d) => self.eval(d)?,
                    None => unreachable!("analysis requires a default for avg, min and max"),
                },
            },
            Expr::Neg(x) => match self.eval(x)? {
                Value::Int64(i) => Value::Int64(i.checked_neg().ok_or("integer overflow in negation")?),
                Value::Float64(f) => Value::Float64(-f),
                v => unreachable!("negation of {v:?}"),
            },
            Expr::Not(x) => Value::Bool(!self.bool(x)?),
            Expr::Arith { op, ty, lhs, rhs } => {
                let (a, b) = (self.eval(lhs)?, self.eval(rhs)?);
                arith(*op, *ty, a, b)?
            }
            Expr::Compare { op, lhs, rhs } => {
                let (a, b) = (self.eval(lhs)?, self.eval(rhs)?);
                if is_nan(&a) || is_nan(&b) {
                    self.saw_nan = true;
                }
                Value::Bool(compare(*op, a, b))
            }
            Expr::And(a, b) => Value::Bool(self.bool(a)? && self.bool(b)?),
            Expr::Or(a, b) => Value::Bool(self.bool(a)? || self.bool(b)?),
            Expr::Abs(x) => match self.eval(x)? {
                Value::Int64(i) => Value::Int64(i.checked_abs().ok_or("integer overflow in abs")?),
                Value::Float64(f) => Value::Float64(f.abs()),
                v => v,
            },
            Expr::Sqrt(x) => Value::Float64(self.eval(x)?.to_f64_lossy().sqrt()),
            Expr::Avg(args) => {
                let mut sum = 0.0;
                for a in args {
                    sum += self.eval(a)?.to_f64_lossy();
                }
                Value::Float64(sum / args.len() as f64)
            }
            Expr::Min(args) => self.extremum(args, Ordering::Less)?,
            Expr::Max(args) => self.extremum(args, Ordering::Greater)?,
            Expr::Cast { to, operand } => cast(self.eval(operand)?, *to)?,
            Expr::If { condition, then, otherwise } => {
                if self.bool(condition)? {
                    self.eval(then)?
                } else {
                    self.eval(otherwise)?
                }
            }
        })
    }

    pub(crate) fn bool(&mut self, e: &Expr) -> Result<bool, Fault> {
        match self.eval(e)? {
            Value::Bool(b) => Ok(b),
            v => unreachable!("boolean expected, found {v:?}"),
        }
    }

    fn extremum(&mut self, args: &[Expr], keep: Ordering) -> Result<Value, Fault> {
        let mut best = self.eval(&args[0])?;
        for a in &args[1..] {
            let v = self.eval(a)?;
            if is_nan(&best) {
                continue;
            }
            if is_nan(&v) || order(&v, &best) == keep {
                best = v;
            }
        }
        Ok(best)
    }
}

fn is_nan(v: &Value) -> bool {
    matches!(v, Value::Float64(f) if f.is_nan())
}

/// Total order on non-NaN values of one type.
fn order(a: &Value, b: &Value) -> Ordering {
    match (a, b) {
        (Value::Float64(x), Value::Float64(y)) => x.partial_cmp(y).unwrap_or(Ordering::Equal),
        (Value::Bool(x), Value::Bool(y)) => x.cmp(y),
        _ => a.as_i128().cmp(&b.as_i128()),
    }
}

fn compare(op: BinaryOp, a: Value, b: Value) -> bool {
    if let (Value::Float64(x), Value::Float64(y)) = (a, b) {
        return match op {
            BinaryOp::Lt => x < y,
            BinaryOp::Le => x <= y,
            BinaryOp::Gt => x > y,
            BinaryOp::Ge => x >= y,
            BinaryOp::Eq => x == y,
            BinaryOp::Ne => x != y,
            _ => unreachable!("{op:?} is not a comparison"),
        };
    }
    let o = order(&a, &b);
    match op {
        BinaryOp::Lt => o == Ordering::Less,
        BinaryOp::Le => o != Ordering::Greater,
        BinaryOp::Gt => o == Ordering::Greater,
        BinaryOp::Ge => o != Ordering::Less,
        BinaryOp::Eq => o == Ordering::Equal,
        BinaryOp::Ne => o != Ordering::Equal,
        _ => unreachable!("{op:?} is not a comparison"),
    }
}

fn arith(op: BinaryOp, ty: ValueType, a: Value, b: Value) -> Result<Value, Fault> {
    if ty == ValueType::Float64 {
        let (x, y) = (a.to_f64_lossy(), b.to_f64_lossy());
        return Ok(Value::Float64(match op {
            BinaryOp::Add => x + y,
            BinaryOp::Sub => x - y,
            BinaryOp::Mul => x * y,
            BinaryOp::Div => x / y,
            BinaryOp::Rem => x % y,
            _ => unreachable!("{op:?} is not arithmetic"),
        }));
    }
    let (x, y) = (a.as_i128().expect("integral operand"), b.as_i128().expect("integral operand"));
    let r = match op {
        BinaryOp::Add => x.checked_add(y),
        BinaryOp::Sub => x.checked_sub(y),
        BinaryOp::Mul => x.checked_mul(y),
        BinaryOp::Div | BinaryOp::Rem if y == 0 => return Err("integer division by zero".to_string()),
        BinaryOp::Div => x.checked_div(y),
        BinaryOp::Rem => x.checked_rem(y),
        _ => unreachable!("{op:?} is not arithmetic"),
    };
    r.and_then(|r| Value::from_i128(r, ty))
        .ok_or_else(|| format!("integer overflow: {x} {} {y} does not fit {ty}", op.symbol()))
}

fn cast(v: Value, to: ValueType) -> Result<Value, Fault> {
    Ok(match (v, to) {
        (v, to) if v.ty() == to => v,
        (Value::Bool(b), ValueType::Float64) => Value::Float64(f64::from(u8::from(b))),
        (Value::Bool(b), _) => Value::from_i128(i128::from(b), to).expect("0 and 1 fit every integer type"),
        (Value::Float64(f), _) => {
            if f.is_nan() {
                return Err(format!("cannot cast NaN to {to}"));
            }
            let t = f.trunc();
            // 2^127 bounds every target range, so the i128 conversion is exact when it matters
            if t.abs() >= 2f64.powi(127) {
                return Err(format!("cast of {f:?} to {to} out of range"));
            }
            Value::from_i128(t as i128, to).ok_or_else(|| format!("cast of {f:?} to {to} out of range"))?
        }
        (v, ValueType::Float64) => Value::Float64(v.to_f64_lossy()),
        (v, _) => {
            let i = v.as_i128().expect("integral value");
            Value::from_i128(i, to).ok_or_else(|| format!("cast of {i} to {to} out of range"))?
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integer_arithmetic_is_checked() {
        assert_eq!(arith(BinaryOp::Add, ValueType::Int64, Value::Int64(2), Value::Int64(3)), Ok(Value::Int64(5)));
        assert!(arith(BinaryOp::Add, ValueType::Int64, Value::Int64(i64::MAX), Value::Int64(1)).is_err());
        assert!(arith(BinaryOp::Sub, ValueType::UInt64, Value::UInt64(1), Value::UInt64(2)).is_err());
        assert!(arith(BinaryOp::Mul, ValueType::UInt64, Value::UInt64(u64::MAX), Value::UInt64(u64::MAX)).is_err());
        assert!(arith(BinaryOp::Div, ValueType::Int64, Value::Int64(1), Value::Int64(0)).is_err());
        assert_eq!(arith(BinaryOp::Rem, ValueType::Int64, Value::Int64(-7), Value::Int64(3)), Ok(Value::Int64(-1)));
        assert!(arith(BinaryOp::Add, ValueType::UInt8, Value::UInt8(200), Value::UInt8(100)).is_err());
    }

    #[test]
    fn float_comparisons_follow_ieee() {
        let nan = Value::Float64(f64::NAN);
        let one = Value::Float64(1.0);
        assert!(!compare(BinaryOp::Lt, nan, one));
        assert!(!compare(BinaryOp::Eq, nan, nan));
        assert!(compare(BinaryOp::Ne, nan, one));
        assert!(compare(BinaryOp::Le, one, one));
    }

    #[test]
    fn casts_check_range() {
        assert_eq!(cast(Value::Float64(-2.7), ValueType::Int64), Ok(Value::Int64(-2)));
        assert!(cast(Value::Float64(-0.5), ValueType::UInt64).is_ok());
        assert!(cast(Value::Float64(-1.0), ValueType::UInt64).is_err());
        assert!(cast(Value::Float64(f64::NAN), ValueType::Int64).is_err());
        assert!(cast(Value::Float64(1e300), ValueType::Int64).is_err());
        assert!(cast(Value::Int64(256), ValueType::UInt8).is_err());
        assert_eq!(cast(Value::UInt8(7), ValueType::Float64), Ok(Value::Float64(7.0)));
        assert_eq!(cast(Value::Bool(true), ValueType::UInt8), Ok(Value::UInt8(1)));
    }
}
