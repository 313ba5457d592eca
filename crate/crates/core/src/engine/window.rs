//! Sliding-window stores over the half-open interval `(now - duration, now]`.
//!
//! Sums are maintained incrementally (exactly, for floats), min and max with
//! monotonic deques, so each value is added and evicted once.

use std::cmp::Ordering;
use std::collections::VecDeque;

use crate::lang::ast::WindowFunction;
use crate::time::Timestamp;
use crate::value::{Value, ValueType};

use super::exact_sum::ExactSum;

#[derive(Debug, Clone)]
enum Aggregate {
    Count,
    /// Integers and booleans (as 0/1).
    IntSum(i128),
    FloatSum(ExactSum),
    /// Candidates by arrival sequence; values strictly monotone (increasing for min).
    Extremum { candidates: VecDeque<(u64, Value)>, min: bool, nans: usize },
}

#[derive(Debug, Clone)]
pub(crate) struct WindowStore {
    duration: u64,
    function: WindowFunction,
    result_ty: ValueType,
    entries: VecDeque<(Timestamp, Value)>,
    /// Arrival sequence number of `entries[0]`.
    evicted: u64,
    agg: Aggregate,
}

fn numeric_cmp(a: &Value, b: &Value) -> Ordering {
    match (a, b) {
        (Value::Float64(x), Value::Float64(y)) => x.partial_cmp(y).unwrap_or(Ordering::Equal),
        _ => a.as_i128().cmp(&b.as_i128()),
    }
}

fn is_nan(v: &Value) -> bool {
    matches!(v, Value::Float64(f) if f.is_nan())
}

fn as_int(v: &Value) -> i128 {
    match v {
        Value::Bool(b) => i128::from(*b),
        other => other.as_i128().unwrap_or(0),
    }
}

impl WindowStore {
    pub(crate) fn new(duration: u64, function: WindowFunction, input_ty: ValueType, result_ty: ValueType) -> WindowStore {
        let agg = match function {
            WindowFunction::Count => Aggregate::Count,
            WindowFunction::Sum | WindowFunction::Avg if input_ty == ValueType::Float64 => Aggregate::FloatSum(ExactSum::new()),
            WindowFunction::Sum | WindowFunction::Avg => Aggregate::IntSum(0),
            WindowFunction::Min | WindowFunction::Max => {
                Aggregate::Extremum { candidates: VecDeque::new(), min: function == WindowFunction::Min, nans: 0 }
            }
        };
        WindowStore { duration, function, result_ty, entries: VecDeque::new(), evicted: 0, agg }
    }

    pub(crate) fn len(&self) -> usize {
        self.entries.len()
    }

    pub(crate) fn push(&mut self, t: Timestamp, v: Value) {
        let seq = self.evicted + self.entries.len() as u64;
        match &mut self.agg {
            Aggregate::Count => {}
            Aggregate::IntSum(s) => *s += as_int(&v),
            Aggregate::FloatSum(s) => s.add(v.to_f64_lossy()),
            Aggregate::Extremum { candidates, min, nans } => {
                if is_nan(&v) {
                    *nans += 1;
                } else {
                    let dominated = |back: &Value| {
                        let o = numeric_cmp(back, &v);
                        if *min {
                            o != Ordering::Less
                        } else {
                            o != Ordering::Greater
                        }
                    };
                    while candidates.back().is_some_and(|(_, b)| dominated(b)) {
                        candidates.pop_back();
                    }
                    candidates.push_back((seq, v));
                }
            }
        }
        self.entries.push_back((t, v));
    }

    /// Drops values with timestamps `<= now - duration`.
    pub(crate) fn prune(&mut self, now: Timestamp) {
        while let Some(&(t, v)) = self.entries.front() {
            if t.0.saturating_add(self.duration) > now.0 {
                break;
            }
            self.entries.pop_front();
            match &mut self.agg {
                Aggregate::Count => {}
                Aggregate::IntSum(s) => *s -= as_int(&v),
                Aggregate::FloatSum(s) => s.remove(v.to_f64_lossy()),
                Aggregate::Extremum { candidates, nans, .. } => {
                    if is_nan(&v) {
                        *nans -= 1;
                    } else if candidates.front().is_some_and(|&(seq, _)| seq == self.evicted) {
                        candidates.pop_front();
                    }
                }
            }
            self.evicted += 1;
        }
    }

    pub(crate) fn clear(&mut self) {
        self.evicted += self.entries.len() as u64;
        self.entries.clear();
        match &mut self.agg {
            Aggregate::Count => {}
            Aggregate::IntSum(s) => *s = 0,
            Aggregate::FloatSum(s) => s.clear(),
            Aggregate::Extremum { candidates, nans, .. } => {
                candidates.clear();
                *nans = 0;
            }
        }
    }

    /// The aggregate over the retained values; `None` for an empty avg, min or max.
    /// Requires a prior `prune(now)`.
    pub(crate) fn value(&self) -> Result<Option<Value>, String> {
        let n = self.entries.len();
        Ok(Some(match (&self.agg, self.function) {
            (Aggregate::Count, _) => Value::UInt64(n as u64),
            (_, WindowFunction::Avg | WindowFunction::Min | WindowFunction::Max) if n == 0 => return Ok(None),
            (Aggregate::IntSum(s), WindowFunction::Avg) => Value::Float64(*s as f64 / n as f64),
            (Aggregate::FloatSum(s), WindowFunction::Avg) => Value::Float64(s.value() / n as f64),
            (Aggregate::IntSum(s), _) => {
                Value::from_i128(*s, self.result_ty).ok_or_else(|| format!("window sum {s} overflows {}", self.result_ty))?
            }
            (Aggregate::FloatSum(s), _) => Value::Float64(s.value()),
            (Aggregate::Extremum { nans, .. }, _) if *nans > 0 => Value::Float64(f64::NAN),
            (Aggregate::Extremum { candidates, .. }, _) => candidates.front().expect("non-empty window has a candidate").1,
        }))
    }
}
