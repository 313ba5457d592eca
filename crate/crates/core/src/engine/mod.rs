//! Deterministic evaluation of an analyzed specification over timestamped events.
//!
//! Each call to [`Monitor::accept_event`] or [`Monitor::advance_time`] runs
//! zero or more cycles and returns one [`Verdict`] per cycle. Deadlines due
//! strictly before an event run as their own cycles; a deadline due at the
//! event's time is merged into the event cycle.
//!
//! ```
//! use rtmon::engine::{CycleKind, Event, Monitor};
//! use rtmon::time::Timestamp;
//! use rtmon::value::Value;
//!
//! let ast = rtmon::lang::parse(
//!     "input altitude: Float
//!      output average_alt @1Hz := altitude.aggregate(over: 60s, using: avg).defaults(to: 0.0)
//!      trigger average_alt > 300.0",
//! )
//! .unwrap();
//! let spec = rtmon::analysis::analyze(&ast).unwrap();
//! let mut monitor = Monitor::new(spec, Timestamp::ZERO);
//! let event = Event::from_pairs(monitor.spec(), Timestamp::from_millis(500), &[("altitude", Value::Float64(400.0))]).unwrap();
//! monitor.accept_event(&event).unwrap();
//! let verdicts = monitor.advance_time(Timestamp::from_secs(1)).unwrap();
//! assert_eq!(verdicts[0].kind, CycleKind::Deadline);
//! assert_eq!(verdicts[0].update("average_alt"), Some(Value::Float64(400.0)));
//! assert_eq!(&*verdicts[0].triggers[0].message, "average_alt > 300.0");
//! ```

mod eval;
mod exact_sum;
mod window;

use std::fmt;
use std::sync::Arc;

use crate::analysis::{Node, PacingType, StreamId, TypedSpecification};
use crate::time::Timestamp;
use crate::value::{Value, ValueType};

use eval::{History, Scope};
use window::WindowStore;

pub use exact_sum::ExactSum;

/// Input values observed at one instant. `values[i]` belongs to input stream `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub time: Timestamp,
    pub values: Vec<Option<Value>>,
}

impl Event {
    pub fn new(time: Timestamp, num_inputs: usize) -> Event {
        Event { time, values: vec![None; num_inputs] }
    }

    /// Builds an event from input names. Types are checked on acceptance.
    pub fn from_pairs(spec: &TypedSpecification, time: Timestamp, pairs: &[(&str, Value)]) -> Result<Event, MonitorError> {
        let mut event = Event::new(time, spec.num_inputs);
        for &(name, v) in pairs {
            let id = spec.input_id(name).ok_or_else(|| MonitorError::UnknownStream(name.to_string()))?;
            event.values[id] = Some(v);
        }
        Ok(event)
    }

    pub fn is_empty(&self) -> bool {
        self.values.iter().all(Option::is_none)
    }

    fn has(&self, id: StreamId) -> bool {
        self.values.get(id).is_some_and(Option::is_some)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CycleKind {
    Event,
    Deadline,
}

impl fmt::Display for CycleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CycleKind::Event => "event",
            CycleKind::Deadline => "deadline",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiredTrigger {
    /// Declaration index of the trigger.
    pub index: usize,
    pub message: Arc<str>,
}

/// The outcome of one evaluation cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub time: Timestamp,
    pub kind: CycleKind,
    /// In declaration order.
    pub triggers: Vec<FiredTrigger>,
    /// Outputs evaluated in this cycle, in declaration order.
    pub updates: Vec<(Arc<str>, Value)>,
    /// Runtime anomalies, such as a NaN compared inside a trigger condition.
    pub warnings: Vec<String>,
}

impl Verdict {
    pub fn update(&self, stream: &str) -> Option<Value> {
        self.updates.iter().find(|(n, _)| &**n == stream).map(|(_, v)| *v)
    }

    pub fn fired(&self, trigger: usize) -> bool {
        self.triggers.iter().any(|t| t.index == trigger)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MonitorError {
    #[error("time {time}s precedes the last processed time {last}s")]
    TimeRegression { time: Timestamp, last: Timestamp },
    #[error("input `{stream}` has type {expected}, got a {found} value")]
    TypeMismatch { stream: String, expected: ValueType, found: ValueType },
    #[error("unknown input stream `{0}`")]
    UnknownStream(String),
    #[error("event has {found} input slots; the specification declares {expected} inputs")]
    InputCount { expected: usize, found: usize },
    #[error("event carries no input values")]
    EmptyEvent,
    /// Raised by the cycle at `time`; `completed` holds the verdicts of earlier cycles of the same call.
    #[error("runtime fault at {time}s in `{location}`: {message}")]
    Fault { time: Timestamp, location: String, message: String, completed: Vec<Verdict> },
    #[error("monitor stopped after an earlier runtime fault: {0}")]
    Poisoned(String),
}

/// Retained state sizes, for checking that memory stays bounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Footprint {
    pub stream_values: usize,
    pub window_values: usize,
    pub scheduled: usize,
}

/// Evaluates one specification. Callers serialize all calls; the monitor
/// never reads the wall clock.
#[derive(Debug, Clone)]
pub struct Monitor {
    spec: TypedSpecification,
    names: Vec<Arc<str>>,
    history: Vec<History>,
    windows: Vec<WindowStore>,
    windows_of: Vec<Vec<usize>>,
    layers: Vec<u32>,
    /// Per output.
    exists: Vec<bool>,
    /// Per output with spawn or close and periodic pacing.
    own_due: Vec<Option<Timestamp>>,
    /// (period, next due), one entry per global period.
    global_due: Vec<(u64, Timestamp)>,
    last: Timestamp,
    cycle: u64,
    poisoned: Option<String>,
}

fn period(p: &PacingType) -> Option<u64> {
    match p {
        PacingType::Periodic(p) => Some(*p),
        _ => None,
    }
}

impl Monitor {
    pub fn new(spec: TypedSpecification, start: Timestamp) -> Monitor {
        let names = spec.streams.iter().map(|s| Arc::from(s.name.as_str())).collect();
        let history = spec.streams.iter().map(|s| History::new(s.memory_bound)).collect();
        let windows = spec.windows.iter().map(|w| WindowStore::new(w.duration, w.function, w.input_ty, w.result_ty)).collect();
        let mut windows_of = vec![Vec::new(); spec.streams.len()];
        for (i, w) in spec.windows.iter().enumerate() {
            windows_of[w.target].push(i);
        }
        let layers = spec.streams.iter().map(|s| s.layer).collect();
        let exists = spec.outputs.iter().map(|o| o.spawn.is_none()).collect();
        let own_due = spec
            .outputs
            .iter()
            .map(|o| {
                let s = &spec.streams[o.stream];
                match period(&s.pacing) {
                    Some(p) if s.has_lifecycle() && o.spawn.is_none() => Some(start + p),
                    _ => None,
                }
            })
            .collect();
        let global_due = spec.global_periods().into_iter().map(|p| (p, start + p)).collect();
        Monitor {
            spec,
            names,
            history,
            windows,
            windows_of,
            layers,
            exists,
            own_due,
            global_due,
            last: start,
            cycle: 0,
            poisoned: None,
        }
    }

    pub fn spec(&self) -> &TypedSpecification {
        &self.spec
    }

    /// The latest time processed, initially the start time.
    pub fn last_time(&self) -> Timestamp {
        self.last
    }

    /// The earliest pending deadline.
    pub fn next_deadline(&self) -> Option<Timestamp> {
        self.global_due.iter().map(|&(_, d)| d).chain(self.own_due.iter().flatten().copied()).min()
    }

    /// Whether output `output` currently has a live instance.
    pub fn exists(&self, output: usize) -> bool {
        self.exists[output]
    }

    pub fn footprint(&self) -> Footprint {
        Footprint {
            stream_values: self.history.iter().map(|h| h.values.len()).sum(),
            window_values: self.windows.iter().map(WindowStore::len).sum(),
            scheduled: self.global_due.len() + self.own_due.iter().flatten().count(),
        }
    }

    /// Processes the deadlines before `event.time`, then the event cycle.
    /// On a validation error the state is unchanged.
    pub fn accept_event(&mut self, event: &Event) -> Result<Vec<Verdict>, MonitorError> {
        self.check_usable(event.time)?;
        self.validate(event)?;
        let mut out = Vec::new();
        self.run_deadlines(event.time, false, &mut out)?;
        let verdict = self.run_cycle(event.time, Some(event), &mut out)?;
        out.push(verdict);
        self.last = event.time;
        Ok(out)
    }

    /// Processes every deadline due at or before `now`.
    pub fn advance_time(&mut self, now: Timestamp) -> Result<Vec<Verdict>, MonitorError> {
        self.check_usable(now)?;
        let mut out = Vec::new();
        self.run_deadlines(now, true, &mut out)?;
        self.last = now;
        Ok(out)
    }

    fn check_usable(&self, time: Timestamp) -> Result<(), MonitorError> {
        if let Some(msg) = &self.poisoned {
            return Err(MonitorError::Poisoned(msg.clone()));
        }
        if time < self.last {
            return Err(MonitorError::TimeRegression { time, last: self.last });
        }
        Ok(())
    }

    fn validate(&self, event: &Event) -> Result<(), MonitorError> {
        if event.values.len() != self.spec.num_inputs {
            return Err(MonitorError::InputCount { expected: self.spec.num_inputs, found: event.values.len() });
        }
        if event.is_empty() {
            return Err(MonitorError::EmptyEvent);
        }
        for (s, v) in self.spec.inputs().iter().zip(&event.values) {
            if let Some(v) = v {
                if v.ty() != s.ty {
                    return Err(MonitorError::TypeMismatch { stream: s.name.clone(), expected: s.ty, found: v.ty() });
                }
            }
        }
        Ok(())
    }

    fn run_deadlines(&mut self, until: Timestamp, inclusive: bool, out: &mut Vec<Verdict>) -> Result<(), MonitorError> {
        while let Some(due) = self.next_deadline() {
            if due > until || (due == until && !inclusive) {
                break;
            }
            let verdict = self.run_cycle(due, None, out)?;
            out.push(verdict);
        }
        Ok(())
    }

    fn run_cycle(&mut self, t: Timestamp, event: Option<&Event>, completed: &mut Vec<Verdict>) -> Result<Verdict, MonitorError> {
        match self.cycle_inner(t, event) {
            Ok(v) => Ok(v),
            Err((location, message)) => {
                self.poisoned = Some(format!("{location}: {message}"));
                Err(MonitorError::Fault { time: t, location, message, completed: std::mem::take(completed) })
            }
        }
    }

    fn scope(&self, reader_layer: u32) -> Scope<'_> {
        Scope {
            history: &self.history,
            windows: &self.windows,
            layers: &self.layers,
            cycle: self.cycle,
            reader_layer,
            saw_nan: false,
        }
    }

    #[allow(clippy::needless_range_loop)] // the loops mutate `self` while indexing
    fn cycle_inner(&mut self, t: Timestamp, event: Option<&Event>) -> Result<Verdict, (String, String)> {
        self.cycle += 1;
        let cycle = self.cycle;
        let n_in = self.spec.num_inputs;
        for w in &mut self.windows {
            w.prune(t);
        }
        if let Some(ev) = event {
            for (i, v) in ev.values.iter().enumerate() {
                if let Some(v) = *v {
                    self.write(i, t, v, cycle);
                }
            }
        }

        // lifecycle: close instances that existed at cycle start, then spawn
        let mut closed = vec![false; self.spec.outputs.len()];
        if let Some(ev) = event {
            for i in 0..self.spec.outputs.len() {
                let Some(c) = &self.spec.outputs[i].close else { continue };
                if !self.exists[i] || !c.inputs.iter().all(|&s| ev.has(s)) {
                    continue;
                }
                let stream = self.spec.outputs[i].stream;
                if self.scope(1).bool(&c.expr).map_err(|m| (format!("close of {}", self.names[stream]), m))? {
                    self.exists[i] = false;
                    self.own_due[i] = None;
                    self.history[stream].clear();
                    for &w in &self.windows_of[stream] {
                        self.windows[w].clear();
                    }
                    closed[i] = true;
                }
            }
            for i in 0..self.spec.outputs.len() {
                let Some(c) = &self.spec.outputs[i].spawn else { continue };
                if self.exists[i] || closed[i] || !c.inputs.iter().all(|&s| ev.has(s)) {
                    continue;
                }
                let stream = self.spec.outputs[i].stream;
                if self.scope(1).bool(&c.expr).map_err(|m| (format!("spawn of {}", self.names[stream]), m))? {
                    self.exists[i] = true;
                    if let Some(p) = period(&self.spec.streams[stream].pacing) {
                        self.own_due[i] = Some(t + p);
                    }
                }
            }
        }

        let due_periods: Vec<u64> = self.global_due.iter().filter(|&&(_, d)| d == t).map(|&(p, _)| p).collect();
        let own_now: Vec<bool> = self.own_due.iter().map(|d| *d == Some(t)).collect();
        let paced = |pacing: &PacingType| match pacing {
            PacingType::EventBased(set) => event.is_some_and(|ev| set.iter().all(|&s| ev.has(s))),
            PacingType::AnyEvent => event.is_some(),
            PacingType::Periodic(p) => due_periods.contains(p),
        };

        let mut updates: Vec<(usize, Value)> = Vec::new();
        let mut fired = Vec::new();
        let mut warnings = Vec::new();
        for k in 0..self.spec.order.len() {
            match self.spec.order[k] {
                Node::Output(i) => {
                    let stream = n_in + i;
                    let info = &self.spec.streams[stream];
                    let due = match info.pacing {
                        PacingType::Periodic(_) if info.has_lifecycle() => own_now[i],
                        ref p => paced(p),
                    };
                    if !self.exists[i] || !due {
                        continue;
                    }
                    let o = &self.spec.outputs[i];
                    let mut scope = self.scope(info.layer);
                    let fail = |m| (self.names[stream].to_string(), m);
                    if let Some(filter) = &o.filter {
                        if !scope.bool(filter).map_err(fail)? {
                            continue;
                        }
                    }
                    let v = scope.eval(&o.body).map_err(fail)?;
                    self.write(stream, t, v, cycle);
                    updates.push((i, v));
                }
                Node::Trigger(i) => {
                    let tr = &self.spec.triggers[i];
                    let run = match tr.gate {
                        Some(g) => {
                            let gs = &self.spec.streams[g];
                            let gate_written = self.history[g].written == cycle;
                            gate_written && ((gs.has_lifecycle() && period(&gs.pacing).is_some()) || paced(&tr.pacing))
                        }
                        None => paced(&tr.pacing),
                    };
                    if !run {
                        continue;
                    }
                    let mut scope = self.scope(tr.layer);
                    let value = scope.bool(&tr.condition).map_err(|m| (format!("trigger #{}", i + 1), m))?;
                    if scope.saw_nan {
                        warnings.push(format!("trigger #{} compared a NaN value: {}", i + 1, tr.message));
                    }
                    if value {
                        fired.push(FiredTrigger { index: i, message: tr.message.clone() });
                    }
                }
            }
        }

        for (p, d) in &mut self.global_due {
            if *d == t {
                *d = t + *p;
            }
        }
        for (i, d) in self.own_due.iter_mut().enumerate() {
            if *d == Some(t) {
                let p = period(&self.spec.streams[n_in + i].pacing).expect("scheduled streams are periodic");
                *d = Some(t + p);
            }
        }

        updates.sort_by_key(|&(i, _)| i);
        fired.sort_by_key(|f| f.index);
        Ok(Verdict {
            time: t,
            kind: if event.is_some() { CycleKind::Event } else { CycleKind::Deadline },
            triggers: fired,
            updates: updates.into_iter().map(|(i, v)| (self.names[n_in + i].clone(), v)).collect(),
            warnings,
        })
    }

    fn write(&mut self, stream: StreamId, t: Timestamp, v: Value, cycle: u64) {
        self.history[stream].push(v, cycle);
        for &w in &self.windows_of[stream] {
            self.windows[w].push(t, v);
        }
    }
}

#[cfg(test)]
mod tests;
