//! The analyzed, index-resolved form of a specification.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use crate::lang::ast::{BinaryOp, Pos, WindowFunction};
use crate::time::Timestamp;
use crate::value::{Value, ValueType};

/// Index into [`TypedSpecification::streams`]. Inputs come first.
pub type StreamId = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PacingType {
    /// Evaluated on every event carrying all of these inputs (by stream id).
    EventBased(BTreeSet<StreamId>),
    /// Period in nanoseconds.
    Periodic(u64),
    /// Evaluated on every event cycle.
    AnyEvent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamKind {
    Input,
    Output,
}

#[derive(Debug, Clone)]
pub struct StreamInfo {
    pub name: String,
    pub kind: StreamKind,
    pub ty: ValueType,
    pub pacing: PacingType,
    pub spawned: bool,
    pub closable: bool,
    /// Declared with `eval when ..`.
    pub filtered: bool,
    pub layer: u32,
    /// Number of values retained for offset and hold access.
    pub memory_bound: usize,
    pub pos: Pos,
}

impl StreamInfo {
    /// Whether the stream may be absent in a cycle where its pacing holds.
    pub fn is_conditional(&self) -> bool {
        self.has_lifecycle() || self.filtered
    }

    /// Whether instances are created or destroyed at runtime.
    pub fn has_lifecycle(&self) -> bool {
        self.spawned || self.closable
    }
}

/// A spawn or close condition with the inputs it reads synchronously.
#[derive(Debug, Clone)]
pub struct Condition {
    pub expr: Expr,
    /// The condition is evaluated in event cycles carrying all of these.
    pub inputs: BTreeSet<StreamId>,
}

#[derive(Debug, Clone)]
pub struct OutputIr {
    pub stream: StreamId,
    pub spawn: Option<Condition>,
    pub close: Option<Condition>,
    pub filter: Option<Expr>,
    pub body: Expr,
}

#[derive(Debug, Clone)]
pub struct TriggerInfo {
    pub message: Arc<str>,
    pub pacing: PacingType,
    /// Conditional stream the trigger accesses synchronously; the trigger is
    /// evaluated only in cycles where that stream was evaluated.
    pub gate: Option<StreamId>,
    pub condition: Expr,
    pub layer: u32,
    pub pos: Pos,
}

#[derive(Debug, Clone)]
pub struct WindowInfo {
    pub target: StreamId,
    pub duration: u64,
    pub function: WindowFunction,
    pub input_ty: ValueType,
    pub result_ty: ValueType,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Node {
    Output(usize),
    Trigger(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(Value),
    Sync(StreamId),
    Offset { stream: StreamId, by: usize, default: Box<Expr> },
    Hold { stream: StreamId, default: Box<Expr> },
    Window { window: usize, default: Option<Box<Expr>> },
    Neg(Box<Expr>),
    Not(Box<Expr>),
    /// Integer arithmetic is carried out exactly and range-checked into `ty`.
    Arith { op: BinaryOp, ty: ValueType, lhs: Box<Expr>, rhs: Box<Expr> },
    /// Operands have equal types.
    Compare { op: BinaryOp, lhs: Box<Expr>, rhs: Box<Expr> },
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Abs(Box<Expr>),
    Sqrt(Box<Expr>),
    Avg(Vec<Expr>),
    Min(Vec<Expr>),
    Max(Vec<Expr>),
    Cast { to: ValueType, operand: Box<Expr> },
    If { condition: Box<Expr>, then: Box<Expr>, otherwise: Box<Expr> },
}

#[derive(Debug, Clone)]
pub struct TypedSpecification {
    pub streams: Vec<StreamInfo>,
    pub num_inputs: usize,
    /// `outputs[i]` describes stream `num_inputs + i`.
    pub outputs: Vec<OutputIr>,
    pub triggers: Vec<TriggerInfo>,
    pub windows: Vec<WindowInfo>,
    /// Evaluation order: by layer, outputs before triggers, then declaration order.
    pub order: Vec<Node>,
    pub constants: Vec<(String, Value)>,
}

impl TypedSpecification {
    pub fn inputs(&self) -> &[StreamInfo] {
        &self.streams[..self.num_inputs]
    }

    pub fn output_streams(&self) -> &[StreamInfo] {
        &self.streams[self.num_inputs..]
    }

    pub fn stream_id(&self, name: &str) -> Option<StreamId> {
        self.streams.iter().position(|s| s.name == name)
    }

    pub fn input_id(&self, name: &str) -> Option<StreamId> {
        self.inputs().iter().position(|s| s.name == name)
    }

    pub fn output_stream(&self, output: usize) -> &StreamInfo {
        &self.streams[self.num_inputs + output]
    }

    /// Distinct periods of periodic streams without spawn or close.
    pub fn global_periods(&self) -> BTreeSet<u64> {
        self.output_streams()
            .iter()
            .filter(|s| !s.has_lifecycle())
            .filter_map(|s| match s.pacing {
                PacingType::Periodic(p) => Some(p),
                _ => None,
            })
            .chain(self.triggers.iter().filter(|t| t.gate.is_none()).filter_map(|t| match t.pacing {
                PacingType::Periodic(p) => Some(p),
                _ => None,
            }))
            .collect()
    }

    pub fn pacing_display(&self, pacing: &PacingType) -> String {
        match pacing {
            PacingType::EventBased(set) => {
                let names: Vec<&str> = set.iter().map(|&i| self.streams[i].name.as_str()).collect();
                format!("event({})", names.join(" & "))
            }
            PacingType::Periodic(p) => format!("every {}s", Timestamp(*p)),
            PacingType::AnyEvent => "any event".to_string(),
        }
    }
}

/// Renders the analysis table: one row per stream and trigger.
impl fmt::Display for TypedSpecification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut rows: Vec<[String; 6]> = vec![[
            "stream".into(),
            "kind".into(),
            "type".into(),
            "pacing".into(),
            "layer".into(),
            "memory".into(),
        ]];
        for s in &self.streams {
            let mut kind = match s.kind {
                StreamKind::Input => "input".to_string(),
                StreamKind::Output => "output".to_string(),
            };
            if s.spawned {
                kind.push_str(" (spawn)");
            } else if s.filtered {
                kind.push_str(" (filter)");
            }
            let windows: Vec<String> = self
                .windows
                .iter()
                .filter(|w| w.target == self.stream_id(&s.name).unwrap_or(usize::MAX))
                .map(|w| format!("{}s", Timestamp(w.duration)))
                .collect();
            let mut memory = format!("{} value{}", s.memory_bound, if s.memory_bound == 1 { "" } else { "s" });
            if !windows.is_empty() {
                let _ = fmt::Write::write_fmt(&mut memory, format_args!(" + window {}", windows.join(", ")));
            }
            rows.push([
                s.name.clone(),
                kind,
                s.ty.to_string(),
                self.pacing_display(&s.pacing),
                s.layer.to_string(),
                memory,
            ]);
        }
        for (i, t) in self.triggers.iter().enumerate() {
            let mut pacing = self.pacing_display(&t.pacing);
            if let Some(g) = t.gate {
                pacing = format!("with {}", self.streams[g].name);
            }
            rows.push([format!("trigger #{}", i + 1), "trigger".into(), "Bool".into(), pacing, t.layer.to_string(), "-".into()]);
        }
        let mut widths = [0usize; 6];
        for row in &rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.chars().count());
            }
        }
        for row in &rows {
            let line: Vec<String> = row.iter().zip(widths).map(|(c, w)| format!("{c:<w$}")).collect();
            writeln!(f, "{}", line.join("  ").trim_end())?;
        }
        Ok(())
    }
}
