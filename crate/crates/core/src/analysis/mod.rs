//! Static analysis: name resolution, well-formedness, typing, pacing,
//! evaluation layers and memory bounds.
//!
//! Diagnostics are collected phase by phase, at most one per declaration, and
//! analysis stops after the first phase that reports any.
//!
//! ```
//! use rtmon::analysis::{analyze, PacingType};
//!
//! let ast = rtmon::lang::parse(
//!     "input altitude: Float
//!      output average_alt @1Hz := altitude.aggregate(over: 60s, using: avg).defaults(to: 0.0)
//!      trigger average_alt > 300.0",
//! )
//! .unwrap();
//! let spec = analyze(&ast).unwrap();
//! let avg = &spec.streams[spec.stream_id("average_alt").unwrap()];
//! assert_eq!(avg.pacing, PacingType::Periodic(1_000_000_000));
//! assert!(spec.triggers[0].layer > avg.layer);
//! ```

mod graph;
pub mod ir;
mod memory;
mod names;
mod pacing;
mod typing;

use std::fmt;
use std::sync::Arc;

use crate::lang::ast::{Expression, Pos, SpecificationAst};
use crate::lang::print_expression;

pub use ir::{Condition, Expr, Node, OutputIr, PacingType, StreamId, StreamInfo, StreamKind, TriggerInfo, TypedSpecification, WindowInfo};
pub use memory::{memory_bounds, MemoryReport, StreamBound, WindowBound};

use names::{decl_label, decls, parts, Names, Symbol};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AnalysisErrorKind {
    TypeMismatch,
    PacingMismatch,
    IllFormedCycle,
    UnknownStream,
    SpawnAccessViolation,
}

impl fmt::Display for AnalysisErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AnalysisErrorKind::TypeMismatch => "type mismatch",
            AnalysisErrorKind::PacingMismatch => "pacing mismatch",
            AnalysisErrorKind::IllFormedCycle => "ill-formed cycle",
            AnalysisErrorKind::UnknownStream => "unknown stream",
            AnalysisErrorKind::SpawnAccessViolation => "conditional stream access",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{column}: {kind} in `{declaration}`: {message}")]
pub struct AnalysisError {
    pub kind: AnalysisErrorKind,
    /// Stream or constant name, or `trigger #n` (1-based).
    pub declaration: String,
    pub line: u32,
    pub column: u32,
    pub message: String,
}

impl AnalysisError {
    pub(crate) fn new(kind: AnalysisErrorKind, declaration: &str, pos: Pos, message: impl Into<String>) -> AnalysisError {
        AnalysisError { kind, declaration: declaration.to_string(), line: pos.line, column: pos.column, message: message.into() }
    }
}

/// All diagnostics of the failing analysis phase, in declaration order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnalysisErrors(pub Vec<AnalysisError>);

impl AnalysisErrors {
    pub fn kinds(&self) -> Vec<AnalysisErrorKind> {
        self.0.iter().map(|e| e.kind).collect()
    }

    pub fn first(&self) -> &AnalysisError {
        &self.0[0]
    }
}

impl fmt::Display for AnalysisErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for AnalysisErrors {}

/// Analyzes a parsed specification. Pure and deterministic.
pub fn analyze(ast: &SpecificationAst) -> Result<TypedSpecification, AnalysisErrors> {
    let names = Names::new(ast);
    let fail = |mut errors: Vec<AnalysisError>| {
        errors.sort_by_key(|e| (e.line, e.column));
        Err(AnalysisErrors(errors))
    };

    let errors = resolve(ast, &names);
    if !errors.is_empty() {
        return fail(errors);
    }

    let graph = graph::Graph::build(ast, &names);
    let cycles = graph.illegal_cycles();
    if !cycles.is_empty() {
        let label = |v: usize| -> String {
            if v < names.num_inputs {
                ast.inputs[v].name.clone()
            } else {
                ast.outputs[v - names.num_inputs].name.clone()
            }
        };
        let errors = cycles
            .iter()
            .map(|cycle| {
                let first = cycle[0] - names.num_inputs;
                let members: Vec<String> = cycle.iter().map(|&v| format!("`{}`", label(v))).collect();
                let msg = if cycle.len() == 1 {
                    format!("{} depends on its own current value; use an offset or hold", members[0])
                } else {
                    format!("{} depend on each other synchronously; break the cycle with an offset or hold", members.join(", "))
                };
                AnalysisError::new(AnalysisErrorKind::IllFormedCycle, &ast.outputs[first].name, ast.outputs[first].pos, msg)
            })
            .collect();
        return fail(errors);
    }

    let typed = match typing::check(ast, &names) {
        Ok(t) => t,
        Err(errors) => return fail(errors),
    };
    let pacings = match pacing::infer(ast, &names) {
        Ok(p) => p,
        Err(errors) => return fail(errors),
    };

    let layers = graph.layers(names.num_inputs);
    let bounds = memory::bounds(ast, &names);
    let n_in = names.num_inputs;
    let n_streams = n_in + ast.outputs.len();

    let mut streams = Vec::with_capacity(n_streams);
    for (i, d) in ast.inputs.iter().enumerate() {
        streams.push(StreamInfo {
            name: d.name.clone(),
            kind: StreamKind::Input,
            ty: d.ty,
            pacing: pacings.streams[i].clone(),
            spawned: false,
            closable: false,
            filtered: false,
            layer: 0,
            memory_bound: bounds[i],
            pos: d.pos,
        });
    }
    for (i, o) in ast.outputs.iter().enumerate() {
        let id = n_in + i;
        streams.push(StreamInfo {
            name: o.name.clone(),
            kind: StreamKind::Output,
            ty: typed.types[id],
            pacing: pacings.streams[id].clone(),
            spawned: o.spawn.is_some(),
            closable: o.close.is_some(),
            filtered: o.filter.is_some(),
            layer: layers[id],
            memory_bound: bounds[id],
            pos: o.pos,
        });
    }
    let outputs = typed
        .outputs
        .into_iter()
        .enumerate()
        .map(|(i, l)| OutputIr {
            stream: n_in + i,
            spawn: l.spawn.map(|expr| Condition { expr, inputs: pacings.spawn_inputs[i].clone() }),
            close: l.close.map(|expr| Condition { expr, inputs: pacings.close_inputs[i].clone() }),
            filter: l.filter,
            body: l.body,
        })
        .collect();
    let triggers = ast
        .triggers
        .iter()
        .zip(typed.triggers)
        .zip(pacings.triggers)
        .enumerate()
        .map(|(i, ((t, condition), (pacing, gate)))| TriggerInfo {
            message: Arc::from(t.message.clone().unwrap_or_else(|| print_expression(&t.condition))),
            pacing,
            gate,
            condition,
            layer: layers[n_streams + i],
            pos: t.pos,
        })
        .collect::<Vec<_>>();

    let mut order: Vec<(u32, u8, usize, Node)> = (0..ast.outputs.len())
        .map(|i| (layers[n_in + i], 0, i, Node::Output(i)))
        .chain(triggers.iter().enumerate().map(|(i, t)| (t.layer, 1, i, Node::Trigger(i))))
        .collect();
    order.sort_by_key(|&(l, k, i, _)| (l, k, i));

    Ok(TypedSpecification {
        streams,
        num_inputs: n_in,
        outputs,
        triggers,
        windows: typed.windows,
        order: order.into_iter().map(|(_, _, _, n)| n).collect(),
        constants: ast.constants.iter().zip(typed.constants).map(|(c, v)| (c.name.clone(), v)).collect(),
    })
}

/// Reports unknown names and stream accesses applied to constants.
fn resolve(ast: &SpecificationAst, names: &Names) -> Vec<AnalysisError> {
    let mut errors = Vec::new();
    for decl in decls(ast) {
        let mut problem: Option<String> = None;
        for (_, e) in parts(ast, decl) {
            e.visit(&mut |n| {
                if problem.is_some() {
                    return;
                }
                let (name, method) = match n {
                    Expression::Stream(s) => (s, None),
                    Expression::Offset { stream, .. } => (stream, Some("offset")),
                    Expression::Hold { stream, .. } => (stream, Some("hold")),
                    Expression::Aggregate { stream, .. } => (stream, Some("aggregate")),
                    _ => return,
                };
                match (names.symbols.get(name.as_str()), method) {
                    (None, _) => problem = Some(format!("`{name}` is not declared")),
                    (Some(Symbol::Constant(_)), Some(m)) => {
                        problem = Some(format!("`{name}` is a constant; `.{m}(..)` applies only to streams"))
                    }
                    _ => {}
                }
            });
        }
        if let Some(msg) = problem {
            let (label, pos) = decl_label(ast, decl);
            errors.push(AnalysisError::new(AnalysisErrorKind::UnknownStream, &label, pos, msg));
        }
    }
    errors
}

#[cfg(test)]
mod tests;
