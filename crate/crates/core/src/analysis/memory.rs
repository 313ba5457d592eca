use crate::lang::ast::{Expression, SpecificationAst, WindowFunction};

use super::ir::{StreamId, TypedSpecification};
use super::names::{accesses, decls, parts, Access, Names};

/// Values retained per stream: the current one plus as many past values as
/// the deepest offset against the stream requires.
pub(crate) fn bounds(ast: &SpecificationAst, names: &Names) -> Vec<usize> {
    let mut bound = vec![1usize; ast.inputs.len() + ast.outputs.len()];
    let mut note = |e: &Expression| {
        for (t, k) in accesses(names, e) {
            if let Access::Offset(n) = k {
                bound[t] = bound[t].max(n + 1);
            }
        }
    };
    for decl in decls(ast) {
        for (_, e) in parts(ast, decl) {
            note(e);
        }
    }
    bound
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamBound {
    pub stream: String,
    pub values: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowBound {
    pub stream: String,
    /// Nanoseconds; storage holds the target's values of this trailing span.
    pub duration: u64,
    pub function: WindowFunction,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemoryReport {
    pub streams: Vec<StreamBound>,
    pub windows: Vec<WindowBound>,
}

impl MemoryReport {
    pub fn stream(&self, name: &str) -> Option<usize> {
        self.streams.iter().find(|s| s.stream == name).map(|s| s.values)
    }

    pub fn windows_over(&self, name: &str) -> impl Iterator<Item = &WindowBound> {
        let name = name.to_string();
        self.windows.iter().filter(move |w| w.stream == name)
    }
}

/// Per-stream value bounds and duration-bounded window storage.
pub fn memory_bounds(spec: &TypedSpecification) -> MemoryReport {
    let name = |id: StreamId| spec.streams[id].name.clone();
    MemoryReport {
        streams: spec.streams.iter().map(|s| StreamBound { stream: s.name.clone(), values: s.memory_bound }).collect(),
        windows: spec
            .windows
            .iter()
            .map(|w| WindowBound { stream: name(w.target), duration: w.duration, function: w.function })
            .collect(),
    }
}
