use std::collections::HashMap;

use crate::lang::ast::{Expression, Pos, SpecificationAst};

use super::ir::StreamId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Symbol {
    Stream(StreamId),
    Constant(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Access {
    Sync,
    /// Number of evaluations back (positive).
    Offset(usize),
    Hold,
    Window,
}

impl Access {
    pub(crate) fn is_synchronous(self) -> bool {
        matches!(self, Access::Sync | Access::Offset(_))
    }
}

/// Which part of a declaration an expression belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Part {
    Body,
    Filter,
    Spawn,
    Close,
}

/// A declaration that carries expressions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Decl {
    Output(usize),
    Trigger(usize),
}

pub(crate) struct Names {
    pub symbols: HashMap<String, Symbol>,
    pub num_inputs: usize,
}

impl Names {
    pub(crate) fn new(ast: &SpecificationAst) -> Names {
        let mut symbols = HashMap::new();
        for (i, c) in ast.constants.iter().enumerate() {
            symbols.insert(c.name.clone(), Symbol::Constant(i));
        }
        for (i, d) in ast.inputs.iter().enumerate() {
            symbols.insert(d.name.clone(), Symbol::Stream(i));
        }
        for (i, o) in ast.outputs.iter().enumerate() {
            symbols.insert(o.name.clone(), Symbol::Stream(ast.inputs.len() + i));
        }
        Names { symbols, num_inputs: ast.inputs.len() }
    }

    pub(crate) fn stream(&self, name: &str) -> Option<StreamId> {
        match self.symbols.get(name) {
            Some(Symbol::Stream(id)) => Some(*id),
            _ => None,
        }
    }
}

/// Every stream access in `e` (including inside defaults), in pre-order.
/// Names must already be resolved; constants are skipped.
pub(crate) fn accesses(names: &Names, e: &Expression) -> Vec<(StreamId, Access)> {
    let mut out = Vec::new();
    e.visit(&mut |n| {
        let (name, kind) = match n {
            Expression::Stream(s) => (s, Access::Sync),
            Expression::Offset { stream, by, .. } => (stream, Access::Offset(by.unsigned_abs() as usize)),
            Expression::Hold { stream, .. } => (stream, Access::Hold),
            Expression::Aggregate { stream, .. } => (stream, Access::Window),
            _ => return,
        };
        if let Some(id) = names.stream(name) {
            out.push((id, kind));
        }
    });
    out
}

/// The expressions of a declaration, tagged with their role.
pub(crate) fn parts(ast: &SpecificationAst, decl: Decl) -> Vec<(Part, &Expression)> {
    match decl {
        Decl::Output(i) => {
            let o = &ast.outputs[i];
            let mut v = Vec::with_capacity(4);
            if let Some(s) = &o.spawn {
                v.push((Part::Spawn, s));
            }
            if let Some(c) = &o.close {
                v.push((Part::Close, c));
            }
            if let Some(f) = &o.filter {
                v.push((Part::Filter, f));
            }
            v.push((Part::Body, &o.body));
            v
        }
        Decl::Trigger(i) => vec![(Part::Body, &ast.triggers[i].condition)],
    }
}

pub(crate) fn decls(ast: &SpecificationAst) -> impl Iterator<Item = Decl> {
    (0..ast.outputs.len()).map(Decl::Output).chain((0..ast.triggers.len()).map(Decl::Trigger))
}

pub(crate) fn decl_label(ast: &SpecificationAst, decl: Decl) -> (String, Pos) {
    match decl {
        Decl::Output(i) => (ast.outputs[i].name.clone(), ast.outputs[i].pos),
        Decl::Trigger(i) => (format!("trigger #{}", i + 1), ast.triggers[i].pos),
    }
}
