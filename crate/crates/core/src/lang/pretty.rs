use std::fmt::Write;

use super::ast::*;

/// Renders a specification in canonical ASCII syntax. Parsing the output yields
/// a tree equal to `spec`.
pub fn pretty_print(spec: &SpecificationAst) -> String {
    let mut out = String::new();
    for c in &spec.constants {
        let _ = writeln!(out, "constant {}: {} := {}", c.name, c.ty, literal(&c.value));
    }
    for i in &spec.inputs {
        let _ = writeln!(out, "input {}: {}", i.name, i.ty);
    }
    for o in &spec.outputs {
        out.push_str("output ");
        out.push_str(&o.name);
        if let Some(ty) = o.ty {
            let _ = write!(out, ": {ty}");
        }
        if let Some(p) = &o.pacing {
            out.push(' ');
            out.push_str(&pacing(p));
        }
        if let Some(s) = &o.spawn {
            let _ = write!(out, "\n    spawn when {}", print_expression(s));
        }
        if let Some(c) = &o.close {
            let _ = write!(out, "\n    close when {}", print_expression(c));
        }
        let clauses = o.spawn.is_some() || o.close.is_some();
        match &o.filter {
            Some(f) => {
                out.push_str(if clauses { "\n    " } else { " " });
                let _ = write!(out, "eval when {} with {}", print_expression(f), print_expression(&o.body));
            }
            None if clauses => {
                let _ = write!(out, "\n    eval with {}", print_expression(&o.body));
            }
            None => {
                let _ = write!(out, " := {}", print_expression(&o.body));
            }
        }
        out.push('\n');
    }
    for t in &spec.triggers {
        out.push_str("trigger ");
        if let Some(p) = &t.pacing {
            out.push_str(&pacing(p));
            out.push(' ');
        }
        out.push_str(&print_expression(&t.condition));
        if let Some(m) = &t.message {
            out.push(' ');
            out.push_str(&string_literal(m));
        }
        out.push('\n');
    }
    out
}

/// Renders an expression with the minimal parentheses needed to re-parse it.
pub fn print_expression(e: &Expression) -> String {
    let mut out = String::new();
    expr(&mut out, e, 0);
    out
}

fn pacing(p: &PacingAnnotation) -> String {
    match p {
        PacingAnnotation::Frequency(d) => format!("@{d}Hz"),
        PacingAnnotation::Period(d) => format!("@{d}"),
        PacingAnnotation::AnyEvent => "@true".to_string(),
    }
}

fn string_literal(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn literal(l: &Literal) -> String {
    match l {
        Literal::Bool(b) => b.to_string(),
        Literal::Int(i) => i.to_string(),
        Literal::Float(f) => format!("{f:?}"),
    }
}

// Binding strength, loosest first.
const IF: u8 = 0;
const OR: u8 = 1;
const AND: u8 = 2;
const CMP: u8 = 3;
const ADD: u8 = 4;
const MUL: u8 = 5;
const UNARY: u8 = 6;

fn binary_prec(op: BinaryOp) -> u8 {
    match op {
        BinaryOp::Or => OR,
        BinaryOp::And => AND,
        BinaryOp::Add | BinaryOp::Sub => ADD,
        BinaryOp::Mul | BinaryOp::Div | BinaryOp::Rem => MUL,
        _ => CMP,
    }
}

fn is_numeric_literal(e: &Expression) -> bool {
    matches!(e, Expression::Literal(Literal::Int(_) | Literal::Float(_)))
}

fn expr(out: &mut String, e: &Expression, min: u8) {
    match e {
        Expression::Literal(l) => out.push_str(&literal(l)),
        Expression::Stream(s) => out.push_str(s),
        Expression::Offset { stream, by, default } => {
            let _ = write!(out, "{stream}.offset(by: {by}, or: ");
            expr(out, default, 0);
            out.push(')');
        }
        Expression::Hold { stream, default } => {
            let _ = write!(out, "{stream}.hold(or: ");
            expr(out, default, 0);
            out.push(')');
        }
        Expression::Aggregate { stream, over, using, default } => {
            let _ = write!(out, "{stream}.aggregate(over: {over}, using: {}", using.name());
            if let Some(d) = default {
                out.push_str(", or: ");
                expr(out, d, 0);
            }
            out.push(')');
        }
        Expression::Unary { op, operand } => wrap(out, min > UNARY, |out| {
            match op {
                UnaryOp::Neg => {
                    out.push('-');
                    // `-2` would re-parse as a literal, `--x` is kept apart for readability
                    let force = is_numeric_literal(operand) || matches!(**operand, Expression::Unary { op: UnaryOp::Neg, .. });
                    wrap(out, force, |out| expr(out, operand, UNARY));
                }
                UnaryOp::Not => {
                    out.push_str("not ");
                    expr(out, operand, UNARY);
                }
            }
        }),
        Expression::Binary { op, lhs, rhs } => {
            let p = binary_prec(*op);
            wrap(out, min > p, |out| {
                if p == CMP {
                    expr(out, lhs, ADD);
                    let _ = write!(out, " {} ", op.symbol());
                    expr(out, rhs, ADD);
                } else {
                    expr(out, lhs, p);
                    let _ = write!(out, " {} ", op.symbol());
                    expr(out, rhs, p + 1);
                }
            })
        }
        Expression::Call { function, args } => {
            out.push_str(function.name());
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                expr(out, a, 0);
            }
            out.push(')');
        }
        Expression::Cast { ty, operand } => {
            let _ = write!(out, "cast<{ty}>(");
            expr(out, operand, 0);
            out.push(')');
        }
        Expression::If { condition, then, otherwise } => wrap(out, min > IF, |out| {
            out.push_str("if ");
            expr(out, condition, 0);
            out.push_str(" then ");
            expr(out, then, 0);
            out.push_str(" else ");
            expr(out, otherwise, 0);
        }),
    }
}

fn wrap(out: &mut String, parens: bool, body: impl FnOnce(&mut String)) {
    if parens {
        out.push('(');
    }
    body(out);
    if parens {
        out.push(')');
    }
}
