//! Type inference and lowering to [`Expr`].
//!
//! Integer literals stay polymorphic until they meet a concrete integral type
//! and default to `Int64`. They never become `Float64`. Unannotated outputs are
//! resolved by repeated passes; offset and hold accesses to a stream whose type
//! is still unknown take the type of their default.

use std::fmt;

use crate::lang::ast::{BinaryOp, Expression, Function, Literal, SpecificationAst, UnaryOp, WindowFunction};
use crate::value::{Value, ValueType};

use super::ir::{Expr, StreamId, WindowInfo};
use super::names::{decl_label, Decl, Names, Symbol};
use super::{AnalysisError, AnalysisErrorKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Ty {
    C(ValueType),
    IntLit,
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ty::C(t) => write!(f, "{t}"),
            Ty::IntLit => f.write_str("integer literal"),
        }
    }
}

use Ty::{IntLit, C};
use ValueType::{Bool, Float64, Int64, UInt64, UInt8};

type Failure = (AnalysisErrorKind, String);
type TResult<T> = Result<T, Failure>;

fn mismatch<T>(msg: impl Into<String>) -> TResult<T> {
    Err((AnalysisErrorKind::TypeMismatch, msg.into()))
}

fn compatible(ty: Ty, want: ValueType) -> bool {
    match ty {
        C(t) => t == want,
        IntLit => want.is_integral(),
    }
}

fn concretize(ty: Ty, hint: ValueType) -> ValueType {
    match ty {
        C(t) => t,
        IntLit if hint.is_integral() => hint,
        IntLit => Int64,
    }
}

fn expect(ty: Ty, want: ValueType, what: &str) -> TResult<()> {
    if compatible(ty, want) {
        return Ok(());
    }
    if ty == IntLit && want == Float64 {
        return mismatch(format!("{what}: integer literal where Float64 is expected; write it with a decimal point"));
    }
    mismatch(format!("{what}: expected {want}, found {ty}"))
}

fn numeric(ty: Ty, what: &str) -> TResult<()> {
    match ty {
        C(Bool) => mismatch(format!("{what}: expected a numeric operand, found Bool")),
        _ => Ok(()),
    }
}

/// Equal types, or a literal meeting an integral type.
fn unify_exact(a: Ty, b: Ty) -> Option<Ty> {
    match (a, b) {
        _ if a == b => Some(a),
        (IntLit, C(t)) | (C(t), IntLit) if t.is_integral() => Some(C(t)),
        _ => None,
    }
}

/// Like [`unify_exact`] but `UInt8` widens to `UInt64`.
fn unify_arith(a: Ty, b: Ty, op: &str) -> TResult<Ty> {
    numeric(a, op)?;
    numeric(b, op)?;
    let widen = |t: Ty| match t {
        C(t) => C(t.arithmetic()),
        IntLit => IntLit,
    };
    match unify_exact(widen(a), widen(b)) {
        Some(t) => Ok(t),
        None if matches!((a, b), (IntLit, C(Float64)) | (C(Float64), IntLit)) => {
            mismatch(format!("`{op}`: integer literal mixed with Float64; write it with a decimal point"))
        }
        None => mismatch(format!("`{op}`: operands have different types {a} and {b}; use cast<T>(..)")),
    }
}

fn window_result(f: WindowFunction, t: ValueType) -> TResult<ValueType> {
    Ok(match f {
        WindowFunction::Count => UInt64,
        WindowFunction::Avg => Float64,
        WindowFunction::Sum => match t {
            Int64 => Int64,
            UInt64 | UInt8 | Bool => UInt64,
            Float64 => Float64,
        },
        WindowFunction::Min | WindowFunction::Max => {
            if t == Bool {
                return mismatch(format!("`{}` aggregation requires a numeric stream, found Bool", f.name()));
            }
            t
        }
    })
}

fn needs_default(f: WindowFunction) -> bool {
    matches!(f, WindowFunction::Avg | WindowFunction::Min | WindowFunction::Max)
}

pub(crate) struct LoweredOutput {
    pub spawn: Option<Expr>,
    pub close: Option<Expr>,
    pub filter: Option<Expr>,
    pub body: Expr,
}

pub(crate) struct Typed {
    pub types: Vec<ValueType>,
    pub constants: Vec<Value>,
    pub outputs: Vec<LoweredOutput>,
    pub triggers: Vec<Expr>,
    pub windows: Vec<WindowInfo>,
}

struct Typer<'a> {
    ast: &'a SpecificationAst,
    names: &'a Names,
    types: Vec<Option<ValueType>>,
    constants: Vec<Value>,
    windows: Vec<WindowInfo>,
}

pub(crate) fn check(ast: &SpecificationAst, names: &Names) -> Result<Typed, Vec<AnalysisError>> {
    let mut errors = Vec::new();
    let mut constants = Vec::with_capacity(ast.constants.len());
    for c in &ast.constants {
        let v = match (c.value, c.ty) {
            (Literal::Bool(b), Bool) => Some(Value::Bool(b)),
            (Literal::Float(f), Float64) => Some(Value::Float64(f)),
            (Literal::Int(i), t) if t.is_integral() => Value::from_i128(i, t),
            _ => None,
        };
        let v = v.unwrap_or_else(|| {
            errors.push(AnalysisError::new(
                AnalysisErrorKind::TypeMismatch,
                &c.name,
                c.pos,
                format!("constant value does not fit type {}", c.ty),
            ));
            zero(c.ty)
        });
        constants.push(v);
    }

    let mut types: Vec<Option<ValueType>> = ast.inputs.iter().map(|i| Some(i.ty)).collect();
    types.extend(ast.outputs.iter().map(|o| o.ty));
    let mut t = Typer { ast, names, types, constants, windows: Vec::new() };

    let mut failed = vec![false; ast.outputs.len()];
    loop {
        let mut progress = false;
        for (i, o) in ast.outputs.iter().enumerate() {
            let id = names.num_inputs + i;
            if t.types[id].is_some() || failed[i] {
                continue;
            }
            match t.infer(&o.body) {
                Ok(Some(ty)) => {
                    t.types[id] = Some(concretize(ty, Int64));
                    progress = true;
                }
                Ok(None) => {}
                Err((kind, msg)) => {
                    failed[i] = true;
                    errors.push(AnalysisError::new(kind, &o.name, o.pos, msg));
                }
            }
        }
        if !progress {
            break;
        }
    }
    for (i, o) in ast.outputs.iter().enumerate() {
        if t.types[names.num_inputs + i].is_none() && !failed[i] {
            failed[i] = true;
            errors.push(AnalysisError::new(
                AnalysisErrorKind::TypeMismatch,
                &o.name,
                o.pos,
                "cannot infer the type; add an annotation such as `: Float64`",
            ));
        }
    }

    let mut outputs = Vec::with_capacity(ast.outputs.len());
    for (i, o) in ast.outputs.iter().enumerate() {
        if failed[i] {
            continue;
        }
        let ty = t.types[names.num_inputs + i].expect("resolved above");
        let lowered = (|| -> TResult<LoweredOutput> {
            let spawn = o.spawn.as_ref().map(|e| t.lower_expect(e, Bool, "spawn condition")).transpose()?;
            let close = o.close.as_ref().map(|e| t.lower_expect(e, Bool, "close condition")).transpose()?;
            let filter = o.filter.as_ref().map(|e| t.lower_expect(e, Bool, "eval condition")).transpose()?;
            let body = t.lower_expect(&o.body, ty, "stream body")?;
            Ok(LoweredOutput { spawn, close, filter, body })
        })();
        match lowered {
            Ok(l) => outputs.push(l),
            Err((kind, msg)) => {
                let (label, pos) = decl_label(ast, Decl::Output(i));
                errors.push(AnalysisError::new(kind, &label, pos, msg));
            }
        }
    }
    let mut triggers = Vec::with_capacity(ast.triggers.len());
    for (i, tr) in ast.triggers.iter().enumerate() {
        match t.lower_expect(&tr.condition, Bool, "trigger condition") {
            Ok(e) => triggers.push(e),
            Err((kind, msg)) => {
                let (label, pos) = decl_label(ast, Decl::Trigger(i));
                errors.push(AnalysisError::new(kind, &label, pos, msg));
            }
        }
    }
    if !errors.is_empty() {
        return Err(errors);
    }
    Ok(Typed {
        types: t.types.into_iter().map(|t| t.expect("all resolved")).collect(),
        constants: t.constants,
        outputs,
        triggers,
        windows: t.windows,
    })
}

fn zero(ty: ValueType) -> Value {
    match ty {
        Bool => Value::Bool(false),
        Int64 => Value::Int64(0),
        UInt64 => Value::UInt64(0),
        UInt8 => Value::UInt8(0),
        Float64 => Value::Float64(0.0),
    }
}

impl Typer<'_> {
    fn symbol(&self, name: &str) -> Symbol {
        self.names.symbols[name]
    }

    fn stream(&self, name: &str) -> StreamId {
        self.names.stream(name).expect("names resolved before typing")
    }

    /// `Ok(None)` when the type depends on a stream not yet resolved.
    fn infer(&self, e: &Expression) -> TResult<Option<Ty>> {
        Ok(Some(match e {
            Expression::Literal(Literal::Bool(_)) => C(Bool),
            Expression::Literal(Literal::Int(_)) => IntLit,
            Expression::Literal(Literal::Float(_)) => C(Float64),
            Expression::Stream(name) => match self.symbol(name) {
                Symbol::Constant(i) => C(self.ast.constants[i].ty),
                Symbol::Stream(id) => match self.types[id] {
                    Some(t) => C(t),
                    None => return Ok(None),
                },
            },
            Expression::Offset { stream, default, .. } | Expression::Hold { stream, default } => {
                let d = self.infer(default)?;
                match self.types[self.stream(stream)] {
                    Some(t) => {
                        if let Some(d) = d {
                            expect(d, t, &format!("default for `{stream}`"))?;
                        }
                        C(t)
                    }
                    None => return Ok(d),
                }
            }
            Expression::Aggregate { stream, using, default, .. } => {
                let Some(t) = self.types[self.stream(stream)] else { return Ok(None) };
                let r = window_result(*using, t)?;
                match default {
                    Some(d) => {
                        if let Some(dt) = self.infer(d)? {
                            expect(dt, r, &format!("default for the {} window over `{stream}`", using.name()))?;
                        }
                    }
                    None if needs_default(*using) => {
                        return mismatch(format!(
                            "the {} window over `{stream}` needs a default for the empty window (`or: ..`)",
                            using.name()
                        ))
                    }
                    None => {}
                }
                C(r)
            }
            Expression::Unary { op: UnaryOp::Neg, operand } => match self.infer(operand)? {
                None => return Ok(None),
                Some(IntLit) => IntLit,
                Some(C(t @ (Int64 | Float64))) => C(t),
                Some(C(t)) => return mismatch(format!("cannot negate a value of type {t}")),
            },
            Expression::Unary { op: UnaryOp::Not, operand } => {
                let Some(t) = self.infer(operand)? else { return Ok(None) };
                expect(t, Bool, "operand of `not`")?;
                C(Bool)
            }
            Expression::Binary { op, lhs, rhs } => {
                let (l, r) = (self.infer(lhs)?, self.infer(rhs)?);
                let (Some(l), Some(r)) = (l, r) else { return Ok(None) };
                if op.is_arithmetic() {
                    unify_arith(l, r, op.symbol())?
                } else if op.is_comparison() {
                    let Some(t) = unify_exact(l, r) else {
                        return mismatch(format!("`{}` compares {l} with {r}; comparisons require equal types", op.symbol()));
                    };
                    if t == C(Bool) && !matches!(op, BinaryOp::Eq | BinaryOp::Ne) {
                        return mismatch(format!("`{}` is not defined on Bool", op.symbol()));
                    }
                    C(Bool)
                } else {
                    expect(l, Bool, &format!("left operand of `{}`", op.symbol()))?;
                    expect(r, Bool, &format!("right operand of `{}`", op.symbol()))?;
                    C(Bool)
                }
            }
            Expression::Call { function, args } => {
                let mut tys = Vec::with_capacity(args.len());
                for a in args {
                    match self.infer(a)? {
                        Some(t) => tys.push(t),
                        None => return Ok(None),
                    }
                }
                let name = function.name();
                match function {
                    Function::Abs => {
                        numeric(tys[0], name)?;
                        tys[0]
                    }
                    Function::Sqrt => {
                        expect(tys[0], Float64, "argument of `sqrt`")?;
                        C(Float64)
                    }
                    Function::Avg => {
                        tys.iter().try_fold(tys[0], |acc, &t| unify_arith(acc, t, name))?;
                        C(Float64)
                    }
                    Function::Min | Function::Max => {
                        let mut acc = tys[0];
                        numeric(acc, name)?;
                        for &t in &tys[1..] {
                            numeric(t, name)?;
                            acc = unify_exact(acc, t).ok_or_else(|| {
                                (AnalysisErrorKind::TypeMismatch, format!("`{name}` arguments have different types {acc} and {t}"))
                            })?;
                        }
                        acc
                    }
                }
            }
            Expression::Cast { ty, operand } => {
                let Some(src) = self.infer(operand)? else { return Ok(None) };
                if *ty == Bool && src != C(Bool) {
                    return mismatch(format!("cannot cast {src} to Bool; compare instead"));
                }
                C(*ty)
            }
            Expression::If { condition, then, otherwise } => {
                let c = self.infer(condition)?;
                if let Some(c) = c {
                    expect(c, Bool, "if condition")?;
                }
                let (a, b) = (self.infer(then)?, self.infer(otherwise)?);
                let (Some(a), Some(b)) = (a, b) else { return Ok(None) };
                if c.is_none() {
                    return Ok(None);
                }
                unify_exact(a, b).ok_or_else(|| {
                    (AnalysisErrorKind::TypeMismatch, format!("if branches have different types {a} and {b}"))
                })?
            }
        }))
    }

    fn infer_resolved(&self, e: &Expression) -> TResult<Ty> {
        self.infer(e)?.ok_or_else(|| (AnalysisErrorKind::TypeMismatch, "type could not be inferred".to_string()))
    }

    fn lower_expect(&mut self, e: &Expression, want: ValueType, what: &str) -> TResult<Expr> {
        expect(self.infer_resolved(e)?, want, what)?;
        self.lower(e, want)
    }

    fn window(&mut self, target: StreamId, duration: u64, function: WindowFunction, input_ty: ValueType, result_ty: ValueType) -> usize {
        let found = self
            .windows
            .iter()
            .position(|w| w.target == target && w.duration == duration && w.function == function);
        found.unwrap_or_else(|| {
            self.windows.push(WindowInfo { target, duration, function, input_ty, result_ty });
            self.windows.len() - 1
        })
    }

    /// Lowers a checked expression; `hint` fixes the type of polymorphic literals.
    fn lower(&mut self, e: &Expression, hint: ValueType) -> TResult<Expr> {
        let want = concretize(self.infer_resolved(e)?, hint);
        let b = Box::new;
        Ok(match e {
            Expression::Literal(l) => Expr::Const(match *l {
                Literal::Bool(v) => Value::Bool(v),
                Literal::Float(v) => Value::Float64(v),
                Literal::Int(v) => match Value::from_i128(v, want) {
                    Some(v) => v,
                    None => return mismatch(format!("integer literal {v} is out of range for {want}")),
                },
            }),
            Expression::Stream(name) => match self.symbol(name) {
                Symbol::Constant(i) => Expr::Const(self.constants[i]),
                Symbol::Stream(id) => Expr::Sync(id),
            },
            Expression::Offset { stream, by, default } => {
                let id = self.stream(stream);
                let t = self.types[id].expect("resolved");
                let default = self.lower_expect(default, t, &format!("default for `{stream}`"))?;
                Expr::Offset { stream: id, by: by.unsigned_abs() as usize, default: b(default) }
            }
            Expression::Hold { stream, default } => {
                let id = self.stream(stream);
                let t = self.types[id].expect("resolved");
                let default = self.lower_expect(default, t, &format!("default for `{stream}`"))?;
                Expr::Hold { stream: id, default: b(default) }
            }
            Expression::Aggregate { stream, over, using, default } => {
                let id = self.stream(stream);
                let t = self.types[id].expect("resolved");
                let r = window_result(*using, t)?;
                let duration = match over.nanos().and_then(|n| u64::try_from(n).ok()) {
                    Some(n) if n > 0 => n,
                    _ => {
                        return Err((
                            AnalysisErrorKind::PacingMismatch,
                            format!("window duration {over} must be positive and a whole number of nanoseconds"),
                        ))
                    }
                };
                let window = self.window(id, duration, *using, t, r);
                let default = match default {
                    Some(d) => Some(b(self.lower_expect(d, r, "window default")?)),
                    None => None,
                };
                Expr::Window { window, default }
            }
            Expression::Unary { op: UnaryOp::Neg, operand } => {
                if !matches!(want, Int64 | Float64) {
                    return mismatch(format!("cannot negate a value of type {want}"));
                }
                Expr::Neg(b(self.lower(operand, want)?))
            }
            Expression::Unary { op: UnaryOp::Not, operand } => Expr::Not(b(self.lower(operand, Bool)?)),
            Expression::Binary { op, lhs, rhs } => {
                if op.is_arithmetic() {
                    Expr::Arith { op: *op, ty: want, lhs: b(self.lower(lhs, want)?), rhs: b(self.lower(rhs, want)?) }
                } else if op.is_comparison() {
                    let common = unify_exact(self.infer_resolved(lhs)?, self.infer_resolved(rhs)?).expect("checked by infer");
                    let common = concretize(common, Int64);
                    Expr::Compare { op: *op, lhs: b(self.lower(lhs, common)?), rhs: b(self.lower(rhs, common)?) }
                } else {
                    let (l, r) = (b(self.lower(lhs, Bool)?), b(self.lower(rhs, Bool)?));
                    if *op == BinaryOp::And {
                        Expr::And(l, r)
                    } else {
                        Expr::Or(l, r)
                    }
                }
            }
            Expression::Call { function, args } => match function {
                Function::Abs => Expr::Abs(b(self.lower(&args[0], want)?)),
                Function::Sqrt => Expr::Sqrt(b(self.lower(&args[0], Float64)?)),
                Function::Avg => {
                    let mut acc = self.infer_resolved(&args[0])?;
                    for a in &args[1..] {
                        acc = unify_arith(acc, self.infer_resolved(a)?, "avg")?;
                    }
                    let common = concretize(acc, Int64);
                    Expr::Avg(args.iter().map(|a| self.lower(a, common)).collect::<TResult<_>>()?)
                }
                Function::Min | Function::Max => {
                    let lowered = args.iter().map(|a| self.lower(a, want)).collect::<TResult<_>>()?;
                    if *function == Function::Min {
                        Expr::Min(lowered)
                    } else {
                        Expr::Max(lowered)
                    }
                }
            },
            Expression::Cast { ty, operand } => {
                let src = concretize(self.infer_resolved(operand)?, Int64);
                Expr::Cast { to: *ty, operand: b(self.lower(operand, src)?) }
            }
            Expression::If { condition, then, otherwise } => Expr::If {
                condition: b(self.lower(condition, Bool)?),
                then: b(self.lower(then, want)?),
                otherwise: b(self.lower(otherwise, want)?),
            },
        })
    }
}
