//! Abstract syntax of specifications.
//!
//! The tree is purely syntactic: names are unresolved and integer literals are
//! untyped. Structural equality (`==`) ignores source positions, so a parsed tree
//! compares equal to the tree obtained by re-parsing its pretty-printed form.

use std::fmt;

use crate::value::ValueType;

/// Line/column of a declaration's introducing keyword (1-based).
#[derive(Debug, Clone, Copy, Default)]
pub struct Pos {
    pub line: u32,
    pub column: u32,
}

impl PartialEq for Pos {
    fn eq(&self, _other: &Pos) -> bool {
        true
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SpecificationAst {
    pub constants: Vec<ConstantDecl>,
    pub inputs: Vec<InputDecl>,
    pub outputs: Vec<OutputDecl>,
    pub triggers: Vec<TriggerDecl>,
}

impl SpecificationAst {
    pub fn is_empty(&self) -> bool {
        self.constants.is_empty() && self.inputs.is_empty() && self.outputs.is_empty() && self.triggers.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstantDecl {
    pub name: String,
    pub ty: ValueType,
    pub value: Literal,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InputDecl {
    pub name: String,
    pub ty: ValueType,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputDecl {
    pub name: String,
    pub ty: Option<ValueType>,
    pub pacing: Option<PacingAnnotation>,
    pub spawn: Option<Expression>,
    pub close: Option<Expression>,
    /// `eval when <filter> with <body>`
    pub filter: Option<Expression>,
    pub body: Expression,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriggerDecl {
    pub pacing: Option<PacingAnnotation>,
    pub condition: Expression,
    pub message: Option<String>,
    pub pos: Pos,
}

/// An exact decimal number: `mantissa * 10^-scale`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Decimal {
    pub mantissa: u128,
    pub scale: u32,
}

impl Decimal {
    /// Multiplies by `factor` and returns the result if it is an integer.
    pub fn times_integer(self, factor: u128) -> Option<u128> {
        let num = self.mantissa.checked_mul(factor)?;
        let den = 10u128.checked_pow(self.scale)?;
        (num % den == 0).then_some(num / den)
    }
}

impl fmt::Display for Decimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.scale == 0 {
            return write!(f, "{}", self.mantissa);
        }
        let digits = format!("{:0width$}", self.mantissa, width = self.scale as usize + 1);
        let (int, frac) = digits.split_at(digits.len() - self.scale as usize);
        write!(f, "{int}.{frac}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeUnit {
    Millis,
    Seconds,
    Minutes,
}

impl TimeUnit {
    pub fn nanos(self) -> u128 {
        match self {
            TimeUnit::Millis => 1_000_000,
            TimeUnit::Seconds => 1_000_000_000,
            TimeUnit::Minutes => 60_000_000_000,
        }
    }

    pub fn suffix(self) -> &'static str {
        match self {
            TimeUnit::Millis => "ms",
            TimeUnit::Seconds => "s",
            TimeUnit::Minutes => "min",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DurationLit {
    pub value: Decimal,
    pub unit: TimeUnit,
}

impl DurationLit {
    /// Exact length in nanoseconds, if it is a whole number of nanoseconds.
    pub fn nanos(&self) -> Option<u128> {
        self.value.times_integer(self.unit.nanos())
    }
}

impl fmt::Display for DurationLit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.value, self.unit.suffix())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PacingAnnotation {
    /// `@<n>Hz`
    Frequency(Decimal),
    /// `@200ms`, `@1s`
    Period(DurationLit),
    /// `@true`
    AnyEvent,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Literal {
    Bool(bool),
    Int(i128),
    Float(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowFunction {
    Avg,
    Sum,
    Count,
    Min,
    Max,
}

impl WindowFunction {
    pub fn from_name(name: &str) -> Option<WindowFunction> {
        Some(match name {
            "avg" => WindowFunction::Avg,
            "sum" => WindowFunction::Sum,
            "count" => WindowFunction::Count,
            "min" => WindowFunction::Min,
            "max" => WindowFunction::Max,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            WindowFunction::Avg => "avg",
            WindowFunction::Sum => "sum",
            WindowFunction::Count => "count",
            WindowFunction::Min => "min",
            WindowFunction::Max => "max",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Function {
    Abs,
    Sqrt,
    Avg,
    Min,
    Max,
}

impl Function {
    pub fn from_name(name: &str) -> Option<Function> {
        Some(match name {
            "abs" => Function::Abs,
            "sqrt" => Function::Sqrt,
            "avg" => Function::Avg,
            "min" => Function::Min,
            "max" => Function::Max,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Function::Abs => "abs",
            Function::Sqrt => "sqrt",
            Function::Avg => "avg",
            Function::Min => "min",
            Function::Max => "max",
        }
    }

    /// Whether the function takes exactly one argument.
    pub fn is_unary(self) -> bool {
        matches!(self, Function::Abs | Function::Sqrt)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Rem => "%",
            BinaryOp::Eq => "==",
            BinaryOp::Ne => "!=",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
            BinaryOp::And => "and",
            BinaryOp::Or => "or",
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(self, BinaryOp::Eq | BinaryOp::Ne | BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge)
    }

    pub fn is_arithmetic(self) -> bool {
        matches!(self, BinaryOp::Add | BinaryOp::Sub | BinaryOp::Mul | BinaryOp::Div | BinaryOp::Rem)
    }

    pub fn is_logical(self) -> bool {
        matches!(self, BinaryOp::And | BinaryOp::Or)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expression {
    Literal(Literal),
    /// Synchronous access to a stream, or a reference to a constant.
    Stream(String),
    Offset {
        stream: String,
        /// Strictly negative.
        by: i64,
        default: Box<Expression>,
    },
    Hold {
        stream: String,
        default: Box<Expression>,
    },
    Aggregate {
        stream: String,
        over: DurationLit,
        using: WindowFunction,
        default: Option<Box<Expression>>,
    },
    Unary {
        op: UnaryOp,
        operand: Box<Expression>,
    },
    Binary {
        op: BinaryOp,
        lhs: Box<Expression>,
        rhs: Box<Expression>,
    },
    Call {
        function: Function,
        args: Vec<Expression>,
    },
    Cast {
        ty: ValueType,
        operand: Box<Expression>,
    },
    If {
        condition: Box<Expression>,
        then: Box<Expression>,
        otherwise: Box<Expression>,
    },
}

impl Expression {
    pub fn binary(op: BinaryOp, lhs: Expression, rhs: Expression) -> Expression {
        Expression::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }
    }

    pub fn stream(name: impl Into<String>) -> Expression {
        Expression::Stream(name.into())
    }

    /// Calls `f` on every sub-expression, pre-order.
    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Expression)) {
        f(self);
        match self {
            Expression::Literal(_) | Expression::Stream(_) => {}
            Expression::Offset { default, .. } | Expression::Hold { default, .. } => default.visit(f),
            Expression::Aggregate { default, .. } => {
                if let Some(d) = default {
                    d.visit(f);
                }
            }
            Expression::Unary { operand, .. } | Expression::Cast { operand, .. } => operand.visit(f),
            Expression::Binary { lhs, rhs, .. } => {
                lhs.visit(f);
                rhs.visit(f);
            }
            Expression::Call { args, .. } => args.iter().for_each(|a| a.visit(f)),
            Expression::If { condition, then, otherwise } => {
                condition.visit(f);
                then.visit(f);
                otherwise.visit(f);
            }
        }
    }
}
