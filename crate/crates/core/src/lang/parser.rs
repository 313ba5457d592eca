use std::collections::HashSet;

use super::ast::*;
use super::lexer::{Tok, Token};
use super::{ParseError, ParseErrorKind};
use crate::value::ValueType;

pub(crate) struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, ParseError>;

/// What may follow a declaration's last expression.
const DECL_START: &[&str] = &["`constant`", "`input`", "`output`", "`trigger`", "end of input"];

impl Parser {
    pub(crate) fn new(tokens: Vec<Token>) -> Parser {
        Parser { tokens, pos: 0 }
    }

    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn here(&self) -> Pos {
        let t = &self.tokens[self.pos];
        Pos { line: t.line, column: t.column }
    }

    fn bump(&mut self) -> Tok {
        let t = self.tokens[self.pos].tok.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn error_at(&self, pos: Pos, kind: ParseErrorKind) -> ParseError {
        ParseError { line: pos.line, column: pos.column, kind }
    }

    fn unexpected(&self, expected: &[&str]) -> ParseError {
        self.error_at(
            self.here(),
            ParseErrorKind::Unexpected {
                found: self.peek().to_string(),
                expected: expected.iter().map(|s| s.to_string()).collect(),
            },
        )
    }

    fn invalid(&self, pos: Pos, msg: impl Into<String>) -> ParseError {
        self.error_at(pos, ParseErrorKind::Invalid(msg.into()))
    }

    fn expect(&mut self, tok: Tok) -> PResult<()> {
        if self.eat(&tok) {
            Ok(())
        } else {
            Err(self.unexpected(&[&tok.to_string()]))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek() {
            Tok::Ident(name) => {
                let name = name.clone();
                self.bump();
                Ok(name)
            }
            _ => Err(self.unexpected(&["identifier"])),
        }
    }

    /// Expects the identifier `label` followed by `:`.
    fn label(&mut self, label: &str) -> PResult<()> {
        match self.peek() {
            Tok::Ident(name) if name == label => {
                self.bump();
                self.expect(Tok::Colon)
            }
            _ => Err(self.unexpected(&[&format!("`{label}:`")])),
        }
    }

    fn value_type(&mut self) -> PResult<ValueType> {
        let pos = self.here();
        let name = self.ident().map_err(|_| self.unexpected(&["type name"]))?;
        ValueType::from_name(&name).ok_or_else(|| self.invalid(pos, format!("unknown type `{name}`")))
    }

    pub(crate) fn specification(mut self) -> PResult<SpecificationAst> {
        let mut spec = SpecificationAst::default();
        let mut names = HashSet::new();
        let mut declare = |name: &str, pos: Pos| -> PResult<()> {
            if names.insert(name.to_string()) {
                Ok(())
            } else {
                Err(ParseError { line: pos.line, column: pos.column, kind: ParseErrorKind::DuplicateDeclaration(name.to_string()) })
            }
        };
        loop {
            let pos = self.here();
            match self.peek() {
                Tok::Eof => return Ok(spec),
                Tok::Constant => {
                    let c = self.constant(pos)?;
                    declare(&c.name, pos)?;
                    spec.constants.push(c);
                }
                Tok::Input => {
                    self.bump();
                    loop {
                        let pos = self.here();
                        let name = self.ident()?;
                        self.expect(Tok::Colon)?;
                        let ty = self.value_type()?;
                        declare(&name, pos)?;
                        spec.inputs.push(InputDecl { name, ty, pos });
                        if !self.eat(&Tok::Comma) {
                            break;
                        }
                    }
                }
                Tok::Output => {
                    let o = self.output(pos)?;
                    declare(&o.name, pos)?;
                    spec.outputs.push(o);
                }
                Tok::Trigger => {
                    let t = self.trigger(pos)?;
                    spec.triggers.push(t);
                }
                _ => return Err(self.unexpected(DECL_START)),
            }
        }
    }

    fn constant(&mut self, pos: Pos) -> PResult<ConstantDecl> {
        self.expect(Tok::Constant)?;
        let name = self.ident()?;
        self.expect(Tok::Colon)?;
        let ty = self.value_type()?;
        self.expect(Tok::Assign)?;
        let negative = self.eat(&Tok::Minus);
        let lit_pos = self.here();
        let value = match self.bump() {
            Tok::Int(v) => Literal::Int(signed(v, negative).ok_or_else(|| self.invalid(lit_pos, "integer literal out of range"))?),
            Tok::Float(f) => Literal::Float(if negative { -f } else { f }),
            Tok::True if !negative => Literal::Bool(true),
            Tok::False if !negative => Literal::Bool(false),
            _ => {
                self.pos -= 1;
                return Err(self.unexpected(&["literal"]));
            }
        };
        Ok(ConstantDecl { name, ty, value, pos })
    }

    fn pacing(&mut self) -> PResult<PacingAnnotation> {
        self.expect(Tok::At)?;
        match self.bump() {
            Tok::Frequency(d) => Ok(PacingAnnotation::Frequency(d)),
            Tok::Duration(value, unit) => Ok(PacingAnnotation::Period(DurationLit { value, unit })),
            Tok::True => Ok(PacingAnnotation::AnyEvent),
            _ => {
                self.pos -= 1;
                Err(self.unexpected(&["frequency", "duration", "`true`"]))
            }
        }
    }

    fn output(&mut self, pos: Pos) -> PResult<OutputDecl> {
        self.expect(Tok::Output)?;
        let name = self.ident()?;
        let ty = if self.eat(&Tok::Colon) { Some(self.value_type()?) } else { None };
        let mut pacing = if *self.peek() == Tok::At { Some(self.pacing()?) } else { None };
        let (mut spawn, mut close) = (None, None);
        loop {
            let clause_pos = self.here();
            match self.peek() {
                Tok::Spawn => {
                    self.bump();
                    self.expect(Tok::When)?;
                    if spawn.is_some() {
                        return Err(self.invalid(clause_pos, "duplicate `spawn` clause"));
                    }
                    spawn = Some(self.expression()?);
                }
                Tok::Close => {
                    self.bump();
                    self.expect(Tok::When)?;
                    if close.is_some() {
                        return Err(self.invalid(clause_pos, "duplicate `close` clause"));
                    }
                    close = Some(self.expression()?);
                }
                _ => break,
            }
        }
        let (filter, body) = match self.peek() {
            Tok::Assign => {
                self.bump();
                (None, self.expression()?)
            }
            Tok::Eval => {
                self.bump();
                if *self.peek() == Tok::At {
                    let at = self.here();
                    let p = self.pacing()?;
                    if pacing.replace(p).is_some() {
                        return Err(self.invalid(at, "at most one pacing annotation per stream"));
                    }
                }
                let filter = if self.eat(&Tok::When) { Some(self.expression()?) } else { None };
                self.expect(Tok::With)?;
                (filter, self.expression()?)
            }
            _ => {
                let mut expected = vec!["`:=`", "`eval`", "`spawn`", "`close`"];
                if pacing.is_none() {
                    expected.push("`@`");
                }
                return Err(self.unexpected(&expected));
            }
        };
        Ok(OutputDecl { name, ty, pacing, spawn, close, filter, body, pos })
    }

    fn trigger(&mut self, pos: Pos) -> PResult<TriggerDecl> {
        self.expect(Tok::Trigger)?;
        let pacing = if *self.peek() == Tok::At { Some(self.pacing()?) } else { None };
        let condition = self.expression()?;
        let message = match self.peek() {
            Tok::Str(s) => {
                let s = s.clone();
                self.bump();
                Some(s)
            }
            _ => None,
        };
        Ok(TriggerDecl { pacing, condition, message, pos })
    }

    pub(crate) fn expression(&mut self) -> PResult<Expression> {
        if self.eat(&Tok::If) {
            let condition = self.expression()?;
            self.expect(Tok::Then)?;
            let then = self.expression()?;
            self.expect(Tok::Else)?;
            let otherwise = self.expression()?;
            return Ok(Expression::If { condition: Box::new(condition), then: Box::new(then), otherwise: Box::new(otherwise) });
        }
        self.disjunction()
    }

    fn disjunction(&mut self) -> PResult<Expression> {
        let mut lhs = self.conjunction()?;
        // `or:` is a named argument, not the connective
        while *self.peek() == Tok::Or && *self.peek_at(1) != Tok::Colon {
            self.bump();
            let rhs = self.conjunction()?;
            lhs = Expression::binary(BinaryOp::Or, lhs, rhs);
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> PResult<Expression> {
        let mut lhs = self.comparison()?;
        while self.eat(&Tok::And) {
            let rhs = self.comparison()?;
            lhs = Expression::binary(BinaryOp::And, lhs, rhs);
        }
        Ok(lhs)
    }

    fn comparison_op(&self) -> Option<BinaryOp> {
        Some(match self.peek() {
            Tok::EqEq => BinaryOp::Eq,
            Tok::Ne => BinaryOp::Ne,
            Tok::Lt => BinaryOp::Lt,
            Tok::Le => BinaryOp::Le,
            Tok::Gt => BinaryOp::Gt,
            Tok::Ge => BinaryOp::Ge,
            _ => return None,
        })
    }

    fn comparison(&mut self) -> PResult<Expression> {
        let lhs = self.additive()?;
        let Some(op) = self.comparison_op() else { return Ok(lhs) };
        self.bump();
        let rhs = self.additive()?;
        if self.comparison_op().is_some() {
            return Err(self.invalid(self.here(), "comparison operators cannot be chained; add parentheses"));
        }
        Ok(Expression::binary(op, lhs, rhs))
    }

    fn additive(&mut self) -> PResult<Expression> {
        let mut lhs = self.multiplicative()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinaryOp::Add,
                Tok::Minus => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.multiplicative()?;
            lhs = Expression::binary(op, lhs, rhs);
        }
    }

    fn multiplicative(&mut self) -> PResult<Expression> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinaryOp::Mul,
                Tok::Slash => BinaryOp::Div,
                Tok::Percent => BinaryOp::Rem,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expression::binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> PResult<Expression> {
        match self.peek() {
            Tok::Minus => {
                let pos = self.here();
                self.bump();
                // fold `-<number>` into a negative literal
                match *self.peek() {
                    Tok::Int(v) => {
                        self.bump();
                        let v = signed(v, true).ok_or_else(|| self.invalid(pos, "integer literal out of range"))?;
                        Ok(Expression::Literal(Literal::Int(v)))
                    }
                    Tok::Float(f) => {
                        self.bump();
                        Ok(Expression::Literal(Literal::Float(-f)))
                    }
                    _ => Ok(Expression::Unary { op: UnaryOp::Neg, operand: Box::new(self.unary()?) }),
                }
            }
            Tok::Not => {
                self.bump();
                Ok(Expression::Unary { op: UnaryOp::Not, operand: Box::new(self.unary()?) })
            }
            _ => self.postfix(),
        }
    }

    fn postfix(&mut self) -> PResult<Expression> {
        let mut expr = self.primary()?;
        while *self.peek() == Tok::Dot {
            let pos = self.here();
            self.bump();
            let method = self.ident()?;
            expr = self.method(expr, &method, pos)?;
        }
        Ok(expr)
    }

    fn method(&mut self, receiver: Expression, method: &str, pos: Pos) -> PResult<Expression> {
        if method == "defaults" {
            self.expect(Tok::LParen)?;
            self.label("to")?;
            let value = Box::new(self.expression()?);
            self.expect(Tok::RParen)?;
            return match receiver {
                Expression::Aggregate { stream, over, using, default: None } => {
                    Ok(Expression::Aggregate { stream, over, using, default: Some(value) })
                }
                Expression::Hold { stream, default } if is_missing(&default) => Ok(Expression::Hold { stream, default: value }),
                Expression::Offset { stream, by, default } if is_missing(&default) => {
                    Ok(Expression::Offset { stream, by, default: value })
                }
                _ => Err(self.invalid(pos, "`.defaults(to: ..)` must follow a hold, offset or aggregate access without a default")),
            };
        }
        let stream = match receiver {
            Expression::Stream(name) => name,
            _ => return Err(self.invalid(pos, format!("`.{method}(..)` can only be applied to a stream name"))),
        };
        self.expect(Tok::LParen)?;
        let expr = match method {
            "offset" => {
                self.label("by")?;
                let by_pos = self.here();
                let by = match self.expression()? {
                    Expression::Literal(Literal::Int(v)) if v < 0 => {
                        i64::try_from(v).map_err(|_| self.invalid(by_pos, "offset out of range"))?
                    }
                    _ => return Err(self.invalid(by_pos, "offset must be a strictly negative integer literal")),
                };
                let default = if self.eat(&Tok::Comma) { self.or_default()? } else { missing() };
                Expression::Offset { stream, by, default: Box::new(default) }
            }
            "hold" => {
                let default = if *self.peek() == Tok::Or { self.or_default()? } else { missing() };
                Expression::Hold { stream, default: Box::new(default) }
            }
            "aggregate" => {
                self.label("over")?;
                let over = match self.bump() {
                    Tok::Duration(value, unit) => DurationLit { value, unit },
                    _ => {
                        self.pos -= 1;
                        return Err(self.unexpected(&["duration"]));
                    }
                };
                self.expect(Tok::Comma)?;
                self.label("using")?;
                let fpos = self.here();
                let fname = self.ident()?;
                let using = WindowFunction::from_name(&fname)
                    .ok_or_else(|| self.invalid(fpos, format!("unknown aggregation function `{fname}`")))?;
                let default = if self.eat(&Tok::Comma) { Some(Box::new(self.or_default()?)) } else { None };
                Expression::Aggregate { stream, over, using, default }
            }
            other => return Err(self.invalid(pos, format!("unknown stream access `.{other}(..)`"))),
        };
        self.expect(Tok::RParen)?;
        if let Expression::Hold { default, .. } | Expression::Offset { default, .. } = &expr {
            if is_missing(default) && !self.defaults_follows() {
                return Err(self.invalid(pos, format!("`.{method}(..)` requires a default value (`or: ..`)")));
            }
        }
        Ok(expr)
    }

    fn defaults_follows(&self) -> bool {
        *self.peek() == Tok::Dot && matches!(self.peek_at(1), Tok::Ident(n) if n == "defaults")
    }

    fn or_default(&mut self) -> PResult<Expression> {
        self.expect(Tok::Or)?;
        self.expect(Tok::Colon)?;
        self.expression()
    }

    fn primary(&mut self) -> PResult<Expression> {
        let pos = self.here();
        match self.bump() {
            Tok::Int(v) => Ok(Expression::Literal(Literal::Int(
                signed(v, false).ok_or_else(|| self.invalid(pos, "integer literal out of range"))?,
            ))),
            Tok::Float(f) => Ok(Expression::Literal(Literal::Float(f))),
            Tok::True => Ok(Expression::Literal(Literal::Bool(true))),
            Tok::False => Ok(Expression::Literal(Literal::Bool(false))),
            Tok::LParen => {
                let e = self.expression()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if name == "cast" && *self.peek() == Tok::Lt {
                    self.bump();
                    let ty = self.value_type()?;
                    self.expect(Tok::Gt)?;
                    self.expect(Tok::LParen)?;
                    let operand = self.expression()?;
                    self.expect(Tok::RParen)?;
                    return Ok(Expression::Cast { ty, operand: Box::new(operand) });
                }
                if *self.peek() == Tok::LParen {
                    let function =
                        Function::from_name(&name).ok_or_else(|| self.invalid(pos, format!("unknown function `{name}`")))?;
                    self.bump();
                    let mut args = vec![self.expression()?];
                    while self.eat(&Tok::Comma) {
                        args.push(self.expression()?);
                    }
                    self.expect(Tok::RParen)?;
                    if function.is_unary() && args.len() != 1 {
                        return Err(self.invalid(pos, format!("`{name}` takes exactly one argument")));
                    }
                    return Ok(Expression::Call { function, args });
                }
                Ok(Expression::Stream(name))
            }
            _ => {
                self.pos -= 1;
                Err(self.unexpected(&["expression"]))
            }
        }
    }
}

fn signed(v: u128, negative: bool) -> Option<i128> {
    let v = i128::try_from(v).ok()?;
    let v = if negative { -v } else { v };
    (i128::from(i64::MIN)..=i128::from(u64::MAX)).contains(&v).then_some(v)
}

// Placeholder default, replaced by a following `.defaults(to: ..)`.
fn missing() -> Expression {
    Expression::Stream(String::new())
}

fn is_missing(e: &Expression) -> bool {
    matches!(e, Expression::Stream(s) if s.is_empty())
}

#[cfg(test)]
mod tests {
    use crate::lang::{parse, ParseErrorKind};

    use super::*;

    const ALTITUDE: &str = "input altitude: Float
output average_alt @1Hz := altitude.aggregate(over: 60s, using: avg).defaults(to: 0.0)
trigger average_alt > 300.0";

    #[test]
    fn altitude_listing() {
        let ast = parse(ALTITUDE).unwrap();
        assert_eq!(ast.inputs[0].ty, ValueType::Float64);
        let out = &ast.outputs[0];
        assert_eq!(out.pacing, Some(PacingAnnotation::Frequency(Decimal { mantissa: 1, scale: 0 })));
        assert_eq!(
            out.body,
            Expression::Aggregate {
                stream: "altitude".into(),
                over: DurationLit { value: Decimal { mantissa: 60, scale: 0 }, unit: TimeUnit::Seconds },
                using: WindowFunction::Avg,
                default: Some(Box::new(Expression::Literal(Literal::Float(0.0)))),
            }
        );
        assert_eq!(ast.triggers.len(), 1);
        assert_eq!(ast.triggers[0].message, None);
    }

    #[test]
    fn inline_or_and_defaults_are_the_same_node() {
        let a = parse("input r: Bool\noutput x @1s := r.aggregate(over: 1s, using: avg, or: 0.0)").unwrap();
        let b = parse("input r: Bool\noutput x @1s := r.aggregate(over: 1s, using: avg).defaults(to: 0.0)").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn eval_forms() {
        let ast = parse(
            "constant ROTOR_1: UInt8 := 1
             input rpm : Int64
             input src : UInt8
             output rpm_1 eval when src == ROTOR_1 with abs(rpm)",
        )
        .unwrap();
        let out = &ast.outputs[0];
        assert!(out.filter.is_some());
        assert_eq!(out.body, Expression::Call { function: Function::Abs, args: vec![Expression::stream("rpm")] });
    }

    #[test]
    fn watchdog_listing() {
        let ast = parse(
            "input lost: Bool
             input switched: Bool
             input both: Bool
             output dyn
                 spawn when lost
                 close when switched ∨ both
                 eval @200ms with false
             output valid @true := dyn.hold(or: true)",
        )
        .unwrap();
        let dyn_ = &ast.outputs[0];
        assert!(dyn_.spawn.is_some() && dyn_.close.is_some());
        assert_eq!(
            dyn_.pacing,
            Some(PacingAnnotation::Period(DurationLit { value: Decimal { mantissa: 200, scale: 0 }, unit: TimeUnit::Millis }))
        );
        assert_eq!(ast.outputs[1].pacing, Some(PacingAnnotation::AnyEvent));
    }

    #[test]
    fn single_equals_is_equality() {
        let ast = parse("input s: Int64\noutput v := s = s.offset(by: -1, or: -1) + 1").unwrap();
        match &ast.outputs[0].body {
            Expression::Binary { op: BinaryOp::Eq, rhs, .. } => match rhs.as_ref() {
                Expression::Binary { op: BinaryOp::Add, lhs, .. } => {
                    assert_eq!(
                        **lhs,
                        Expression::Offset {
                            stream: "s".into(),
                            by: -1,
                            default: Box::new(Expression::Literal(Literal::Int(-1)))
                        }
                    )
                }
                other => panic!("{other:?}"),
            },
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_source() {
        assert!(parse("").unwrap().is_empty());
        assert!(parse("  // only a comment\n").unwrap().is_empty());
    }

    #[test]
    fn self_reference_without_offset_still_parses() {
        assert!(parse("output x := x + 1").is_ok());
    }

    #[test]
    fn duplicate_names() {
        let err = parse("input a: Int64\noutput a := 1").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::DuplicateDeclaration("a".into()));
        assert_eq!(err.line, 2);
    }

    #[test]
    fn syntax_errors_are_positioned() {
        let err = parse("input a: Int64\noutput b := a +\ntrigger b").unwrap_err();
        assert_eq!((err.line, err.column), (3, 1));
        match err.kind {
            ParseErrorKind::Unexpected { expected, .. } => assert_eq!(expected, vec!["expression".to_string()]),
            other => panic!("{other:?}"),
        }
        assert!(parse("input a: Int64\noutput b := a.offset(by: 1, or: 0)").is_err());
        assert!(parse("input a: Int64\noutput b := a.offset(by: 0, or: 0)").is_err());
        assert!(parse("input a: Int64\noutput b := a.hold()").is_err());
        assert!(parse("input a: Int64\noutput b := (a + 1).hold(or: 0)").is_err());
        assert!(parse("input a: Int64\noutput b @1Hz eval @1Hz with a").is_err());
        assert!(parse("input a: Strng").is_err());
        assert!(parse("input a: Int64\noutput b := a < 1 < 2").is_err());
    }

    #[test]
    fn negative_literal_folding() {
        let ast = parse("output x @1s := -2 * 3").unwrap();
        assert_eq!(
            ast.outputs[0].body,
            Expression::binary(BinaryOp::Mul, Expression::Literal(Literal::Int(-2)), Expression::Literal(Literal::Int(3)))
        );
    }

    #[test]
    fn trigger_with_message() {
        let ast = parse("input a: Bool\ntrigger @true not a \"a is false\"").unwrap();
        assert_eq!(ast.triggers[0].message.as_deref(), Some("a is false"));
        assert_eq!(ast.triggers[0].pacing, Some(PacingAnnotation::AnyEvent));
    }
}
