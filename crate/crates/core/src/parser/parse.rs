use std::collections::HashMap;

use num_traits::Signed;

use super::ast::{InputDecl, OutputDecl, Spec, TriggerDecl};
use super::lexer::{tokenize, Position, Tok, Token};
use super::ParseError;
use crate::ir::{
    ac_and, ac_or, parse_rational, ActivationCondition, Aggregation, BinaryOp, Expr, Frequency, PacingType, Rational,
    UnaryOp, Value, ValueType,
};

const KEYWORDS: &[&str] = &["input", "output", "trigger", "if", "then", "else", "true", "false", "inf", "nan"];

pub fn parse_spec(text: &str) -> Result<Spec, ParseError> {
    let tokens = tokenize(text)?;
    let mut parser = Parser { tokens, idx: 0, accesses: Vec::new() };
    let mut spec = Spec::default();
    let mut names: HashMap<String, Position> = HashMap::new();

    let mut declare = |name: &str, pos: Position| -> Result<(), ParseError> {
        if names.insert(name.to_string(), pos).is_some() {
            return Err(ParseError::DuplicateName { pos, name: name.to_string() });
        }
        Ok(())
    };

    loop {
        let token = parser.peek().clone();
        match &token.tok {
            Tok::Eof if spec == Spec::default() => return Err(ParseError::syntax(token.pos, "empty specification")),
            Tok::Eof => break,
            Tok::Ident(kw) if kw == "input" => {
                parser.advance();
                let mut declared = vec![parser.expect_name()?];
                while parser.eat(&Tok::Comma) {
                    declared.push(parser.expect_name()?);
                }
                if !parser.eat(&Tok::Colon) {
                    let (name, pos) = declared.last().cloned().unwrap();
                    return Err(ParseError::MissingInputType { pos, name });
                }
                let ty = parser.value_type()?;
                for (name, pos) in declared {
                    declare(&name, pos)?;
                    spec.inputs.push(InputDecl { name, ty: ty.clone() });
                }
            }
            Tok::Ident(kw) if kw == "output" => {
                parser.advance();
                let (name, pos) = parser.expect_name()?;
                declare(&name, pos)?;
                let ty = if parser.eat(&Tok::Colon) { Some(parser.value_type()?) } else { None };
                let pacing = parser.opt_pacing()?;
                let filter = parser.opt_filter()?;
                parser.expect(&Tok::Assign)?;
                let expr = parser.expr()?;
                spec.outputs.push(OutputDecl { name, ty, pacing, filter, expr });
            }
            Tok::Ident(kw) if kw == "trigger" => {
                parser.advance();
                let pacing = parser.opt_pacing()?;
                let filter = parser.opt_filter()?;
                let condition = parser.expr()?;
                let message = match parser.peek().tok.clone() {
                    Tok::Str(s) => {
                        parser.advance();
                        s
                    }
                    other => return Err(parser.error_here(format!("expected trigger message, found {other}"))),
                };
                spec.triggers.push(TriggerDecl { pacing, filter, condition, message });
            }
            other => {
                return Err(ParseError::syntax(
                    token.pos,
                    format!("expected `input`, `output` or `trigger`, found {other}"),
                ))
            }
        }
    }

    for (name, pos) in &parser.accesses {
        if !spec.is_declared(name) {
            return Err(ParseError::UnknownTarget { pos: *pos, name: name.clone() });
        }
    }
    Ok(spec)
}

struct Parser {
    tokens: Vec<Token>,
    idx: usize,
    accesses: Vec<(String, Position)>,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.idx]
    }

    fn peek_at(&self, ahead: usize) -> &Tok {
        &self.tokens[(self.idx + ahead).min(self.tokens.len() - 1)].tok
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.idx].clone();
        if self.idx + 1 < self.tokens.len() {
            self.idx += 1;
        }
        t
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if &self.peek().tok == tok {
            self.advance();
            true
        } else {
            false
        }
    }

    fn error_here(&self, message: impl Into<String>) -> ParseError {
        ParseError::syntax(self.peek().pos, message)
    }

    fn expect(&mut self, tok: &Tok) -> Result<Position, ParseError> {
        if &self.peek().tok == tok {
            Ok(self.advance().pos)
        } else {
            Err(self.error_here(format!("expected {tok}, found {}", self.peek().tok)))
        }
    }

    fn is_ident(&self, word: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(w) if w == word)
    }

    fn expect_word(&mut self, word: &str) -> Result<(), ParseError> {
        if self.is_ident(word) {
            self.advance();
            Ok(())
        } else {
            Err(self.error_here(format!("expected `{word}`, found {}", self.peek().tok)))
        }
    }

    fn expect_name(&mut self) -> Result<(String, Position), ParseError> {
        let token = self.peek().clone();
        match token.tok {
            Tok::Ident(name) if !KEYWORDS.contains(&name.as_str()) => {
                self.advance();
                Ok((name, token.pos))
            }
            other => Err(ParseError::syntax(token.pos, format!("expected a stream name, found {other}"))),
        }
    }

    fn value_type(&mut self) -> Result<ValueType, ParseError> {
        let token = self.peek().clone();
        match &token.tok {
            Tok::Ident(name) => {
                let ty = match name.as_str() {
                    "Bool" => ValueType::Bool,
                    "Int64" => ValueType::Int64,
                    "Float64" => ValueType::Float64,
                    _ => return Err(ParseError::syntax(token.pos, format!("unknown value type `{name}`"))),
                };
                self.advance();
                Ok(ty)
            }
            Tok::LParen => {
                self.advance();
                let mut elems = vec![self.value_type()?];
                while self.eat(&Tok::Comma) {
                    elems.push(self.value_type()?);
                }
                self.expect(&Tok::RParen)?;
                if elems.len() < 2 {
                    return Err(ParseError::syntax(token.pos, "tuple types need at least two elements"));
                }
                Ok(ValueType::Tuple(elems))
            }
            other => Err(ParseError::syntax(token.pos, format!("expected a value type, found {other}"))),
        }
    }

    /// `12`, `0.5` or `1/3` as an exact rational.
    fn rational(&mut self) -> Result<Rational, ParseError> {
        let token = self.advance();
        let Tok::Number(text) = &token.tok else {
            return Err(ParseError::syntax(token.pos, format!("expected a number, found {}", token.tok)));
        };
        let mut value = parse_rational(text)
            .ok_or_else(|| ParseError::syntax(token.pos, format!("`{text}` is not an exact decimal")))?;
        if self.peek().tok == Tok::Slash {
            self.advance();
            let denom = self.advance();
            let den = match &denom.tok {
                Tok::Number(d) => parse_rational(d).filter(|d| *d != Rational::from_integer(0)),
                _ => None,
            }
            .ok_or_else(|| ParseError::syntax(denom.pos, "expected a non-zero denominator"))?;
            value /= den;
        }
        Ok(value)
    }

    fn opt_pacing(&mut self) -> Result<Option<PacingType>, ParseError> {
        if !self.eat(&Tok::At) {
            return Ok(None);
        }
        if self.eat(&Tok::LBrace) {
            let ac = self.activation()?;
            self.expect(&Tok::RBrace)?;
            return Ok(Some(PacingType::EventBased(ac)));
        }
        let pos = self.peek().pos;
        let hz = self.rational()?;
        if !self.is_ident("Hz") {
            return Err(self.error_here(format!("expected `Hz`, found {}", self.peek().tok)));
        }
        self.advance();
        let freq = Frequency::from_rational(hz).map_err(|e| ParseError::syntax(pos, e.to_string()))?;
        Ok(Some(PacingType::Periodic(freq)))
    }

    fn activation(&mut self) -> Result<ActivationCondition, ParseError> {
        let mut acc = self.activation_conj()?;
        while self.eat(&Tok::OrOr) {
            let rhs = self.activation_conj()?;
            acc = ac_or(&acc, &rhs);
        }
        Ok(acc)
    }

    fn activation_conj(&mut self) -> Result<ActivationCondition, ParseError> {
        let mut acc = self.activation_atom()?;
        while self.eat(&Tok::AndAnd) {
            let rhs = self.activation_atom()?;
            acc = ac_and(&acc, &rhs);
        }
        Ok(acc)
    }

    fn activation_atom(&mut self) -> Result<ActivationCondition, ParseError> {
        if self.eat(&Tok::LParen) {
            let inner = self.activation()?;
            self.expect(&Tok::RParen)?;
            return Ok(inner);
        }
        let (name, pos) = self.expect_name()?;
        self.accesses.push((name.clone(), pos));
        Ok(ActivationCondition::Input(name))
    }

    fn opt_filter(&mut self) -> Result<Option<Expr>, ParseError> {
        if !self.eat(&Tok::LBrace) {
            return Ok(None);
        }
        self.expect_word("filter")?;
        let e = self.expr()?;
        self.expect(&Tok::RBrace)?;
        Ok(Some(e))
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        if self.is_ident("if") {
            self.advance();
            let condition = self.expr()?;
            self.expect_word("then")?;
            let consequence = self.expr()?;
            self.expect_word("else")?;
            let alternative = self.expr()?;
            return Ok(Expr::ite(condition, consequence, alternative));
        }
        self.or_expr()
    }

    fn or_expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.and_expr()?;
        while self.eat(&Tok::OrOr) {
            lhs = Expr::binary(BinaryOp::Or, lhs, self.and_expr()?);
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.cmp_expr()?;
        while self.eat(&Tok::AndAnd) {
            lhs = Expr::binary(BinaryOp::And, lhs, self.cmp_expr()?);
        }
        Ok(lhs)
    }

    fn cmp_expr(&mut self) -> Result<Expr, ParseError> {
        let lhs = self.add_expr()?;
        let op = match self.peek().tok {
            Tok::Lt => BinaryOp::Lt,
            Tok::Le => BinaryOp::Le,
            Tok::Gt => BinaryOp::Gt,
            Tok::Ge => BinaryOp::Ge,
            Tok::EqEq => BinaryOp::Eq,
            Tok::Ne => BinaryOp::Ne,
            _ => return Ok(lhs),
        };
        self.advance();
        let rhs = self.add_expr()?;
        if matches!(self.peek().tok, Tok::Lt | Tok::Le | Tok::Gt | Tok::Ge | Tok::EqEq | Tok::Ne) {
            return Err(self.error_here("comparison operators cannot be chained"));
        }
        Ok(Expr::binary(op, lhs, rhs))
    }

    fn add_expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.mul_expr()?;
        loop {
            let op = match self.peek().tok {
                Tok::Plus => BinaryOp::Add,
                Tok::Minus => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.advance();
            lhs = Expr::binary(op, lhs, self.mul_expr()?);
        }
    }

    fn mul_expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary_expr()?;
        loop {
            let op = match self.peek().tok {
                Tok::Star => BinaryOp::Mul,
                Tok::Slash => BinaryOp::Div,
                Tok::Percent => BinaryOp::Mod,
                _ => return Ok(lhs),
            };
            self.advance();
            lhs = Expr::binary(op, lhs, self.unary_expr()?);
        }
    }

    fn unary_expr(&mut self) -> Result<Expr, ParseError> {
        match self.peek().tok {
            Tok::Bang => {
                self.advance();
                Ok(Expr::unary(UnaryOp::Not, self.unary_expr()?))
            }
            Tok::Minus => {
                self.advance();
                // `-` directly applied to a number literal is part of the literal.
                if matches!(self.peek().tok, Tok::Number(_)) || self.is_ident("inf") {
                    let lit = self.number_literal(true)?;
                    return self.postfix(Expr::Literal(lit));
                }
                Ok(Expr::unary(UnaryOp::Neg, self.unary_expr()?))
            }
            _ => self.postfix_expr(),
        }
    }

    fn number_literal(&mut self, negative: bool) -> Result<Value, ParseError> {
        let token = self.advance();
        match &token.tok {
            Tok::Ident(w) if w == "inf" => Ok(Value::Float(if negative { f64::NEG_INFINITY } else { f64::INFINITY })),
            Tok::Ident(w) if w == "nan" => Ok(Value::Float(f64::NAN)),
            Tok::Number(text) => {
                let is_float = text.contains(['.', 'e', 'E']);
                if is_float {
                    let x: f64 =
                        text.parse().map_err(|_| ParseError::syntax(token.pos, format!("invalid number `{text}`")))?;
                    Ok(Value::Float(if negative { -x } else { x }))
                } else {
                    let signed = if negative { format!("-{text}") } else { text.clone() };
                    signed
                        .parse::<i64>()
                        .map(Value::Int)
                        .map_err(|_| ParseError::syntax(token.pos, format!("integer `{signed}` out of range")))
                }
            }
            other => Err(ParseError::syntax(token.pos, format!("expected a number, found {other}"))),
        }
    }

    fn postfix_expr(&mut self) -> Result<Expr, ParseError> {
        let primary = self.primary()?;
        self.postfix(primary)
    }

    fn postfix(&mut self, mut expr: Expr) -> Result<Expr, ParseError> {
        while self.peek().tok == Tok::Dot {
            let dot_pos = self.advance().pos;
            let token = self.advance();
            match &token.tok {
                Tok::Number(text) => {
                    for part in text.split('.') {
                        let index: usize = part
                            .parse()
                            .map_err(|_| ParseError::syntax(token.pos, format!("invalid tuple index `{text}`")))?;
                        expr = Expr::TupleProj { operand: Box::new(expr), index };
                    }
                }
                Tok::Ident(member) => {
                    let Expr::Sync { target, offset: 0, default: None } = &expr else {
                        return Err(ParseError::syntax(
                            token.pos,
                            format!("`.{member}` can only be applied to a stream name"),
                        ));
                    };
                    let target = target.clone();
                    expr = match member.as_str() {
                        "offset" => self.offset_access(target)?,
                        "hold" => {
                            self.expect(&Tok::LParen)?;
                            self.expect_word("or")?;
                            self.expect(&Tok::Colon)?;
                            let default = self.literal()?;
                            self.expect(&Tok::RParen)?;
                            Expr::Hold { target, default }
                        }
                        "aggregate" => self.window_access(target)?,
                        other => {
                            return Err(ParseError::syntax(token.pos, format!("unknown stream method `{other}`")))
                        }
                    };
                }
                other => return Err(ParseError::syntax(dot_pos, format!("unexpected {other} after `.`"))),
            }
        }
        Ok(expr)
    }

    fn defaults_clause(&mut self) -> Result<Option<Value>, ParseError> {
        if self.peek().tok == Tok::Dot && matches!(self.peek_at(1), Tok::Ident(w) if w == "defaults") {
            self.advance();
            self.advance();
            self.expect(&Tok::LParen)?;
            self.expect_word("to")?;
            self.expect(&Tok::Colon)?;
            let v = self.literal()?;
            self.expect(&Tok::RParen)?;
            return Ok(Some(v));
        }
        Ok(None)
    }

    fn offset_access(&mut self, target: String) -> Result<Expr, ParseError> {
        self.expect(&Tok::LParen)?;
        self.expect_word("by")?;
        self.expect(&Tok::Colon)?;
        let pos = self.peek().pos;
        let negative = self.eat(&Tok::Minus);
        let Value::Int(mut offset) = self.number_literal(false)? else {
            return Err(ParseError::syntax(pos, "offsets must be integers"));
        };
        if negative {
            offset = -offset;
        }
        if offset > 0 {
            return Err(ParseError::syntax(pos, "future offsets are not supported"));
        }
        self.expect(&Tok::RParen)?;
        let default = self.defaults_clause()?;
        match (offset, default) {
            (0, None) => Ok(Expr::sync(target)),
            (0, Some(_)) => Err(ParseError::syntax(pos, "offset 0 takes no default")),
            (_, None) => Err(self.error_here("past offsets need `.defaults(to: <value>)`")),
            (_, Some(d)) => Ok(Expr::Sync { target, offset, default: Some(d) }),
        }
    }

    fn window_access(&mut self, target: String) -> Result<Expr, ParseError> {
        self.expect(&Tok::LParen)?;
        self.expect_word("over")?;
        self.expect(&Tok::Colon)?;
        let pos = self.peek().pos;
        let amount = self.rational()?;
        let unit = self.peek().clone();
        let duration = match &unit.tok {
            Tok::Ident(u) if u == "s" => amount,
            Tok::Ident(u) if u == "ms" => amount / Rational::from_integer(1000),
            other => return Err(ParseError::syntax(unit.pos, format!("expected `s` or `ms`, found {other}"))),
        };
        self.advance();
        if !duration.is_positive() {
            return Err(ParseError::syntax(pos, "window durations must be positive"));
        }
        self.expect(&Tok::Comma)?;
        self.expect_word("using")?;
        self.expect(&Tok::Colon)?;
        let agg_tok = self.advance();
        let aggregation = match &agg_tok.tok {
            Tok::Ident(name) => Aggregation::from_name(name),
            _ => None,
        }
        .ok_or_else(|| ParseError::syntax(agg_tok.pos, format!("unknown aggregation {}", agg_tok.tok)))?;
        self.expect(&Tok::RParen)?;
        let default = self.defaults_clause()?;
        if aggregation.needs_default() != default.is_some() {
            let message = if default.is_some() {
                format!("`{aggregation}` windows take no default")
            } else {
                format!("`{aggregation}` windows need `.defaults(to: <value>)`")
            };
            return Err(ParseError::syntax(agg_tok.pos, message));
        }
        Ok(Expr::Window { target, duration, aggregation, default })
    }

    /// A constant: number, boolean or tuple of constants.
    fn literal(&mut self) -> Result<Value, ParseError> {
        let token = self.peek().clone();
        match &token.tok {
            Tok::Minus => {
                self.advance();
                self.number_literal(true)
            }
            Tok::Number(_) => self.number_literal(false),
            Tok::Ident(w) if w == "inf" || w == "nan" => self.number_literal(false),
            Tok::Ident(w) if w == "true" || w == "false" => {
                self.advance();
                Ok(Value::Bool(w == "true"))
            }
            Tok::LParen => {
                self.advance();
                let mut elems = vec![self.literal()?];
                while self.eat(&Tok::Comma) {
                    elems.push(self.literal()?);
                }
                self.expect(&Tok::RParen)?;
                if elems.len() < 2 {
                    return Err(ParseError::syntax(token.pos, "tuples need at least two elements"));
                }
                Ok(Value::Tuple(elems))
            }
            other => Err(ParseError::syntax(token.pos, format!("expected a constant, found {other}"))),
        }
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let token = self.peek().clone();
        match &token.tok {
            Tok::Number(_) => Ok(Expr::Literal(self.number_literal(false)?)),
            Tok::Ident(w) if w == "true" || w == "false" => {
                self.advance();
                Ok(Expr::Literal(Value::Bool(w == "true")))
            }
            Tok::Ident(w) if w == "inf" || w == "nan" => Ok(Expr::Literal(self.number_literal(false)?)),
            Tok::Ident(_) => {
                let (name, pos) = self.expect_name()?;
                self.accesses.push((name.clone(), pos));
                Ok(Expr::sync(name))
            }
            Tok::LParen => {
                self.advance();
                let first = self.expr()?;
                if !self.eat(&Tok::Comma) {
                    self.expect(&Tok::RParen)?;
                    return Ok(first);
                }
                let mut elems = vec![first];
                loop {
                    elems.push(self.expr()?);
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
                self.expect(&Tok::RParen)?;
                let values = elems
                    .into_iter()
                    .map(|e| e.as_literal().cloned())
                    .collect::<Option<Vec<_>>>()
                    .ok_or_else(|| ParseError::syntax(token.pos, "tuples may only contain constants"))?;
                Ok(Expr::Literal(Value::Tuple(values)))
            }
            other => Err(ParseError::syntax(token.pos, format!("expected an expression, found {other}"))),
        }
    }
}
