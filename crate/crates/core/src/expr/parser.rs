use chrono::NaiveDate;

use super::ast::*;
use super::lexer::{lex, Tok, Token};
use super::ParseError;
use crate::money::{valid_currency, Money};

const MAX_NESTING: usize = 96;

/// Parses one expression; the whole input must be consumed.
pub fn parse(src: &str) -> Result<Expr, ParseError> {
    let tokens = lex(src)?;
    let mut p = Parser { src, tokens, pos: 0, depth: 0 };
    let expr = p.expr()?;
    if p.peek() != &Tok::Eof {
        return Err(p.unexpected(&["end of input"]));
    }
    Ok(expr)
}

struct Parser<'s> {
    src: &'s str,
    tokens: Vec<Token>,
    pos: usize,
    depth: usize,
}

impl<'s> Parser<'s> {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, ahead: usize) -> &Tok {
        let idx = (self.pos + ahead).min(self.tokens.len() - 1);
        &self.tokens[idx].tok
    }

    fn span(&self) -> Span {
        self.tokens[self.pos].span
    }

    fn prev_span(&self) -> Span {
        self.tokens[self.pos.saturating_sub(1)].span
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Keyword(x) if *x == k)
    }

    fn unexpected(&self, expected: &[&str]) -> ParseError {
        ParseError::at(
            self.src,
            self.span(),
            format!("unexpected {}", self.peek().describe()),
            expected.iter().map(|s| s.to_string()).collect(),
        )
    }

    fn expect_sym(&mut self, s: &'static str) -> Result<Span, ParseError> {
        if self.is_sym(s) {
            Ok(self.bump().span)
        } else {
            Err(self.unexpected(&[s]))
        }
    }

    fn expect_kw(&mut self, k: &'static str) -> Result<Span, ParseError> {
        if self.is_kw(k) {
            Ok(self.bump().span)
        } else {
            Err(self.unexpected(&[k]))
        }
    }

    fn ident(&mut self) -> Result<Ident, ParseError> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                let span = self.bump().span;
                Ok(Ident { name, span })
            }
            _ => Err(self.unexpected(&["identifier"])),
        }
    }

    fn nested<T>(&mut self, f: impl FnOnce(&mut Self) -> Result<T, ParseError>) -> Result<T, ParseError> {
        self.depth += 1;
        if self.depth > MAX_NESTING {
            return Err(ParseError::at(self.src, self.span(), "expression nested too deeply", vec![]));
        }
        let r = stacker::maybe_grow(64 * 1024, 1024 * 1024, || f(self));
        self.depth -= 1;
        r
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        self.nested(|p| p.implies())
    }

    fn binary_level(
        &mut self,
        next: fn(&mut Self) -> Result<Expr, ParseError>,
        ops: &[(Tok, BinaryOp)],
    ) -> Result<Expr, ParseError> {
        let mut lhs = next(self)?;
        while let Some((_, op)) = ops.iter().find(|(t, _)| t == self.peek()) {
            let op = *op;
            self.bump();
            let rhs = next(self)?;
            let span = lhs.span.to(rhs.span);
            lhs = Expr { kind: ExprKind::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }, span };
        }
        Ok(lhs)
    }

    fn implies(&mut self) -> Result<Expr, ParseError> {
        self.binary_level(Self::or, &[(Tok::Keyword("implies"), BinaryOp::Implies)])
    }

    fn or(&mut self) -> Result<Expr, ParseError> {
        self.binary_level(Self::and, &[(Tok::Keyword("or"), BinaryOp::Or)])
    }

    fn and(&mut self) -> Result<Expr, ParseError> {
        self.binary_level(Self::not, &[(Tok::Keyword("and"), BinaryOp::And)])
    }

    fn not(&mut self) -> Result<Expr, ParseError> {
        if self.is_kw("not") {
            let start = self.bump().span;
            let operand = self.nested(|p| p.not())?;
            let span = start.to(operand.span);
            return Ok(Expr { kind: ExprKind::Unary { op: UnaryOp::Not, operand: Box::new(operand) }, span });
        }
        self.comparison()
    }

    fn comparison(&mut self) -> Result<Expr, ParseError> {
        const CMP: [(&str, BinaryOp); 6] = [
            ("=", BinaryOp::Eq),
            ("<>", BinaryOp::Ne),
            ("<", BinaryOp::Lt),
            ("<=", BinaryOp::Le),
            (">", BinaryOp::Gt),
            (">=", BinaryOp::Ge),
        ];
        let lhs = self.additive()?;
        if let Some((_, op)) = CMP.iter().find(|(s, _)| self.is_sym(s)) {
            let op = *op;
            self.bump();
            let rhs = self.additive()?;
            let span = lhs.span.to(rhs.span);
            return Ok(Expr { kind: ExprKind::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }, span });
        }
        Ok(lhs)
    }

    fn additive(&mut self) -> Result<Expr, ParseError> {
        self.binary_level(Self::multiplicative, &[(Tok::Sym("+"), BinaryOp::Add), (Tok::Sym("-"), BinaryOp::Sub)])
    }

    fn multiplicative(&mut self) -> Result<Expr, ParseError> {
        self.binary_level(
            Self::unary,
            &[(Tok::Sym("*"), BinaryOp::Mul), (Tok::Sym("/"), BinaryOp::Div), (Tok::Keyword("mod"), BinaryOp::Mod)],
        )
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.is_sym("-") {
            let start = self.bump().span;
            let operand = self.nested(|p| p.unary())?;
            let span = start.to(operand.span);
            return Ok(Expr { kind: ExprKind::Unary { op: UnaryOp::Neg, operand: Box::new(operand) }, span });
        }
        self.postfix()
    }

    fn postfix(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.primary()?;
        loop {
            if self.is_sym(".") {
                self.bump();
                let name = self.ident()?;
                if self.is_sym("(") {
                    let args = self.args()?;
                    let span = e.span.to(self.prev_span());
                    e = Expr { kind: ExprKind::Call { target: Box::new(e), name, args }, span };
                } else {
                    let span = e.span.to(name.span);
                    e = Expr { kind: ExprKind::Nav { target: Box::new(e), name }, span };
                }
            } else if self.is_sym("->") {
                self.bump();
                let name = self.ident()?;
                let Some(op) = CollectionOp::from_name(&name.name) else {
                    let expected: Vec<String> = CollectionOp::ALL.iter().map(|o| o.name().to_owned()).collect();
                    return Err(ParseError::at(
                        self.src,
                        name.span,
                        format!("unknown collection operation `{}`", name.name),
                        expected,
                    ));
                };
                self.expect_sym("(")?;
                let (iterator, arg) = if op.is_iterator() {
                    let var = self.ident()?;
                    self.expect_sym("|")?;
                    let body = self.expr()?;
                    (Some(var), Some(Box::new(body)))
                } else if op == CollectionOp::Includes {
                    (None, Some(Box::new(self.expr()?)))
                } else {
                    (None, None)
                };
                self.expect_sym(")")?;
                let span = e.span.to(self.prev_span());
                e = Expr { kind: ExprKind::Collection { target: Box::new(e), op, iterator, arg }, span };
            } else {
                return Ok(e);
            }
        }
    }

    fn args(&mut self) -> Result<Vec<Expr>, ParseError> {
        self.expect_sym("(")?;
        let mut args = Vec::new();
        if !self.is_sym(")") {
            loop {
                args.push(self.expr()?);
                if self.is_sym(",") {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect_sym(")")?;
        Ok(args)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let start = self.span();
        let lit = |kind| Ok(Expr { kind: ExprKind::Literal(kind), span: start });
        match self.peek().clone() {
            Tok::Number { text, is_float } => {
                self.bump();
                if let Tok::Ident(cur) = self.peek().clone() {
                    if valid_currency(&cur) {
                        let cur_span = self.bump().span;
                        let money = Money::parse(&text, &cur)
                            .map_err(|e| ParseError::at(self.src, start.to(cur_span), e.to_string(), vec![]))?;
                        return Ok(Expr {
                            kind: ExprKind::Literal(Literal::Monetary(money)),
                            span: start.to(cur_span),
                        });
                    }
                }
                if is_float {
                    match text.parse::<f64>() {
                        Ok(f) if f.is_finite() => lit(Literal::Float(f)),
                        _ => Err(ParseError::at(self.src, start, "float literal out of range", vec![])),
                    }
                } else {
                    match text.parse::<i64>() {
                        Ok(i) => lit(Literal::Integer(i)),
                        Err(_) => Err(ParseError::at(self.src, start, "integer literal out of range", vec![])),
                    }
                }
            }
            Tok::Str(s) => {
                self.bump();
                lit(Literal::String(s))
            }
            Tok::Date(d) => {
                self.bump();
                match NaiveDate::parse_from_str(&d, "%Y-%m-%d") {
                    Ok(date) if d.len() == 10 => lit(Literal::Date(date)),
                    _ => Err(ParseError::at(
                        self.src,
                        start,
                        format!("invalid date literal `@{d}`"),
                        vec!["@YYYY-MM-DD".into()],
                    )),
                }
            }
            Tok::Keyword("true") => {
                self.bump();
                lit(Literal::Boolean(true))
            }
            Tok::Keyword("false") => {
                self.bump();
                lit(Literal::Boolean(false))
            }
            Tok::Keyword("undefined") => {
                self.bump();
                lit(Literal::Undefined)
            }
            Tok::Keyword("self") => {
                self.bump();
                Ok(Expr { kind: ExprKind::SelfRef, span: start })
            }
            Tok::Keyword("isUndefined") => {
                self.bump();
                self.expect_sym("(")?;
                let inner = self.expr()?;
                self.expect_sym(")")?;
                Ok(Expr { kind: ExprKind::IsUndefined(Box::new(inner)), span: start.to(self.prev_span()) })
            }
            Tok::Keyword("if") => {
                self.bump();
                let cond = self.expr()?;
                self.expect_kw("then")?;
                let then_branch = self.expr()?;
                self.expect_kw("else")?;
                let else_branch = self.expr()?;
                let end = self.expect_kw("endif")?;
                Ok(Expr {
                    kind: ExprKind::If {
                        cond: Box::new(cond),
                        then_branch: Box::new(then_branch),
                        else_branch: Box::new(else_branch),
                    },
                    span: start.to(end),
                })
            }
            Tok::Keyword("let") => {
                self.bump();
                let var = self.ident()?;
                self.expect_sym("=")?;
                let value = self.expr()?;
                self.expect_kw("in")?;
                let body = self.expr()?;
                let span = start.to(body.span);
                Ok(Expr { kind: ExprKind::Let { var, value: Box::new(value), body: Box::new(body) }, span })
            }
            Tok::Sym("(") => {
                self.bump();
                let inner = self.expr()?;
                self.expect_sym(")")?;
                Ok(inner)
            }
            Tok::Ident(_) => {
                let name = self.ident()?;
                if self.is_sym("::") {
                    self.bump();
                    let literal = self.ident()?;
                    let span = name.span.to(literal.span);
                    return Ok(Expr { kind: ExprKind::EnumLiteral { enumeration: name, literal }, span });
                }
                if self.is_sym(".")
                    && matches!(self.peek_at(1), Tok::Ident(n) if n == "allInstances")
                    && matches!(self.peek_at(2), Tok::Sym("("))
                    && matches!(self.peek_at(3), Tok::Sym(")"))
                {
                    for _ in 0..4 {
                        self.bump();
                    }
                    let span = name.span.to(self.prev_span());
                    return Ok(Expr { kind: ExprKind::Extent { class: name }, span });
                }
                let span = name.span;
                Ok(Expr { kind: ExprKind::Var(name), span })
            }
            _ => Err(self.unexpected(&["literal", "identifier", "self", "(", "if", "let", "not", "-"])),
        }
    }
}
