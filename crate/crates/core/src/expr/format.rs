use super::ast::*;

/// Canonical source text for an expression.
///
/// Inserts the minimum parentheses needed for `parse(format(e))` to give
/// back `e`.
pub fn format(expr: &Expr) -> String {
    let mut out = String::new();
    write_expr(expr, &mut out);
    out
}

pub fn quote_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('\'');
    for c in s.chars() {
        match c {
            '\'' => out.push_str("\\'"),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('\'');
    out
}

fn precedence(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::Let { .. } => PREC_LET,
        ExprKind::Binary { op, .. } => op.precedence(),
        ExprKind::Unary { op: UnaryOp::Not, .. } => PREC_NOT,
        ExprKind::Unary { op: UnaryOp::Neg, .. } => PREC_NEG,
        _ => PREC_POSTFIX,
    }
}

fn write_operand(e: &Expr, needs_parens: bool, out: &mut String) {
    if needs_parens {
        out.push('(');
        write_expr(e, out);
        out.push(')');
    } else {
        write_expr(e, out);
    }
}

fn write_literal(lit: &Literal, out: &mut String) {
    match lit {
        Literal::Integer(i) => out.push_str(&i.to_string()),
        Literal::Float(f) => out.push_str(&format!("{f:?}")),
        Literal::String(s) => out.push_str(&quote_string(s)),
        Literal::Boolean(b) => out.push_str(if *b { "true" } else { "false" }),
        Literal::Date(d) => out.push_str(&format!("@{}", d.format("%Y-%m-%d"))),
        Literal::Monetary(m) => out.push_str(&m.to_string()),
        Literal::Undefined => out.push_str("undefined"),
    }
}

fn write_expr(e: &Expr, out: &mut String) {
    match &e.kind {
        ExprKind::Literal(lit) => write_literal(lit, out),
        ExprKind::EnumLiteral { enumeration, literal } => {
            out.push_str(&enumeration.name);
            out.push_str("::");
            out.push_str(&literal.name);
        }
        ExprKind::SelfRef => out.push_str("self"),
        ExprKind::Var(v) => out.push_str(&v.name),
        ExprKind::Nav { target, name } => {
            write_operand(target, precedence(target) < PREC_POSTFIX, out);
            out.push('.');
            out.push_str(&name.name);
        }
        ExprKind::Call { target, name, args } => {
            write_operand(target, precedence(target) < PREC_POSTFIX, out);
            out.push('.');
            out.push_str(&name.name);
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(a, out);
            }
            out.push(')');
        }
        ExprKind::Extent { class } => {
            out.push_str(&class.name);
            out.push_str(".allInstances()");
        }
        ExprKind::Unary { op: UnaryOp::Not, operand } => {
            out.push_str("not ");
            write_operand(operand, precedence(operand) < PREC_NOT, out);
        }
        ExprKind::Unary { op: UnaryOp::Neg, operand } => {
            out.push('-');
            // `--x` would still lex, but parenthesizing nested negation reads better.
            write_operand(operand, precedence(operand) <= PREC_NEG, out);
        }
        ExprKind::Binary { op, lhs, rhs } => {
            let p = op.precedence();
            let non_assoc = op.is_comparison();
            let lp = precedence(lhs);
            write_operand(lhs, lp < p || (non_assoc && lp == p), out);
            out.push(' ');
            out.push_str(op.symbol());
            out.push(' ');
            write_operand(rhs, precedence(rhs) <= p, out);
        }
        ExprKind::If { cond, then_branch, else_branch } => {
            out.push_str("if ");
            write_expr(cond, out);
            out.push_str(" then ");
            write_expr(then_branch, out);
            out.push_str(" else ");
            write_expr(else_branch, out);
            out.push_str(" endif");
        }
        ExprKind::Let { var, value, body } => {
            out.push_str("let ");
            out.push_str(&var.name);
            out.push_str(" = ");
            write_expr(value, out);
            out.push_str(" in ");
            write_expr(body, out);
        }
        ExprKind::Collection { target, op, iterator, arg } => {
            write_operand(target, precedence(target) < PREC_POSTFIX, out);
            out.push_str("->");
            out.push_str(op.name());
            out.push('(');
            if let Some(v) = iterator {
                out.push_str(&v.name);
                out.push_str(" | ");
            }
            if let Some(a) = arg {
                write_expr(a, out);
            }
            out.push(')');
        }
        ExprKind::IsUndefined(inner) => {
            out.push_str("isUndefined(");
            write_expr(inner, out);
            out.push(')');
        }
    }
}
