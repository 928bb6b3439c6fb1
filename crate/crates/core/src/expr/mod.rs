//! The constraint and operation language.
//!
//! An OCL-style subset: literals (including `12.50 EUR` and `@2024-05-01`),
//! navigation, `Class.allInstances()`, collection operations, `let`, `if`,
//! and the `isUndefined(e)` predicate. Evaluation is three-valued: every
//! failure is an [`Undefined`] with a reason, never a panic or an error.

mod ast;
mod check;
mod eval;
mod format;
mod lexer;
mod parser;

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

pub use ast::{BinaryOp, CollectionOp, Expr, ExprKind, Ident, Literal, Span, UnaryOp};
pub use check::{assignable, typecheck, Checked, RefKind, RefTarget, Reference, Type, TypeError, TypeErrorKind};
pub(crate) use check::{delegated_attribute, delegated_operation};
pub use eval::{
    values_equal, EvalResult, Evaluator, FeatureKind, FeatureResolution, FeatureResolver, Resolution, Undefined,
    UndefinedReason, Via, DEFAULT_MAX_DEPTH,
};
pub use format::{format, quote_string};
pub use lexer::KEYWORDS;
pub use parser::parse;

use crate::id::ElementId;
use crate::model::ProjectModel;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ParseError {
    pub message: String,
    pub span: Span,
    /// 1-based.
    pub line: usize,
    /// 1-based, in characters.
    pub column: usize,
    pub expected: Vec<String>,
}

impl ParseError {
    pub(crate) fn at(src: &str, span: Span, message: impl Into<String>, expected: Vec<String>) -> Self {
        let before = &src[..span.start.min(src.len())];
        let line = before.matches('\n').count() + 1;
        let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
        Self { message: message.into(), span, line, column, expected }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)?;
        if !self.expected.is_empty() {
            write!(f, " (expected {})", self.expected.join(", "))?;
        }
        Ok(())
    }
}

/// Parse or type failure of an expression source.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExprError {
    #[error("parse error at {0}")]
    Parse(#[from] ParseError),
    #[error("type error: {0}")]
    Type(#[from] TypeError),
}

/// The external names an expression depends on, by kind.
///
/// Attribute versus role is a property of the model, so the expression is
/// resolved against `context` first.
pub fn references(
    expr: &Expr,
    model: &ProjectModel,
    context: &ElementId,
    params: &[(String, Type)],
) -> Result<BTreeSet<(RefKind, String)>, TypeError> {
    let checked = typecheck(expr, model, context, params)?;
    Ok(checked.refs.into_iter().map(|r| (r.kind, r.name)).collect())
}

/// Evaluates a closed expression such as `12.50 EUR`, `-3` or
/// `Genre::Drama`. Anything that reads the model (`self`, navigation,
/// `allInstances`) is rejected.
pub fn evaluate_literal(model: &ProjectModel, src: &str) -> Result<crate::value::Value, String> {
    fn closed(e: &Expr) -> bool {
        !matches!(
            e.kind,
            ExprKind::SelfRef
                | ExprKind::Var(_)
                | ExprKind::Nav { .. }
                | ExprKind::Call { .. }
                | ExprKind::Extent { .. }
        ) && e.children().into_iter().all(closed)
    }
    let ast = parse(src).map_err(|e| format!("`{src}`: {e}"))?;
    if !closed(&ast) {
        return Err(format!("`{src}` is not a constant"));
    }
    let resolver = crate::engine::DelegatingResolver;
    let ev = Evaluator::new(model, &resolver);
    ev.eval(&ast, &ElementId::new(""), &[]).map_err(|u| format!("`{src}` is undefined: {}", u.detail))
}
