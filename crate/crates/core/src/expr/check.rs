use std::collections::HashSet;
use std::fmt;

use thiserror::Error;

use super::ast::*;
use crate::id::ElementId;
use crate::model::{AttributeDef, OperationDef, ProjectModel};
use crate::value::{DataType, TypeRef};

/// Static type of an expression.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Type {
    String,
    Integer,
    Float,
    Boolean,
    Date,
    Monetary,
    Enum(ElementId),
    Object(ElementId),
    Collection(Box<Type>),
    /// Type of the `undefined` literal; conforms to every type.
    Undefined,
}

impl Type {
    pub fn from_ref(ty: &TypeRef) -> Type {
        match ty {
            TypeRef::Data(DataType::String) => Type::String,
            TypeRef::Data(DataType::Integer) => Type::Integer,
            TypeRef::Data(DataType::Float) => Type::Float,
            TypeRef::Data(DataType::Boolean) => Type::Boolean,
            TypeRef::Data(DataType::Date) => Type::Date,
            TypeRef::Data(DataType::MonetaryValue) => Type::Monetary,
            TypeRef::Enumeration(id) => Type::Enum(id.clone()),
            TypeRef::Class(id) => Type::Object(id.clone()),
        }
    }

    pub fn collection(elem: Type) -> Option<Type> {
        (elem != Type::Undefined).then(|| Type::Collection(Box::new(elem)))
    }

    fn is_numeric(&self) -> bool {
        matches!(self, Type::Integer | Type::Float)
    }

    pub fn display<'a>(&'a self, model: &'a ProjectModel) -> TypeDisplay<'a> {
        TypeDisplay { ty: self, model }
    }
}

pub struct TypeDisplay<'a> {
    ty: &'a Type,
    model: &'a ProjectModel,
}

impl fmt::Display for TypeDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.ty {
            Type::String => f.write_str("String"),
            Type::Integer => f.write_str("Integer"),
            Type::Float => f.write_str("Float"),
            Type::Boolean => f.write_str("Boolean"),
            Type::Date => f.write_str("Date"),
            Type::Monetary => f.write_str("MonetaryValue"),
            Type::Enum(id) | Type::Object(id) => f.write_str(self.model.element_name(id).unwrap_or(id.as_str())),
            Type::Collection(e) => write!(f, "Collection({})", e.display(self.model)),
            Type::Undefined => f.write_str("Undefined"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TypeErrorKind {
    UnknownFeature,
    UnknownVariable,
    UnknownClass,
    UnknownEnumeration,
    UnknownLiteral,
    OperandMismatch,
    ArityMismatch,
    NotCollection,
    NonBooleanConstraint,
    ResultMismatch,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{message}")]
pub struct TypeError {
    pub kind: TypeErrorKind,
    pub message: String,
    pub span: Span,
}

impl TypeError {
    fn new(kind: TypeErrorKind, span: Span, message: impl Into<String>) -> Self {
        Self { kind, message: message.into(), span }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RefKind {
    Class,
    Attribute,
    Role,
    Enumeration,
    EnumLiteral,
    Delegation,
    Operation,
}

/// What a name in the source resolved to.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum RefTarget {
    Element(ElementId),
    Role { association: ElementId, end: usize },
    Literal { enumeration: ElementId, literal: String },
}

/// One resolved external name occurrence.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Reference {
    pub kind: RefKind,
    pub name: String,
    pub target: RefTarget,
    /// Span of the name token itself.
    pub span: Span,
}

#[derive(Debug, Clone)]
pub struct Checked {
    pub ty: Type,
    /// In source order.
    pub refs: Vec<Reference>,
}

/// Type-checks `expr` with `self` bound to an instance of `context` and
/// `params` in scope.
pub fn typecheck(
    expr: &Expr,
    model: &ProjectModel,
    context: &ElementId,
    params: &[(String, Type)],
) -> Result<Checked, TypeError> {
    let mut cx = Checker { model, context, scopes: params.to_vec(), refs: Vec::new() };
    let ty = cx.check(expr)?;
    let mut refs = cx.refs;
    refs.sort_by_key(|r| r.span.start);
    Ok(Checked { ty, refs })
}

/// Whether a value of type `actual` may be used where `expected` is declared.
pub fn assignable(model: &ProjectModel, actual: &Type, expected: &Type) -> bool {
    match (actual, expected) {
        (Type::Undefined, _) => true,
        (Type::Integer, Type::Float) => true,
        (Type::Object(sub), Type::Object(sup)) => model.conforms_to(sub, sup),
        (Type::Collection(a), Type::Collection(b)) => assignable(model, a, b),
        (a, b) => a == b,
    }
}

/// Static attribute lookup through delegation targets, in declaration
/// order, depth first.
pub(crate) fn delegated_attribute<'m>(
    model: &'m ProjectModel,
    class: &ElementId,
    name: &str,
) -> Option<&'m AttributeDef> {
    let mut seen = HashSet::new();
    find_delegated(model, class, &mut seen, &|m, c| m.effective_attributes(c).into_iter().find(|a| a.name == name))
}

pub(crate) fn delegated_operation<'m>(
    model: &'m ProjectModel,
    class: &ElementId,
    name: &str,
) -> Option<&'m OperationDef> {
    let mut seen = HashSet::new();
    find_delegated(model, class, &mut seen, &|m, c| m.effective_operations(c).into_iter().find(|o| o.name == name))
}

fn find_delegated<'m, T>(
    model: &'m ProjectModel,
    class: &ElementId,
    seen: &mut HashSet<ElementId>,
    own: &dyn Fn(&'m ProjectModel, &ElementId) -> Option<&'m T>,
) -> Option<&'m T> {
    if !seen.insert(class.clone()) {
        return None;
    }
    for d in model.effective_delegations(class) {
        if let Some(found) = own(model, &d.target) {
            return Some(found);
        }
        if let Some(found) = find_delegated(model, &d.target, seen, own) {
            return Some(found);
        }
    }
    None
}

struct Checker<'m> {
    model: &'m ProjectModel,
    context: &'m ElementId,
    scopes: Vec<(String, Type)>,
    refs: Vec<Reference>,
}

impl<'m> Checker<'m> {
    fn show(&self, ty: &Type) -> String {
        ty.display(self.model).to_string()
    }

    fn record(&mut self, kind: RefKind, ident: &Ident, target: RefTarget) {
        self.refs.push(Reference { kind, name: ident.name.clone(), target, span: ident.span });
    }

    fn mismatch(&self, span: Span, what: &str, l: &Type, r: &Type) -> TypeError {
        TypeError::new(
            TypeErrorKind::OperandMismatch,
            span,
            format!("`{what}` not defined for {} and {}", self.show(l), self.show(r)),
        )
    }

    fn expect_boolean(&mut self, e: &Expr) -> Result<(), TypeError> {
        let ty = self.check(e)?;
        if matches!(ty, Type::Boolean | Type::Undefined) {
            Ok(())
        } else {
            Err(TypeError::new(
                TypeErrorKind::OperandMismatch,
                e.span,
                format!("expected Boolean, found {}", self.show(&ty)),
            ))
        }
    }

    fn comparable(&self, l: &Type, r: &Type) -> bool {
        match (l, r) {
            (Type::Undefined, _) | (_, Type::Undefined) => true,
            (a, b) if a.is_numeric() && b.is_numeric() => true,
            (Type::Object(a), Type::Object(b)) => self.model.conforms_to(a, b) || self.model.conforms_to(b, a),
            (Type::Collection(a), Type::Collection(b)) => self.comparable(a, b),
            (a, b) => a == b,
        }
    }

    fn join(&self, span: Span, a: &Type, b: &Type) -> Result<Type, TypeError> {
        let joined = match (a, b) {
            (Type::Undefined, t) | (t, Type::Undefined) => Some(t.clone()),
            (x, y) if x == y => Some(x.clone()),
            (Type::Object(x), Type::Object(y)) => self
                .model
                .superchain(x)
                .into_iter()
                .find(|c| self.model.conforms_to(y, &c.id))
                .map(|c| Type::Object(c.id.clone())),
            (Type::Collection(x), Type::Collection(y)) => self.join(span, x, y).ok().and_then(Type::collection),
            _ => None,
        };
        joined.ok_or_else(|| self.mismatch(span, "if-then-else", a, b))
    }

    fn check(&mut self, e: &Expr) -> Result<Type, TypeError> {
        match &e.kind {
            ExprKind::Literal(lit) => Ok(match lit {
                Literal::Integer(_) => Type::Integer,
                Literal::Float(_) => Type::Float,
                Literal::String(_) => Type::String,
                Literal::Boolean(_) => Type::Boolean,
                Literal::Date(_) => Type::Date,
                Literal::Monetary(_) => Type::Monetary,
                Literal::Undefined => Type::Undefined,
            }),
            ExprKind::EnumLiteral { enumeration, literal } => {
                let Some(en) = self.model.enumeration_by_name(&enumeration.name) else {
                    return Err(TypeError::new(
                        TypeErrorKind::UnknownEnumeration,
                        enumeration.span,
                        format!("unknown enumeration `{}`", enumeration.name),
                    ));
                };
                if !en.literals.contains(&literal.name) {
                    return Err(TypeError::new(
                        TypeErrorKind::UnknownLiteral,
                        literal.span,
                        format!("`{}` is not a literal of {}", literal.name, en.name),
                    ));
                }
                let id = en.id.clone();
                self.record(RefKind::Enumeration, enumeration, RefTarget::Element(id.clone()));
                self.record(
                    RefKind::EnumLiteral,
                    literal,
                    RefTarget::Literal { enumeration: id.clone(), literal: literal.name.clone() },
                );
                Ok(Type::Enum(id))
            }
            ExprKind::SelfRef => Ok(Type::Object(self.context.clone())),
            ExprKind::Var(v) => {
                self.scopes.iter().rev().find(|(n, _)| n == &v.name).map(|(_, t)| t.clone()).ok_or_else(|| {
                    TypeError::new(TypeErrorKind::UnknownVariable, v.span, format!("unknown variable `{}`", v.name))
                })
            }
            ExprKind::Extent { class } => {
                let Some(c) = self.model.class_by_name(&class.name) else {
                    return Err(TypeError::new(
                        TypeErrorKind::UnknownClass,
                        class.span,
                        format!("unknown class `{}`", class.name),
                    ));
                };
                let id = c.id.clone();
                self.record(RefKind::Class, class, RefTarget::Element(id.clone()));
                Ok(Type::Collection(Box::new(Type::Object(id))))
            }
            ExprKind::Nav { target, name } => {
                let tt = self.check(target)?;
                self.navigate(&tt, name)
            }
            ExprKind::Call { target, name, args } => {
                let tt = self.check(target)?;
                let mut arg_types = Vec::with_capacity(args.len());
                for a in args {
                    arg_types.push((self.check(a)?, a.span));
                }
                self.call(&tt, name, &arg_types, e.span)
            }
            ExprKind::Unary { op: UnaryOp::Not, operand } => {
                self.expect_boolean(operand)?;
                Ok(Type::Boolean)
            }
            ExprKind::Unary { op: UnaryOp::Neg, operand } => {
                let t = self.check(operand)?;
                match t {
                    Type::Integer | Type::Float | Type::Monetary | Type::Undefined => Ok(t),
                    _ => Err(TypeError::new(
                        TypeErrorKind::OperandMismatch,
                        e.span,
                        format!("cannot negate {}", self.show(&t)),
                    )),
                }
            }
            ExprKind::Binary { op, lhs, rhs } => self.binary(*op, lhs, rhs, e.span),
            ExprKind::If { cond, then_branch, else_branch } => {
                self.expect_boolean(cond)?;
                let a = self.check(then_branch)?;
                let b = self.check(else_branch)?;
                self.join(e.span, &a, &b)
            }
            ExprKind::Let { var, value, body } => {
                let vt = self.check(value)?;
                self.scopes.push((var.name.clone(), vt));
                let r = self.check(body);
                self.scopes.pop();
                r
            }
            ExprKind::IsUndefined(inner) => {
                self.check(inner)?;
                Ok(Type::Boolean)
            }
            ExprKind::Collection { target, op, iterator, arg } => {
                let tt = self.check(target)?;
                let Type::Collection(elem) = tt else {
                    return Err(TypeError::new(
                        TypeErrorKind::NotCollection,
                        target.span,
                        format!("`->{}` needs a collection, found {}", op.name(), self.show(&tt)),
                    ));
                };
                let elem = *elem;
                match op {
                    CollectionOp::Size => Ok(Type::Integer),
                    CollectionOp::IsEmpty | CollectionOp::NotEmpty => Ok(Type::Boolean),
                    CollectionOp::Includes => {
                        let a = arg.as_deref().expect("includes has an argument");
                        let at = self.check(a)?;
                        if self.comparable(&elem, &at) {
                            Ok(Type::Boolean)
                        } else {
                            Err(self.mismatch(a.span, "includes", &elem, &at))
                        }
                    }
                    CollectionOp::Sum => match elem {
                        Type::Integer | Type::Float | Type::Monetary => Ok(elem),
                        other => Err(TypeError::new(
                            TypeErrorKind::OperandMismatch,
                            e.span,
                            format!("`->sum()` not defined for {}", self.show(&other)),
                        )),
                    },
                    CollectionOp::ForAll
                    | CollectionOp::Exists
                    | CollectionOp::Select
                    | CollectionOp::Reject
                    | CollectionOp::Collect => {
                        let var = iterator.as_ref().expect("iterator op has a variable");
                        let body = arg.as_deref().expect("iterator op has a body");
                        self.scopes.push((var.name.clone(), elem.clone()));
                        let r = if *op == CollectionOp::Collect {
                            self.check(body)
                        } else {
                            self.expect_boolean(body).map(|_| Type::Boolean)
                        };
                        self.scopes.pop();
                        let bt = r?;
                        match op {
                            CollectionOp::ForAll | CollectionOp::Exists => Ok(Type::Boolean),
                            CollectionOp::Select | CollectionOp::Reject => Ok(Type::Collection(Box::new(elem))),
                            _ => Type::collection(bt).ok_or_else(|| {
                                TypeError::new(
                                    TypeErrorKind::OperandMismatch,
                                    body.span,
                                    "`->collect` body has no definite type",
                                )
                            }),
                        }
                    }
                }
            }
        }
    }

    fn navigate(&mut self, target: &Type, name: &Ident) -> Result<Type, TypeError> {
        let unknown = |model: &ProjectModel| {
            TypeError::new(
                TypeErrorKind::UnknownFeature,
                name.span,
                format!("{} has no feature `{}`", target.display(model), name.name),
            )
        };
        let Type::Object(class) = target else {
            return Err(unknown(self.model));
        };
        let model = self.model;
        if let Some(a) = model.effective_attributes(class).into_iter().find(|a| a.name == name.name) {
            self.record(RefKind::Attribute, name, RefTarget::Element(a.id.clone()));
            return Ok(Type::from_ref(&a.ty));
        }
        if let Some(r) = model.navigable_roles(class).into_iter().find(|r| r.role() == name.name) {
            self.record(RefKind::Role, name, RefTarget::Role { association: r.association.id.clone(), end: r.to_end });
            let obj = Type::Object(r.end().class.clone());
            return Ok(if r.end().multiplicity.is_single() { obj } else { Type::Collection(Box::new(obj)) });
        }
        if let Some(d) = model.effective_delegations(class).into_iter().find(|d| d.name == name.name) {
            self.record(RefKind::Delegation, name, RefTarget::Element(d.id.clone()));
            return Ok(Type::Object(d.target.clone()));
        }
        if let Some(a) = delegated_attribute(model, class, &name.name) {
            self.record(RefKind::Attribute, name, RefTarget::Element(a.id.clone()));
            return Ok(Type::from_ref(&a.ty));
        }
        Err(unknown(model))
    }

    fn call(&mut self, target: &Type, name: &Ident, args: &[(Type, Span)], span: Span) -> Result<Type, TypeError> {
        let model = self.model;
        if let Type::Object(class) = target {
            let op = model
                .effective_operations(class)
                .into_iter()
                .find(|o| o.name == name.name)
                .or_else(|| delegated_operation(model, class, &name.name));
            if let Some(op) = op {
                if op.params.len() != args.len() {
                    return Err(TypeError::new(
                        TypeErrorKind::ArityMismatch,
                        span,
                        format!("`{}` takes {} argument(s), {} given", op.name, op.params.len(), args.len()),
                    ));
                }
                for (p, (at, aspan)) in op.params.iter().zip(args) {
                    let pt = Type::from_ref(&p.ty);
                    if !assignable(model, at, &pt) {
                        return Err(TypeError::new(
                            TypeErrorKind::OperandMismatch,
                            *aspan,
                            format!("argument `{}` expects {}, found {}", p.name, self.show(&pt), self.show(at)),
                        ));
                    }
                }
                self.record(RefKind::Operation, name, RefTarget::Element(op.id.clone()));
                return Ok(Type::from_ref(&op.return_type));
            }
        }
        let builtin = builtin_call(target, &name.name);
        match builtin {
            Some((params, ret)) => {
                if params.len() != args.len() {
                    return Err(TypeError::new(
                        TypeErrorKind::ArityMismatch,
                        span,
                        format!("`{}` takes {} argument(s), {} given", name.name, params.len(), args.len()),
                    ));
                }
                for (pt, (at, aspan)) in params.iter().zip(args) {
                    if !assignable(model, at, pt) {
                        return Err(self.mismatch(*aspan, &name.name, pt, at));
                    }
                }
                Ok(ret)
            }
            None => Err(TypeError::new(
                TypeErrorKind::UnknownFeature,
                name.span,
                format!("{} has no operation `{}`", self.show(target), name.name),
            )),
        }
    }

    fn binary(&mut self, op: BinaryOp, lhs: &Expr, rhs: &Expr, span: Span) -> Result<Type, TypeError> {
        use BinaryOp::*;
        if matches!(op, And | Or | Implies) {
            self.expect_boolean(lhs)?;
            self.expect_boolean(rhs)?;
            return Ok(Type::Boolean);
        }
        let l = self.check(lhs)?;
        let r = self.check(rhs)?;
        if matches!(op, Eq | Ne) {
            return if self.comparable(&l, &r) {
                Ok(Type::Boolean)
            } else {
                Err(self.mismatch(span, op.symbol(), &l, &r))
            };
        }
        // An `undefined` operand takes the type of the other side.
        let (l, r) = match (&l, &r) {
            (Type::Undefined, Type::Undefined) => {
                return Ok(if op.is_comparison() { Type::Boolean } else { Type::Undefined })
            }
            (Type::Undefined, t) => (t.clone(), t.clone()),
            (t, Type::Undefined) => (t.clone(), t.clone()),
            _ => (l, r),
        };
        let out = match op {
            Lt | Le | Gt | Ge => match (&l, &r) {
                (a, b) if a.is_numeric() && b.is_numeric() => Some(Type::Boolean),
                (Type::String, Type::String) | (Type::Date, Type::Date) | (Type::Monetary, Type::Monetary) => {
                    Some(Type::Boolean)
                }
                _ => None,
            },
            Add => match (&l, &r) {
                (Type::Integer, Type::Integer) => Some(Type::Integer),
                (a, b) if a.is_numeric() && b.is_numeric() => Some(Type::Float),
                (Type::Monetary, Type::Monetary) => Some(Type::Monetary),
                (Type::String, Type::String) => Some(Type::String),
                _ => None,
            },
            Sub => match (&l, &r) {
                (Type::Integer, Type::Integer) => Some(Type::Integer),
                (a, b) if a.is_numeric() && b.is_numeric() => Some(Type::Float),
                (Type::Monetary, Type::Monetary) => Some(Type::Monetary),
                _ => None,
            },
            Mul => match (&l, &r) {
                (Type::Integer, Type::Integer) => Some(Type::Integer),
                (a, b) if a.is_numeric() && b.is_numeric() => Some(Type::Float),
                (Type::Monetary, Type::Integer) | (Type::Integer, Type::Monetary) => Some(Type::Monetary),
                _ => None,
            },
            Div => (l.is_numeric() && r.is_numeric()).then_some(Type::Float),
            Mod => (l == Type::Integer && r == Type::Integer).then_some(Type::Integer),
            And | Or | Implies | Eq | Ne => unreachable!(),
        };
        out.ok_or_else(|| self.mismatch(span, op.symbol(), &l, &r))
    }
}

/// Signature of a built-in operation: parameter types and result type.
pub(crate) fn builtin_call(target: &Type, name: &str) -> Option<(Vec<Type>, Type)> {
    let sig = |params: Vec<Type>, ret: Type| Some((params, ret));
    match (target, name) {
        (Type::Collection(_), _) => None,
        (_, "toString") => sig(vec![], Type::String),
        (Type::String, "size") => sig(vec![], Type::Integer),
        (Type::String, "toUpper" | "toLower") => sig(vec![], Type::String),
        (Type::String, "concat") => sig(vec![Type::String], Type::String),
        (Type::Integer, "abs") => sig(vec![], Type::Integer),
        (Type::Integer, "toFloat") => sig(vec![], Type::Float),
        (Type::Float, "abs") => sig(vec![], Type::Float),
        (Type::Float, "floor" | "round") => sig(vec![], Type::Integer),
        (Type::Monetary, "amount") => sig(vec![], Type::Float),
        (Type::Monetary, "currency") => sig(vec![], Type::String),
        (Type::Date, "year" | "month" | "day") => sig(vec![], Type::Integer),
        _ => None,
    }
}
