use std::cell::{Cell, RefCell};
use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};
use std::fmt;
use std::rc::Rc;

use chrono::Datelike;

use super::ast::*;
use super::parse;
use crate::id::ElementId;
use crate::model::{ObjectInst, OperationDef, ProjectModel, Slot};
use crate::money::MoneyError;
use crate::value::{DataType, TypeRef, Value};

pub const DEFAULT_MAX_DEPTH: usize = 256;

const STACK_RED_ZONE: usize = 128 * 1024;
const STACK_GROWTH: usize = 2 * 1024 * 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UndefinedReason {
    UnsetSlot,
    DivisionByZero,
    CurrencyMismatch,
    MissingDelegate,
    RecursionLimit,
    Overflow,
    EmptyNavigation,
    EmptySum,
    Explicit,
    UnknownFeature,
    DanglingReference,
    Malformed,
}

impl UndefinedReason {
    pub fn code(self) -> &'static str {
        match self {
            UndefinedReason::UnsetSlot => "unset-slot",
            UndefinedReason::DivisionByZero => "division-by-zero",
            UndefinedReason::CurrencyMismatch => "currency-mismatch",
            UndefinedReason::MissingDelegate => "missing-delegate",
            UndefinedReason::RecursionLimit => "recursion-limit",
            UndefinedReason::Overflow => "overflow",
            UndefinedReason::EmptyNavigation => "empty-navigation",
            UndefinedReason::EmptySum => "empty-sum",
            UndefinedReason::Explicit => "explicit",
            UndefinedReason::UnknownFeature => "unknown-feature",
            UndefinedReason::DanglingReference => "dangling-reference",
            UndefinedReason::Malformed => "malformed-expression",
        }
    }
}

/// Outcome of an evaluation that produced no value.
#[derive(Debug, Clone, PartialEq)]
pub struct Undefined {
    pub reason: UndefinedReason,
    pub detail: String,
    pub span: Span,
}

impl Undefined {
    pub fn new(reason: UndefinedReason, span: Span, detail: impl Into<String>) -> Self {
        Self { reason, detail: detail.into(), span }
    }
}

impl fmt::Display for Undefined {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.reason.code(), self.detail)
    }
}

/// Either a value or an `Undefined` diagnostic. Evaluation never fails any
/// other way.
pub type EvalResult = Result<Value, Undefined>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureKind {
    Attribute,
    Operation,
}

/// How a resolved feature was reached from the receiver.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Via {
    Own,
    Inherited,
    /// Delegate objects followed, receiver excluded.
    DelegateChain(Vec<ElementId>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Resolution {
    Found {
        owner: ElementId,
        feature: ElementId,
        via: Via,
    },
    /// `unbound` names a delegation that could not be followed.
    NotFound {
        unbound: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureResolution {
    pub name: String,
    pub outcome: Resolution,
}

/// Runtime feature lookup, supplied by the execution engine.
pub trait FeatureResolver {
    fn resolve(&self, model: &ProjectModel, object: &ElementId, name: &str, kind: FeatureKind) -> FeatureResolution;
}

type Scope = Vec<(String, EvalResult)>;

/// Evaluates expressions over one model snapshot.
///
/// Derived slots are computed on demand and memoized for the lifetime of
/// the evaluator; a slot that is re-entered while being computed yields
/// `Undefined(recursion-limit)`.
pub struct Evaluator<'m> {
    model: &'m ProjectModel,
    resolver: &'m dyn FeatureResolver,
    max_depth: usize,
    depth: Cell<usize>,
    asts: RefCell<HashMap<String, Rc<Expr>>>,
    derived: RefCell<HashMap<(ElementId, ElementId), EvalResult>>,
    in_progress: RefCell<HashSet<(ElementId, ElementId)>>,
}

impl<'m> Evaluator<'m> {
    pub fn new(model: &'m ProjectModel, resolver: &'m dyn FeatureResolver) -> Self {
        Self {
            model,
            resolver,
            max_depth: DEFAULT_MAX_DEPTH,
            depth: Cell::new(0),
            asts: RefCell::default(),
            derived: RefCell::default(),
            in_progress: RefCell::default(),
        }
    }

    pub fn with_max_depth(mut self, depth: usize) -> Self {
        self.max_depth = depth;
        self
    }

    pub fn model(&self) -> &'m ProjectModel {
        self.model
    }

    fn ast(&self, src: &str) -> Result<Rc<Expr>, Undefined> {
        if let Some(e) = self.asts.borrow().get(src) {
            return Ok(e.clone());
        }
        let e = Rc::new(
            parse(src).map_err(|err| Undefined::new(UndefinedReason::Malformed, Span::default(), err.to_string()))?,
        );
        self.asts.borrow_mut().insert(src.to_owned(), e.clone());
        Ok(e)
    }

    /// Evaluates `expr` with `self` bound to `receiver`.
    pub fn eval(&self, expr: &Expr, receiver: &ElementId, vars: &[(String, Value)]) -> EvalResult {
        let mut scope: Scope = vars.iter().map(|(n, v)| (n.clone(), Ok(v.clone()))).collect();
        self.eval_in(expr, receiver, &mut scope)
    }

    /// Parses (with caching) and evaluates a stored expression source.
    pub fn eval_source(&self, src: &str, receiver: &ElementId, vars: &[(String, Value)]) -> EvalResult {
        let ast = self.ast(src)?;
        self.eval(&ast, receiver, vars)
    }

    fn enter(&self, span: Span) -> Result<DepthGuard<'_>, Undefined> {
        let d = self.depth.get();
        if d >= self.max_depth {
            return Err(Undefined::new(
                UndefinedReason::RecursionLimit,
                span,
                format!("evaluation depth exceeded {}", self.max_depth),
            ));
        }
        self.depth.set(d + 1);
        Ok(DepthGuard(&self.depth))
    }

    /// Current value of a derived slot.
    pub fn derived_value(&self, object: &ElementId, attribute: &ElementId) -> EvalResult {
        let key = (object.clone(), attribute.clone());
        if let Some(r) = self.derived.borrow().get(&key) {
            return r.clone();
        }
        let Some((_, attr)) = self.model.attribute(attribute) else {
            return Err(Undefined::new(UndefinedReason::UnknownFeature, Span::default(), attribute.to_string()));
        };
        let Some(src) = attr.derivation.as_deref() else {
            return Err(Undefined::new(
                UndefinedReason::UnknownFeature,
                Span::default(),
                format!("`{}` is not derived", attr.name),
            ));
        };
        let holder = self.model.object(object).map_or(object.as_str(), |o| o.name.as_str());
        if !self.in_progress.borrow_mut().insert(key.clone()) {
            return Err(Undefined::new(
                UndefinedReason::RecursionLimit,
                Span::default(),
                format!("cyclic derivation of `{}` on {holder}", attr.name),
            ));
        }
        let result = match self.enter(Span::default()) {
            Ok(_guard) => self.eval_source(src, object, &[]).map(|v| coerce(v, &attr.ty)),
            Err(u) => Err(u),
        };
        self.in_progress.borrow_mut().remove(&key);
        self.derived.borrow_mut().insert(key, result.clone());
        result
    }

    /// Reads the slot for `attribute` on `object`.
    pub fn read_slot(&self, object: &ObjectInst, attribute: &ElementId, span: Span) -> EvalResult {
        match object.slots.get(attribute) {
            Some(Slot::Entered(v)) => Ok(v.clone()),
            Some(Slot::Computed(_)) => self.derived_value(&object.id, attribute),
            Some(Slot::Unset) => {
                let name = self.model.element_name(attribute).unwrap_or(attribute.as_str());
                Err(Undefined::new(
                    UndefinedReason::UnsetSlot,
                    span,
                    format!("slot `{name}` of {} is unset", object.name),
                ))
            }
            None => Err(Undefined::new(
                UndefinedReason::UnknownFeature,
                span,
                format!("{} has no slot {attribute}", object.name),
            )),
        }
    }

    /// Runs `op` with `self` bound to `receiver` and `args` bound to the
    /// parameters. Arity is the caller's responsibility.
    pub fn invoke(&self, receiver: &ElementId, op: &OperationDef, args: Vec<Value>) -> EvalResult {
        self.invoke_at(receiver, op, args, Span::default())
    }

    fn invoke_at(&self, receiver: &ElementId, op: &OperationDef, args: Vec<Value>, span: Span) -> EvalResult {
        let _guard = self.enter(span)?;
        let ast = self.ast(&op.body)?;
        let mut scope: Scope =
            op.params.iter().zip(args).map(|(p, v)| (p.name.clone(), Ok(coerce(v, &p.ty)))).collect();
        self.eval_in(&ast, receiver, &mut scope).map(|v| coerce(v, &op.return_type))
    }

    fn object(&self, id: &ElementId, span: Span) -> Result<&'m ObjectInst, Undefined> {
        self.model
            .object(id)
            .ok_or_else(|| Undefined::new(UndefinedReason::DanglingReference, span, format!("no object {id}")))
    }

    fn eval_in(&self, e: &Expr, receiver: &ElementId, scope: &mut Scope) -> EvalResult {
        // Deep user recursion runs on a growable stack rather than
        // overflowing the caller's thread.
        stacker::maybe_grow(STACK_RED_ZONE, STACK_GROWTH, || self.eval_node(e, receiver, scope))
    }

    fn eval_node(&self, e: &Expr, receiver: &ElementId, scope: &mut Scope) -> EvalResult {
        let span = e.span;
        match &e.kind {
            ExprKind::Literal(lit) => match lit {
                Literal::Integer(i) => Ok(Value::Integer(*i)),
                Literal::Float(f) => Ok(Value::Float(*f)),
                Literal::String(s) => Ok(Value::String(s.clone())),
                Literal::Boolean(b) => Ok(Value::Boolean(*b)),
                Literal::Date(d) => Ok(Value::Date(*d)),
                Literal::Monetary(m) => Ok(Value::Monetary(m.clone())),
                Literal::Undefined => Err(Undefined::new(UndefinedReason::Explicit, span, "undefined literal")),
            },
            ExprKind::EnumLiteral { enumeration, literal } => match self.model.enumeration_by_name(&enumeration.name) {
                Some(en) if en.literals.contains(&literal.name) => {
                    Ok(Value::Enum { enumeration: en.id.clone(), literal: literal.name.clone() })
                }
                _ => Err(Undefined::new(
                    UndefinedReason::UnknownFeature,
                    span,
                    format!("unknown literal {}::{}", enumeration.name, literal.name),
                )),
            },
            ExprKind::SelfRef => Ok(Value::Ref(receiver.clone())),
            ExprKind::Var(v) => {
                scope.iter().rev().find(|(n, _)| n == &v.name).map(|(_, r)| r.clone()).unwrap_or_else(|| {
                    Err(Undefined::new(UndefinedReason::UnknownFeature, span, format!("unbound `{}`", v.name)))
                })
            }
            ExprKind::Extent { class } => match self.model.class_by_name(&class.name) {
                Some(c) => Ok(Value::Collection(
                    self.model.instances_of(&c.id).into_iter().map(|o| Value::Ref(o.id.clone())).collect(),
                )),
                None => Err(Undefined::new(
                    UndefinedReason::UnknownFeature,
                    span,
                    format!("unknown class `{}`", class.name),
                )),
            },
            ExprKind::Nav { target, name } => {
                let t = self.eval_in(target, receiver, scope)?;
                self.navigate(t, name)
            }
            ExprKind::Call { target, name, args } => {
                let t = self.eval_in(target, receiver, scope)?;
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    vals.push(self.eval_in(a, receiver, scope)?);
                }
                self.call(t, name, vals, span)
            }
            ExprKind::Unary { op, operand } => {
                let v = self.eval_in(operand, receiver, scope)?;
                match (op, v) {
                    (UnaryOp::Not, Value::Boolean(b)) => Ok(Value::Boolean(!b)),
                    (UnaryOp::Neg, Value::Integer(i)) => {
                        i.checked_neg().map(Value::Integer).ok_or_else(|| overflow(span))
                    }
                    (UnaryOp::Neg, Value::Float(f)) => Ok(Value::Float(-f)),
                    (UnaryOp::Neg, Value::Monetary(m)) => {
                        m.checked_neg().map(Value::Monetary).map_err(|e| money_err(e, span))
                    }
                    (_, v) => Err(type_fault(span, v.kind_name())),
                }
            }
            ExprKind::Binary { op, lhs, rhs } => self.binary(*op, lhs, rhs, receiver, scope, span),
            ExprKind::If { cond, then_branch, else_branch } => match self.eval_in(cond, receiver, scope)? {
                Value::Boolean(true) => self.eval_in(then_branch, receiver, scope),
                Value::Boolean(false) => self.eval_in(else_branch, receiver, scope),
                v => Err(type_fault(cond.span, v.kind_name())),
            },
            ExprKind::Let { var, value, body } => {
                let v = self.eval_in(value, receiver, scope);
                scope.push((var.name.clone(), v));
                let r = self.eval_in(body, receiver, scope);
                scope.pop();
                r
            }
            ExprKind::IsUndefined(inner) => Ok(Value::Boolean(self.eval_in(inner, receiver, scope).is_err())),
            ExprKind::Collection { target, op, iterator, arg } => {
                let items = match self.eval_in(target, receiver, scope)? {
                    Value::Collection(items) => items,
                    v => return Err(type_fault(target.span, v.kind_name())),
                };
                self.collection_op(*op, items, iterator.as_ref(), arg.as_deref(), receiver, scope, span)
            }
        }
    }

    fn navigate(&self, target: Value, name: &Ident) -> EvalResult {
        let span = name.span;
        let Value::Ref(id) = target else {
            return Err(Undefined::new(
                UndefinedReason::UnknownFeature,
                span,
                format!("{} has no feature `{}`", target.kind_name(), name.name),
            ));
        };
        let obj = self.object(&id, span)?;
        let res = self.resolver.resolve(self.model, &id, &name.name, FeatureKind::Attribute);
        if let Resolution::Found { feature, via: Via::Own | Via::Inherited, .. } = &res.outcome {
            return self.read_slot(obj, feature, span);
        }
        if let Some(role) = self.model.navigable_roles(&obj.class).into_iter().find(|r| r.role() == name.name) {
            let targets = self.model.navigate(&id, &role);
            return if role.end().multiplicity.is_single() {
                targets.into_iter().next().map(Value::Ref).ok_or_else(|| {
                    Undefined::new(
                        UndefinedReason::EmptyNavigation,
                        span,
                        format!("{} has no `{}` link", obj.name, name.name),
                    )
                })
            } else {
                Ok(Value::Collection(targets.into_iter().map(Value::Ref).collect()))
            };
        }
        if let Some(d) = self.model.effective_delegations(&obj.class).into_iter().find(|d| d.name == name.name) {
            return match obj.delegates.get(&d.id) {
                Some(Some(target)) => Ok(Value::Ref(target.clone())),
                _ => Err(Undefined::new(
                    UndefinedReason::MissingDelegate,
                    span,
                    format!("delegate `{}` of {} is unbound", d.name, obj.name),
                )),
            };
        }
        match res.outcome {
            Resolution::Found { feature, via: Via::DelegateChain(path), .. } => {
                let holder = path.last().expect("delegate chain is non-empty");
                let holder = self.object(holder, span)?;
                self.read_slot(holder, &feature, span)
            }
            Resolution::NotFound { unbound: Some(d) } => Err(Undefined::new(
                UndefinedReason::MissingDelegate,
                span,
                format!("`{}` needs delegate `{d}` of {}, which is unbound", name.name, obj.name),
            )),
            _ => Err(Undefined::new(
                UndefinedReason::UnknownFeature,
                span,
                format!("{} has no feature `{}`", obj.name, name.name),
            )),
        }
    }

    fn call(&self, target: Value, name: &Ident, args: Vec<Value>, span: Span) -> EvalResult {
        if let Value::Ref(id) = &target {
            let obj = self.object(id, span)?;
            let res = self.resolver.resolve(self.model, id, &name.name, FeatureKind::Operation);
            match res.outcome {
                Resolution::Found { feature, .. } => {
                    let Some((_, op)) = self.model.operation(&feature) else {
                        return Err(Undefined::new(UndefinedReason::UnknownFeature, span, feature.to_string()));
                    };
                    return self.invoke_at(id, op, args, span);
                }
                Resolution::NotFound { unbound: Some(d) } if name.name != "toString" => {
                    return Err(Undefined::new(
                        UndefinedReason::MissingDelegate,
                        span,
                        format!("`{}()` needs delegate `{d}` of {}, which is unbound", name.name, obj.name),
                    ));
                }
                Resolution::NotFound { .. } => {}
            }
        }
        builtin(self.model, target, &name.name, args, span)
    }

    fn binary(
        &self,
        op: BinaryOp,
        lhs: &Expr,
        rhs: &Expr,
        receiver: &ElementId,
        scope: &mut Scope,
        span: Span,
    ) -> EvalResult {
        let as_bool = |v: Value, s: Span| match v {
            Value::Boolean(b) => Ok(b),
            v => Err(type_fault(s, v.kind_name())),
        };
        match op {
            BinaryOp::And | BinaryOp::Or | BinaryOp::Implies => {
                let l = as_bool(self.eval_in(lhs, receiver, scope)?, lhs.span)?;
                let decided = match op {
                    BinaryOp::And => (!l).then_some(false),
                    BinaryOp::Or => l.then_some(true),
                    _ => (!l).then_some(true),
                };
                if let Some(b) = decided {
                    return Ok(Value::Boolean(b));
                }
                let r = as_bool(self.eval_in(rhs, receiver, scope)?, rhs.span)?;
                Ok(Value::Boolean(r))
            }
            _ => {
                let l = self.eval_in(lhs, receiver, scope)?;
                let r = self.eval_in(rhs, receiver, scope)?;
                apply_binary(op, l, r, span)
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn collection_op(
        &self,
        op: CollectionOp,
        items: Vec<Value>,
        iterator: Option<&Ident>,
        arg: Option<&Expr>,
        receiver: &ElementId,
        scope: &mut Scope,
        span: Span,
    ) -> EvalResult {
        match op {
            CollectionOp::Size => Ok(Value::Integer(items.len() as i64)),
            CollectionOp::IsEmpty => Ok(Value::Boolean(items.is_empty())),
            CollectionOp::NotEmpty => Ok(Value::Boolean(!items.is_empty())),
            CollectionOp::Includes => {
                let needle = self.eval_in(arg.expect("includes argument"), receiver, scope)?;
                for item in &items {
                    if values_equal(item, &needle, span)? {
                        return Ok(Value::Boolean(true));
                    }
                }
                Ok(Value::Boolean(false))
            }
            CollectionOp::Sum => {
                let mut iter = items.into_iter();
                let Some(first) = iter.next() else {
                    return Err(Undefined::new(UndefinedReason::EmptySum, span, "sum of an empty collection"));
                };
                iter.try_fold(first, |acc, v| apply_binary(BinaryOp::Add, acc, v, span))
            }
            CollectionOp::ForAll
            | CollectionOp::Exists
            | CollectionOp::Select
            | CollectionOp::Reject
            | CollectionOp::Collect => {
                let var = &iterator.expect("iterator variable").name;
                let body = arg.expect("iterator body");
                let mut kept = Vec::new();
                for item in items {
                    scope.push((var.clone(), Ok(item.clone())));
                    let r = self.eval_in(body, receiver, scope);
                    scope.pop();
                    let r = r?;
                    if op == CollectionOp::Collect {
                        kept.push(r);
                        continue;
                    }
                    let Value::Boolean(b) = r else {
                        return Err(type_fault(body.span, r.kind_name()));
                    };
                    match op {
                        CollectionOp::ForAll if !b => return Ok(Value::Boolean(false)),
                        CollectionOp::Exists if b => return Ok(Value::Boolean(true)),
                        CollectionOp::Select if b => kept.push(item),
                        CollectionOp::Reject if !b => kept.push(item),
                        _ => {}
                    }
                }
                Ok(match op {
                    CollectionOp::ForAll => Value::Boolean(true),
                    CollectionOp::Exists => Value::Boolean(false),
                    _ => Value::Collection(kept),
                })
            }
        }
    }
}

struct DepthGuard<'a>(&'a Cell<usize>);

impl Drop for DepthGuard<'_> {
    fn drop(&mut self) {
        self.0.set(self.0.get() - 1);
    }
}

/// Integer values flowing into Float-typed positions become floats.
fn coerce(v: Value, ty: &TypeRef) -> Value {
    match (v, ty) {
        (Value::Integer(i), TypeRef::Data(DataType::Float)) => Value::Float(i as f64),
        (v, _) => v,
    }
}

fn overflow(span: Span) -> Undefined {
    Undefined::new(UndefinedReason::Overflow, span, "arithmetic overflow")
}

fn money_err(e: MoneyError, span: Span) -> Undefined {
    let reason = match e {
        MoneyError::CurrencyMismatch(..) => UndefinedReason::CurrencyMismatch,
        _ => UndefinedReason::Overflow,
    };
    Undefined::new(reason, span, e.to_string())
}

fn type_fault(span: Span, found: &str) -> Undefined {
    Undefined::new(UndefinedReason::Malformed, span, format!("unexpected {found} at runtime"))
}

fn finite(f: f64, span: Span) -> EvalResult {
    if f.is_finite() {
        Ok(Value::Float(f))
    } else {
        Err(overflow(span))
    }
}

fn as_f64(v: &Value) -> Option<f64> {
    match v {
        Value::Integer(i) => Some(*i as f64),
        Value::Float(f) => Some(*f),
        _ => None,
    }
}

/// Value equality: numeric across Integer/Float, identity for objects,
/// undefined across currencies.
pub fn values_equal(a: &Value, b: &Value, span: Span) -> Result<bool, Undefined> {
    match (a, b) {
        (Value::Integer(x), Value::Integer(y)) => Ok(x == y),
        (Value::Integer(_) | Value::Float(_), Value::Integer(_) | Value::Float(_)) => Ok(as_f64(a) == as_f64(b)),
        (Value::Monetary(x), Value::Monetary(y)) => {
            x.compare(y).map(|o| o == Ordering::Equal).map_err(|e| money_err(e, span))
        }
        (Value::Collection(xs), Value::Collection(ys)) => {
            if xs.len() != ys.len() {
                return Ok(false);
            }
            for (x, y) in xs.iter().zip(ys) {
                if !values_equal(x, y, span)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        _ => Ok(a == b),
    }
}

fn compare(a: &Value, b: &Value, span: Span) -> Result<Ordering, Undefined> {
    match (a, b) {
        (Value::Integer(x), Value::Integer(y)) => Ok(x.cmp(y)),
        (Value::String(x), Value::String(y)) => Ok(x.cmp(y)),
        (Value::Date(x), Value::Date(y)) => Ok(x.cmp(y)),
        (Value::Monetary(x), Value::Monetary(y)) => x.compare(y).map_err(|e| money_err(e, span)),
        _ => match (as_f64(a), as_f64(b)) {
            (Some(x), Some(y)) => {
                x.partial_cmp(&y).ok_or_else(|| Undefined::new(UndefinedReason::Overflow, span, "comparison of NaN"))
            }
            _ => Err(type_fault(span, a.kind_name())),
        },
    }
}

/// Strict binary operators (everything except `and`/`or`/`implies`).
pub(crate) fn apply_binary(op: BinaryOp, l: Value, r: Value, span: Span) -> EvalResult {
    use BinaryOp::*;
    use Value::*;
    match op {
        Eq => values_equal(&l, &r, span).map(Boolean),
        Ne => values_equal(&l, &r, span).map(|b| Boolean(!b)),
        Lt => compare(&l, &r, span).map(|o| Boolean(o == Ordering::Less)),
        Le => compare(&l, &r, span).map(|o| Boolean(o != Ordering::Greater)),
        Gt => compare(&l, &r, span).map(|o| Boolean(o == Ordering::Greater)),
        Ge => compare(&l, &r, span).map(|o| Boolean(o != Ordering::Less)),
        Add => match (l, r) {
            (Integer(x), Integer(y)) => x.checked_add(y).map(Integer).ok_or_else(|| overflow(span)),
            (Monetary(x), Monetary(y)) => x.checked_add(&y).map(Monetary).map_err(|e| money_err(e, span)),
            (String(x), String(y)) => Ok(String(x + &y)),
            (l, r) => match (as_f64(&l), as_f64(&r)) {
                (Some(x), Some(y)) => finite(x + y, span),
                _ => Err(type_fault(span, l.kind_name())),
            },
        },
        Sub => match (l, r) {
            (Integer(x), Integer(y)) => x.checked_sub(y).map(Integer).ok_or_else(|| overflow(span)),
            (Monetary(x), Monetary(y)) => x.checked_sub(&y).map(Monetary).map_err(|e| money_err(e, span)),
            (l, r) => match (as_f64(&l), as_f64(&r)) {
                (Some(x), Some(y)) => finite(x - y, span),
                _ => Err(type_fault(span, l.kind_name())),
            },
        },
        Mul => match (l, r) {
            (Integer(x), Integer(y)) => x.checked_mul(y).map(Integer).ok_or_else(|| overflow(span)),
            (Monetary(m), Integer(n)) | (Integer(n), Monetary(m)) => {
                m.checked_mul_int(n).map(Monetary).map_err(|e| money_err(e, span))
            }
            (l, r) => match (as_f64(&l), as_f64(&r)) {
                (Some(x), Some(y)) => finite(x * y, span),
                _ => Err(type_fault(span, l.kind_name())),
            },
        },
        Div => match (as_f64(&l), as_f64(&r)) {
            (Some(_), Some(0.0)) => Err(Undefined::new(UndefinedReason::DivisionByZero, span, "division by zero")),
            (Some(x), Some(y)) => finite(x / y, span),
            _ => Err(type_fault(span, l.kind_name())),
        },
        Mod => match (l, r) {
            (Integer(_), Integer(0)) => Err(Undefined::new(UndefinedReason::DivisionByZero, span, "modulo by zero")),
            (Integer(x), Integer(y)) => x.checked_rem_euclid(y).map(Integer).ok_or_else(|| overflow(span)),
            (l, _) => Err(type_fault(span, l.kind_name())),
        },
        And | Or | Implies => match (l, r) {
            (Boolean(x), Boolean(y)) => Ok(Boolean(match op {
                And => x && y,
                Or => x || y,
                _ => !x || y,
            })),
            (l, _) => Err(type_fault(span, l.kind_name())),
        },
    }
}

fn builtin(model: &ProjectModel, target: Value, name: &str, args: Vec<Value>, span: Span) -> EvalResult {
    use Value::*;
    let fault = || {
        Undefined::new(
            UndefinedReason::UnknownFeature,
            span,
            format!("{} has no operation `{name}`", target.kind_name()),
        )
    };
    match (&target, name, args.as_slice()) {
        (String(s), "toString", []) => Ok(String(s.clone())),
        (Enum { literal, .. }, "toString", []) => Ok(String(literal.clone())),
        (Monetary(m), "toString", []) => Ok(String(m.to_string())),
        (Date(d), "toString", []) => Ok(String(d.format("%Y-%m-%d").to_string())),
        (Collection(_), _, _) => Err(fault()),
        (_, "toString", []) => Ok(String(model.render_value(&target))),
        (String(s), "size", []) => Ok(Integer(s.chars().count() as i64)),
        (String(s), "toUpper", []) => Ok(String(s.to_uppercase())),
        (String(s), "toLower", []) => Ok(String(s.to_lowercase())),
        (String(s), "concat", [String(t)]) => Ok(String(format!("{s}{t}"))),
        (Integer(i), "abs", []) => i.checked_abs().map(Integer).ok_or_else(|| overflow(span)),
        (Integer(i), "toFloat", []) => Ok(Float(*i as f64)),
        (Float(f), "abs", []) => Ok(Float(f.abs())),
        (Float(f), "floor" | "round", []) => {
            let r = if name == "floor" { f.floor() } else { f.round() };
            if r >= i64::MIN as f64 && r < i64::MAX as f64 {
                Ok(Integer(r as i64))
            } else {
                Err(overflow(span))
            }
        }
        (Monetary(m), "amount", []) => Ok(Float(m.amount_f64())),
        (Monetary(m), "currency", []) => Ok(String(m.currency().to_owned())),
        (Date(d), "year", []) => Ok(Integer(d.year() as i64)),
        (Date(d), "month", []) => Ok(Integer(d.month() as i64)),
        (Date(d), "day", []) => Ok(Integer(d.day() as i64)),
        _ => Err(fault()),
    }
}
