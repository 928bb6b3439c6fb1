//! Generated expressions over a fixed bag of items, evaluated by the engine
//! and by a small interpreter written here. Collection operations in the
//! interpreter are brute-force expansions: forAll and exists unfold into
//! nested `and`/`or` chains, select and reject filter by explicit count,
//! and sum is a left fold.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use umlpp_core::engine;
use umlpp_core::model::{AssociationEnd, Multiplicity, SlotAction};
use umlpp_core::{DataType, ElementId, Money, ProjectModel, TypeRef, Value};

use crate::Outcome;

const EXPRESSIONS: usize = 500;

const A: [Option<i64>; 7] = [Some(1), Some(-2), None, Some(4), Some(0), Some(3), Some(-1)];
const B: [Option<i64>; 7] = [Some(2), Some(2), Some(5), None, Some(0), Some(-3), Some(1)];
const W: [Option<(i128, &str)>; 7] = [
    Some((150, "EUR")),
    Some((-25, "EUR")),
    None,
    Some((1000, "EUR")),
    Some((0, "EUR")),
    Some((300, "USD")),
    Some((75, "EUR")),
];
/// Items linked to `bag1`, in link order. The last item is unlinked.
const IN_BAG: usize = 6;
const LIMIT: i64 = 3;

struct Fixture {
    model: ProjectModel,
    bag: ElementId,
    items: Vec<ElementId>,
}

fn fixture() -> Fixture {
    let mut m = ProjectModel::new("Oracle");
    let int = TypeRef::Data(DataType::Integer);
    let item = m.create_class("Item", false, None).unwrap().id;
    let bag = m.create_class("Bag", false, None).unwrap().id;
    m.add_attribute(&item, "a", int.clone(), None).unwrap();
    m.add_attribute(&item, "b", int.clone(), None).unwrap();
    m.add_attribute(&item, "w", TypeRef::Data(DataType::MonetaryValue), None).unwrap();
    m.add_attribute(&bag, "limit", int, None).unwrap();
    let holds = m
        .create_association(
            "Holds",
            AssociationEnd { class: bag.clone(), role: "bag".into(), multiplicity: Multiplicity::OPTIONAL },
            AssociationEnd { class: item.clone(), role: "items".into(), multiplicity: Multiplicity::MANY },
        )
        .unwrap()
        .id;
    let bag1 = m.instantiate(&bag, "bag1").unwrap().id;
    m.set_slot(&bag1, "limit", SlotAction::Set(Value::Integer(LIMIT))).unwrap();
    let mut items = Vec::new();
    for i in 0..A.len() {
        let o = m.instantiate(&item, &format!("it{i}")).unwrap().id;
        if let Some(a) = A[i] {
            m.set_slot(&o, "a", SlotAction::Set(Value::Integer(a))).unwrap();
        }
        if let Some(b) = B[i] {
            m.set_slot(&o, "b", SlotAction::Set(Value::Integer(b))).unwrap();
        }
        if let Some((units, cur)) = W[i] {
            m.set_slot(&o, "w", SlotAction::Set(Value::Monetary(Money::new(units, 2, cur).unwrap()))).unwrap();
        }
        if i < IN_BAG {
            m.create_link(&holds, &bag1, &o).unwrap();
        }
        items.push(o);
    }
    Fixture { model: m, bag: bag1, items }
}

#[derive(Clone, Copy, Debug)]
enum Attr {
    A,
    B,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Bin {
    Add,
    Sub,
    Mul,
    Mod,
    Div,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
    Implies,
}

impl Bin {
    fn symbol(self) -> &'static str {
        match self {
            Bin::Add => "+",
            Bin::Sub => "-",
            Bin::Mul => "*",
            Bin::Mod => "mod",
            Bin::Div => "/",
            Bin::Lt => "<",
            Bin::Le => "<=",
            Bin::Gt => ">",
            Bin::Ge => ">=",
            Bin::Eq => "=",
            Bin::Ne => "<>",
            Bin::And => "and",
            Bin::Or => "or",
            Bin::Implies => "implies",
        }
    }
}

#[derive(Clone, Copy, Debug)]
enum Iter {
    ForAll,
    Exists,
    Select,
    Reject,
    Collect,
}

#[derive(Clone, Debug)]
enum E {
    Int(i64),
    Bool(bool),
    Money(i128, &'static str),
    SelfLimit,
    SelfItems,
    AllItems,
    Var(usize),
    Field(usize, Attr),
    Worth(usize),
    BagLimit(usize),
    Bin(Bin, Box<E>, Box<E>),
    Not(Box<E>),
    Abs(Box<E>),
    If(Box<E>, Box<E>, Box<E>),
    IsUndefined(Box<E>),
    Size(Box<E>),
    IsEmpty(Box<E>),
    NotEmpty(Box<E>),
    Sum(Box<E>),
    Includes(Box<E>, Box<E>),
    Iterate(Iter, Box<E>, usize, Box<E>),
}

fn render(e: &E) -> String {
    match e {
        E::Int(i) if *i < 0 => format!("(-{})", -i),
        E::Int(i) => i.to_string(),
        E::Bool(b) => b.to_string(),
        E::Money(units, cur) => format!("{}.{:02} {cur}", units / 100, units % 100),
        E::SelfLimit => "self.limit".into(),
        E::SelfItems => "self.items".into(),
        E::AllItems => "Item.allInstances()".into(),
        E::Var(v) => format!("v{v}"),
        E::Field(v, Attr::A) => format!("v{v}.a"),
        E::Field(v, Attr::B) => format!("v{v}.b"),
        E::Worth(v) => format!("v{v}.w"),
        E::BagLimit(v) => format!("v{v}.bag.limit"),
        E::Bin(op, l, r) => format!("({} {} {})", render(l), op.symbol(), render(r)),
        E::Not(x) => format!("(not {})", render(x)),
        E::Abs(x) => format!("{}.abs()", render(x)),
        E::If(c, t, f) => format!("(if {} then {} else {} endif)", render(c), render(t), render(f)),
        E::IsUndefined(x) => format!("isUndefined({})", render(x)),
        E::Size(c) => format!("{}->size()", render(c)),
        E::IsEmpty(c) => format!("{}->isEmpty()", render(c)),
        E::NotEmpty(c) => format!("{}->notEmpty()", render(c)),
        E::Sum(c) => format!("{}->sum()", render(c)),
        E::Includes(c, x) => format!("{}->includes({})", render(c), render(x)),
        E::Iterate(op, c, v, body) => {
            let name = match op {
                Iter::ForAll => "forAll",
                Iter::Exists => "exists",
                Iter::Select => "select",
                Iter::Reject => "reject",
                Iter::Collect => "collect",
            };
            format!("{}->{name}(v{v} | {})", render(c), render(body))
        }
    }
}

// ---- generator

#[derive(Clone, Copy, PartialEq)]
enum Ty {
    Int,
    Bool,
    Money,
    Items,
    Ints,
    Moneys,
}

struct Gen<'r> {
    rng: &'r mut ChaCha8Rng,
    /// Number of iterator variables in scope; `v0..v{scope-1}`.
    scope: usize,
}

impl Gen<'_> {
    fn var(&mut self) -> Option<usize> {
        (self.scope > 0).then(|| self.rng.gen_range(0..self.scope))
    }

    fn bind<T>(&mut self, f: impl FnOnce(&mut Self, usize) -> T) -> T {
        let v = self.scope;
        self.scope += 1;
        let out = f(self, v);
        self.scope -= 1;
        out
    }

    fn gen(&mut self, ty: Ty, depth: u32) -> E {
        match ty {
            Ty::Int => self.int(depth),
            Ty::Bool => self.boolean(depth),
            Ty::Money => self.money(depth),
            Ty::Items => self.items(depth),
            Ty::Ints | Ty::Moneys => {
                let c = self.items(depth.saturating_sub(1));
                let elem = if ty == Ty::Ints { Ty::Int } else { Ty::Money };
                let body = self.bind(|g, _| g.gen(elem, depth.saturating_sub(1)));
                E::Iterate(Iter::Collect, Box::new(c), self.scope, Box::new(body))
            }
        }
    }

    fn int(&mut self, depth: u32) -> E {
        let leaf = depth == 0 || self.rng.gen_bool(0.3);
        if leaf {
            return match (self.rng.gen_range(0..4), self.var()) {
                (0, _) => E::SelfLimit,
                (1 | 2, Some(v)) => E::Field(v, if self.rng.gen_bool(0.5) { Attr::A } else { Attr::B }),
                (3, Some(v)) if self.rng.gen_bool(0.5) => E::BagLimit(v),
                _ => E::Int(self.rng.gen_range(-3..=5)),
            };
        }
        let d = depth - 1;
        match self.rng.gen_range(0..9) {
            0 => E::Bin(Bin::Add, Box::new(self.int(d)), Box::new(self.int(d))),
            1 => E::Bin(Bin::Sub, Box::new(self.int(d)), Box::new(self.int(d))),
            2 => E::Bin(Bin::Mul, Box::new(self.int(d)), Box::new(self.int(d))),
            3 => E::Bin(Bin::Mod, Box::new(self.int(d)), Box::new(self.int(d))),
            4 => E::Size(Box::new(self.items(d))),
            5 | 6 => E::Sum(Box::new(self.gen(Ty::Ints, d))),
            7 => E::If(Box::new(self.boolean(d)), Box::new(self.int(d)), Box::new(self.int(d))),
            _ => E::Abs(Box::new(self.int(d))),
        }
    }

    fn boolean(&mut self, depth: u32) -> E {
        if depth == 0 || self.rng.gen_bool(0.15) {
            return match self.rng.gen_range(0..3) {
                0 => E::Bool(self.rng.gen_bool(0.5)),
                _ => {
                    let op = [Bin::Lt, Bin::Le, Bin::Gt, Bin::Ge, Bin::Eq, Bin::Ne][self.rng.gen_range(0..6)];
                    E::Bin(op, Box::new(self.int(0)), Box::new(self.int(0)))
                }
            };
        }
        let d = depth - 1;
        match self.rng.gen_range(0..16) {
            0..=2 => {
                let op = [Bin::Lt, Bin::Le, Bin::Gt, Bin::Ge, Bin::Eq, Bin::Ne][self.rng.gen_range(0..6)];
                E::Bin(op, Box::new(self.int(d)), Box::new(self.int(d)))
            }
            3 => {
                let quotient = E::Bin(Bin::Div, Box::new(self.int(d)), Box::new(self.int(d)));
                let op = [Bin::Lt, Bin::Ge][self.rng.gen_range(0..2)];
                E::Bin(op, Box::new(quotient), Box::new(self.int(d)))
            }
            4 => {
                let op = [Bin::Lt, Bin::Le, Bin::Gt, Bin::Ge][self.rng.gen_range(0..4)];
                E::Bin(op, Box::new(self.money(d)), Box::new(self.money(d)))
            }
            5 | 6 => {
                let op = [Bin::And, Bin::Or, Bin::Implies][self.rng.gen_range(0..3)];
                E::Bin(op, Box::new(self.boolean(d)), Box::new(self.boolean(d)))
            }
            7 => E::Not(Box::new(self.boolean(d))),
            8 | 9 => {
                let op = if self.rng.gen_bool(0.5) { Iter::ForAll } else { Iter::Exists };
                let c = self.items(d);
                let v = self.scope;
                let body = self.bind(|g, _| g.boolean(d));
                E::Iterate(op, Box::new(c), v, Box::new(body))
            }
            10 => match self.var() {
                Some(v) => E::Includes(Box::new(self.items(d)), Box::new(E::Var(v))),
                None => E::Includes(Box::new(self.gen(Ty::Ints, d)), Box::new(self.int(d))),
            },
            11 => E::Includes(Box::new(self.gen(Ty::Ints, d)), Box::new(self.int(d))),
            12 => E::IsEmpty(Box::new(self.items(d))),
            13 => E::NotEmpty(Box::new(self.items(d))),
            14 => {
                let inner = if self.rng.gen_bool(0.7) { self.int(d) } else { self.boolean(d) };
                E::IsUndefined(Box::new(inner))
            }
            _ => E::If(Box::new(self.boolean(d)), Box::new(self.boolean(d)), Box::new(self.boolean(d))),
        }
    }

    fn money(&mut self, depth: u32) -> E {
        if depth == 0 || self.rng.gen_bool(0.3) {
            return match self.var() {
                Some(v) if self.rng.gen_bool(0.6) => E::Worth(v),
                _ => {
                    let cur = if self.rng.gen_bool(0.15) { "USD" } else { "EUR" };
                    E::Money(self.rng.gen_range(0..500), cur)
                }
            };
        }
        let d = depth - 1;
        match self.rng.gen_range(0..4) {
            0 => E::Bin(Bin::Add, Box::new(self.money(d)), Box::new(self.money(d))),
            1 => E::Bin(Bin::Sub, Box::new(self.money(d)), Box::new(self.money(d))),
            2 => E::Bin(Bin::Mul, Box::new(self.money(d)), Box::new(self.int(d))),
            _ => E::Sum(Box::new(self.gen(Ty::Moneys, d))),
        }
    }

    fn items(&mut self, depth: u32) -> E {
        if depth == 0 || self.rng.gen_bool(0.4) {
            return if self.rng.gen_bool(0.75) { E::SelfItems } else { E::AllItems };
        }
        let d = depth - 1;
        let op = if self.rng.gen_bool(0.6) { Iter::Select } else { Iter::Reject };
        let c = self.items(d);
        let v = self.scope;
        let body = self.bind(|g, _| g.boolean(d));
        E::Iterate(op, Box::new(c), v, Box::new(body))
    }
}

// ---- oracle

#[derive(Clone, Debug, PartialEq)]
enum O {
    Int(i64),
    Float(f64),
    Bool(bool),
    /// Amount in cents and currency.
    Money(i128, &'static str),
    Items(Vec<usize>),
    Ints(Vec<i64>),
    Moneys(Vec<(i128, &'static str)>),
}

type R = Option<O>;

fn int(r: R) -> Option<i64> {
    match r? {
        O::Int(i) => Some(i),
        other => panic!("expected integer, got {other:?}"),
    }
}

fn boolean(r: R) -> Option<bool> {
    match r? {
        O::Bool(b) => Some(b),
        other => panic!("expected boolean, got {other:?}"),
    }
}

fn money(r: R) -> Option<(i128, &'static str)> {
    match r? {
        O::Money(c, cur) => Some((c, cur)),
        other => panic!("expected money, got {other:?}"),
    }
}

fn real(o: &O) -> f64 {
    match o {
        O::Int(i) => *i as f64,
        O::Float(f) => *f,
        other => panic!("expected number, got {other:?}"),
    }
}

/// Left operand decides first; an undefined left is undefined.
fn and(l: Option<bool>, r: impl FnOnce() -> Option<bool>) -> Option<bool> {
    match l? {
        false => Some(false),
        true => r(),
    }
}

fn or(l: Option<bool>, r: impl FnOnce() -> Option<bool>) -> Option<bool> {
    match l? {
        true => Some(true),
        false => r(),
    }
}

/// `p(x0) and (p(x1) and (... and true))`.
fn conjunction(xs: &[usize], p: &mut dyn FnMut(usize) -> Option<bool>) -> Option<bool> {
    match xs.split_first() {
        None => Some(true),
        Some((x, rest)) => {
            let first = p(*x);
            and(first, || conjunction(rest, p))
        }
    }
}

/// `p(x0) or (p(x1) or (... or false))`.
fn disjunction(xs: &[usize], p: &mut dyn FnMut(usize) -> Option<bool>) -> Option<bool> {
    match xs.split_first() {
        None => Some(false),
        Some((x, rest)) => {
            let first = p(*x);
            or(first, || disjunction(rest, p))
        }
    }
}

struct Oracle;

impl Oracle {
    fn eval(&self, e: &E, env: &mut Vec<usize>) -> R {
        match e {
            E::Int(i) => Some(O::Int(*i)),
            E::Bool(b) => Some(O::Bool(*b)),
            E::Money(c, cur) => Some(O::Money(*c, cur)),
            E::SelfLimit => Some(O::Int(LIMIT)),
            E::SelfItems => Some(O::Items((0..IN_BAG).collect())),
            E::AllItems => Some(O::Items((0..A.len()).collect())),
            E::Var(v) => Some(O::Items(vec![env[*v]])),
            E::Field(v, Attr::A) => A[env[*v]].map(O::Int),
            E::Field(v, Attr::B) => B[env[*v]].map(O::Int),
            E::Worth(v) => W[env[*v]].map(|(c, cur)| O::Money(c, cur)),
            E::BagLimit(v) => (env[*v] < IN_BAG).then_some(O::Int(LIMIT)),
            E::Bin(op, l, r) => self.binary(*op, l, r, env),
            E::Not(x) => boolean(self.eval(x, env)).map(|b| O::Bool(!b)),
            E::Abs(x) => int(self.eval(x, env))?.checked_abs().map(O::Int),
            E::If(c, t, f) => {
                if boolean(self.eval(c, env))? {
                    self.eval(t, env)
                } else {
                    self.eval(f, env)
                }
            }
            E::IsUndefined(x) => Some(O::Bool(self.eval(x, env).is_none())),
            E::Size(c) => Some(O::Int(self.items(c, env)?.len() as i64)),
            E::IsEmpty(c) => Some(O::Bool(self.items(c, env)?.is_empty())),
            E::NotEmpty(c) => Some(O::Bool(!self.items(c, env)?.is_empty())),
            E::Sum(c) => match self.eval(c, env)? {
                O::Ints(xs) => {
                    let (first, rest) = xs.split_first()?;
                    rest.iter().try_fold(*first, |acc, x| acc.checked_add(*x)).map(O::Int)
                }
                O::Moneys(xs) => {
                    let (first, rest) = xs.split_first()?;
                    rest.iter()
                        .try_fold(*first, |(acc, cur), (x, c)| (cur == *c).then(|| (acc + x, cur)))
                        .map(|(c, cur)| O::Money(c, cur))
                }
                other => panic!("sum over {other:?}"),
            },
            E::Includes(c, x) => {
                let coll = self.eval(c, env)?;
                let needle = self.eval(x, env)?;
                let found = match (coll, needle) {
                    (O::Items(xs), O::Items(n)) => xs.contains(&n[0]),
                    (O::Ints(xs), O::Int(n)) => xs.contains(&n),
                    other => panic!("includes on {other:?}"),
                };
                Some(O::Bool(found))
            }
            E::Iterate(op, c, v, body) => {
                let xs = self.items(c, env)?;
                assert_eq!(*v, env.len(), "iterator variables are bound in order");
                let mut at = |x: usize| {
                    env.push(x);
                    let r = self.eval(body, env);
                    env.pop();
                    r
                };
                match op {
                    Iter::ForAll => conjunction(&xs, &mut |x| boolean(at(x))).map(O::Bool),
                    Iter::Exists => disjunction(&xs, &mut |x| boolean(at(x))).map(O::Bool),
                    Iter::Select | Iter::Reject => {
                        let keep_when = matches!(op, Iter::Select);
                        let mut kept = Vec::new();
                        for &x in &xs {
                            if boolean(at(x))? == keep_when {
                                kept.push(x);
                            }
                        }
                        Some(O::Items(kept))
                    }
                    Iter::Collect => {
                        let mut out = Vec::new();
                        for &x in &xs {
                            out.push(at(x)?);
                        }
                        Some(if is_money(body) {
                            O::Moneys(out.into_iter().map(|o| money(Some(o)).unwrap()).collect())
                        } else {
                            O::Ints(out.into_iter().map(|o| int(Some(o)).unwrap()).collect())
                        })
                    }
                }
            }
        }
    }

    fn items(&self, c: &E, env: &mut Vec<usize>) -> Option<Vec<usize>> {
        match self.eval(c, env)? {
            O::Items(xs) => Some(xs),
            other => panic!("expected items, got {other:?}"),
        }
    }

    fn binary(&self, op: Bin, l: &E, r: &E, env: &mut Vec<usize>) -> R {
        match op {
            Bin::And => and(boolean(self.eval(l, env)), || boolean(self.eval(r, env))).map(O::Bool),
            Bin::Or => or(boolean(self.eval(l, env)), || boolean(self.eval(r, env))).map(O::Bool),
            Bin::Implies => match boolean(self.eval(l, env))? {
                false => Some(O::Bool(true)),
                true => boolean(self.eval(r, env)).map(O::Bool),
            },
            _ => {
                let a = self.eval(l, env)?;
                let b = self.eval(r, env)?;
                match (op, a, b) {
                    (Bin::Add, O::Int(x), O::Int(y)) => x.checked_add(y).map(O::Int),
                    (Bin::Sub, O::Int(x), O::Int(y)) => x.checked_sub(y).map(O::Int),
                    (Bin::Mul, O::Int(x), O::Int(y)) => x.checked_mul(y).map(O::Int),
                    (Bin::Mod, O::Int(x), O::Int(y)) => (y != 0).then(|| O::Int(x.rem_euclid(y))),
                    (Bin::Div, O::Int(x), O::Int(y)) => (y != 0).then(|| O::Float(x as f64 / y as f64)),
                    (Bin::Add, O::Money(x, c), O::Money(y, d)) => (c == d).then(|| O::Money(x + y, c)),
                    (Bin::Sub, O::Money(x, c), O::Money(y, d)) => (c == d).then(|| O::Money(x - y, c)),
                    (Bin::Mul, O::Money(x, c), O::Int(k)) => Some(O::Money(x * i128::from(k), c)),
                    (cmp, O::Money(x, c), O::Money(y, d)) => (c == d).then(|| O::Bool(holds(cmp, x.cmp(&y)))),
                    (cmp, O::Int(x), O::Int(y)) => Some(O::Bool(holds(cmp, x.cmp(&y)))),
                    (cmp, a, b) => Some(O::Bool(holds(cmp, real(&a).partial_cmp(&real(&b)).expect("finite")))),
                }
            }
        }
    }
}

fn is_money(e: &E) -> bool {
    match e {
        E::Money(..) | E::Worth(_) => true,
        E::Bin(Bin::Add | Bin::Sub | Bin::Mul, l, _) => is_money(l),
        E::Sum(c) => matches!(c.as_ref(), E::Iterate(Iter::Collect, _, _, body) if is_money(body)),
        _ => false,
    }
}

fn holds(op: Bin, ord: Ordering) -> bool {
    match op {
        Bin::Lt => ord == Ordering::Less,
        Bin::Le => ord != Ordering::Greater,
        Bin::Gt => ord == Ordering::Greater,
        Bin::Ge => ord != Ordering::Less,
        Bin::Eq => ord == Ordering::Equal,
        Bin::Ne => ord != Ordering::Equal,
        other => panic!("{other:?} is not a comparison"),
    }
}

/// The engine's value in oracle terms.
fn observe(f: &Fixture, v: &Value) -> O {
    let cents = |m: &Money| {
        let scale = m.scale();
        assert!(scale <= 2, "unexpected scale {scale}");
        m.units() * 10i128.pow(2 - scale)
    };
    let cur = |m: &Money| -> &'static str {
        match m.currency() {
            "EUR" => "EUR",
            "USD" => "USD",
            other => panic!("unexpected currency {other}"),
        }
    };
    match v {
        Value::Integer(i) => O::Int(*i),
        Value::Float(x) => O::Float(*x),
        Value::Boolean(b) => O::Bool(*b),
        Value::Monetary(m) => O::Money(cents(m), cur(m)),
        Value::Collection(xs) => match xs.first() {
            Some(Value::Integer(_)) => {
                O::Ints(xs.iter().map(|x| if let Value::Integer(i) = x { *i } else { panic!() }).collect())
            }
            Some(Value::Monetary(_)) => O::Moneys(
                xs.iter().map(|x| if let Value::Monetary(m) = x { (cents(m), cur(m)) } else { panic!() }).collect(),
            ),
            _ => O::Items(
                xs.iter()
                    .map(|x| match x {
                        Value::Ref(id) => f.items.iter().position(|i| i == id).expect("item reference"),
                        other => panic!("unexpected element {other:?}"),
                    })
                    .collect(),
            ),
        },
        other => panic!("unexpected value {other:?}"),
    }
}

/// An empty runtime collection carries no element type.
fn same(expected: &R, got: &Option<O>) -> bool {
    match (expected, got) {
        (Some(a), Some(b)) => a == b || is_empty_collection(a) && is_empty_collection(b),
        (a, b) => a.is_none() && b.is_none(),
    }
}

fn is_empty_collection(o: &O) -> bool {
    match o {
        O::Items(v) => v.is_empty(),
        O::Ints(v) => v.is_empty(),
        O::Moneys(v) => v.is_empty(),
        _ => false,
    }
}

pub fn evaluator_oracle() -> Outcome {
    let f = fixture();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut undefined = 0;
    let mut collection_ops = 0;
    for n in 0..EXPRESSIONS {
        let ty = match n % 10 {
            0..=4 => Ty::Bool,
            5..=7 => Ty::Int,
            8 => Ty::Money,
            _ => Ty::Items,
        };
        let depth = rng.gen_range(1..=4);
        let e = Gen { rng: &mut rng, scope: 0 }.gen(ty, depth);
        let src = render(&e);
        collection_ops += src.matches("->").count();
        let expected = Oracle.eval(&e, &mut Vec::new());
        let got = match engine::evaluate(&f.model, &f.bag, &src) {
            Ok(r) => r.ok().map(|v| observe(&f, &v)),
            Err(err) => return Err(format!("#{n} `{src}` rejected: {err}")),
        };
        if !same(&expected, &got) {
            return Err(format!("#{n} `{src}`: oracle {expected:?}, engine {got:?}"));
        }
        undefined += usize::from(expected.is_none());
    }
    Ok(format!("{EXPRESSIONS} expressions, {collection_ops} collection operations, {undefined} undefined"))
}
