use chrono::NaiveDate;

use crate::money::Money;

/// Byte range into the expression source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn to(self, other: Span) -> Span {
        Span { start: self.start.min(other.start), end: self.end.max(other.end) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ident {
    pub name: String,
    pub span: Span,
}

impl Ident {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), span: Span::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Integer(i64),
    Float(f64),
    String(String),
    Boolean(bool),
    Date(NaiveDate),
    Monetary(Money),
    Undefined,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Not,
    Neg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Implies,
    Or,
    And,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Add,
    Sub,
    Mul,
    Div,
    Mod,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Implies => "implies",
            BinaryOp::Or => "or",
            BinaryOp::And => "and",
            BinaryOp::Eq => "=",
            BinaryOp::Ne => "<>",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Mod => "mod",
        }
    }

    /// Binding strength; higher binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinaryOp::Implies => PREC_IMPLIES,
            BinaryOp::Or => PREC_OR,
            BinaryOp::And => PREC_AND,
            BinaryOp::Eq | BinaryOp::Ne | BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge => PREC_CMP,
            BinaryOp::Add | BinaryOp::Sub => PREC_ADD,
            BinaryOp::Mul | BinaryOp::Div | BinaryOp::Mod => PREC_MUL,
        }
    }

    pub fn is_comparison(self) -> bool {
        self.precedence() == PREC_CMP
    }
}

pub(crate) const PREC_LET: u8 = 0;
pub(crate) const PREC_IMPLIES: u8 = 1;
pub(crate) const PREC_OR: u8 = 2;
pub(crate) const PREC_AND: u8 = 3;
pub(crate) const PREC_NOT: u8 = 4;
pub(crate) const PREC_CMP: u8 = 5;
pub(crate) const PREC_ADD: u8 = 6;
pub(crate) const PREC_MUL: u8 = 7;
pub(crate) const PREC_NEG: u8 = 8;
pub(crate) const PREC_POSTFIX: u8 = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CollectionOp {
    Size,
    IsEmpty,
    NotEmpty,
    Includes,
    Sum,
    ForAll,
    Exists,
    Select,
    Reject,
    Collect,
}

impl CollectionOp {
    pub const ALL: [CollectionOp; 10] = [
        CollectionOp::Size,
        CollectionOp::IsEmpty,
        CollectionOp::NotEmpty,
        CollectionOp::Includes,
        CollectionOp::Sum,
        CollectionOp::ForAll,
        CollectionOp::Exists,
        CollectionOp::Select,
        CollectionOp::Reject,
        CollectionOp::Collect,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CollectionOp::Size => "size",
            CollectionOp::IsEmpty => "isEmpty",
            CollectionOp::NotEmpty => "notEmpty",
            CollectionOp::Includes => "includes",
            CollectionOp::Sum => "sum",
            CollectionOp::ForAll => "forAll",
            CollectionOp::Exists => "exists",
            CollectionOp::Select => "select",
            CollectionOp::Reject => "reject",
            CollectionOp::Collect => "collect",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|op| op.name() == name)
    }

    /// Takes `(v | body)`.
    pub fn is_iterator(self) -> bool {
        matches!(
            self,
            CollectionOp::ForAll
                | CollectionOp::Exists
                | CollectionOp::Select
                | CollectionOp::Reject
                | CollectionOp::Collect
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Literal(Literal),
    /// `Genre::Horror`
    EnumLiteral {
        enumeration: Ident,
        literal: Ident,
    },
    SelfRef,
    Var(Ident),
    /// `target.name`: attribute, role or delegation, resolved by the checker.
    Nav {
        target: Box<Expr>,
        name: Ident,
    },
    /// `target.name(args)`
    Call {
        target: Box<Expr>,
        name: Ident,
        args: Vec<Expr>,
    },
    /// `Class.allInstances()`
    Extent {
        class: Ident,
    },
    Unary {
        op: UnaryOp,
        operand: Box<Expr>,
    },
    Binary {
        op: BinaryOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    If {
        cond: Box<Expr>,
        then_branch: Box<Expr>,
        else_branch: Box<Expr>,
    },
    Let {
        var: Ident,
        value: Box<Expr>,
        body: Box<Expr>,
    },
    /// `target->op()`, `target->op(arg)` or `target->op(v | arg)`
    Collection {
        target: Box<Expr>,
        op: CollectionOp,
        iterator: Option<Ident>,
        arg: Option<Box<Expr>>,
    },
    IsUndefined(Box<Expr>),
}

impl Expr {
    pub fn new(kind: ExprKind) -> Self {
        Self { kind, span: Span::default() }
    }

    /// Copy with every span zeroed, for structural comparison.
    pub fn without_spans(&self) -> Expr {
        let mut e = self.clone();
        e.visit_mut(&mut |node| {
            node.span = Span::default();
            match &mut node.kind {
                ExprKind::EnumLiteral { enumeration, literal } => {
                    enumeration.span = Span::default();
                    literal.span = Span::default();
                }
                ExprKind::Var(id) | ExprKind::Extent { class: id } => id.span = Span::default(),
                ExprKind::Nav { name, .. } | ExprKind::Call { name, .. } => name.span = Span::default(),
                ExprKind::Let { var, .. } => var.span = Span::default(),
                ExprKind::Collection { iterator: Some(v), .. } => v.span = Span::default(),
                _ => {}
            }
        });
        e
    }

    pub fn structurally_eq(&self, other: &Expr) -> bool {
        self.without_spans() == other.without_spans()
    }

    pub fn children(&self) -> Vec<&Expr> {
        match &self.kind {
            ExprKind::Literal(_)
            | ExprKind::EnumLiteral { .. }
            | ExprKind::SelfRef
            | ExprKind::Var(_)
            | ExprKind::Extent { .. } => vec![],
            ExprKind::Nav { target, .. } => vec![target],
            ExprKind::Call { target, args, .. } => std::iter::once(&**target).chain(args.iter()).collect(),
            ExprKind::Unary { operand, .. } => vec![operand],
            ExprKind::Binary { lhs, rhs, .. } => vec![lhs, rhs],
            ExprKind::If { cond, then_branch, else_branch } => {
                vec![cond, then_branch, else_branch]
            }
            ExprKind::Let { value, body, .. } => vec![value, body],
            ExprKind::Collection { target, arg, .. } => std::iter::once(&**target).chain(arg.as_deref()).collect(),
            ExprKind::IsUndefined(e) => vec![e],
        }
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut Expr)) {
        f(self);
        match &mut self.kind {
            ExprKind::Literal(_)
            | ExprKind::EnumLiteral { .. }
            | ExprKind::SelfRef
            | ExprKind::Var(_)
            | ExprKind::Extent { .. } => {}
            ExprKind::Nav { target, .. } => target.visit_mut(f),
            ExprKind::Call { target, args, .. } => {
                target.visit_mut(f);
                args.iter_mut().for_each(|a| a.visit_mut(f));
            }
            ExprKind::Unary { operand, .. } => operand.visit_mut(f),
            ExprKind::Binary { lhs, rhs, .. } => {
                lhs.visit_mut(f);
                rhs.visit_mut(f);
            }
            ExprKind::If { cond, then_branch, else_branch } => {
                cond.visit_mut(f);
                then_branch.visit_mut(f);
                else_branch.visit_mut(f);
            }
            ExprKind::Let { value, body, .. } => {
                value.visit_mut(f);
                body.visit_mut(f);
            }
            ExprKind::Collection { target, arg, .. } => {
                target.visit_mut(f);
                if let Some(a) = arg {
                    a.visit_mut(f);
                }
            }
            ExprKind::IsUndefined(e) => e.visit_mut(f),
        }
    }
}
