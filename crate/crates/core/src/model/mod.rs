//! The integrated model store.
//!
//! Classes (level 1) and objects (level 0) live side by side in one
//! [`ProjectModel`] and share a single namespace. All cross references are
//! by [`ElementId`]; names are for display and expression source only.

mod edit;
mod error;
mod validate;

use std::collections::HashSet;
use std::fmt;

use indexmap::IndexMap;

pub use edit::{AttributeChange, ExprSite, MigrationSummary, OperationSpec, RenameSummary, RewrittenExpr, SlotAction};
pub use error::KernelError;
pub use validate::{check_invariants, InvariantIssue, IssueCategory};

use crate::expr::{EvalResult, KEYWORDS};
use crate::id::{ElementId, IdGen};
use crate::value::{DataType, TypeRef, Value};

/// Level of every class in the store.
pub const CLASS_LEVEL: u8 = 1;
/// Level of every object in the store.
pub const OBJECT_LEVEL: u8 = 0;
/// Level of the implicit metaclass all classes are instantiated from.
pub const METACLASS_LEVEL: u8 = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct ClassDef {
    pub id: ElementId,
    pub name: String,
    pub is_abstract: bool,
    pub superclass: Option<ElementId>,
    pub attributes: Vec<AttributeDef>,
    pub operations: Vec<OperationDef>,
    pub constraints: Vec<ConstraintDef>,
    pub delegations: Vec<DelegationDef>,
}

impl ClassDef {
    pub fn level(&self) -> u8 {
        CLASS_LEVEL
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttributeDef {
    pub id: ElementId,
    pub name: String,
    pub ty: TypeRef,
    /// Present iff the attribute is derived.
    pub derivation: Option<String>,
}

impl AttributeDef {
    pub fn is_derived(&self) -> bool {
        self.derivation.is_some()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub ty: TypeRef,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperationDef {
    pub id: ElementId,
    pub name: String,
    pub params: Vec<Param>,
    pub return_type: TypeRef,
    pub body: String,
    pub monitored: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintDef {
    pub id: ElementId,
    pub name: String,
    pub body: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DelegationDef {
    pub id: ElementId,
    pub name: String,
    pub target: ElementId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Multiplicity {
    pub lower: u32,
    /// `None` is unbounded (`*`).
    pub upper: Option<u32>,
}

impl Multiplicity {
    pub const ONE: Multiplicity = Multiplicity { lower: 1, upper: Some(1) };
    pub const MANY: Multiplicity = Multiplicity { lower: 0, upper: None };
    pub const OPTIONAL: Multiplicity = Multiplicity { lower: 0, upper: Some(1) };

    pub fn new(lower: u32, upper: Option<u32>) -> Result<Self, KernelError> {
        let m = Multiplicity { lower, upper };
        if m.is_valid() {
            Ok(m)
        } else {
            Err(KernelError::BadMultiplicity(m.to_string()))
        }
    }

    pub fn is_valid(&self) -> bool {
        self.upper.is_none_or(|u| self.lower <= u && u > 0)
    }

    pub fn admits(&self, count: usize) -> bool {
        count as u64 >= self.lower as u64 && self.upper.is_none_or(|u| count as u64 <= u as u64)
    }

    /// At most one target object: navigation yields a single value.
    pub fn is_single(&self) -> bool {
        self.upper == Some(1)
    }

    /// Parses `"l..u"`, `"n"` or `"*"`.
    pub fn parse(s: &str) -> Option<Self> {
        let bound = |b: &str| -> Option<Option<u32>> {
            if b == "*" {
                Some(None)
            } else if !b.is_empty() && b.bytes().all(|c| c.is_ascii_digit()) {
                b.parse().ok().map(Some)
            } else {
                None
            }
        };
        let m = match s.split_once("..") {
            Some((l, u)) => Multiplicity { lower: bound(l)??, upper: bound(u)? },
            None => match bound(s)? {
                None => Multiplicity::MANY,
                Some(n) => Multiplicity { lower: n, upper: Some(n) },
            },
        };
        Some(m)
    }
}

impl fmt::Display for Multiplicity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.lower, self.upper) {
            (0, None) => f.write_str("*"),
            (l, None) => write!(f, "{l}..*"),
            (l, Some(u)) if l == u => write!(f, "{l}"),
            (l, Some(u)) => write!(f, "{l}..{u}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssociationEnd {
    pub class: ElementId,
    pub role: String,
    pub multiplicity: Multiplicity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssociationDef {
    pub id: ElementId,
    pub name: String,
    pub ends: [AssociationEnd; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnumerationDef {
    pub id: ElementId,
    pub name: String,
    pub literals: Vec<String>,
}

/// Holder of one attribute value on an object.
#[derive(Debug, Clone, PartialEq)]
pub enum Slot {
    Unset,
    Entered(Value),
    /// Derived slot with its most recently computed result.
    Computed(EvalResult),
}

impl Slot {
    pub fn state_name(&self) -> &'static str {
        match self {
            Slot::Unset => "unset",
            Slot::Entered(_) => "entered",
            Slot::Computed(_) => "computed",
        }
    }

    pub fn value(&self) -> Option<&Value> {
        match self {
            Slot::Unset => None,
            Slot::Entered(v) => Some(v),
            Slot::Computed(r) => r.as_ref().ok(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectInst {
    pub id: ElementId,
    pub name: String,
    pub class: ElementId,
    /// Keyed by attribute id, in effective attribute order.
    pub slots: IndexMap<ElementId, Slot>,
    /// Keyed by delegation id, in effective delegation order.
    pub delegates: IndexMap<ElementId, Option<ElementId>>,
}

impl ObjectInst {
    pub fn level(&self) -> u8 {
        OBJECT_LEVEL
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub id: ElementId,
    pub association: ElementId,
    pub end1: ElementId,
    pub end2: ElementId,
}

/// A role that can be navigated from instances of some class.
#[derive(Debug, Clone)]
pub struct RoleNav<'m> {
    pub association: &'m AssociationDef,
    /// Index of the end being navigated to.
    pub to_end: usize,
}

impl<'m> RoleNav<'m> {
    pub fn end(&self) -> &'m AssociationEnd {
        &self.association.ends[self.to_end]
    }

    pub fn role(&self) -> &'m str {
        &self.end().role
    }
}

/// The single integrated store of classes, objects, associations, links
/// and enumerations.
#[derive(Debug, Clone, Default)]
pub struct ProjectModel {
    pub(crate) name: String,
    pub(crate) enumerations: IndexMap<ElementId, EnumerationDef>,
    pub(crate) classes: IndexMap<ElementId, ClassDef>,
    pub(crate) associations: IndexMap<ElementId, AssociationDef>,
    pub(crate) objects: IndexMap<ElementId, ObjectInst>,
    pub(crate) links: IndexMap<ElementId, Link>,
    pub(crate) ids: IdGen,
}

impl PartialEq for ProjectModel {
    fn eq(&self, other: &Self) -> bool {
        // The id counter is session state, not model content.
        self.name == other.name
            && self.enumerations == other.enumerations
            && self.classes == other.classes
            && self.associations == other.associations
            && self.objects == other.objects
            && self.links == other.links
    }
}

pub fn is_valid_name(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !KEYWORDS.contains(&name)
        && name != "allInstances"
}

impl ProjectModel {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), ..Default::default() }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn classes(&self) -> impl Iterator<Item = &ClassDef> {
        self.classes.values()
    }

    pub fn objects(&self) -> impl Iterator<Item = &ObjectInst> {
        self.objects.values()
    }

    pub fn associations(&self) -> impl Iterator<Item = &AssociationDef> {
        self.associations.values()
    }

    pub fn links(&self) -> impl Iterator<Item = &Link> {
        self.links.values()
    }

    pub fn enumerations(&self) -> impl Iterator<Item = &EnumerationDef> {
        self.enumerations.values()
    }

    pub fn class(&self, id: &ElementId) -> Option<&ClassDef> {
        self.classes.get(id)
    }

    pub fn object(&self, id: &ElementId) -> Option<&ObjectInst> {
        self.objects.get(id)
    }

    pub fn association(&self, id: &ElementId) -> Option<&AssociationDef> {
        self.associations.get(id)
    }

    pub fn link(&self, id: &ElementId) -> Option<&Link> {
        self.links.get(id)
    }

    pub fn enumeration(&self, id: &ElementId) -> Option<&EnumerationDef> {
        self.enumerations.get(id)
    }

    pub fn class_by_name(&self, name: &str) -> Option<&ClassDef> {
        self.classes.values().find(|c| c.name == name)
    }

    pub fn object_by_name(&self, name: &str) -> Option<&ObjectInst> {
        self.objects.values().find(|o| o.name == name)
    }

    pub fn enumeration_by_name(&self, name: &str) -> Option<&EnumerationDef> {
        self.enumerations.values().find(|e| e.name == name)
    }

    pub fn association_by_name(&self, name: &str) -> Option<&AssociationDef> {
        self.associations.values().find(|a| a.name == name)
    }

    /// Whether `name` is taken by a class, object or enumeration.
    pub fn name_in_use(&self, name: &str) -> bool {
        self.class_by_name(name).is_some()
            || self.object_by_name(name).is_some()
            || self.enumeration_by_name(name).is_some()
    }

    pub fn attribute(&self, id: &ElementId) -> Option<(&ClassDef, &AttributeDef)> {
        self.classes.values().find_map(|c| c.attributes.iter().find(|a| &a.id == id).map(|a| (c, a)))
    }

    pub fn operation(&self, id: &ElementId) -> Option<(&ClassDef, &OperationDef)> {
        self.classes.values().find_map(|c| c.operations.iter().find(|o| &o.id == id).map(|o| (c, o)))
    }

    pub fn constraint(&self, id: &ElementId) -> Option<(&ClassDef, &ConstraintDef)> {
        self.classes.values().find_map(|c| c.constraints.iter().find(|k| &k.id == id).map(|k| (c, k)))
    }

    pub fn delegation(&self, id: &ElementId) -> Option<(&ClassDef, &DelegationDef)> {
        self.classes.values().find_map(|c| c.delegations.iter().find(|d| &d.id == id).map(|d| (c, d)))
    }

    /// Display name of any element id, if it exists.
    pub fn element_name(&self, id: &ElementId) -> Option<&str> {
        if let Some(c) = self.class(id) {
            return Some(&c.name);
        }
        if let Some(o) = self.object(id) {
            return Some(&o.name);
        }
        if let Some(e) = self.enumeration(id) {
            return Some(&e.name);
        }
        if let Some(a) = self.association(id) {
            return Some(&a.name);
        }
        if let Some((_, a)) = self.attribute(id) {
            return Some(&a.name);
        }
        if let Some((_, o)) = self.operation(id) {
            return Some(&o.name);
        }
        if let Some((_, k)) = self.constraint(id) {
            return Some(&k.name);
        }
        if let Some((_, d)) = self.delegation(id) {
            return Some(&d.name);
        }
        None
    }

    /// The class followed by its superclasses, nearest first.
    pub fn superchain(&self, class: &ElementId) -> Vec<&ClassDef> {
        let mut chain = Vec::new();
        let mut seen = HashSet::new();
        let mut cur = self.class(class);
        while let Some(c) = cur {
            if !seen.insert(&c.id) {
                break;
            }
            chain.push(c);
            cur = c.superclass.as_ref().and_then(|s| self.class(s));
        }
        chain
    }

    /// Root-first generalization chain ending with `class`.
    fn lineage(&self, class: &ElementId) -> Vec<&ClassDef> {
        let mut chain = self.superchain(class);
        chain.reverse();
        chain
    }

    /// `sub` is `sup` or specializes it.
    pub fn conforms_to(&self, sub: &ElementId, sup: &ElementId) -> bool {
        self.superchain(sub).iter().any(|c| &c.id == sup)
    }

    /// `class` and every class specializing it, in definition order.
    pub fn descendants(&self, class: &ElementId) -> Vec<&ClassDef> {
        self.classes.values().filter(|c| self.conforms_to(&c.id, class)).collect()
    }

    /// Own and inherited attributes, root class first.
    pub fn effective_attributes(&self, class: &ElementId) -> Vec<&AttributeDef> {
        self.lineage(class).into_iter().flat_map(|c| c.attributes.iter()).collect()
    }

    pub fn effective_operations(&self, class: &ElementId) -> Vec<&OperationDef> {
        self.lineage(class).into_iter().flat_map(|c| c.operations.iter()).collect()
    }

    pub fn effective_constraints(&self, class: &ElementId) -> Vec<(&ClassDef, &ConstraintDef)> {
        self.lineage(class).into_iter().flat_map(|c| c.constraints.iter().map(move |k| (c, k))).collect()
    }

    pub fn effective_delegations(&self, class: &ElementId) -> Vec<&DelegationDef> {
        self.lineage(class).into_iter().flat_map(|c| c.delegations.iter()).collect()
    }

    /// Roles navigable from instances of `class`, in association order.
    pub fn navigable_roles(&self, class: &ElementId) -> Vec<RoleNav<'_>> {
        let mut out = Vec::new();
        for assoc in self.associations.values() {
            for from in 0..2 {
                if self.conforms_to(class, &assoc.ends[from].class) {
                    out.push(RoleNav { association: assoc, to_end: 1 - from });
                }
            }
        }
        out
    }

    /// Every name reachable by `.name` from instances of `class` without
    /// going through a delegate.
    pub fn feature_names(&self, class: &ElementId) -> Vec<&str> {
        let mut names: Vec<&str> = Vec::new();
        for c in self.lineage(class) {
            names.extend(c.attributes.iter().map(|a| a.name.as_str()));
            names.extend(c.operations.iter().map(|o| o.name.as_str()));
            names.extend(c.constraints.iter().map(|k| k.name.as_str()));
            names.extend(c.delegations.iter().map(|d| d.name.as_str()));
        }
        names.extend(self.navigable_roles(class).into_iter().map(|r| r.role()));
        names
    }

    /// Objects whose class conforms to `class`, in creation order.
    pub fn instances_of(&self, class: &ElementId) -> Vec<&ObjectInst> {
        self.objects.values().filter(|o| self.conforms_to(&o.class, class)).collect()
    }

    /// Non-abstract classes in definition order.
    pub fn palette(&self) -> Vec<(ElementId, String)> {
        self.classes.values().filter(|c| !c.is_abstract).map(|c| (c.id.clone(), c.name.clone())).collect()
    }

    /// Objects reached by navigating `role` from `object`, in link order.
    pub fn navigate(&self, object: &ElementId, role: &RoleNav<'_>) -> Vec<ElementId> {
        let assoc = &role.association.id;
        self.links
            .values()
            .filter(|l| &l.association == assoc)
            .filter_map(|l| match role.to_end {
                1 if &l.end1 == object => Some(l.end2.clone()),
                0 if &l.end2 == object => Some(l.end1.clone()),
                _ => None,
            })
            .collect()
    }

    pub fn type_ref_name(&self, ty: &TypeRef) -> String {
        match ty {
            TypeRef::Data(d) => d.name().to_owned(),
            TypeRef::Enumeration(id) | TypeRef::Class(id) => self.element_name(id).unwrap_or(id.as_str()).to_owned(),
        }
    }

    /// Whether `value` may be stored in a slot of type `ty`.
    pub fn value_conforms(&self, value: &Value, ty: &TypeRef) -> bool {
        match (value, ty) {
            (Value::String(_), TypeRef::Data(DataType::String))
            | (Value::Integer(_), TypeRef::Data(DataType::Integer))
            | (Value::Boolean(_), TypeRef::Data(DataType::Boolean))
            | (Value::Date(_), TypeRef::Data(DataType::Date))
            | (Value::Monetary(_), TypeRef::Data(DataType::MonetaryValue)) => true,
            (Value::Float(f), TypeRef::Data(DataType::Float)) => f.is_finite(),
            (Value::Enum { enumeration, literal }, TypeRef::Enumeration(id)) => {
                enumeration == id && self.enumeration(id).is_some_and(|e| e.literals.contains(literal))
            }
            (Value::Ref(obj), TypeRef::Class(class)) => {
                self.object(obj).is_some_and(|o| self.conforms_to(&o.class, class))
            }
            _ => false,
        }
    }

    /// Literal-style rendering of a value: `12.50 EUR`, `'text'`,
    /// `Genre::Horror`, object names for references.
    pub fn render_value(&self, value: &Value) -> String {
        match value {
            Value::String(s) => crate::expr::quote_string(s),
            Value::Integer(i) => i.to_string(),
            Value::Float(f) => format!("{f:?}"),
            Value::Boolean(b) => b.to_string(),
            Value::Date(d) => format!("@{}", d.format("%Y-%m-%d")),
            Value::Monetary(m) => m.to_string(),
            Value::Enum { enumeration, literal } => {
                let e = self.element_name(enumeration).unwrap_or(enumeration.as_str());
                format!("{e}::{literal}")
            }
            Value::Ref(id) => self.element_name(id).unwrap_or(id.as_str()).to_owned(),
            Value::Collection(items) => {
                let inner: Vec<String> = items.iter().map(|v| self.render_value(v)).collect();
                format!("Sequence{{{}}}", inner.join(", "))
            }
        }
    }
}
