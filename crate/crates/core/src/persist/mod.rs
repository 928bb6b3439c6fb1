//! The canonical `.umlpp.json` project document.
//!
//! Loading never repairs anything: a document that breaks a store
//! invariant is rejected with a JSON pointer to the offending entry.
//! Saving is canonical (fixed key order, definition order, two-space
//! indentation, trailing newline), so equal models give equal bytes.

mod document;
mod report;

use std::collections::HashSet;
use std::fmt;

use indexmap::IndexMap;
use serde_json::json;
use thiserror::Error;

use document::*;
pub use report::{export_report, monitors_to_json, parse_report_json, report_to_json, ReportFormat};

use crate::engine::recompute_derived;
use crate::expr::{Span, Undefined, UndefinedReason};
use crate::id::ElementId;
use crate::model::{
    check_invariants, AssociationDef, AssociationEnd, AttributeDef, ClassDef, ConstraintDef, DelegationDef,
    EnumerationDef, InvariantIssue, Link, Multiplicity, ObjectInst, OperationDef, Param, ProjectModel, Slot,
};
use crate::money::Money;
use crate::value::{DataType, TypeRef, Value};

pub const FORMAT_VERSION: u32 = 1;
pub const FILE_EXTENSION: &str = ".umlpp.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoadErrorKind {
    Syntax,
    Schema,
    Reference,
    Invariant,
    Expression,
}

impl LoadErrorKind {
    pub fn code(self) -> &'static str {
        match self {
            LoadErrorKind::Syntax => "syntax",
            LoadErrorKind::Schema => "schema",
            LoadErrorKind::Reference => "reference",
            LoadErrorKind::Invariant => "invariant",
            LoadErrorKind::Expression => "expression",
        }
    }
}

impl fmt::Display for LoadErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind} error at {}: {cause}", if .pointer.is_empty() { "document root" } else { .pointer.as_str() })]
pub struct LoadError {
    pub kind: LoadErrorKind,
    /// JSON pointer to the offending value.
    pub pointer: String,
    pub cause: String,
}

impl LoadError {
    fn new(kind: LoadErrorKind, pointer: impl Into<String>, cause: impl Into<String>) -> Self {
        Self { kind, pointer: pointer.into(), cause: cause.into() }
    }

    fn schema(pointer: impl Into<String>, cause: impl Into<String>) -> Self {
        Self::new(LoadErrorKind::Schema, pointer, cause)
    }
}

impl From<InvariantIssue> for LoadError {
    fn from(issue: InvariantIssue) -> Self {
        use crate::model::IssueCategory;
        let kind = match issue.category {
            IssueCategory::Reference => LoadErrorKind::Reference,
            IssueCategory::Invariant => LoadErrorKind::Invariant,
            IssueCategory::Expression => LoadErrorKind::Expression,
        };
        LoadError::new(kind, issue.pointer, issue.message)
    }
}

/// Node positions of one diagram. Classes and objects may share a diagram.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiagramLayout {
    pub name: String,
    pub nodes: Vec<DiagramNode>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiagramNode {
    pub element: ElementId,
    pub x: i64,
    pub y: i64,
}

impl DiagramLayout {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), nodes: Vec::new() }
    }

    /// Moves `element`, adding it to the diagram if absent.
    pub fn place(&mut self, element: &ElementId, x: i64, y: i64) {
        match self.nodes.iter_mut().find(|n| &n.element == element) {
            Some(n) => {
                n.x = x;
                n.y = y;
            }
            None => self.nodes.push(DiagramNode { element: element.clone(), x, y }),
        }
    }
}

fn pointer_of(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        out.push('/');
        match seg {
            Segment::Seq { index } => out.push_str(&index.to_string()),
            Segment::Map { key } => out.push_str(&key.replace('~', "~0").replace('/', "~1")),
            Segment::Enum { variant } => out.push_str(variant),
            Segment::Unknown => out.push('?'),
        }
    }
    out
}

fn type_from_doc(ty: &DocType, pointer: &str) -> Result<TypeRef, LoadError> {
    match ty {
        DocType::Data(name) => DataType::from_name(name)
            .map(TypeRef::Data)
            .ok_or_else(|| LoadError::schema(pointer, format!("unknown data type `{name}`"))),
        DocType::Element(DocElementType::Enumeration(id)) => Ok(TypeRef::Enumeration(ElementId::new(id.as_str()))),
        DocType::Element(DocElementType::Class(id)) => Ok(TypeRef::Class(ElementId::new(id.as_str()))),
    }
}

fn type_to_doc(ty: &TypeRef) -> DocType {
    match ty {
        TypeRef::Data(d) => DocType::Data(d.name().to_owned()),
        TypeRef::Enumeration(id) => DocType::Element(DocElementType::Enumeration(id.to_string())),
        TypeRef::Class(id) => DocType::Element(DocElementType::Class(id.to_string())),
    }
}

fn value_from_doc(v: DocValue) -> Result<Value, String> {
    Ok(match v {
        DocValue::String { v } => Value::String(v),
        DocValue::Integer { v } => Value::Integer(v),
        DocValue::Float { v } if v.is_finite() => Value::Float(v),
        DocValue::Float { .. } => return Err("float must be finite".into()),
        DocValue::Boolean { v } => Value::Boolean(v),
        DocValue::Date { v } => Value::Date(parse_date(&v)?),
        DocValue::Monetary { amount, currency } => {
            Value::Monetary(Money::parse(&amount, &currency).map_err(|e| e.to_string())?)
        }
        DocValue::Enum { enumeration, literal } => Value::Enum { enumeration: ElementId::new(enumeration), literal },
        DocValue::Ref { object } => Value::Ref(ElementId::new(object)),
    })
}

fn value_to_doc(v: &Value) -> Option<DocValue> {
    Some(match v {
        Value::String(s) => DocValue::String { v: s.clone() },
        Value::Integer(i) => DocValue::Integer { v: *i },
        Value::Float(f) => DocValue::Float { v: *f },
        Value::Boolean(b) => DocValue::Boolean { v: *b },
        Value::Date(d) => DocValue::Date { v: d.format("%Y-%m-%d").to_string() },
        Value::Monetary(m) => DocValue::Monetary { amount: m.amount_string(), currency: m.currency().to_owned() },
        Value::Enum { enumeration, literal } => {
            DocValue::Enum { enumeration: enumeration.to_string(), literal: literal.clone() }
        }
        Value::Ref(o) => DocValue::Ref { object: o.to_string() },
        Value::Collection(_) => return None,
    })
}

fn parse_date(s: &str) -> Result<chrono::NaiveDate, String> {
    let ok_shape = s.len() == 10 && s.as_bytes()[4] == b'-' && s.as_bytes()[7] == b'-';
    chrono::NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .ok()
        .filter(|_| ok_shape)
        .ok_or_else(|| format!("`{s}` is not a YYYY-MM-DD date"))
}

/// JSON encoding of a value, as used in documents and the HTTP API.
/// Collections (only produced by evaluation) encode as
/// `{"kind":"collection","items":[...]}`.
pub fn value_to_json(v: &Value) -> serde_json::Value {
    match v {
        Value::Collection(items) => json!({
            "kind": "collection",
            "items": items.iter().map(value_to_json).collect::<Vec<_>>(),
        }),
        other => serde_json::to_value(value_to_doc(other).expect("scalar value")).expect("value encodes"),
    }
}

/// Decodes a scalar value. Enumeration and object ids are not resolved.
pub fn value_from_json(json: &serde_json::Value) -> Result<Value, String> {
    let doc: DocValue = serde_json::from_value(json.clone()).map_err(|e| e.to_string())?;
    value_from_doc(doc)
}

/// JSON encoding of an evaluation outcome: `{"value": ...}` or
/// `{"undefined": {"reason", "detail"}}`.
pub fn eval_result_to_json(r: &Result<Value, Undefined>) -> serde_json::Value {
    match r {
        Ok(v) => json!({ "value": value_to_json(v) }),
        Err(u) => json!({ "undefined": { "reason": u.reason.code(), "detail": u.detail } }),
    }
}

/// Parses, validates and builds a project.
pub fn load(bytes: &[u8]) -> Result<(ProjectModel, Vec<DiagramLayout>), LoadError> {
    let raw: serde_json::Value = serde_json::from_slice(bytes).map_err(|e| {
        LoadError::new(LoadErrorKind::Syntax, "", format!("line {} column {}: {e}", e.line(), e.column()))
    })?;
    let Some(top) = raw.as_object() else {
        return Err(LoadError::schema("", "document must be a JSON object"));
    };
    match top.get("formatVersion") {
        None => return Err(LoadError::schema("/formatVersion", "missing formatVersion")),
        Some(v) if v.as_u64() == Some(FORMAT_VERSION as u64) => {}
        Some(v) => return Err(LoadError::schema("/formatVersion", format!("unsupported format version {v}"))),
    }
    let doc: DocProject = serde_path_to_error::deserialize(raw)
        .map_err(|e| LoadError::schema(pointer_of(e.path()), e.inner().to_string()))?;
    build(doc)
}

fn build(doc: DocProject) -> Result<(ProjectModel, Vec<DiagramLayout>), LoadError> {
    let mut model = ProjectModel::new(doc.project_name);
    let mut ids: HashSet<String> = HashSet::new();
    let mut claim = |id: &str, pointer: String| -> Result<ElementId, LoadError> {
        if id.is_empty() {
            return Err(LoadError::new(LoadErrorKind::Invariant, pointer, "empty id"));
        }
        if !ids.insert(id.to_owned()) {
            return Err(LoadError::new(LoadErrorKind::Invariant, pointer, format!("duplicate id `{id}`")));
        }
        Ok(ElementId::new(id))
    };

    for (i, e) in doc.enumerations.into_iter().enumerate() {
        let id = claim(&e.id, format!("/enumerations/{i}/id"))?;
        model.enumerations.insert(id.clone(), EnumerationDef { id, name: e.name, literals: e.literals });
    }
    for (i, c) in doc.classes.into_iter().enumerate() {
        let p = format!("/classes/{i}");
        let id = claim(&c.id, format!("{p}/id"))?;
        let mut class = ClassDef {
            id: id.clone(),
            name: c.name,
            is_abstract: c.is_abstract,
            superclass: c.superclass.map(ElementId::new),
            attributes: vec![],
            operations: vec![],
            constraints: vec![],
            delegations: vec![],
        };
        for (j, d) in c.delegations.into_iter().enumerate() {
            let did = claim(&d.id, format!("{p}/delegations/{j}/id"))?;
            class.delegations.push(DelegationDef { id: did, name: d.name, target: ElementId::new(d.target) });
        }
        for (j, a) in c.attributes.into_iter().enumerate() {
            let aid = claim(&a.id, format!("{p}/attributes/{j}/id"))?;
            let ty = type_from_doc(&a.ty, &format!("{p}/attributes/{j}/type"))?;
            class.attributes.push(AttributeDef { id: aid, name: a.name, ty, derivation: a.derivation });
        }
        for (j, o) in c.operations.into_iter().enumerate() {
            let op = format!("{p}/operations/{j}");
            let oid = claim(&o.id, format!("{op}/id"))?;
            let params = o
                .params
                .iter()
                .enumerate()
                .map(|(k, prm)| {
                    Ok(Param { name: prm.name.clone(), ty: type_from_doc(&prm.ty, &format!("{op}/params/{k}/type"))? })
                })
                .collect::<Result<_, LoadError>>()?;
            class.operations.push(OperationDef {
                id: oid,
                name: o.name,
                params,
                return_type: type_from_doc(&o.return_type, &format!("{op}/returnType"))?,
                body: o.body,
                monitored: o.monitored,
            });
        }
        for (j, k) in c.constraints.into_iter().enumerate() {
            let kid = claim(&k.id, format!("{p}/constraints/{j}/id"))?;
            class.constraints.push(ConstraintDef { id: kid, name: k.name, body: k.body, message: k.message });
        }
        model.classes.insert(id, class);
    }
    for (i, a) in doc.associations.into_iter().enumerate() {
        let p = format!("/associations/{i}");
        let id = claim(&a.id, format!("{p}/id"))?;
        let [e0, e1] = a.ends;
        let end = |e: DocEnd, j: usize| -> Result<AssociationEnd, LoadError> {
            let multiplicity = Multiplicity::parse(&e.multiplicity).ok_or_else(|| {
                LoadError::schema(
                    format!("{p}/ends/{j}/multiplicity"),
                    format!("bad multiplicity `{}`", e.multiplicity),
                )
            })?;
            Ok(AssociationEnd { class: ElementId::new(e.class), role: e.role, multiplicity })
        };
        let ends = [end(e0, 0)?, end(e1, 1)?];
        model.associations.insert(id.clone(), AssociationDef { id, name: a.name, ends });
    }
    for (i, o) in doc.objects.into_iter().enumerate() {
        let p = format!("/objects/{i}");
        let id = claim(&o.id, format!("{p}/id"))?;
        let class = ElementId::new(o.class);
        let mut slots = IndexMap::new();
        for (aid, v) in o.slots {
            let aid = ElementId::new(aid);
            let derived = model.attribute(&aid).is_some_and(|(_, a)| a.is_derived());
            let slot = match v {
                Some(v) => {
                    Slot::Entered(value_from_doc(v).map_err(|e| LoadError::schema(format!("{p}/slots/{aid}"), e))?)
                }
                None if derived => {
                    Slot::Computed(Err(Undefined::new(UndefinedReason::UnsetSlot, Span::default(), "not yet computed")))
                }
                None => Slot::Unset,
            };
            slots.insert(aid, slot);
        }
        let delegates = o.delegates.into_iter().map(|(d, t)| (ElementId::new(d), t.map(ElementId::new))).collect();
        model.objects.insert(id.clone(), ObjectInst { id, name: o.name, class, slots, delegates });
    }
    for (i, l) in doc.links.into_iter().enumerate() {
        let id = claim(&l.id, format!("/links/{i}/id"))?;
        model.links.insert(
            id.clone(),
            Link {
                id,
                association: ElementId::new(l.association),
                end1: ElementId::new(l.end1),
                end2: ElementId::new(l.end2),
            },
        );
    }
    if let Some(issue) = check_invariants(&model).into_iter().next() {
        return Err(issue.into());
    }

    let mut layouts = Vec::new();
    let mut names = HashSet::new();
    for (i, d) in doc.diagrams.into_iter().enumerate() {
        if !names.insert(d.name.clone()) {
            return Err(LoadError::new(
                LoadErrorKind::Invariant,
                format!("/diagrams/{i}/name"),
                format!("duplicate diagram `{}`", d.name),
            ));
        }
        let mut layout = DiagramLayout::new(d.name);
        let mut seen = HashSet::new();
        for (j, n) in d.nodes.into_iter().enumerate() {
            let element = ElementId::new(n.element);
            if model.class(&element).is_none()
                && model.object(&element).is_none()
                && model.enumeration(&element).is_none()
            {
                return Err(LoadError::new(
                    LoadErrorKind::Reference,
                    format!("/diagrams/{i}/nodes/{j}/element"),
                    format!("unknown element {element}"),
                ));
            }
            if !seen.insert(element.clone()) {
                return Err(LoadError::new(
                    LoadErrorKind::Invariant,
                    format!("/diagrams/{i}/nodes/{j}/element"),
                    format!("{element} placed twice"),
                ));
            }
            layout.nodes.push(DiagramNode { element, x: n.x, y: n.y });
        }
        layouts.push(layout);
    }

    for id in ids {
        model.ids.observe(&ElementId::new(id));
    }
    recompute_derived(&mut model);
    Ok((model, layouts))
}

/// Canonical document bytes. Diagram nodes for elements that no longer
/// exist are omitted.
pub fn save(model: &ProjectModel, layouts: &[DiagramLayout]) -> String {
    let doc = DocProject {
        format_version: FORMAT_VERSION,
        project_name: model.name.clone(),
        enumerations: model
            .enumerations
            .values()
            .map(|e| DocEnumeration { id: e.id.to_string(), name: e.name.clone(), literals: e.literals.clone() })
            .collect(),
        classes: model.classes.values().map(class_to_doc).collect(),
        associations: model.associations.values().map(association_to_doc).collect(),
        objects: model.objects.values().map(object_to_doc).collect(),
        links: model
            .links
            .values()
            .map(|l| DocLink {
                id: l.id.to_string(),
                association: l.association.to_string(),
                end1: l.end1.to_string(),
                end2: l.end2.to_string(),
            })
            .collect(),
        diagrams: layouts
            .iter()
            .map(|d| DocDiagram {
                name: d.name.clone(),
                nodes: d
                    .nodes
                    .iter()
                    .filter(|n| {
                        model.class(&n.element).is_some()
                            || model.object(&n.element).is_some()
                            || model.enumeration(&n.element).is_some()
                    })
                    .map(|n| DocNode { element: n.element.to_string(), x: n.x, y: n.y })
                    .collect(),
            })
            .collect(),
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("document serializes");
    out.push('\n');
    out
}

fn object_to_doc(o: &ObjectInst) -> DocObject {
    DocObject {
        id: o.id.to_string(),
        name: o.name.clone(),
        class: o.class.to_string(),
        slots: o
            .slots
            .iter()
            .map(|(a, s)| {
                let v = match s {
                    Slot::Entered(v) => value_to_doc(v),
                    _ => None,
                };
                (a.to_string(), v)
            })
            .collect(),
        delegates: o.delegates.iter().map(|(d, t)| (d.to_string(), t.as_ref().map(|t| t.to_string()))).collect(),
    }
}

fn association_to_doc(a: &AssociationDef) -> DocAssociation {
    DocAssociation {
        id: a.id.to_string(),
        name: a.name.clone(),
        ends: a.ends.clone().map(|e| DocEnd {
            class: e.class.to_string(),
            role: e.role,
            multiplicity: e.multiplicity.to_string(),
        }),
    }
}

fn class_to_doc(c: &ClassDef) -> DocClass {
    DocClass {
        id: c.id.to_string(),
        name: c.name.clone(),
        is_abstract: c.is_abstract,
        superclass: c.superclass.as_ref().map(|s| s.to_string()),
        delegations: c
            .delegations
            .iter()
            .map(|d| DocDelegation { id: d.id.to_string(), name: d.name.clone(), target: d.target.to_string() })
            .collect(),
        attributes: c
            .attributes
            .iter()
            .map(|a| DocAttribute {
                id: a.id.to_string(),
                name: a.name.clone(),
                ty: type_to_doc(&a.ty),
                derivation: a.derivation.clone(),
            })
            .collect(),
        operations: c
            .operations
            .iter()
            .map(|o| DocOperation {
                id: o.id.to_string(),
                name: o.name.clone(),
                params: o.params.iter().map(|p| DocParam { name: p.name.clone(), ty: type_to_doc(&p.ty) }).collect(),
                return_type: type_to_doc(&o.return_type),
                body: o.body.clone(),
                monitored: o.monitored,
            })
            .collect(),
        constraints: c
            .constraints
            .iter()
            .map(|k| DocConstraint {
                id: k.id.to_string(),
                name: k.name.clone(),
                body: k.body.clone(),
                message: k.message.clone(),
            })
            .collect(),
    }
}

/// Document JSON of one element, as embedded in the project document.
pub fn class_to_json(c: &ClassDef) -> serde_json::Value {
    serde_json::to_value(class_to_doc(c)).expect("class encodes")
}

pub fn object_to_json(o: &ObjectInst) -> serde_json::Value {
    serde_json::to_value(object_to_doc(o)).expect("object encodes")
}

pub fn association_to_json(a: &AssociationDef) -> serde_json::Value {
    serde_json::to_value(association_to_doc(a)).expect("association encodes")
}

pub fn enumeration_to_json(e: &EnumerationDef) -> serde_json::Value {
    json!({ "id": e.id.as_str(), "name": e.name, "literals": e.literals })
}

pub fn link_to_json(l: &Link) -> serde_json::Value {
    json!({ "id": l.id.as_str(), "association": l.association.as_str(), "end1": l.end1.as_str(), "end2": l.end2.as_str() })
}

/// `"Integer"`, `{"enumeration": id}` or `{"class": id}`.
pub fn type_to_json(ty: &TypeRef) -> serde_json::Value {
    serde_json::to_value(type_to_doc(ty)).expect("type encodes")
}

pub fn type_from_json(json: &serde_json::Value) -> Result<TypeRef, String> {
    let doc: DocType = serde_json::from_value(json.clone()).map_err(|_| format!("bad type {json}"))?;
    type_from_doc(&doc, "").map_err(|e| e.cause)
}

/// The whole document as a JSON value.
pub fn document_json(model: &ProjectModel, layouts: &[DiagramLayout]) -> serde_json::Value {
    serde_json::from_str(&save(model, layouts)).expect("saved document parses")
}
