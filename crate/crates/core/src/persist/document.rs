//! Serde mirror of the `.umlpp.json` document. Field order here is the
//! canonical key order on disk.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub(crate) struct DocProject {
    pub format_version: u32,
    pub project_name: String,
    pub enumerations: Vec<DocEnumeration>,
    pub classes: Vec<DocClass>,
    pub associations: Vec<DocAssociation>,
    pub objects: Vec<DocObject>,
    pub links: Vec<DocLink>,
    pub diagrams: Vec<DocDiagram>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct DocEnumeration {
    pub id: String,
    pub name: String,
    pub literals: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct DocClass {
    pub id: String,
    pub name: String,
    #[serde(rename = "abstract")]
    pub is_abstract: bool,
    pub superclass: Option<String>,
    pub delegations: Vec<DocDelegation>,
    pub attributes: Vec<DocAttribute>,
    pub operations: Vec<DocOperation>,
    pub constraints: Vec<DocConstraint>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct DocDelegation {
    pub id: String,
    pub name: String,
    pub target: String,
}

/// `"Integer"` for data types, `{"enumeration": id}` or `{"class": id}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub(crate) enum DocType {
    Data(String),
    Element(DocElementType),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub(crate) enum DocElementType {
    Enumeration(String),
    Class(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct DocAttribute {
    pub id: String,
    pub name: String,
    #[serde(rename = "type")]
    pub ty: DocType,
    pub derivation: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct DocParam {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: DocType,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub(crate) struct DocOperation {
    pub id: String,
    pub name: String,
    pub params: Vec<DocParam>,
    pub return_type: DocType,
    pub body: String,
    pub monitored: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct DocConstraint {
    pub id: String,
    pub name: String,
    pub body: String,
    pub message: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct DocAssociation {
    pub id: String,
    pub name: String,
    pub ends: [DocEnd; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct DocEnd {
    pub class: String,
    pub role: String,
    pub multiplicity: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct DocObject {
    pub id: String,
    pub name: String,
    pub class: String,
    /// Attribute id to value; `null` for unset and derived slots.
    pub slots: IndexMap<String, Option<DocValue>>,
    /// Delegation id to bound object id.
    pub delegates: IndexMap<String, Option<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub(crate) enum DocValue {
    String { v: String },
    Integer { v: i64 },
    Float { v: f64 },
    Boolean { v: bool },
    Date { v: String },
    Monetary { amount: String, currency: String },
    Enum { enumeration: String, literal: String },
    Ref { object: String },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct DocLink {
    pub id: String,
    pub association: String,
    pub end1: String,
    pub end2: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct DocDiagram {
    pub name: String,
    pub nodes: Vec<DocNode>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct DocNode {
    pub element: String,
    pub x: i64,
    pub y: i64,
}
