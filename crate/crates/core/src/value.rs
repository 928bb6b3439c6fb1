use std::fmt;

use chrono::NaiveDate;

use crate::id::ElementId;
use crate::money::Money;

/// Built-in data types available for attributes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DataType {
    String,
    Integer,
    Float,
    Boolean,
    Date,
    MonetaryValue,
}

impl DataType {
    pub const ALL: [DataType; 6] = [
        DataType::String,
        DataType::Integer,
        DataType::Float,
        DataType::Boolean,
        DataType::Date,
        DataType::MonetaryValue,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DataType::String => "String",
            DataType::Integer => "Integer",
            DataType::Float => "Float",
            DataType::Boolean => "Boolean",
            DataType::Date => "Date",
            DataType::MonetaryValue => "MonetaryValue",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|d| d.name() == name)
    }
}

impl fmt::Display for DataType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Declared type of an attribute, parameter or operation result.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TypeRef {
    Data(DataType),
    Enumeration(ElementId),
    Class(ElementId),
}

/// Runtime value held in a slot or produced by evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    String(String),
    Integer(i64),
    Float(f64),
    Boolean(bool),
    Date(NaiveDate),
    Monetary(Money),
    Enum { enumeration: ElementId, literal: String },
    Ref(ElementId),
    Collection(Vec<Value>),
}

impl Value {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Value::String(_) => "String",
            Value::Integer(_) => "Integer",
            Value::Float(_) => "Float",
            Value::Boolean(_) => "Boolean",
            Value::Date(_) => "Date",
            Value::Monetary(_) => "MonetaryValue",
            Value::Enum { .. } => "enumeration literal",
            Value::Ref(_) => "object reference",
            Value::Collection(_) => "collection",
        }
    }
}
