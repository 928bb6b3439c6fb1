use serde::{Deserialize, Serialize};

use super::eval_result_to_json;
use crate::engine::{ConformanceKind, MonitorSnapshot, Status, Violation, ViolationReport, ViolationSource};
use crate::id::ElementId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Json,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct JsonReport {
    revision: u64,
    entries: Vec<JsonViolation>,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct JsonViolation {
    object: String,
    object_name: String,
    source: JsonSource,
    source_label: String,
    status: String,
    message: String,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum JsonSource {
    Constraint { constraint: String },
    Multiplicity { association: String, end: usize },
    Conformance { check: String },
    Derivation { attribute: String },
}

fn to_json(r: &ViolationReport) -> JsonReport {
    JsonReport {
        revision: r.revision,
        entries: r
            .entries
            .iter()
            .map(|v| JsonViolation {
                object: v.object.to_string(),
                object_name: v.object_name.clone(),
                source: match &v.source {
                    ViolationSource::Constraint { constraint } => {
                        JsonSource::Constraint { constraint: constraint.to_string() }
                    }
                    ViolationSource::Multiplicity { association, end } => {
                        JsonSource::Multiplicity { association: association.to_string(), end: *end }
                    }
                    ViolationSource::Conformance { kind } => JsonSource::Conformance { check: kind.code().to_owned() },
                    ViolationSource::Derivation { attribute } => {
                        JsonSource::Derivation { attribute: attribute.to_string() }
                    }
                },
                source_label: v.source_label.clone(),
                status: v.status.code().to_owned(),
                message: v.message.clone(),
            })
            .collect(),
    }
}

pub fn report_to_json(r: &ViolationReport) -> serde_json::Value {
    serde_json::to_value(to_json(r)).expect("report encodes")
}

/// Inverse of the JSON export.
pub fn parse_report_json(text: &str) -> Result<ViolationReport, String> {
    let j: JsonReport = serde_json::from_str(text).map_err(|e| e.to_string())?;
    let entries = j
        .entries
        .into_iter()
        .map(|v| {
            let source = match v.source {
                JsonSource::Constraint { constraint } => {
                    ViolationSource::Constraint { constraint: ElementId::new(constraint) }
                }
                JsonSource::Multiplicity { association, end } => {
                    ViolationSource::Multiplicity { association: ElementId::new(association), end }
                }
                JsonSource::Conformance { check } => ViolationSource::Conformance {
                    kind: ConformanceKind::from_code(&check).ok_or_else(|| format!("unknown check `{check}`"))?,
                },
                JsonSource::Derivation { attribute } => {
                    ViolationSource::Derivation { attribute: ElementId::new(attribute) }
                }
            };
            Ok(Violation {
                object: ElementId::new(v.object),
                object_name: v.object_name,
                source,
                source_label: v.source_label,
                status: Status::from_code(&v.status).ok_or_else(|| format!("unknown status `{}`", v.status))?,
                message: v.message,
            })
        })
        .collect::<Result<_, String>>()?;
    Ok(ViolationReport { revision: j.revision, entries })
}

pub fn monitors_to_json(m: &MonitorSnapshot) -> serde_json::Value {
    serde_json::Value::Array(
        m.entries
            .iter()
            .map(|e| {
                let mut obj = serde_json::json!({
                    "object": e.object.as_str(),
                    "operation": e.operation.as_str(),
                    "objectName": e.object_name,
                    "operationName": e.operation_name,
                });
                let result = eval_result_to_json(&e.result);
                obj.as_object_mut()
                    .expect("object literal")
                    .extend(result.as_object().expect("object literal").clone());
                obj
            })
            .collect(),
    )
}

/// Text: one `VIOLATED|NOT-EVALUABLE <object> <source>: <message>` line per
/// entry. JSON: the report fields, pretty-printed.
pub fn export_report(r: &ViolationReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Text => r
            .entries
            .iter()
            .map(|v| {
                let status = match v.status {
                    Status::Violated => "VIOLATED",
                    Status::NotEvaluable => "NOT-EVALUABLE",
                };
                format!("{status} {} {}: {}\n", v.object_name, v.source_label, v.message)
            })
            .collect(),
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(&to_json(r)).expect("report encodes");
            s.push('\n');
            s
        }
    }
}
