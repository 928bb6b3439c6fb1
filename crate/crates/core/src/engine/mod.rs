//! Execution semantics: delegation-aware feature resolution, operation
//! invocation, and the post-mutation sweep that produces the violation
//! report and monitor snapshot.

mod conformance;
mod report;
mod resolve;

use thiserror::Error;

pub use conformance::{check_conformance, ConformanceFinding, ConformanceKind};
pub use report::{
    after_mutation, check_multiplicities, full_report, recompute_derived, MonitorEntry, MonitorSnapshot,
    MultiplicityFinding, MutationTransaction, SlotUpdate, Status, Violation, ViolationReport, ViolationSource,
};
pub use resolve::{resolve_feature, DelegatingResolver};

use crate::expr::{EvalResult, Evaluator, FeatureKind, Resolution, Span, Undefined, UndefinedReason};
use crate::id::ElementId;
use crate::model::ProjectModel;
use crate::value::{DataType, TypeRef, Value};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InvokeError {
    #[error("unknown object {0}")]
    UnknownObject(String),
    #[error("unknown operation `{0}`")]
    UnknownFeature(String),
    #[error("`{operation}` takes ({}), {given} argument(s) given", .expected.join(", "))]
    ArityMismatch { operation: String, expected: Vec<String>, given: usize },
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
}

impl InvokeError {
    pub fn code(&self) -> &'static str {
        match self {
            InvokeError::UnknownObject(_) => "UnknownObject",
            InvokeError::UnknownFeature(_) => "UnknownFeature",
            InvokeError::ArityMismatch { .. } => "ArityMismatch",
            InvokeError::TypeMismatch(_) => "TypeMismatch",
        }
    }
}

/// Invokes `operation` on `object`. The body runs with `self` bound to
/// `object` even when the operation was found through a delegate. An
/// operation that is only reachable through an unbound delegation yields
/// `Undefined(missing-delegate)` rather than an error.
pub fn invoke(
    model: &ProjectModel,
    object: &ElementId,
    operation: &str,
    args: Vec<Value>,
) -> Result<EvalResult, InvokeError> {
    let obj = model.object(object).ok_or_else(|| InvokeError::UnknownObject(object.to_string()))?;
    let res = resolve_feature(model, object, operation, FeatureKind::Operation);
    let op = match res.outcome {
        Resolution::Found { feature, .. } => model.operation(&feature).map(|(_, o)| o),
        Resolution::NotFound { unbound: Some(d) } => {
            return Ok(Err(Undefined::new(
                UndefinedReason::MissingDelegate,
                Span::default(),
                format!("`{operation}` is only reachable through unbound delegation `{d}` of {}", obj.name),
            )))
        }
        Resolution::NotFound { unbound: None } => None,
    }
    .ok_or_else(|| InvokeError::UnknownFeature(format!("{}.{operation}", obj.name)))?;
    if op.params.len() != args.len() {
        return Err(InvokeError::ArityMismatch {
            operation: op.name.clone(),
            expected: op.params.iter().map(|p| format!("{}: {}", p.name, model.type_ref_name(&p.ty))).collect(),
            given: args.len(),
        });
    }
    for (p, a) in op.params.iter().zip(&args) {
        let widened = matches!((a, &p.ty), (Value::Integer(_), TypeRef::Data(DataType::Float)));
        if !widened && !model.value_conforms(a, &p.ty) {
            return Err(InvokeError::TypeMismatch(format!(
                "`{}` expects {}, got {}",
                p.name,
                model.type_ref_name(&p.ty),
                model.render_value(a)
            )));
        }
    }
    let resolver = DelegatingResolver;
    let ev = Evaluator::new(model, &resolver);
    Ok(ev.invoke(object, op, args))
}

/// Parameters of the operation `operation` as resolved on `object`.
pub fn operation_params(model: &ProjectModel, object: &ElementId, operation: &str) -> Option<Vec<crate::model::Param>> {
    model.object(object)?;
    match resolve_feature(model, object, operation, FeatureKind::Operation).outcome {
        Resolution::Found { feature, .. } => model.operation(&feature).map(|(_, o)| o.params.clone()),
        Resolution::NotFound { .. } => None,
    }
}

/// Evaluates `source` with `self` bound to `context`. Parse and type errors
/// are returned as-is; evaluation itself never fails.
pub fn evaluate(model: &ProjectModel, context: &ElementId, source: &str) -> Result<EvalResult, crate::expr::ExprError> {
    let obj = model.object(context).expect("evaluation context must be an existing object");
    let ast = crate::expr::parse(source)?;
    crate::expr::typecheck(&ast, model, &obj.class, &[])?;
    let resolver = DelegatingResolver;
    let ev = Evaluator::new(model, &resolver);
    Ok(ev.eval(&ast, context, &[]))
}
