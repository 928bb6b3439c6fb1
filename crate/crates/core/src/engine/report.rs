use crate::expr::{EvalResult, Evaluator, Undefined, UndefinedReason};
use crate::id::ElementId;
use crate::model::{ProjectModel, Slot};
use crate::value::Value;

use super::{check_conformance, ConformanceKind, DelegatingResolver};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Violated,
    NotEvaluable,
}

impl Status {
    pub fn code(self) -> &'static str {
        match self {
            Status::Violated => "violated",
            Status::NotEvaluable => "not-evaluable",
        }
    }

    pub fn from_code(s: &str) -> Option<Self> {
        match s {
            "violated" => Some(Status::Violated),
            "not-evaluable" => Some(Status::NotEvaluable),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ViolationSource {
    Constraint {
        constraint: ElementId,
    },
    /// `end` is the index (0 or 1) of the end whose bound is checked.
    Multiplicity {
        association: ElementId,
        end: usize,
    },
    Conformance {
        kind: ConformanceKind,
    },
    /// Derived slot caught in a dependency cycle.
    Derivation {
        attribute: ElementId,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Violation {
    pub object: ElementId,
    pub object_name: String,
    pub source: ViolationSource,
    /// Display form of the source, e.g. `Ticket.positivePrice`.
    pub source_label: String,
    pub status: Status,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ViolationReport {
    pub revision: u64,
    pub entries: Vec<Violation>,
}

impl ViolationReport {
    pub fn violated(&self) -> impl Iterator<Item = &Violation> {
        self.entries.iter().filter(|v| v.status == Status::Violated)
    }

    pub fn has_violations(&self) -> bool {
        self.violated().next().is_some()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonitorEntry {
    pub object: ElementId,
    pub operation: ElementId,
    pub object_name: String,
    pub operation_name: String,
    pub result: EvalResult,
}

/// Results of every monitored operation on every object.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MonitorSnapshot {
    pub entries: Vec<MonitorEntry>,
}

impl MonitorSnapshot {
    pub fn get(&self, object: &ElementId, operation: &ElementId) -> Option<&EvalResult> {
        self.entries.iter().find(|e| &e.object == object && &e.operation == operation).map(|e| &e.result)
    }
}

/// One committed kernel mutation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MutationTransaction {
    pub operation: String,
    pub arguments: Vec<String>,
    pub revision: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlotUpdate {
    pub object: ElementId,
    pub attribute: ElementId,
    pub result: EvalResult,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiplicityFinding {
    pub object: ElementId,
    pub association: ElementId,
    pub end: usize,
    pub count: usize,
}

/// Objects whose number of links at some association end falls outside
/// that end's multiplicity, in object order then association order.
pub fn check_multiplicities(model: &ProjectModel) -> Vec<MultiplicityFinding> {
    let mut out = Vec::new();
    for o in model.objects() {
        for role in model.navigable_roles(&o.class) {
            let count = model.navigate(&o.id, &role).len();
            if !role.end().multiplicity.admits(count) {
                out.push(MultiplicityFinding {
                    object: o.id.clone(),
                    association: role.association.id.clone(),
                    end: role.to_end,
                    count,
                });
            }
        }
    }
    out
}

/// Recomputes every derived slot and stores the results. Returns the slots
/// whose stored result changed.
pub fn recompute_derived(model: &mut ProjectModel) -> Vec<SlotUpdate> {
    let computed: Vec<SlotUpdate> = {
        let resolver = DelegatingResolver;
        let ev = Evaluator::new(model, &resolver);
        model
            .objects()
            .flat_map(|o| {
                o.slots
                    .iter()
                    .filter(|(_, s)| matches!(s, Slot::Computed(_)))
                    .map(|(a, _)| (o.id.clone(), a.clone()))
                    .collect::<Vec<_>>()
            })
            .map(|(object, attribute)| {
                let result = ev.derived_value(&object, &attribute);
                SlotUpdate { object, attribute, result }
            })
            .collect()
    };
    let mut changed = Vec::new();
    for u in computed {
        let slot =
            model.objects.get_mut(&u.object).and_then(|o| o.slots.get_mut(&u.attribute)).expect("slot listed above");
        let next = Slot::Computed(u.result.clone());
        if *slot != next {
            *slot = next;
            changed.push(u);
        }
    }
    changed
}

fn message_text(model: &ProjectModel, result: EvalResult, fallback: &str) -> String {
    match result {
        Ok(Value::String(s)) => s,
        Ok(v) => model.render_value(&v),
        Err(_) => fallback.to_owned(),
    }
}

/// Evaluates every constraint, multiplicity, conformance rule, derived slot
/// and monitored operation from scratch.
pub fn full_report(model: &ProjectModel, revision: u64) -> (ViolationReport, MonitorSnapshot) {
    let resolver = DelegatingResolver;
    let ev = Evaluator::new(model, &resolver);
    let mut entries = Vec::new();
    let mut monitors = Vec::new();
    let multiplicities = check_multiplicities(model);

    for o in model.objects() {
        let entry = |source, source_label: String, status, message: String| Violation {
            object: o.id.clone(),
            object_name: o.name.clone(),
            source,
            source_label,
            status,
            message,
        };
        for (class, k) in model.effective_constraints(&o.class) {
            let label = format!("{}.{}", class.name, k.name);
            let source = ViolationSource::Constraint { constraint: k.id.clone() };
            match ev.eval_source(&k.body, &o.id, &[]) {
                Ok(Value::Boolean(true)) => {}
                Ok(Value::Boolean(false)) => {
                    let msg = message_text(model, ev.eval_source(&k.message, &o.id, &[]), &k.name);
                    entries.push(entry(source, label, Status::Violated, msg));
                }
                Ok(other) => entries.push(entry(
                    source,
                    label,
                    Status::NotEvaluable,
                    format!("constraint yielded {}", other.kind_name()),
                )),
                Err(u) => entries.push(entry(source, label, Status::NotEvaluable, u.to_string())),
            }
        }
        for a in model.effective_attributes(&o.class).into_iter().filter(|a| a.is_derived()) {
            if let Err(u @ Undefined { reason: UndefinedReason::RecursionLimit, .. }) = ev.derived_value(&o.id, &a.id) {
                let class = model.attribute(&a.id).map_or("?", |(c, _)| c.name.as_str());
                entries.push(entry(
                    ViolationSource::Derivation { attribute: a.id.clone() },
                    format!("{class}.{}", a.name),
                    Status::NotEvaluable,
                    u.to_string(),
                ));
            }
        }
        for f in multiplicities.iter().filter(|f| f.object == o.id) {
            let assoc = model.association(&f.association).expect("finding names an association");
            let end = &assoc.ends[f.end];
            entries.push(entry(
                ViolationSource::Multiplicity { association: assoc.id.clone(), end: f.end },
                format!("{}.{}", assoc.name, end.role),
                Status::Violated,
                format!("{} `{}` link(s), multiplicity {}", f.count, end.role, end.multiplicity),
            ));
        }
        for f in check_conformance(model, &o.id) {
            entries.push(entry(
                ViolationSource::Conformance { kind: f.kind },
                format!("conformance:{}", f.kind.code()),
                Status::Violated,
                f.detail,
            ));
        }
        for op in model.effective_operations(&o.class).into_iter().filter(|op| op.monitored) {
            monitors.push(MonitorEntry {
                object: o.id.clone(),
                operation: op.id.clone(),
                object_name: o.name.clone(),
                operation_name: op.name.clone(),
                result: ev.invoke(&o.id, op, vec![]),
            });
        }
    }
    (ViolationReport { revision, entries }, MonitorSnapshot { entries: monitors })
}

/// Report after a committed mutation. Always a full sweep, so it equals
/// [`full_report`] at the same revision.
pub fn after_mutation(model: &ProjectModel, txn: &MutationTransaction) -> (ViolationReport, MonitorSnapshot) {
    full_report(model, txn.revision)
}
