use crate::id::ElementId;
use crate::model::{ProjectModel, Slot};
use crate::value::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConformanceKind {
    /// Slot for an attribute the class does not have.
    OrphanSlot,
    /// Effective attribute without a slot.
    MissingSlot,
    /// Slots present but not in effective attribute order.
    SlotOrder,
    /// Entered value of the wrong type.
    SlotType,
    /// Entered value on a derived attribute, or computed on an entered one.
    SlotState,
    /// Reference to an object that does not exist.
    DanglingRef,
    OrphanDelegate,
    MissingDelegate,
    DelegateType,
    DanglingDelegate,
}

impl ConformanceKind {
    pub fn code(self) -> &'static str {
        match self {
            ConformanceKind::OrphanSlot => "orphan-slot",
            ConformanceKind::MissingSlot => "missing-slot",
            ConformanceKind::SlotOrder => "slot-order",
            ConformanceKind::SlotType => "type",
            ConformanceKind::SlotState => "slot-state",
            ConformanceKind::DanglingRef => "dangling-ref",
            ConformanceKind::OrphanDelegate => "orphan-delegate",
            ConformanceKind::MissingDelegate => "missing-delegate",
            ConformanceKind::DelegateType => "delegate-type",
            ConformanceKind::DanglingDelegate => "dangling-delegate",
        }
    }

    pub fn from_code(code: &str) -> Option<Self> {
        use ConformanceKind::*;
        [
            OrphanSlot,
            MissingSlot,
            SlotOrder,
            SlotType,
            SlotState,
            DanglingRef,
            OrphanDelegate,
            MissingDelegate,
            DelegateType,
            DanglingDelegate,
        ]
        .into_iter()
        .find(|k| k.code() == code)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConformanceFinding {
    pub kind: ConformanceKind,
    /// Pointer relative to the object entry, e.g. `slots/a3`.
    pub pointer: String,
    pub detail: String,
}

/// Checks that an object's slots and delegate bindings match its class.
/// Returns nothing for objects built through the kernel.
pub fn check_conformance(model: &ProjectModel, object: &ElementId) -> Vec<ConformanceFinding> {
    let Some(obj) = model.object(object) else { return vec![] };
    if model.class(&obj.class).is_none() {
        return vec![];
    }
    let mut out = Vec::new();
    let mut push = |kind, pointer: String, detail: String| out.push(ConformanceFinding { kind, pointer, detail });

    let attrs = model.effective_attributes(&obj.class);
    for (aid, slot) in &obj.slots {
        let p = format!("slots/{aid}");
        let Some(attr) = attrs.iter().find(|a| &a.id == aid) else {
            push(ConformanceKind::OrphanSlot, p, format!("{} has no attribute {aid}", obj.name));
            continue;
        };
        match (slot, attr.is_derived()) {
            (Slot::Entered(_), true) => {
                push(ConformanceKind::SlotState, p, format!("`{}` is derived but holds a value", attr.name))
            }
            (Slot::Unset, true) => {
                push(ConformanceKind::SlotState, p, format!("`{}` is derived but not computed", attr.name))
            }
            (Slot::Computed(_), false) => {
                push(ConformanceKind::SlotState, p, format!("`{}` is not derived", attr.name))
            }
            (Slot::Entered(Value::Ref(r)), false) if model.object(r).is_none() => {
                push(ConformanceKind::DanglingRef, p, format!("`{}` refers to missing object {r}", attr.name))
            }
            (Slot::Entered(v), false) if !model.value_conforms(v, &attr.ty) => push(
                ConformanceKind::SlotType,
                p,
                format!("`{}` expects {}, holds {}", attr.name, model.type_ref_name(&attr.ty), v.kind_name()),
            ),
            _ => {}
        }
    }
    for a in &attrs {
        if !obj.slots.contains_key(&a.id) {
            push(ConformanceKind::MissingSlot, "slots".into(), format!("no slot for `{}`", a.name));
        }
    }
    let present: Vec<&ElementId> = attrs.iter().map(|a| &a.id).filter(|id| obj.slots.contains_key(*id)).collect();
    let stored: Vec<&ElementId> = obj.slots.keys().filter(|k| attrs.iter().any(|a| &a.id == *k)).collect();
    if present != stored {
        push(ConformanceKind::SlotOrder, "slots".into(), "slots are not in attribute order".into());
    }

    let delegs = model.effective_delegations(&obj.class);
    for (did, bound) in &obj.delegates {
        let p = format!("delegates/{did}");
        let Some(d) = delegs.iter().find(|d| &d.id == did) else {
            push(ConformanceKind::OrphanDelegate, p, format!("{} has no delegation {did}", obj.name));
            continue;
        };
        let Some(target) = bound else { continue };
        match model.object(target) {
            None => {
                push(ConformanceKind::DanglingDelegate, p, format!("`{}` bound to missing object {target}", d.name))
            }
            Some(t) if !model.conforms_to(&t.class, &d.target) => push(
                ConformanceKind::DelegateType,
                p,
                format!(
                    "`{}` bound to {}, not an instance of {}",
                    d.name,
                    t.name,
                    model.type_ref_name(&crate::value::TypeRef::Class(d.target.clone()))
                ),
            ),
            _ => {}
        }
    }
    for d in &delegs {
        if !obj.delegates.contains_key(&d.id) {
            push(ConformanceKind::MissingDelegate, "delegates".into(), format!("no binding for `{}`", d.name));
        }
    }
    out
}
