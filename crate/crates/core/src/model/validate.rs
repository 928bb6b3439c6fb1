//! From-scratch check of every store invariant.
//!
//! The kernel keeps these true incrementally; this pass exists for
//! documents read from disk and as a backstop after schema edits.

use std::collections::{HashMap, HashSet};

use super::{is_valid_name, ProjectModel};
use crate::engine::check_conformance;
use crate::expr::{assignable, parse, typecheck, Type};
use crate::id::ElementId;
use crate::value::TypeRef;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IssueCategory {
    /// An id points at nothing (or at the wrong kind of element).
    Reference,
    /// A structural rule is broken.
    Invariant,
    /// An expression source fails to parse or type-check.
    Expression,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvariantIssue {
    pub category: IssueCategory,
    /// JSON pointer into the project document.
    pub pointer: String,
    pub message: String,
}

struct Issues(Vec<InvariantIssue>);

impl Issues {
    fn push(&mut self, category: IssueCategory, pointer: String, message: impl Into<String>) {
        self.0.push(InvariantIssue { category, pointer, message: message.into() });
    }
}

/// Returns every broken invariant, in document order.
pub fn check_invariants(model: &ProjectModel) -> Vec<InvariantIssue> {
    use IssueCategory::*;
    let mut out = Issues(Vec::new());

    let mut names: HashMap<String, String> = HashMap::new();
    let mut claim = |out: &mut Issues, name: &str, pointer: String| {
        if !is_valid_name(name) {
            out.push(Invariant, pointer.clone(), format!("`{name}` is not a valid name"));
        }
        if let Some(prev) = names.get(name) {
            out.push(Invariant, pointer, format!("name `{name}` already used at {prev}"));
        } else {
            names.insert(name.to_owned(), pointer);
        }
    };

    for (i, e) in model.enumerations.values().enumerate() {
        let p = format!("/enumerations/{i}");
        claim(&mut out, &e.name, format!("{p}/name"));
        if e.literals.is_empty() {
            out.push(Invariant, format!("{p}/literals"), "enumeration has no literals");
        }
        let mut seen = HashSet::new();
        for (j, l) in e.literals.iter().enumerate() {
            if !is_valid_name(l) || !seen.insert(l) {
                out.push(Invariant, format!("{p}/literals/{j}"), format!("bad or duplicate literal `{l}`"));
            }
        }
    }

    let check_type = |out: &mut Issues, ty: &TypeRef, pointer: String| match ty {
        TypeRef::Data(_) => {}
        TypeRef::Enumeration(id) if model.enumeration(id).is_none() => {
            out.push(Reference, pointer, format!("unknown enumeration {id}"))
        }
        TypeRef::Class(id) if model.class(id).is_none() => out.push(Reference, pointer, format!("unknown class {id}")),
        _ => {}
    };

    let mut structurally_sound = true;
    for (i, c) in model.classes.values().enumerate() {
        let p = format!("/classes/{i}");
        claim(&mut out, &c.name, format!("{p}/name"));
        if let Some(s) = &c.superclass {
            if model.class(s).is_none() {
                out.push(Reference, format!("{p}/superclass"), format!("unknown class {s}"));
                structurally_sound = false;
            } else if model.superchain(s).iter().any(|x| x.id == c.id) {
                out.push(Invariant, format!("{p}/superclass"), "generalization cycle");
                structurally_sound = false;
            }
        }
        for (j, a) in c.attributes.iter().enumerate() {
            check_type(&mut out, &a.ty, format!("{p}/attributes/{j}/type"));
        }
        for (j, o) in c.operations.iter().enumerate() {
            check_type(&mut out, &o.return_type, format!("{p}/operations/{j}/returnType"));
            let mut seen = HashSet::new();
            for (k, prm) in o.params.iter().enumerate() {
                check_type(&mut out, &prm.ty, format!("{p}/operations/{j}/params/{k}/type"));
                if !is_valid_name(&prm.name) || !seen.insert(&prm.name) {
                    out.push(
                        Invariant,
                        format!("{p}/operations/{j}/params/{k}/name"),
                        format!("bad or duplicate parameter `{}`", prm.name),
                    );
                }
            }
            if o.monitored && !o.params.is_empty() {
                out.push(Invariant, format!("{p}/operations/{j}/monitored"), "monitored operation takes parameters");
            }
        }
        for (j, d) in c.delegations.iter().enumerate() {
            if model.class(&d.target).is_none() {
                out.push(Reference, format!("{p}/delegations/{j}/target"), format!("unknown class {}", d.target));
                structurally_sound = false;
            }
        }
    }
    for (i, a) in model.associations.values().enumerate() {
        let p = format!("/associations/{i}");
        if !is_valid_name(&a.name) {
            out.push(Invariant, format!("{p}/name"), format!("`{}` is not a valid name", a.name));
        }
        for (j, end) in a.ends.iter().enumerate() {
            if model.class(&end.class).is_none() {
                out.push(Reference, format!("{p}/ends/{j}/class"), format!("unknown class {}", end.class));
                structurally_sound = false;
            }
            if !is_valid_name(&end.role) {
                out.push(Invariant, format!("{p}/ends/{j}/role"), format!("`{}` is not a valid role", end.role));
            }
            if !end.multiplicity.is_valid() {
                out.push(
                    Invariant,
                    format!("{p}/ends/{j}/multiplicity"),
                    format!("invalid multiplicity {}", end.multiplicity),
                );
            }
        }
        if model.associations.values().take(i).any(|b| b.name == a.name) {
            out.push(Invariant, format!("{p}/name"), format!("association name `{}` used twice", a.name));
        }
        if a.ends[0].role == a.ends[1].role {
            out.push(Invariant, format!("{p}/ends/1/role"), "role names must differ");
        }
    }
    if !structurally_sound {
        return out.0;
    }

    // Feature names, including navigable roles, are unique per class.
    for (i, c) in model.classes.values().enumerate() {
        let mut seen = HashSet::new();
        for n in model.feature_names(&c.id) {
            if !is_valid_name(n) || !seen.insert(n) {
                out.push(Invariant, format!("/classes/{i}"), format!("feature name `{n}` is invalid or defined twice"));
            }
        }
        if let Some(cycle_at) = delegation_cycle(model, &c.id) {
            out.push(Invariant, format!("/classes/{i}/delegations"), format!("delegation cycle through {cycle_at}"));
            return out.0;
        }
    }

    for (i, c) in model.classes.values().enumerate() {
        let p = format!("/classes/{i}");
        for (j, a) in c.attributes.iter().enumerate() {
            if let Some(src) = &a.derivation {
                check_expr(
                    model,
                    &mut out,
                    &c.id,
                    &[],
                    src,
                    &Type::from_ref(&a.ty),
                    format!("{p}/attributes/{j}/derivation"),
                );
            }
        }
        for (j, o) in c.operations.iter().enumerate() {
            let params: Vec<(String, Type)> =
                o.params.iter().map(|p| (p.name.clone(), Type::from_ref(&p.ty))).collect();
            check_expr(
                model,
                &mut out,
                &c.id,
                &params,
                &o.body,
                &Type::from_ref(&o.return_type),
                format!("{p}/operations/{j}/body"),
            );
        }
        for (j, k) in c.constraints.iter().enumerate() {
            check_expr(model, &mut out, &c.id, &[], &k.body, &Type::Boolean, format!("{p}/constraints/{j}/body"));
            check_expr(model, &mut out, &c.id, &[], &k.message, &Type::String, format!("{p}/constraints/{j}/message"));
        }
    }

    for (i, o) in model.objects.values().enumerate() {
        let p = format!("/objects/{i}");
        claim(&mut out, &o.name, format!("{p}/name"));
        match model.class(&o.class) {
            None => {
                out.push(Reference, format!("{p}/class"), format!("unknown class {}", o.class));
                continue;
            }
            Some(c) if c.is_abstract => {
                out.push(Invariant, format!("{p}/class"), format!("class `{}` is abstract", c.name));
            }
            _ => {}
        }
        for f in check_conformance(model, &o.id) {
            let category = match f.kind.code() {
                "dangling-ref" | "dangling-delegate" => Reference,
                _ => Invariant,
            };
            out.push(category, format!("{p}/{}", f.pointer), format!("{}: {}", f.kind.code(), f.detail));
        }
    }

    for (i, o) in model.objects.values().enumerate() {
        if delegate_binding_cycle(model, &o.id) {
            out.push(
                Invariant,
                format!("/objects/{i}/delegates"),
                format!("delegate bindings of {} form a cycle", o.name),
            );
        }
    }

    let mut seen_links = HashSet::new();
    for (i, l) in model.links.values().enumerate() {
        let p = format!("/links/{i}");
        let Some(a) = model.association(&l.association) else {
            out.push(Reference, format!("{p}/association"), format!("unknown association {}", l.association));
            continue;
        };
        for (j, (end_obj, key)) in [(&l.end1, "end1"), (&l.end2, "end2")].into_iter().enumerate() {
            match model.object(end_obj) {
                None => out.push(Reference, format!("{p}/{key}"), format!("unknown object {end_obj}")),
                Some(o) if !model.conforms_to(&o.class, &a.ends[j].class) => out.push(
                    Invariant,
                    format!("{p}/{key}"),
                    format!("{} does not conform to the `{}` end", o.name, a.ends[j].role),
                ),
                _ => {}
            }
        }
        if !seen_links.insert((&l.association, &l.end1, &l.end2)) {
            out.push(Invariant, p, "duplicate link");
        }
    }
    out.0
}

fn check_expr(
    model: &ProjectModel,
    out: &mut Issues,
    context: &ElementId,
    params: &[(String, Type)],
    src: &str,
    expected: &Type,
    pointer: String,
) {
    let ast = match parse(src) {
        Ok(a) => a,
        Err(e) => return out.push(IssueCategory::Expression, pointer, format!("parse error at {e}")),
    };
    match typecheck(&ast, model, context, params) {
        Err(e) => out.push(IssueCategory::Expression, pointer, format!("type error: {e}")),
        Ok(c) if !assignable(model, &c.ty, expected) => out.push(
            IssueCategory::Expression,
            pointer,
            format!("has type {}, expected {}", c.ty.display(model), expected.display(model)),
        ),
        Ok(_) => {}
    }
}

/// Name of a class on a cycle in the effective delegation graph reachable
/// from `start`, if any.
pub(crate) fn delegation_cycle(model: &ProjectModel, start: &ElementId) -> Option<String> {
    fn visit<'m>(
        model: &'m ProjectModel,
        class: &'m ElementId,
        stack: &mut Vec<&'m ElementId>,
        done: &mut HashSet<&'m ElementId>,
    ) -> Option<String> {
        if stack.contains(&class) {
            return Some(model.element_name(class).unwrap_or(class.as_str()).to_owned());
        }
        if done.contains(class) {
            return None;
        }
        stack.push(class);
        for d in model.effective_delegations(class) {
            if let Some(c) = visit(model, &d.target, stack, done) {
                return Some(c);
            }
        }
        stack.pop();
        done.insert(class);
        None
    }
    visit(model, start, &mut Vec::new(), &mut HashSet::new())
}

/// Following delegate bindings from `start` leads back to `start`.
fn delegate_binding_cycle(model: &ProjectModel, start: &ElementId) -> bool {
    let mut stack: Vec<&ElementId> = Vec::new();
    let mut seen = HashSet::new();
    if let Some(o) = model.object(start) {
        stack.extend(o.delegates.values().flatten());
    }
    while let Some(cur) = stack.pop() {
        if cur == start {
            return true;
        }
        if seen.insert(cur) {
            if let Some(o) = model.object(cur) {
                stack.extend(o.delegates.values().flatten());
            }
        }
    }
    false
}
