//! Structural editing of the store, with live migration of instances.
//!
//! Schema edits run against a copy of the model. The copy is migrated
//! (slots added, dropped, coerced or cleared), every stored expression is
//! re-checked, and only then does it replace the original, so a failed
//! edit leaves the model untouched.

use std::collections::HashSet;

use indexmap::IndexMap;

use super::validate::{check_invariants, delegation_cycle, IssueCategory};
use super::*;
use crate::engine::recompute_derived;
use crate::expr::{
    assignable, parse, typecheck, RefTarget, Reference, Span, Type, TypeErrorKind, Undefined, UndefinedReason,
};
use crate::id::IdKind;

/// Location of one stored expression source.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ExprSite {
    Derivation { class: ElementId, attribute: ElementId },
    OperationBody { class: ElementId, operation: ElementId },
    ConstraintBody { class: ElementId, constraint: ElementId },
    ConstraintMessage { class: ElementId, constraint: ElementId },
}

impl ExprSite {
    pub fn class(&self) -> &ElementId {
        match self {
            ExprSite::Derivation { class, .. }
            | ExprSite::OperationBody { class, .. }
            | ExprSite::ConstraintBody { class, .. }
            | ExprSite::ConstraintMessage { class, .. } => class,
        }
    }

    pub fn feature(&self) -> &ElementId {
        match self {
            ExprSite::Derivation { attribute: f, .. }
            | ExprSite::OperationBody { operation: f, .. }
            | ExprSite::ConstraintBody { constraint: f, .. }
            | ExprSite::ConstraintMessage { constraint: f, .. } => f,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            ExprSite::Derivation { .. } => "derivation",
            ExprSite::OperationBody { .. } => "operation body",
            ExprSite::ConstraintBody { .. } => "constraint body",
            ExprSite::ConstraintMessage { .. } => "constraint message",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RewrittenExpr {
    pub site: ExprSite,
    /// Human-readable site, e.g. `Ticket.positivePrice (constraint body)`.
    pub label: String,
    pub before: String,
    pub after: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RenameSummary {
    pub rewritten: Vec<RewrittenExpr>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MigrationSummary {
    /// Objects whose slot or delegate layout changed.
    pub touched_objects: Vec<ElementId>,
    pub added_slots: usize,
    pub removed_slots: usize,
    /// `(object, attribute)` slots whose value was discarded.
    pub cleared: Vec<(ElementId, ElementId)>,
    /// `(object, attribute)` slots widened from Integer to Float.
    pub coerced: Vec<(ElementId, ElementId)>,
    pub rewritten: Vec<RewrittenExpr>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AttributeChange {
    Rename(String),
    Retype(TypeRef),
    /// `Some(source)` makes the attribute derived, `None` makes it entered.
    SetDerived(Option<String>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperationSpec {
    pub name: String,
    pub params: Vec<Param>,
    pub return_type: TypeRef,
    pub body: String,
    pub monitored: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SlotAction {
    Set(Value),
    Clear,
}

struct SiteSource {
    site: ExprSite,
    source: String,
    params: Vec<(String, Type)>,
    expected: Type,
}

fn pending() -> Slot {
    Slot::Computed(Err(Undefined::new(UndefinedReason::UnsetSlot, Span::default(), "not yet computed")))
}

impl ProjectModel {
    // ---------------------------------------------------------------------
    // helpers

    fn class_or_err(&self, id: &ElementId) -> Result<&ClassDef, KernelError> {
        self.class(id).ok_or_else(|| KernelError::UnknownClass(id.to_string()))
    }

    fn object_or_err(&self, id: &ElementId) -> Result<&ObjectInst, KernelError> {
        self.object(id).ok_or_else(|| KernelError::UnknownObject(id.to_string()))
    }

    fn check_new_name(&self, name: &str) -> Result<(), KernelError> {
        if !is_valid_name(name) {
            return Err(KernelError::InvalidName(name.to_owned()));
        }
        if self.name_in_use(name) {
            return Err(KernelError::NameTaken(name.to_owned()));
        }
        Ok(())
    }

    /// `name` is unused by `class`, its ancestors and its descendants.
    fn feature_name_free(&self, class: &ElementId, name: &str) -> bool {
        self.descendants(class).iter().all(|d| !self.feature_names(&d.id).contains(&name))
    }

    fn check_feature_name(&self, class: &ElementId, name: &str) -> Result<(), KernelError> {
        if !is_valid_name(name) {
            return Err(KernelError::InvalidName(name.to_owned()));
        }
        if !self.feature_name_free(class, name) {
            return Err(KernelError::DuplicateFeature(name.to_owned()));
        }
        Ok(())
    }

    fn check_type_ref(&self, ty: &TypeRef) -> Result<(), KernelError> {
        match ty {
            TypeRef::Data(_) => Ok(()),
            TypeRef::Enumeration(id) if self.enumeration(id).is_some() => Ok(()),
            TypeRef::Class(id) if self.class(id).is_some() => Ok(()),
            TypeRef::Enumeration(id) | TypeRef::Class(id) => Err(KernelError::UnknownElement(id.clone())),
        }
    }

    fn class_mut(&mut self, id: &ElementId) -> &mut ClassDef {
        self.classes.get_mut(id).expect("class checked by caller")
    }

    fn sites(&self) -> Vec<SiteSource> {
        let mut out = Vec::new();
        for c in self.classes.values() {
            for a in &c.attributes {
                if let Some(src) = &a.derivation {
                    out.push(SiteSource {
                        site: ExprSite::Derivation { class: c.id.clone(), attribute: a.id.clone() },
                        source: src.clone(),
                        params: vec![],
                        expected: Type::from_ref(&a.ty),
                    });
                }
            }
            for o in &c.operations {
                out.push(SiteSource {
                    site: ExprSite::OperationBody { class: c.id.clone(), operation: o.id.clone() },
                    source: o.body.clone(),
                    params: o.params.iter().map(|p| (p.name.clone(), Type::from_ref(&p.ty))).collect(),
                    expected: Type::from_ref(&o.return_type),
                });
            }
            for k in &c.constraints {
                out.push(SiteSource {
                    site: ExprSite::ConstraintBody { class: c.id.clone(), constraint: k.id.clone() },
                    source: k.body.clone(),
                    params: vec![],
                    expected: Type::Boolean,
                });
                out.push(SiteSource {
                    site: ExprSite::ConstraintMessage { class: c.id.clone(), constraint: k.id.clone() },
                    source: k.message.clone(),
                    params: vec![],
                    expected: Type::String,
                });
            }
        }
        out
    }

    /// `Class.feature (kind)` label for an expression site.
    pub fn describe_site(&self, site: &ExprSite) -> String {
        let class = self.element_name(site.class()).unwrap_or("?");
        let feature = self.element_name(site.feature()).unwrap_or("?");
        format!("{class}.{feature} ({})", site.kind_name())
    }

    fn source_mut(&mut self, site: &ExprSite) -> Option<&mut String> {
        let class = self.classes.get_mut(site.class())?;
        match site {
            ExprSite::Derivation { attribute, .. } => {
                class.attributes.iter_mut().find(|a| &a.id == attribute)?.derivation.as_mut()
            }
            ExprSite::OperationBody { operation, .. } => {
                Some(&mut class.operations.iter_mut().find(|o| &o.id == operation)?.body)
            }
            ExprSite::ConstraintBody { constraint, .. } => {
                Some(&mut class.constraints.iter_mut().find(|k| &k.id == constraint)?.body)
            }
            ExprSite::ConstraintMessage { constraint, .. } => {
                Some(&mut class.constraints.iter_mut().find(|k| &k.id == constraint)?.message)
            }
        }
    }

    fn check_site(&self, s: &SiteSource) -> Result<Vec<Reference>, KernelError> {
        let site = || self.describe_site(&s.site);
        let ast = parse(&s.source).map_err(|error| KernelError::ParseError { site: site(), error })?;
        let checked = typecheck(&ast, self, s.site.class(), &s.params)
            .map_err(|error| KernelError::TypeError { site: site(), error })?;
        if !assignable(self, &checked.ty, &s.expected) {
            let kind = if s.expected == Type::Boolean {
                TypeErrorKind::NonBooleanConstraint
            } else {
                TypeErrorKind::ResultMismatch
            };
            return Err(KernelError::TypeError {
                site: site(),
                error: crate::expr::TypeError {
                    kind,
                    message: format!("expected {}, found {}", s.expected.display(self), checked.ty.display(self)),
                    span: ast.span,
                },
            });
        }
        Ok(checked.refs)
    }

    /// Every stored expression parses and type-checks to its declared type.
    pub fn check_expressions(&self) -> Result<(), KernelError> {
        for s in self.sites() {
            self.check_site(&s)?;
        }
        Ok(())
    }

    /// Labels of expression sites that reference `target`.
    fn referencing_sites(&self, target: &RefTarget) -> Vec<String> {
        self.sites()
            .iter()
            .filter(|s| self.check_site(s).is_ok_and(|refs| refs.iter().any(|r| &r.target == target)))
            .map(|s| self.describe_site(&s.site))
            .collect()
    }

    fn referencing_extent_or_type(&self, class: &ElementId) -> Vec<String> {
        let mut out = self.referencing_sites(&RefTarget::Element(class.clone()));
        for c in self.classes.values() {
            if c.superclass.as_ref() == Some(class) {
                out.push(format!("{} (subclass)", c.name));
            }
            for a in &c.attributes {
                if a.ty == TypeRef::Class(class.clone()) {
                    out.push(format!("{}.{} (attribute type)", c.name, a.name));
                }
            }
            for o in &c.operations {
                if o.return_type == TypeRef::Class(class.clone())
                    || o.params.iter().any(|p| p.ty == TypeRef::Class(class.clone()))
                {
                    out.push(format!("{}.{} (operation signature)", c.name, o.name));
                }
            }
            for d in &c.delegations {
                if &d.target == class && &c.id != class {
                    out.push(format!("{}.{} (delegation target)", c.name, d.name));
                }
            }
        }
        for a in self.associations.values() {
            if a.ends.iter().any(|e| &e.class == class) {
                out.push(format!("{} (association)", a.name));
            }
        }
        out
    }

    /// Rebuilds every object's slots and delegate bindings from the
    /// effective features of its class.
    fn migrate_objects(&mut self, summary: &mut MigrationSummary) {
        let plans: Vec<SlotPlan> = self
            .objects
            .values()
            .map(|o| {
                let attrs = self
                    .effective_attributes(&o.class)
                    .into_iter()
                    .map(|a| (a.id.clone(), a.ty.clone(), a.is_derived()))
                    .collect();
                let delegs = self.effective_delegations(&o.class).into_iter().map(|d| d.id.clone()).collect();
                (o.id.clone(), attrs, delegs)
            })
            .collect();
        for (oid, attrs, delegs) in plans {
            let old = self.objects[&oid].clone();
            let mut slots = IndexMap::with_capacity(attrs.len());
            for (aid, ty, derived) in &attrs {
                let slot = match old.slots.get(aid) {
                    None => {
                        summary.added_slots += 1;
                        if *derived {
                            pending()
                        } else {
                            Slot::Unset
                        }
                    }
                    Some(Slot::Entered(_)) if *derived => {
                        summary.cleared.push((oid.clone(), aid.clone()));
                        pending()
                    }
                    Some(Slot::Unset) if *derived => pending(),
                    Some(Slot::Computed(_)) if !*derived => Slot::Unset,
                    Some(Slot::Entered(v)) if !self.value_conforms(v, ty) => {
                        summary.cleared.push((oid.clone(), aid.clone()));
                        Slot::Unset
                    }
                    Some(s) => s.clone(),
                };
                slots.insert(aid.clone(), slot);
            }
            summary.removed_slots += old.slots.keys().filter(|k| !slots.contains_key(*k)).count();
            let delegates: IndexMap<ElementId, Option<ElementId>> =
                delegs.iter().map(|d| (d.clone(), old.delegates.get(d).cloned().flatten())).collect();
            let layout_changed = !old.slots.keys().eq(slots.keys())
                || old.slots.iter().zip(slots.values()).any(|((_, a), b)| a.state_name() != b.state_name())
                || old.delegates != delegates;
            if layout_changed {
                summary.touched_objects.push(oid.clone());
            }
            let obj = self.objects.get_mut(&oid).expect("planned object exists");
            obj.slots = slots;
            obj.delegates = delegates;
        }
    }

    /// Runs a schema edit on a copy; commits only if the result is sound.
    fn transact<T>(
        &mut self,
        edit: impl FnOnce(&mut ProjectModel, &mut MigrationSummary) -> Result<T, KernelError>,
    ) -> Result<(T, MigrationSummary), KernelError> {
        let mut next = self.clone();
        let mut summary = MigrationSummary::default();
        let out = edit(&mut next, &mut summary)?;
        next.migrate_objects(&mut summary);
        next.check_expressions()?;
        for c in next.classes.values() {
            if let Some(at) = delegation_cycle(&next, &c.id) {
                return Err(KernelError::DelegationCycle(at));
            }
        }
        if let Some(issue) = check_invariants(&next).into_iter().find(|i| i.category != IssueCategory::Expression) {
            return Err(KernelError::Inconsistent(format!("{}: {}", issue.pointer, issue.message)));
        }
        recompute_derived(&mut next);
        *self = next;
        Ok((out, summary))
    }

    /// Renames and rewrites every expression occurrence of `target`.
    fn rename_with_rewrite(
        &mut self,
        target: RefTarget,
        new_name: &str,
        apply: impl FnOnce(&mut ProjectModel),
    ) -> Result<RenameSummary, KernelError> {
        let before: Vec<(SiteSource, Vec<Reference>)> =
            self.sites().into_iter().map(|s| self.check_site(&s).map(|refs| (s, refs))).collect::<Result<_, _>>()?;
        let mut next = self.clone();
        apply(&mut next);
        let mut rewritten = Vec::new();
        for (s, refs) in &before {
            let spans: Vec<Span> = refs.iter().filter(|r| r.target == target).map(|r| r.span).collect();
            if spans.is_empty() {
                continue;
            }
            let src = next.source_mut(&s.site).expect("site exists");
            let old = src.clone();
            for span in spans.iter().rev() {
                src.replace_range(span.start..span.end, new_name);
            }
            let after = src.clone();
            rewritten.push(RewrittenExpr {
                site: s.site.clone(),
                label: next.describe_site(&s.site),
                before: old,
                after,
            });
        }
        // Every name must still resolve to what it resolved to before.
        let after_sites = next.sites();
        for ((s, refs), s2) in before.iter().zip(&after_sites) {
            let label = next.describe_site(&s.site);
            let new_refs = next.check_site(s2).map_err(|_| KernelError::RenameCapture(label.clone()))?;
            let old_targets: Vec<&RefTarget> = refs.iter().map(|r| &r.target).collect();
            let new_targets: Vec<&RefTarget> = new_refs.iter().map(|r| &r.target).collect();
            if old_targets != new_targets {
                return Err(KernelError::RenameCapture(label));
            }
        }
        recompute_derived(&mut next);
        *self = next;
        Ok(RenameSummary { rewritten })
    }

    // ---------------------------------------------------------------------
    // classes

    pub fn create_class(
        &mut self,
        name: &str,
        is_abstract: bool,
        superclass: Option<&ElementId>,
    ) -> Result<ClassDef, KernelError> {
        self.check_new_name(name)?;
        if let Some(s) = superclass {
            if self.class(s).is_none() {
                return Err(KernelError::UnknownSuperclass(s.clone()));
            }
        }
        let class = ClassDef {
            id: self.ids.mint(IdKind::Class),
            name: name.to_owned(),
            is_abstract,
            superclass: superclass.cloned(),
            attributes: vec![],
            operations: vec![],
            constraints: vec![],
            delegations: vec![],
        };
        self.classes.insert(class.id.clone(), class.clone());
        Ok(class)
    }

    pub fn set_abstract(&mut self, class: &ElementId, is_abstract: bool) -> Result<(), KernelError> {
        let c = self.class_or_err(class)?;
        if is_abstract && self.objects.values().any(|o| &o.class == class) {
            return Err(KernelError::HasInstances(c.name.clone()));
        }
        self.class_mut(class).is_abstract = is_abstract;
        Ok(())
    }

    pub fn set_generalization(
        &mut self,
        sub: &ElementId,
        sup: Option<&ElementId>,
    ) -> Result<MigrationSummary, KernelError> {
        let name = self.class_or_err(sub)?.name.clone();
        if let Some(s) = sup {
            if self.class(s).is_none() {
                return Err(KernelError::UnknownSuperclass(s.clone()));
            }
            if self.conforms_to(s, sub) {
                return Err(KernelError::GeneralizationCycle(name));
            }
        }
        self.transact(|m, _| {
            m.class_mut(sub).superclass = sup.cloned();
            for d in m.descendants(sub) {
                let mut seen = HashSet::new();
                if let Some(dup) = m.feature_names(&d.id).into_iter().find(|n| !seen.insert(*n)) {
                    return Err(KernelError::FeatureClash(dup.to_owned()));
                }
            }
            Ok(())
        })
        .map(|(_, s)| s)
    }

    /// Deletes a class that has no instances and nothing referring to it.
    pub fn delete_class(&mut self, class: &ElementId) -> Result<(), KernelError> {
        let c = self.class_or_err(class)?;
        if self.objects.values().any(|o| &o.class == class) {
            return Err(KernelError::HasInstances(c.name.clone()));
        }
        let refs = self.referencing_extent_or_type(class);
        if !refs.is_empty() {
            return Err(KernelError::StillReferenced(refs));
        }
        self.transact(|m, _| {
            m.classes.shift_remove(class);
            Ok(())
        })
        .map(|_| ())
    }

    // ---------------------------------------------------------------------
    // renames

    /// Renames any named element, rewriting expression sources that refer
    /// to it by name.
    pub fn rename_element(&mut self, id: &ElementId, new_name: &str) -> Result<RenameSummary, KernelError> {
        let current = self.element_name(id).ok_or_else(|| KernelError::UnknownElement(id.clone()))?;
        if current == new_name {
            return Ok(RenameSummary::default());
        }
        let target = RefTarget::Element(id.clone());
        let owned = new_name.to_owned();
        if self.class(id).is_some() {
            self.check_new_name(new_name)?;
            return self.rename_with_rewrite(target, new_name, |m| m.class_mut(id).name = owned);
        }
        if self.object(id).is_some() {
            self.check_new_name(new_name)?;
            return self
                .rename_with_rewrite(target, new_name, |m| m.objects.get_mut(id).expect("checked").name = owned);
        }
        if self.enumeration(id).is_some() {
            self.check_new_name(new_name)?;
            return self
                .rename_with_rewrite(target, new_name, |m| m.enumerations.get_mut(id).expect("checked").name = owned);
        }
        if self.association(id).is_some() {
            if !is_valid_name(new_name) {
                return Err(KernelError::InvalidName(owned));
            }
            if self.association_by_name(new_name).is_some() {
                return Err(KernelError::NameTaken(owned));
            }
            return self
                .rename_with_rewrite(target, new_name, |m| m.associations.get_mut(id).expect("checked").name = owned);
        }
        let owner = [
            self.attribute(id).map(|(c, _)| c.id.clone()),
            self.operation(id).map(|(c, _)| c.id.clone()),
            self.constraint(id).map(|(c, _)| c.id.clone()),
            self.delegation(id).map(|(c, _)| c.id.clone()),
        ]
        .into_iter()
        .flatten()
        .next()
        .ok_or_else(|| KernelError::UnknownElement(id.clone()))?;
        self.check_feature_name(&owner, new_name)?;
        self.rename_with_rewrite(target, new_name, |m| {
            let c = m.class_mut(&owner);
            if let Some(a) = c.attributes.iter_mut().find(|a| &a.id == id) {
                a.name = owned;
            } else if let Some(o) = c.operations.iter_mut().find(|o| &o.id == id) {
                o.name = owned;
            } else if let Some(k) = c.constraints.iter_mut().find(|k| &k.id == id) {
                k.name = owned;
            } else if let Some(d) = c.delegations.iter_mut().find(|d| &d.id == id) {
                d.name = owned;
            }
        })
    }

    /// Renames the role at `end` (0 or 1) of an association.
    pub fn rename_role(
        &mut self,
        association: &ElementId,
        end: usize,
        new_role: &str,
    ) -> Result<RenameSummary, KernelError> {
        let a = self.association(association).ok_or_else(|| KernelError::UnknownElement(association.clone()))?;
        if end > 1 {
            return Err(KernelError::UnknownFeature(format!("end {end}")));
        }
        if a.ends[end].role == new_role {
            return Ok(RenameSummary::default());
        }
        if !is_valid_name(new_role) {
            return Err(KernelError::InvalidName(new_role.to_owned()));
        }
        if a.ends[1 - end].role == new_role || !self.feature_name_free(&a.ends[1 - end].class, new_role) {
            return Err(KernelError::RoleCollision(new_role.to_owned()));
        }
        let owned = new_role.to_owned();
        self.rename_with_rewrite(RefTarget::Role { association: association.clone(), end }, new_role, |m| {
            m.associations.get_mut(association).expect("checked").ends[end].role = owned
        })
    }

    // ---------------------------------------------------------------------
    // attributes

    pub fn add_attribute(
        &mut self,
        class: &ElementId,
        name: &str,
        ty: TypeRef,
        derivation: Option<&str>,
    ) -> Result<(AttributeDef, MigrationSummary), KernelError> {
        self.class_or_err(class)?;
        self.check_feature_name(class, name)?;
        self.check_type_ref(&ty)?;
        self.transact(|m, _| {
            let attr = AttributeDef {
                id: m.ids.mint(IdKind::Attribute),
                name: name.to_owned(),
                ty,
                derivation: derivation.map(str::to_owned),
            };
            m.class_mut(class).attributes.push(attr.clone());
            Ok(attr)
        })
    }

    pub fn update_attribute(
        &mut self,
        attribute: &ElementId,
        change: AttributeChange,
    ) -> Result<MigrationSummary, KernelError> {
        let (owner, attr) = self
            .attribute(attribute)
            .map(|(c, a)| (c.id.clone(), a.clone()))
            .ok_or_else(|| KernelError::UnknownElement(attribute.clone()))?;
        match change {
            AttributeChange::Rename(name) => {
                let r = self.rename_element(attribute, &name)?;
                Ok(MigrationSummary { rewritten: r.rewritten, ..Default::default() })
            }
            AttributeChange::Retype(ty) => {
                self.check_type_ref(&ty)?;
                self.transact(|m, summary| {
                    let instances: Vec<ElementId> = m.instances_of(&owner).iter().map(|o| o.id.clone()).collect();
                    for oid in instances {
                        let current = m.objects[&oid].slots.get(attribute).cloned();
                        let Some(Slot::Entered(v)) = current else { continue };
                        let next = match (&v, &ty) {
                            _ if m.value_conforms(&v, &ty) => Slot::Entered(v.clone()),
                            (Value::Integer(i), TypeRef::Data(DataType::Float)) => {
                                summary.coerced.push((oid.clone(), attribute.clone()));
                                Slot::Entered(Value::Float(*i as f64))
                            }
                            _ => {
                                summary.cleared.push((oid.clone(), attribute.clone()));
                                Slot::Unset
                            }
                        };
                        m.objects.get_mut(&oid).expect("instance").slots.insert(attribute.clone(), next);
                    }
                    let c = m.class_mut(&owner);
                    c.attributes.iter_mut().find(|a| &a.id == attribute).expect("attribute").ty = ty;
                    Ok(())
                })
                .map(|(_, s)| s)
            }
            AttributeChange::SetDerived(derivation) => {
                if attr.derivation == derivation {
                    return Ok(MigrationSummary::default());
                }
                self.transact(|m, _| {
                    let c = m.class_mut(&owner);
                    c.attributes.iter_mut().find(|a| &a.id == attribute).expect("attribute").derivation = derivation;
                    Ok(())
                })
                .map(|(_, s)| s)
            }
        }
    }

    /// Removes an attribute and its slots. Fails while any expression
    /// still mentions it.
    pub fn remove_attribute(&mut self, attribute: &ElementId) -> Result<MigrationSummary, KernelError> {
        let (owner, _) = self
            .attribute(attribute)
            .map(|(c, a)| (c.id.clone(), a.id.clone()))
            .ok_or_else(|| KernelError::UnknownElement(attribute.clone()))?;
        let refs = self.referencing_sites(&RefTarget::Element(attribute.clone()));
        if !refs.is_empty() {
            return Err(KernelError::StillReferenced(refs));
        }
        self.transact(|m, _| {
            m.class_mut(&owner).attributes.retain(|a| &a.id != attribute);
            Ok(())
        })
        .map(|(_, s)| s)
    }

    // ---------------------------------------------------------------------
    // operations, constraints, delegations

    pub fn add_operation(&mut self, class: &ElementId, spec: OperationSpec) -> Result<OperationDef, KernelError> {
        self.class_or_err(class)?;
        if spec.monitored && !spec.params.is_empty() {
            return Err(KernelError::MonitoredWithParams(spec.name));
        }
        self.check_feature_name(class, &spec.name)?;
        let mut seen = HashSet::new();
        for p in &spec.params {
            if !is_valid_name(&p.name) {
                return Err(KernelError::InvalidName(p.name.clone()));
            }
            if !seen.insert(&p.name) {
                return Err(KernelError::DuplicateFeature(p.name.clone()));
            }
            self.check_type_ref(&p.ty)?;
        }
        self.check_type_ref(&spec.return_type)?;
        self.transact(|m, _| {
            let op = OperationDef {
                id: m.ids.mint(IdKind::Operation),
                name: spec.name,
                params: spec.params,
                return_type: spec.return_type,
                body: spec.body,
                monitored: spec.monitored,
            };
            m.class_mut(class).operations.push(op.clone());
            Ok(op)
        })
        .map(|(op, _)| op)
    }

    pub fn update_operation(
        &mut self,
        operation: &ElementId,
        body: Option<String>,
        monitored: Option<bool>,
    ) -> Result<(), KernelError> {
        let (owner, op) = self
            .operation(operation)
            .map(|(c, o)| (c.id.clone(), o.clone()))
            .ok_or_else(|| KernelError::UnknownElement(operation.clone()))?;
        if monitored == Some(true) && !op.params.is_empty() {
            return Err(KernelError::MonitoredWithParams(op.name));
        }
        self.transact(|m, _| {
            let o = m.class_mut(&owner).operations.iter_mut().find(|o| &o.id == operation).expect("op");
            if let Some(b) = body {
                o.body = b;
            }
            if let Some(flag) = monitored {
                o.monitored = flag;
            }
            Ok(())
        })
        .map(|_| ())
    }

    pub fn remove_operation(&mut self, operation: &ElementId) -> Result<(), KernelError> {
        let owner = self
            .operation(operation)
            .map(|(c, _)| c.id.clone())
            .ok_or_else(|| KernelError::UnknownElement(operation.clone()))?;
        let refs: Vec<String> = self
            .referencing_sites(&RefTarget::Element(operation.clone()))
            .into_iter()
            .filter(|label| !label.ends_with("(operation body)") || !self.is_own_body(operation, label))
            .collect();
        if !refs.is_empty() {
            return Err(KernelError::StillReferenced(refs));
        }
        self.transact(|m, _| {
            m.class_mut(&owner).operations.retain(|o| &o.id != operation);
            Ok(())
        })
        .map(|_| ())
    }

    fn is_own_body(&self, operation: &ElementId, label: &str) -> bool {
        self.operation(operation).is_some_and(|(c, o)| label == format!("{}.{} (operation body)", c.name, o.name))
    }

    pub fn add_constraint(
        &mut self,
        class: &ElementId,
        name: &str,
        body: &str,
        message: &str,
    ) -> Result<ConstraintDef, KernelError> {
        self.class_or_err(class)?;
        self.check_feature_name(class, name)?;
        self.transact(|m, _| {
            let k = ConstraintDef {
                id: m.ids.mint(IdKind::Constraint),
                name: name.to_owned(),
                body: body.to_owned(),
                message: message.to_owned(),
            };
            m.class_mut(class).constraints.push(k.clone());
            Ok(k)
        })
        .map(|(k, _)| k)
    }

    pub fn update_constraint(
        &mut self,
        constraint: &ElementId,
        body: Option<String>,
        message: Option<String>,
    ) -> Result<(), KernelError> {
        let owner = self
            .constraint(constraint)
            .map(|(c, _)| c.id.clone())
            .ok_or_else(|| KernelError::UnknownElement(constraint.clone()))?;
        self.transact(|m, _| {
            let k = m.class_mut(&owner).constraints.iter_mut().find(|k| &k.id == constraint).expect("constraint");
            if let Some(b) = body {
                k.body = b;
            }
            if let Some(msg) = message {
                k.message = msg;
            }
            Ok(())
        })
        .map(|_| ())
    }

    pub fn remove_constraint(&mut self, constraint: &ElementId) -> Result<(), KernelError> {
        let owner = self
            .constraint(constraint)
            .map(|(c, _)| c.id.clone())
            .ok_or_else(|| KernelError::UnknownElement(constraint.clone()))?;
        self.transact(|m, _| {
            m.class_mut(&owner).constraints.retain(|k| &k.id != constraint);
            Ok(())
        })
        .map(|_| ())
    }

    pub fn declare_delegation(
        &mut self,
        class: &ElementId,
        name: &str,
        target: &ElementId,
    ) -> Result<DelegationDef, KernelError> {
        self.class_or_err(class)?;
        self.class_or_err(target)?;
        self.check_feature_name(class, name)?;
        self.transact(|m, _| {
            let d = DelegationDef { id: m.ids.mint(IdKind::Delegation), name: name.to_owned(), target: target.clone() };
            m.class_mut(class).delegations.push(d.clone());
            Ok(d)
        })
        .map(|(d, _)| d)
    }

    pub fn remove_delegation(&mut self, delegation: &ElementId) -> Result<MigrationSummary, KernelError> {
        let owner = self
            .delegation(delegation)
            .map(|(c, _)| c.id.clone())
            .ok_or_else(|| KernelError::UnknownElement(delegation.clone()))?;
        self.transact(|m, _| {
            m.class_mut(&owner).delegations.retain(|d| &d.id != delegation);
            Ok(())
        })
        .map(|(_, s)| s)
    }

    // ---------------------------------------------------------------------
    // associations and enumerations

    pub fn create_association(
        &mut self,
        name: &str,
        end1: AssociationEnd,
        end2: AssociationEnd,
    ) -> Result<AssociationDef, KernelError> {
        if !is_valid_name(name) {
            return Err(KernelError::InvalidName(name.to_owned()));
        }
        if self.association_by_name(name).is_some() {
            return Err(KernelError::NameTaken(name.to_owned()));
        }
        for end in [&end1, &end2] {
            self.class_or_err(&end.class)?;
            if !is_valid_name(&end.role) {
                return Err(KernelError::InvalidName(end.role.clone()));
            }
            if !end.multiplicity.is_valid() {
                return Err(KernelError::BadMultiplicity(end.multiplicity.to_string()));
            }
        }
        if end1.role == end2.role {
            return Err(KernelError::RoleCollision(end2.role.clone()));
        }
        // end2's role is navigated from end1's class and vice versa.
        if !self.feature_name_free(&end1.class, &end2.role) {
            return Err(KernelError::RoleCollision(end2.role.clone()));
        }
        if !self.feature_name_free(&end2.class, &end1.role) {
            return Err(KernelError::RoleCollision(end1.role.clone()));
        }
        self.transact(|m, _| {
            let a = AssociationDef { id: m.ids.mint(IdKind::Association), name: name.to_owned(), ends: [end1, end2] };
            m.associations.insert(a.id.clone(), a.clone());
            Ok(a)
        })
        .map(|(a, _)| a)
    }

    pub fn set_multiplicity(
        &mut self,
        association: &ElementId,
        end: usize,
        multiplicity: Multiplicity,
    ) -> Result<(), KernelError> {
        if self.association(association).is_none() || end > 1 {
            return Err(KernelError::UnknownElement(association.clone()));
        }
        if !multiplicity.is_valid() {
            return Err(KernelError::BadMultiplicity(multiplicity.to_string()));
        }
        // Single/collection navigation typing depends on the upper bound.
        self.transact(|m, _| {
            m.associations.get_mut(association).expect("checked").ends[end].multiplicity = multiplicity;
            Ok(())
        })
        .map(|_| ())
    }

    pub fn delete_association(&mut self, association: &ElementId) -> Result<(), KernelError> {
        let a = self.association(association).ok_or_else(|| KernelError::UnknownElement(association.clone()))?;
        let mut refs = Vec::new();
        for end in 0..2 {
            refs.extend(self.referencing_sites(&RefTarget::Role { association: a.id.clone(), end }));
        }
        if !refs.is_empty() {
            return Err(KernelError::StillReferenced(refs));
        }
        self.transact(|m, _| {
            m.links.retain(|_, l| &l.association != association);
            m.associations.shift_remove(association);
            Ok(())
        })
        .map(|_| ())
    }

    pub fn create_enumeration(&mut self, name: &str, literals: &[String]) -> Result<EnumerationDef, KernelError> {
        self.check_new_name(name)?;
        if literals.is_empty() {
            return Err(KernelError::EmptyEnumeration(name.to_owned()));
        }
        let mut seen = HashSet::new();
        for l in literals {
            if !is_valid_name(l) {
                return Err(KernelError::InvalidName(l.clone()));
            }
            if !seen.insert(l) {
                return Err(KernelError::DuplicateLiteral(l.clone()));
            }
        }
        let e = EnumerationDef {
            id: self.ids.mint(IdKind::Enumeration),
            name: name.to_owned(),
            literals: literals.to_vec(),
        };
        self.enumerations.insert(e.id.clone(), e.clone());
        Ok(e)
    }

    pub fn delete_enumeration(&mut self, enumeration: &ElementId) -> Result<(), KernelError> {
        if self.enumeration(enumeration).is_none() {
            return Err(KernelError::UnknownElement(enumeration.clone()));
        }
        let mut refs = self.referencing_sites(&RefTarget::Element(enumeration.clone()));
        let ty = TypeRef::Enumeration(enumeration.clone());
        for c in self.classes.values() {
            for a in c.attributes.iter().filter(|a| a.ty == ty) {
                refs.push(format!("{}.{} (attribute type)", c.name, a.name));
            }
            for o in c.operations.iter().filter(|o| o.return_type == ty || o.params.iter().any(|p| p.ty == ty)) {
                refs.push(format!("{}.{} (operation signature)", c.name, o.name));
            }
        }
        if !refs.is_empty() {
            return Err(KernelError::StillReferenced(refs));
        }
        self.enumerations.shift_remove(enumeration);
        Ok(())
    }

    // ---------------------------------------------------------------------
    // objects

    pub fn instantiate(&mut self, class: &ElementId, name: &str) -> Result<ObjectInst, KernelError> {
        let c = self.class_or_err(class)?;
        if c.is_abstract {
            return Err(KernelError::AbstractClass(c.name.clone()));
        }
        self.check_new_name(name)?;
        let slots = self
            .effective_attributes(class)
            .into_iter()
            .map(|a| (a.id.clone(), if a.is_derived() { pending() } else { Slot::Unset }))
            .collect();
        let delegates = self.effective_delegations(class).into_iter().map(|d| (d.id.clone(), None)).collect();
        let obj = ObjectInst {
            id: self.ids.mint(IdKind::Object),
            name: name.to_owned(),
            class: class.clone(),
            slots,
            delegates,
        };
        self.objects.insert(obj.id.clone(), obj);
        recompute_derived(self);
        let id = self.objects.last().expect("just inserted").0.clone();
        Ok(self.objects[&id].clone())
    }

    /// Deletes an object and its links. Fails while a slot or delegate
    /// binding of another object refers to it.
    pub fn delete_object(&mut self, object: &ElementId) -> Result<(), KernelError> {
        self.object_or_err(object)?;
        let mut refs = Vec::new();
        for o in self.objects.values().filter(|o| &o.id != object) {
            for (aid, slot) in &o.slots {
                if matches!(slot, Slot::Entered(Value::Ref(r)) if r == object) {
                    let an = self.element_name(aid).unwrap_or("?");
                    refs.push(format!("{}.{} (slot)", o.name, an));
                }
            }
            for (did, bound) in &o.delegates {
                if bound.as_ref() == Some(object) {
                    let dn = self.element_name(did).unwrap_or("?");
                    refs.push(format!("{}.{} (delegate)", o.name, dn));
                }
            }
        }
        if !refs.is_empty() {
            return Err(KernelError::StillReferenced(refs));
        }
        self.links.retain(|_, l| &l.end1 != object && &l.end2 != object);
        self.objects.shift_remove(object);
        recompute_derived(self);
        Ok(())
    }

    pub fn set_slot(&mut self, object: &ElementId, attribute: &str, action: SlotAction) -> Result<(), KernelError> {
        let obj = self.object_or_err(object)?;
        let attr = self
            .effective_attributes(&obj.class)
            .into_iter()
            .find(|a| a.name == attribute)
            .ok_or_else(|| KernelError::UnknownFeature(attribute.to_owned()))?;
        if attr.is_derived() {
            return Err(KernelError::DerivedSlotWriteForbidden(attribute.to_owned()));
        }
        let slot = match action {
            SlotAction::Clear => Slot::Unset,
            SlotAction::Set(value) => {
                if let Value::Ref(r) = &value {
                    if self.object(r).is_none() {
                        return Err(KernelError::UnknownObject(r.to_string()));
                    }
                }
                if !self.value_conforms(&value, &attr.ty) {
                    return Err(KernelError::TypeMismatch(format!(
                        "`{attribute}` expects {}, got {}",
                        self.type_ref_name(&attr.ty),
                        self.render_value(&value)
                    )));
                }
                Slot::Entered(value)
            }
        };
        let aid = attr.id.clone();
        self.objects.get_mut(object).expect("checked").slots.insert(aid, slot);
        recompute_derived(self);
        Ok(())
    }

    pub fn set_delegate(
        &mut self,
        object: &ElementId,
        delegation: &str,
        target: Option<&ElementId>,
    ) -> Result<(), KernelError> {
        let obj = self.object_or_err(object)?;
        let d = self
            .effective_delegations(&obj.class)
            .into_iter()
            .find(|d| d.name == delegation)
            .ok_or_else(|| KernelError::UnknownFeature(delegation.to_owned()))?;
        if let Some(t) = target {
            let tobj = self.object_or_err(t)?;
            if !self.conforms_to(&tobj.class, &d.target) {
                return Err(KernelError::NonConformingDelegate(format!(
                    "{} is not an instance of {}",
                    tobj.name,
                    self.element_name(&d.target).unwrap_or("?")
                )));
            }
            // Walk bindings from the target; reaching `object` closes a cycle.
            let mut stack = vec![t.clone()];
            let mut seen = HashSet::new();
            while let Some(cur) = stack.pop() {
                if &cur == object {
                    return Err(KernelError::DelegateCycle(obj.name.clone()));
                }
                if !seen.insert(cur.clone()) {
                    continue;
                }
                if let Some(o) = self.object(&cur) {
                    stack.extend(o.delegates.values().flatten().cloned());
                }
            }
        }
        let did = d.id.clone();
        self.objects.get_mut(object).expect("checked").delegates.insert(did, target.cloned());
        recompute_derived(self);
        Ok(())
    }

    pub fn create_link(
        &mut self,
        association: &ElementId,
        end1: &ElementId,
        end2: &ElementId,
    ) -> Result<Link, KernelError> {
        let a = self.association(association).ok_or_else(|| KernelError::UnknownElement(association.clone()))?;
        for (i, oid) in [end1, end2].into_iter().enumerate() {
            let o = self.object(oid).ok_or_else(|| KernelError::UnknownElement(oid.clone()))?;
            if !self.conforms_to(&o.class, &a.ends[i].class) {
                return Err(KernelError::EndTypeMismatch(format!(
                    "{} is not an instance of {}",
                    o.name,
                    self.element_name(&a.ends[i].class).unwrap_or("?")
                )));
            }
        }
        if self.links.values().any(|l| &l.association == association && &l.end1 == end1 && &l.end2 == end2) {
            return Err(KernelError::DuplicateLink);
        }
        let link = Link {
            id: self.ids.mint(IdKind::Link),
            association: association.clone(),
            end1: end1.clone(),
            end2: end2.clone(),
        };
        self.links.insert(link.id.clone(), link.clone());
        recompute_derived(self);
        Ok(link)
    }

    pub fn remove_link(&mut self, link: &ElementId) -> Result<(), KernelError> {
        self.links.shift_remove(link).ok_or_else(|| KernelError::UnknownElement(link.clone()))?;
        recompute_derived(self);
        Ok(())
    }

    pub fn rename_project(&mut self, name: &str) {
        self.name = name.to_owned();
    }
}

/// Object id, wanted slots `(attribute, type, derived)`, and delegations.
type SlotPlan = (ElementId, Vec<(ElementId, TypeRef, bool)>, Vec<ElementId>);
