use std::collections::HashSet;

use crate::expr::{
    delegated_attribute, delegated_operation, FeatureKind, FeatureResolution, FeatureResolver, Resolution, Via,
};
use crate::id::ElementId;
use crate::model::ProjectModel;

/// Runtime lookup: own class, superclass chain, then each delegation in
/// declaration order through the bound delegate object.
#[derive(Debug, Default, Clone, Copy)]
pub struct DelegatingResolver;

impl FeatureResolver for DelegatingResolver {
    fn resolve(&self, model: &ProjectModel, object: &ElementId, name: &str, kind: FeatureKind) -> FeatureResolution {
        resolve_feature(model, object, name, kind)
    }
}

pub fn resolve_feature(model: &ProjectModel, object: &ElementId, name: &str, kind: FeatureKind) -> FeatureResolution {
    let mut visited = HashSet::new();
    let outcome = match resolve_in(model, object, name, kind, &mut visited) {
        Step::Found { owner, feature, path } => {
            let via = if !path.is_empty() {
                Via::DelegateChain(path)
            } else if model.object(object).is_some_and(|o| o.class == owner) {
                Via::Own
            } else {
                Via::Inherited
            };
            Resolution::Found { owner, feature, via }
        }
        Step::Unbound(d) => Resolution::NotFound { unbound: Some(d) },
        Step::Missing => Resolution::NotFound { unbound: None },
    };
    FeatureResolution { name: name.to_owned(), outcome }
}

enum Step {
    Found { owner: ElementId, feature: ElementId, path: Vec<ElementId> },
    Unbound(String),
    Missing,
}

fn own_feature(
    model: &ProjectModel,
    class: &ElementId,
    name: &str,
    kind: FeatureKind,
) -> Option<(ElementId, ElementId)> {
    model.superchain(class).into_iter().find_map(|c| {
        let id = match kind {
            FeatureKind::Attribute => c.attributes.iter().find(|a| a.name == name).map(|a| a.id.clone()),
            FeatureKind::Operation => c.operations.iter().find(|o| o.name == name).map(|o| o.id.clone()),
        };
        id.map(|f| (c.id.clone(), f))
    })
}

fn statically_provides(model: &ProjectModel, class: &ElementId, name: &str, kind: FeatureKind) -> bool {
    own_feature(model, class, name, kind).is_some()
        || match kind {
            FeatureKind::Attribute => delegated_attribute(model, class, name).is_some(),
            FeatureKind::Operation => delegated_operation(model, class, name).is_some(),
        }
}

fn resolve_in(
    model: &ProjectModel,
    object: &ElementId,
    name: &str,
    kind: FeatureKind,
    visited: &mut HashSet<ElementId>,
) -> Step {
    let Some(obj) = model.object(object) else { return Step::Missing };
    if !visited.insert(object.clone()) {
        return Step::Missing;
    }
    if let Some((owner, feature)) = own_feature(model, &obj.class, name, kind) {
        return Step::Found { owner, feature, path: vec![] };
    }
    for d in model.effective_delegations(&obj.class) {
        match obj.delegates.get(&d.id).cloned().flatten() {
            Some(target) => match resolve_in(model, &target, name, kind, visited) {
                Step::Found { owner, feature, mut path } => {
                    path.insert(0, target);
                    return Step::Found { owner, feature, path };
                }
                Step::Unbound(inner) => return Step::Unbound(inner),
                Step::Missing => {}
            },
            // An unbound delegation stops the search only if it would have
            // supplied the feature, so precedence never depends on bindings.
            None if statically_provides(model, &d.target, name, kind) => return Step::Unbound(d.name.clone()),
            None => {}
        }
    }
    Step::Missing
}
