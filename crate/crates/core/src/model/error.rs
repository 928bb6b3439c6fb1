use thiserror::Error;

use crate::expr::{ParseError, TypeError};
use crate::id::ElementId;

/// Failure of a kernel mutation. The model is unchanged when one is returned.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("name `{0}` is already taken")]
    NameTaken(String),
    #[error("`{0}` is not a valid name")]
    InvalidName(String),
    #[error("unknown element {0}")]
    UnknownElement(ElementId),
    #[error("unknown class {0}")]
    UnknownClass(String),
    #[error("unknown superclass {0}")]
    UnknownSuperclass(ElementId),
    #[error("unknown object {0}")]
    UnknownObject(String),
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("generalization cycle through `{0}`")]
    GeneralizationCycle(String),
    #[error("delegation cycle through `{0}`")]
    DelegationCycle(String),
    #[error("delegate cycle through `{0}`")]
    DelegateCycle(String),
    #[error("feature `{0}` is already defined")]
    DuplicateFeature(String),
    #[error("feature name clash after generalization: `{0}`")]
    FeatureClash(String),
    #[error("role `{0}` collides with an existing feature or role")]
    RoleCollision(String),
    #[error("invalid multiplicity {0}")]
    BadMultiplicity(String),
    #[error("enumeration `{0}` needs at least one literal")]
    EmptyEnumeration(String),
    #[error("duplicate literal `{0}`")]
    DuplicateLiteral(String),
    #[error("monitored operation `{0}` must not take parameters")]
    MonitoredWithParams(String),
    #[error("class `{0}` is abstract")]
    AbstractClass(String),
    #[error("class `{0}` still has instances")]
    HasInstances(String),
    #[error("slot `{0}` is derived and cannot be written")]
    DerivedSlotWriteForbidden(String),
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
    #[error("delegate does not conform: {0}")]
    NonConformingDelegate(String),
    #[error("link end does not conform: {0}")]
    EndTypeMismatch(String),
    #[error("duplicate link")]
    DuplicateLink,
    #[error("still referenced by: {}", .0.join("; "))]
    StillReferenced(Vec<String>),
    #[error("rename would change what `{0}` refers to")]
    RenameCapture(String),
    #[error("parse error in {site}: {error}")]
    ParseError { site: String, error: ParseError },
    #[error("type error in {site}: {error}")]
    TypeError { site: String, error: TypeError },
    #[error("model invariant violated: {0}")]
    Inconsistent(String),
}

impl KernelError {
    /// Stable machine-readable code (the variant name).
    pub fn code(&self) -> &'static str {
        match self {
            KernelError::NameTaken(_) => "NameTaken",
            KernelError::InvalidName(_) => "InvalidName",
            KernelError::UnknownElement(_) => "UnknownElement",
            KernelError::UnknownClass(_) => "UnknownClass",
            KernelError::UnknownSuperclass(_) => "UnknownSuperclass",
            KernelError::UnknownObject(_) => "UnknownObject",
            KernelError::UnknownFeature(_) => "UnknownFeature",
            KernelError::GeneralizationCycle(_) => "GeneralizationCycle",
            KernelError::DelegationCycle(_) => "DelegationCycle",
            KernelError::DelegateCycle(_) => "DelegateCycle",
            KernelError::DuplicateFeature(_) => "DuplicateFeature",
            KernelError::FeatureClash(_) => "FeatureClash",
            KernelError::RoleCollision(_) => "RoleCollision",
            KernelError::BadMultiplicity(_) => "BadMultiplicity",
            KernelError::EmptyEnumeration(_) => "EmptyEnumeration",
            KernelError::DuplicateLiteral(_) => "DuplicateLiteral",
            KernelError::MonitoredWithParams(_) => "MonitoredWithParams",
            KernelError::AbstractClass(_) => "AbstractClass",
            KernelError::HasInstances(_) => "HasInstances",
            KernelError::DerivedSlotWriteForbidden(_) => "DerivedSlotWriteForbidden",
            KernelError::TypeMismatch(_) => "TypeMismatch",
            KernelError::NonConformingDelegate(_) => "NonConformingDelegate",
            KernelError::EndTypeMismatch(_) => "EndTypeMismatch",
            KernelError::DuplicateLink => "DuplicateLink",
            KernelError::StillReferenced(_) => "StillReferenced",
            KernelError::RenameCapture(_) => "RenameCapture",
            KernelError::ParseError { .. } => "ParseError",
            KernelError::TypeError { .. } => "TypeError",
            KernelError::Inconsistent(_) => "Inconsistent",
        }
    }
}
