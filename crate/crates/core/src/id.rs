use std::fmt;

use serde::{Deserialize, Serialize};

/// Opaque identifier of a model element.
///
/// Ids are assigned once and survive renames; every cross-reference in the
/// store goes through an id, never through a display name.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ElementId(String);

impl ElementId {
    pub fn new(raw: impl Into<String>) -> Self {
        Self(raw.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ElementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ElementId {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

/// Kind prefix used when minting ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IdKind {
    Class,
    Attribute,
    Operation,
    Constraint,
    Delegation,
    Association,
    Enumeration,
    Object,
    Link,
}

impl IdKind {
    fn prefix(self) -> &'static str {
        match self {
            IdKind::Class => "c",
            IdKind::Attribute => "a",
            IdKind::Operation => "op",
            IdKind::Constraint => "k",
            IdKind::Delegation => "d",
            IdKind::Association => "as",
            IdKind::Enumeration => "e",
            IdKind::Object => "o",
            IdKind::Link => "l",
        }
    }
}

/// Monotonic id source. A counter is never decremented, so ids of deleted
/// elements are not handed out again within a session.
#[derive(Debug, Clone, Default)]
pub struct IdGen {
    next: u64,
}

impl IdGen {
    pub fn mint(&mut self, kind: IdKind) -> ElementId {
        self.next += 1;
        ElementId(format!("{}{}", kind.prefix(), self.next))
    }

    /// Advances the counter past any numeric suffix found in `id`, so ids
    /// minted after loading a document never collide with stored ones.
    pub fn observe(&mut self, id: &ElementId) {
        let digits: String =
            id.0.chars().rev().take_while(|c| c.is_ascii_digit()).collect::<Vec<_>>().into_iter().rev().collect();
        if let Ok(n) = digits.parse::<u64>() {
            self.next = self.next.max(n);
        }
    }
}
