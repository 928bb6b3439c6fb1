//! Executable UML++ modeling engine.
//!
//! Classes and objects share one store ([`model::ProjectModel`]); objects
//! are executable through the expression language in [`expr`]; the
//! [`engine`] re-evaluates constraints, derived slots and monitored
//! operations after every mutation; [`persist`] reads and writes the
//! canonical `.umlpp.json` project document; [`session::Session`] ties them
//! together with revision numbers.

pub mod engine;
pub mod expr;
pub mod id;
pub mod model;
pub mod money;
pub mod persist;
pub mod session;
pub mod value;

pub use id::ElementId;
pub use model::{KernelError, ProjectModel};
pub use money::Money;
pub use session::Session;
pub use value::{DataType, TypeRef, Value};
