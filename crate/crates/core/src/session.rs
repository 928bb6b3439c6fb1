//! A project being edited: the model, its diagrams, and the revision
//! counter that stamps every report.

use crate::engine::{after_mutation, full_report, MonitorSnapshot, MutationTransaction, ViolationReport};
use crate::model::{KernelError, ProjectModel};
use crate::persist::{self, DiagramLayout, LoadError};

/// Outcome of one committed mutation.
#[derive(Debug, Clone)]
pub struct Mutation<T> {
    pub result: T,
    pub revision: u64,
    pub report: ViolationReport,
    pub monitors: MonitorSnapshot,
}

#[derive(Debug, Clone)]
pub struct Session {
    model: ProjectModel,
    layouts: Vec<DiagramLayout>,
    revision: u64,
    last: Option<MutationTransaction>,
    report: ViolationReport,
    monitors: MonitorSnapshot,
}

impl Session {
    pub fn new(model: ProjectModel, layouts: Vec<DiagramLayout>) -> Self {
        let (report, monitors) = full_report(&model, 0);
        Self { model, layouts, revision: 0, last: None, report, monitors }
    }

    pub fn load(bytes: &[u8]) -> Result<Self, LoadError> {
        let (model, layouts) = persist::load(bytes)?;
        Ok(Self::new(model, layouts))
    }

    pub fn save(&self) -> String {
        persist::save(&self.model, &self.layouts)
    }

    pub fn model(&self) -> &ProjectModel {
        &self.model
    }

    pub fn layouts(&self) -> &[DiagramLayout] {
        &self.layouts
    }

    /// Direct access to diagram layouts. Layout does not affect the
    /// report, so edits here do not advance the revision.
    pub fn layouts_mut(&mut self) -> &mut Vec<DiagramLayout> {
        &mut self.layouts
    }

    pub fn revision(&self) -> u64 {
        self.revision
    }

    pub fn last_transaction(&self) -> Option<&MutationTransaction> {
        self.last.as_ref()
    }

    /// Report and monitors at the current revision.
    pub fn report(&self) -> (&ViolationReport, &MonitorSnapshot) {
        (&self.report, &self.monitors)
    }

    /// Applies one kernel mutation. On success the revision advances and a
    /// fresh report is computed; on failure nothing changes.
    pub fn apply<T>(
        &mut self,
        operation: &str,
        arguments: &[&str],
        edit: impl FnOnce(&mut ProjectModel) -> Result<T, KernelError>,
    ) -> Result<Mutation<T>, KernelError> {
        let result = edit(&mut self.model)?;
        self.revision += 1;
        self.prune_layouts();
        let txn = MutationTransaction {
            operation: operation.to_owned(),
            arguments: arguments.iter().map(|a| (*a).to_owned()).collect(),
            revision: self.revision,
        };
        let (report, monitors) = after_mutation(&self.model, &txn);
        self.report = report.clone();
        self.monitors = monitors.clone();
        self.last = Some(txn);
        Ok(Mutation { result, revision: self.revision, report, monitors })
    }

    /// Moves a node in a diagram, creating the diagram if needed. Layout
    /// edits advance the revision like model edits.
    pub fn place_node(
        &mut self,
        diagram: &str,
        element: &crate::ElementId,
        x: i64,
        y: i64,
    ) -> Result<Mutation<()>, KernelError> {
        let m = &self.model;
        if m.class(element).is_none() && m.object(element).is_none() && m.enumeration(element).is_none() {
            return Err(KernelError::UnknownElement(element.clone()));
        }
        let idx = match self.layouts.iter().position(|l| l.name == diagram) {
            Some(i) => i,
            None => {
                self.layouts.push(DiagramLayout::new(diagram));
                self.layouts.len() - 1
            }
        };
        self.layouts[idx].place(element, x, y);
        self.apply("placeNode", &[diagram, element.as_str()], |_| Ok(()))
    }

    fn prune_layouts(&mut self) {
        let m = &self.model;
        for l in &mut self.layouts {
            l.nodes.retain(|n| {
                m.class(&n.element).is_some() || m.object(&n.element).is_some() || m.enumeration(&n.element).is_some()
            });
        }
    }
}
