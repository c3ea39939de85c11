use std::collections::BTreeMap;

use crate::backend::check_classical_family;
use crate::calculus::{identity_test, Atom, Event, OutcomeSet, SystemRef, Test, TheoryId, TRIVIAL_LABEL};
use crate::error::{OptError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TheoryKind {
    /// Quotiented classical theory: events are bare substochastic matrices.
    Classical,
    /// Unquotiented classical theory: every registered event carries a
    /// context tag, and equal matrices with different tags are different
    /// events.
    LabeledClassical,
}

impl TheoryKind {
    pub fn name(self) -> &'static str {
        match self {
            TheoryKind::Classical => "classical",
            TheoryKind::LabeledClassical => "labeled-classical",
        }
    }
}

/// Registry of systems, events and tests of a classical-backed theory.
///
/// Built once and then shared immutably.
#[derive(Clone, Debug)]
pub struct Theory {
    id: TheoryId,
    kind: TheoryKind,
    atoms: Vec<Atom>,
    events: Vec<Event>,
    event_index: BTreeMap<String, usize>,
    tests: Vec<Test>,
    test_index: BTreeMap<String, usize>,
}

impl Theory {
    pub fn new(kind: TheoryKind) -> Self {
        Self {
            id: TheoryId::fresh(),
            kind,
            atoms: Vec::new(),
            events: Vec::new(),
            event_index: BTreeMap::new(),
            tests: Vec::new(),
            test_index: BTreeMap::new(),
        }
    }

    /// A classical theory with the given elementary systems.
    pub fn classical(systems: &[(&str, usize)]) -> Result<Self> {
        let mut th = Self::new(TheoryKind::Classical);
        for (label, size) in systems {
            th.add_system(*label, *size)?;
        }
        Ok(th)
    }

    pub fn id(&self) -> TheoryId {
        self.id
    }

    pub fn kind(&self) -> TheoryKind {
        self.kind
    }

    pub fn is_quotiented(&self) -> bool {
        self.kind == TheoryKind::Classical
    }

    /// Classical backends are locally tomographic.
    pub fn is_locally_tomographic(&self) -> bool {
        true
    }

    pub fn add_system(&mut self, label: impl Into<String>, size: usize) -> Result<SystemRef> {
        let label = label.into();
        if label == TRIVIAL_LABEL || label.is_empty() || self.atoms.iter().any(|a| a.label == label) {
            return Err(OptError::DuplicateLabel(label));
        }
        if size == 0 {
            return Err(OptError::ShapeMismatch(format!("system `{label}` has size 0")));
        }
        self.atoms.push(Atom {
            label: label.clone(),
            size,
        });
        Ok(SystemRef::atom(self.id, label, size))
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn trivial(&self) -> SystemRef {
        SystemRef::trivial(self.id)
    }

    pub fn atom_systems(&self) -> Vec<SystemRef> {
        self.atoms
            .iter()
            .map(|a| SystemRef::atom(self.id, a.label.clone(), a.size))
            .collect()
    }

    /// Resolves `I`, an elementary label, or a concatenation of elementary
    /// labels (rejected if the split is ambiguous).
    pub fn system(&self, label: &str) -> Result<SystemRef> {
        if label == TRIVIAL_LABEL {
            return Ok(self.trivial());
        }
        let splits = self.split_label(label);
        match splits.len() {
            1 => Ok(SystemRef::from_components(self.id, splits.into_iter().next().unwrap())),
            _ => Err(OptError::UnknownSystem(label.to_string())),
        }
    }

    fn split_label(&self, label: &str) -> Vec<Vec<Atom>> {
        if label.is_empty() {
            return vec![Vec::new()];
        }
        let mut out = Vec::new();
        for a in &self.atoms {
            if let Some(rest) = label.strip_prefix(a.label.as_str()) {
                for mut tail in self.split_label(rest) {
                    tail.insert(0, a.clone());
                    out.push(tail);
                    if out.len() > 1 {
                        return out;
                    }
                }
            }
        }
        out
    }

    pub fn system_from_labels(&self, labels: &[String]) -> Result<SystemRef> {
        let mut components = Vec::new();
        for l in labels {
            let a = self
                .atoms
                .iter()
                .find(|a| &a.label == l)
                .ok_or_else(|| OptError::UnknownSystem(l.clone()))?;
            components.push(a.clone());
        }
        Ok(SystemRef::from_components(self.id, components))
    }

    pub fn owns(&self, sys: &SystemRef) -> bool {
        sys.theory() == self.id && sys.components().iter().all(|c| self.atoms.contains(c))
    }

    pub fn add_event(&mut self, event: Event) -> Result<()> {
        if self.event_index.contains_key(&event.id) {
            return Err(OptError::DuplicateLabel(event.id));
        }
        if !self.owns(&event.input) || !self.owns(&event.output) {
            return Err(OptError::UnknownSystem(format!("{}->{}", event.input, event.output)));
        }
        if event.matrix.shape() != event.expected_shape() {
            return Err(OptError::ShapeMismatch(format!(
                "event `{}` is {:?}, expected {:?}",
                event.id,
                event.matrix.shape(),
                event.expected_shape()
            )));
        }
        if !event.matrix.is_substochastic() {
            return Err(OptError::NotAnInstrument(format!(
                "event `{}` is not substochastic",
                event.id
            )));
        }
        match (self.kind, &event.context) {
            (TheoryKind::LabeledClassical, None) => {
                return Err(OptError::ShapeMismatch(format!(
                    "event `{}` needs a context tag in a labeled theory",
                    event.id
                )))
            }
            (TheoryKind::Classical, Some(_)) => {
                return Err(OptError::ShapeMismatch(format!(
                    "event `{}` carries a context tag in a quotiented theory",
                    event.id
                )))
            }
            _ => {}
        }
        self.event_index.insert(event.id.clone(), self.events.len());
        self.events.push(event);
        Ok(())
    }

    pub fn event(&self, id: &str) -> Result<&Event> {
        self.event_index
            .get(id)
            .map(|&i| &self.events[i])
            .ok_or_else(|| OptError::UnknownEvent(id.to_string()))
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    /// Registers a test over previously registered events.
    pub fn add_test(
        &mut self,
        id: impl Into<String>,
        input: &SystemRef,
        output: &SystemRef,
        outcomes: OutcomeSet,
        event_ids: &[&str],
    ) -> Result<&Test> {
        let events = event_ids
            .iter()
            .map(|e| self.event(e).cloned())
            .collect::<Result<Vec<_>>>()?;
        let id = id.into();
        check_classical_family(input, output, &events)?;
        let test = Test::new(id, input.clone(), output.clone(), outcomes, events)?;
        self.register_test(test)
    }

    /// Registers a test, adding any events it carries that are not yet
    /// registered. The family must pass the classical predicate.
    pub fn register_test(&mut self, test: Test) -> Result<&Test> {
        if self.test_index.contains_key(&test.id) {
            return Err(OptError::DuplicateLabel(test.id));
        }
        if test.theory() != self.id {
            return Err(OptError::TheoryMismatch);
        }
        check_classical_family(test.input(), test.output(), test.events())?;
        for e in test.events() {
            match self.event_index.get(&e.id) {
                Some(&i) if self.events[i] == *e => {}
                Some(_) => return Err(OptError::DuplicateLabel(e.id.clone())),
                None => self.add_event(e.clone())?,
            }
        }
        self.test_index.insert(test.id.clone(), self.tests.len());
        self.tests.push(test);
        Ok(self.tests.last().unwrap())
    }

    pub fn test(&self, id: &str) -> Result<&Test> {
        self.test_index
            .get(id)
            .map(|&i| &self.tests[i])
            .ok_or_else(|| OptError::UnknownTest(id.to_string()))
    }

    pub fn tests(&self) -> &[Test] {
        &self.tests
    }

    pub fn identity_test(&self, label: &str) -> Result<Test> {
        Ok(identity_test(&self.system(label)?))
    }
}
