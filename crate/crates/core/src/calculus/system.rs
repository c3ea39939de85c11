use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

/// Opaque identity of a theory. Values from different theories never compose.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct TheoryId(u64);

impl TheoryId {
    pub fn fresh() -> Self {
        static NEXT: AtomicU64 = AtomicU64::new(1);
        TheoryId(NEXT.fetch_add(1, Ordering::Relaxed))
    }
}

/// An elementary system: a label and its size (finite-set cardinality for
/// classical systems, linear dimension for GPT systems).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Atom {
    pub label: String,
    pub size: usize,
}

/// A possibly composite system. The trivial system `I` has no components,
/// so `IA = A` holds structurally.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SystemRef {
    theory: TheoryId,
    components: Vec<Atom>,
}

pub const TRIVIAL_LABEL: &str = "I";

impl SystemRef {
    pub fn atom(theory: TheoryId, label: impl Into<String>, size: usize) -> Self {
        Self {
            theory,
            components: vec![Atom {
                label: label.into(),
                size,
            }],
        }
    }

    pub fn trivial(theory: TheoryId) -> Self {
        Self {
            theory,
            components: Vec::new(),
        }
    }

    pub fn from_components(theory: TheoryId, components: Vec<Atom>) -> Self {
        Self { theory, components }
    }

    pub fn theory(&self) -> TheoryId {
        self.theory
    }

    pub fn components(&self) -> &[Atom] {
        &self.components
    }

    pub fn is_trivial(&self) -> bool {
        self.components.is_empty()
    }

    /// Product of the component sizes; 1 for the trivial system.
    pub fn size(&self) -> usize {
        self.components.iter().map(|a| a.size).product()
    }

    /// Ordered concatenation of component labels, `I` when trivial.
    pub fn label(&self) -> String {
        if self.components.is_empty() {
            TRIVIAL_LABEL.to_string()
        } else {
            self.components.iter().map(|a| a.label.as_str()).collect()
        }
    }

    /// Composite system `self other`.
    pub fn compose(&self, other: &SystemRef) -> SystemRef {
        debug_assert_eq!(self.theory, other.theory);
        let mut components = self.components.clone();
        components.extend(other.components.iter().cloned());
        SystemRef {
            theory: self.theory,
            components,
        }
    }

    /// Same components, rebound to another theory.
    pub fn rebind(&self, theory: TheoryId) -> SystemRef {
        SystemRef {
            theory,
            components: self.components.clone(),
        }
    }
}

impl fmt::Debug for SystemRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]", self.label(), self.size())
    }
}

impl fmt::Display for SystemRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}
