use std::fmt;

use crate::error::{OptError, Result};

/// A single outcome label.
///
/// Composite labels are kept structured so that products flatten
/// canonically: `((x,y),z)` and `(x,(y,z))` are the same tuple `(x,y,z)`,
/// and the singleton outcome `⋆` of the trivial test is the unit of the
/// product.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Outcome {
    Star,
    Atom(String),
    Tuple(Vec<Outcome>),
    /// A coarse-grained block, members in base order.
    Block(Vec<Outcome>),
}

impl Outcome {
    pub fn atom(label: impl Into<String>) -> Self {
        Outcome::Atom(label.into())
    }

    /// Canonical pair `(x, y)`.
    pub fn pair(x: &Outcome, y: &Outcome) -> Outcome {
        let mut parts = Vec::new();
        for o in [x, y] {
            match o {
                Outcome::Star => {}
                Outcome::Tuple(items) => parts.extend(items.iter().cloned()),
                other => parts.push(other.clone()),
            }
        }
        match parts.len() {
            0 => Outcome::Star,
            1 => parts.pop().unwrap(),
            _ => Outcome::Tuple(parts),
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |items: &[Outcome]| {
            items
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join(",")
        };
        match self {
            Outcome::Star => write!(f, "*"),
            Outcome::Atom(s) => write!(f, "{s}"),
            Outcome::Tuple(items) => write!(f, "({})", join(items)),
            Outcome::Block(items) => write!(f, "{{{}}}", join(items)),
        }
    }
}

impl fmt::Debug for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Finite ordered set of distinct outcome labels.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct OutcomeSet {
    labels: Vec<Outcome>,
}

impl OutcomeSet {
    pub fn new(labels: Vec<Outcome>) -> Result<Self> {
        if labels.is_empty() {
            return Err(OptError::ShapeMismatch("empty outcome set".into()));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(OptError::DuplicateLabel(l.to_string()));
            }
        }
        Ok(Self { labels })
    }

    pub fn from_atoms<S: AsRef<str>>(labels: &[S]) -> Result<Self> {
        Self::new(labels.iter().map(|s| Outcome::atom(s.as_ref())).collect())
    }

    /// Outcomes `1..=n`.
    pub fn numbered(n: usize) -> Self {
        Self::new((1..=n).map(|i| Outcome::atom(i.to_string())).collect())
            .expect("distinct numbered labels")
    }

    /// The singleton `{⋆}`.
    pub fn star() -> Self {
        Self {
            labels: vec![Outcome::Star],
        }
    }

    /// Row-major product `X × Y`.
    pub fn product(&self, other: &OutcomeSet) -> Result<Self> {
        let mut labels = Vec::with_capacity(self.len() * other.len());
        for x in &self.labels {
            for y in &other.labels {
                labels.push(Outcome::pair(x, y));
            }
        }
        Self::new(labels)
    }

    pub fn labels(&self) -> &[Outcome] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn position(&self, label: &Outcome) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn position_str(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l.to_string() == label)
    }
}

impl fmt::Debug for OutcomeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.labels).finish()
    }
}
