use std::fmt;

use crate::calculus::system::SystemRef;
use crate::matrix::Matrix;

/// Provenance tag of an event in an unquotiented theory.
///
/// Tags live in the free commutative semiring over atom tags: composition
/// (sequential or parallel) multiplies, the merge `⋎` adds. Normal form is a
/// sorted multiset of monomials, each a sorted multiset of atoms. This makes
/// associativity, the interchange law, commutativity of `⋎` and
/// distributivity of composition over `⋎` hold on tags exactly. An untagged
/// event behaves as the unit monomial.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Context {
    terms: Vec<Vec<String>>,
}

impl Context {
    pub fn atom(tag: impl Into<String>) -> Self {
        Context {
            terms: vec![vec![tag.into()]],
        }
    }

    fn unit() -> Self {
        Context {
            terms: vec![Vec::new()],
        }
    }

    /// Sum of the given monomials, normalized. `None` for an empty sum.
    pub fn from_terms(terms: Vec<Vec<String>>) -> Option<Self> {
        if terms.is_empty() {
            return None;
        }
        let mut terms: Vec<Vec<String>> = terms
            .into_iter()
            .map(|mut m| {
                m.sort();
                m
            })
            .collect();
        terms.sort();
        Some(Context { terms })
    }

    pub fn terms(&self) -> &[Vec<String>] {
        &self.terms
    }

    /// Product of two tags (sequential or parallel composition).
    pub fn compose(&self, other: &Context) -> Context {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                let mut m: Vec<String> = a.iter().chain(b).cloned().collect();
                m.sort();
                terms.push(m);
            }
        }
        terms.sort();
        Context { terms }
    }

    /// Formal sum of tags.
    pub fn merge<'a>(items: impl IntoIterator<Item = &'a Context>) -> Context {
        let mut terms: Vec<Vec<String>> = items.into_iter().flat_map(|c| c.terms.iter().cloned()).collect();
        terms.sort();
        Context { terms }
    }

    /// Composition of optional tags; an untagged operand contributes nothing.
    pub fn compose_opt(a: Option<&Context>, b: Option<&Context>) -> Option<Context> {
        match (a, b) {
            (None, None) => None,
            (Some(x), None) | (None, Some(x)) => Some(x.clone()),
            (Some(x), Some(y)) => Some(x.compose(y)),
        }
    }

    /// Merge of optional tags; stays untagged only if every operand is.
    pub fn merge_opt<'a>(items: impl IntoIterator<Item = Option<&'a Context>>) -> Option<Context> {
        let items: Vec<Option<&Context>> = items.into_iter().collect();
        if items.iter().all(Option::is_none) {
            return None;
        }
        let unit = Context::unit();
        Some(Context::merge(items.into_iter().map(|c| c.unwrap_or(&unit))))
    }
}

impl fmt::Display for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self
            .terms
            .iter()
            .map(|m| if m.is_empty() { "1".to_string() } else { m.join("*") })
            .collect();
        write!(f, "{}", terms.join("+"))
    }
}

impl fmt::Debug for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// A single branch of a test: a matrix between two systems, optionally
/// carrying a context tag.
///
/// Equality compares systems, payload and tag; the `id` is a name only.
#[derive(Clone)]
pub struct Event {
    pub id: String,
    pub input: SystemRef,
    pub output: SystemRef,
    pub matrix: Matrix,
    pub context: Option<Context>,
}

impl Event {
    pub fn new(id: impl Into<String>, input: SystemRef, output: SystemRef, matrix: Matrix) -> Self {
        Self {
            id: id.into(),
            input,
            output,
            matrix,
            context: None,
        }
    }

    pub fn with_context(mut self, context: Option<Context>) -> Self {
        self.context = context;
        self
    }

    pub fn tagged(self, tag: impl Into<String>) -> Self {
        self.with_context(Some(Context::atom(tag)))
    }

    /// Same payload without the context tag.
    pub fn untagged(&self) -> Event {
        Event {
            context: None,
            ..self.clone()
        }
    }

    pub fn is_scalar(&self) -> bool {
        self.input.is_trivial() && self.output.is_trivial()
    }

    /// Payload shape expected for the event's systems.
    pub fn expected_shape(&self) -> (usize, usize) {
        (self.output.size(), self.input.size())
    }
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.input == other.input
            && self.output == other.output
            && self.matrix == other.matrix
            && self.context == other.context
    }
}

impl Eq for Event {}

impl fmt::Debug for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{:?}->{:?} {:?}", self.id, self.input, self.output, self.matrix)?;
        if let Some(c) = &self.context {
            write!(f, " @{c}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tag_algebra_laws() {
        let (a, b, c) = (Context::atom("a"), Context::atom("b"), Context::atom("c"));
        assert_eq!(a.compose(&b).compose(&c), a.compose(&b.compose(&c)));
        assert_eq!(Context::merge([&a, &b]), Context::merge([&b, &a]));
        assert_eq!(
            Context::merge([&a, &b]).compose(&c),
            Context::merge([&a.compose(&c), &b.compose(&c)])
        );
        assert_eq!(Context::compose_opt(None, Some(&a)), Some(a.clone()));
        assert_eq!(Context::merge_opt([None, None]), None);
        assert_eq!(Context::merge([&a, &b]).to_string(), "a+b");
        assert_eq!(a.compose(&b).to_string(), "a*b");
        assert_ne!(Context::merge([&a, &a]), a);
    }
}
