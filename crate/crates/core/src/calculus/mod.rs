//! Systems, events, tests and the compositional engine.

mod event;
mod outcome;
mod system;

use std::fmt;

pub use event::{Context, Event};
pub use outcome::{Outcome, OutcomeSet};
pub use system::{Atom, SystemRef, TheoryId, TRIVIAL_LABEL};

use crate::error::{OptError, Result};
use crate::matrix::Matrix;
use crate::rational::Rational;

/// An indexed family of events sharing input and output systems, one per
/// outcome label.
///
/// Two tests are equal when their systems, outcome labels (in order) and
/// events (payload and context tag) are equal; the `id` is only a name.
#[derive(Clone)]
pub struct Test {
    pub id: String,
    input: SystemRef,
    output: SystemRef,
    outcomes: OutcomeSet,
    events: Vec<Event>,
}

impl Test {
    pub fn new(
        id: impl Into<String>,
        input: SystemRef,
        output: SystemRef,
        outcomes: OutcomeSet,
        events: Vec<Event>,
    ) -> Result<Self> {
        let id = id.into();
        if events.len() != outcomes.len() {
            return Err(OptError::ShapeMismatch(format!(
                "test `{id}` has {} events for {} outcomes",
                events.len(),
                outcomes.len()
            )));
        }
        if input.theory() != output.theory() {
            return Err(OptError::TheoryMismatch);
        }
        for e in &events {
            if e.input != input || e.output != output {
                return Err(OptError::SystemMismatch {
                    expected: format!("{input}->{output}"),
                    found: format!("{}->{} (event `{}`)", e.input, e.output, e.id),
                });
            }
            if e.matrix.shape() != e.expected_shape() {
                return Err(OptError::ShapeMismatch(format!(
                    "event `{}` has shape {:?}, expected {:?}",
                    e.id,
                    e.matrix.shape(),
                    e.expected_shape()
                )));
            }
        }
        Ok(Self {
            id,
            input,
            output,
            outcomes,
            events,
        })
    }

    /// Singleton test `[event]` with outcome `⋆`.
    pub fn singleton(event: Event) -> Result<Self> {
        let id = format!("[{}]", event.id);
        Self::new(
            id,
            event.input.clone(),
            event.output.clone(),
            OutcomeSet::star(),
            vec![event],
        )
    }

    pub fn input(&self) -> &SystemRef {
        &self.input
    }

    pub fn output(&self) -> &SystemRef {
        &self.output
    }

    pub fn theory(&self) -> TheoryId {
        self.input.theory()
    }

    pub fn outcomes(&self) -> &OutcomeSet {
        &self.outcomes
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn event(&self, i: usize) -> &Event {
        &self.events[i]
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn is_singleton(&self) -> bool {
        self.events.len() == 1
    }

    pub fn matrices(&self) -> impl Iterator<Item = &Matrix> {
        self.events.iter().map(|e| &e.matrix)
    }

    /// Entrywise sum of the event payloads (the full coarse-graining).
    pub fn summed_matrix(&self) -> Matrix {
        Matrix::sum(self.matrices()).expect("tests are nonempty and uniformly shaped")
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    /// Same events under new labels.
    pub fn relabel(&self, outcomes: OutcomeSet) -> Result<Test> {
        Test::new(
            self.id.clone(),
            self.input.clone(),
            self.output.clone(),
            outcomes,
            self.events.clone(),
        )
    }

    /// Drops every context tag.
    pub fn untagged(&self) -> Test {
        Test {
            events: self.events.iter().map(Event::untagged).collect(),
            ..self.clone()
        }
    }

    /// Same data viewed in another theory (systems rebound).
    pub fn rebind(&self, theory: TheoryId) -> Test {
        let input = self.input.rebind(theory);
        let output = self.output.rebind(theory);
        Test {
            id: self.id.clone(),
            events: self
                .events
                .iter()
                .map(|e| Event {
                    input: input.clone(),
                    output: output.clone(),
                    ..e.clone()
                })
                .collect(),
            input,
            output,
            outcomes: self.outcomes.clone(),
        }
    }

    /// True if the two tests agree up to context tags.
    pub fn same_payloads(&self, other: &Test) -> bool {
        self.input == other.input
            && self.output == other.output
            && self.outcomes == other.outcomes
            && self.matrices().eq(other.matrices())
    }
}

impl PartialEq for Test {
    fn eq(&self, other: &Self) -> bool {
        self.input == other.input
            && self.output == other.output
            && self.outcomes == other.outcomes
            && self.events == other.events
    }
}

impl Eq for Test {}

impl fmt::Debug for Test {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Test")
            .field("id", &self.id)
            .field("input", &self.input)
            .field("output", &self.output)
            .field("outcomes", &self.outcomes)
            .field("events", &self.events)
            .finish()
    }
}

fn same_theory(a: &Test, b: &Test) -> Result<()> {
    if a.theory() == b.theory() {
        Ok(())
    } else {
        Err(OptError::TheoryMismatch)
    }
}

pub(crate) fn seq_event(first: &Event, second: &Event) -> Result<Event> {
    Ok(Event {
        id: format!("{}∘{}", second.id, first.id),
        input: first.input.clone(),
        output: second.output.clone(),
        matrix: second.matrix.mul(&first.matrix)?,
        context: Context::compose_opt(first.context.as_ref(), second.context.as_ref()),
    })
}

pub(crate) fn par_event(left: &Event, right: &Event) -> Event {
    Event {
        id: format!("{}⊠{}", left.id, right.id),
        input: left.input.compose(&right.input),
        output: left.output.compose(&right.output),
        matrix: left.matrix.kron(&right.matrix),
        context: Context::compose_opt(left.context.as_ref(), right.context.as_ref()),
    }
}

/// Sequential composition `second ∘ first`, outcomes `X × Y` in row-major
/// order.
pub fn compose_seq(first: &Test, second: &Test) -> Result<Test> {
    same_theory(first, second)?;
    if second.input != first.output {
        return Err(OptError::SystemMismatch {
            expected: first.output.label(),
            found: second.input.label(),
        });
    }
    let mut events = Vec::with_capacity(first.len() * second.len());
    for x in &first.events {
        for y in &second.events {
            events.push(seq_event(x, y)?);
        }
    }
    Test::new(
        format!("{}∘{}", second.id, first.id),
        first.input.clone(),
        second.output.clone(),
        first.outcomes.product(&second.outcomes)?,
        events,
    )
}

/// Parallel composition `left ⊠ right` (Kronecker product of payloads).
pub fn compose_par(left: &Test, right: &Test) -> Result<Test> {
    same_theory(left, right)?;
    let mut events = Vec::with_capacity(left.len() * right.len());
    for x in &left.events {
        for y in &right.events {
            events.push(par_event(x, y));
        }
    }
    Test::new(
        format!("{}⊠{}", left.id, right.id),
        left.input.compose(&right.input),
        left.output.compose(&right.output),
        left.outcomes.product(&right.outcomes)?,
        events,
    )
}

pub fn identity_event(sys: &SystemRef) -> Event {
    Event::new(
        format!("I_{}", sys.label()),
        sys.clone(),
        sys.clone(),
        Matrix::identity(sys.size()),
    )
}

/// The singleton identity test on `sys`.
pub fn identity_test(sys: &SystemRef) -> Test {
    Test::singleton(identity_event(sys))
        .expect("identity payload matches its system")
        .with_id(format!("I_{}", sys.label()))
}

/// Singleton scalar test `[p]` on the trivial system.
pub fn scalar_test(theory: TheoryId, p: Rational) -> Test {
    let i = SystemRef::trivial(theory);
    Test::singleton(Event::new("p", i.clone(), i, Matrix::scalar(p))).expect("1x1 scalar")
}

/// Permutation matrix of the swap `AB → BA`: basis `(i, j)` goes to `(j, i)`.
pub fn swap_matrix(a_size: usize, b_size: usize) -> Matrix {
    let n = a_size * b_size;
    let mut m = Matrix::zeros(n, n);
    for i in 0..a_size {
        for j in 0..b_size {
            m.set(j * a_size + i, i * b_size + j, crate::rational::one());
        }
    }
    m
}

/// Symmetric braiding `S: AB → BA` as a singleton test.
pub fn braiding_test(a: &SystemRef, b: &SystemRef) -> Result<Test> {
    if a.theory() != b.theory() {
        return Err(OptError::TheoryMismatch);
    }
    let event = Event::new(
        format!("s_{},{}", a.label(), b.label()),
        a.compose(b),
        b.compose(a),
        swap_matrix(a.size(), b.size()),
    );
    Ok(Test::singleton(event)?.with_id(format!("S_{},{}", a.label(), b.label())))
}

/// Checks the interchange law `(t1 ⊠ t3) ∘ (t2 ⊠ t4) = (t1 ∘ t2) ⊠ (t3 ∘ t4)`
/// event by event, matching outcome `(x2, x4, x1, x3)` on the left with
/// `((x2, x1), (x4, x3))` on the right.
pub fn interchange_check(t1: &Test, t2: &Test, t3: &Test, t4: &Test) -> Result<bool> {
    let left = compose_seq(&compose_par(t2, t4)?, &compose_par(t1, t3)?)?;
    let right = compose_par(&compose_seq(t2, t1)?, &compose_seq(t4, t3)?)?;
    if left.input != right.input || left.output != right.output {
        return Ok(false);
    }
    let (n1, n2, n3, n4) = (t1.len(), t2.len(), t3.len(), t4.len());
    for i2 in 0..n2 {
        for i4 in 0..n4 {
            for i1 in 0..n1 {
                for i3 in 0..n3 {
                    let l = ((i2 * n4 + i4) * n1 + i1) * n3 + i3;
                    let r = ((i2 * n1 + i1) * n4 + i4) * n3 + i3;
                    if left.events[l] != right.events[r] {
                        return Ok(false);
                    }
                }
            }
        }
    }
    Ok(true)
}

/// Sliding property of the braiding:
/// `(t2 ⊠ t1) ∘ s_{A,C} = s_{B,D} ∘ (t1 ⊠ t2)` for `t1: A → B`, `t2: C → D`.
pub fn sliding_check(t1: &Test, t2: &Test) -> Result<bool> {
    let s_in = braiding_test(t1.input(), t2.input())?;
    let s_out = braiding_test(t1.output(), t2.output())?;
    let left = compose_seq(&s_in, &compose_par(t2, t1)?)?;
    let right = compose_seq(&compose_par(t1, t2)?, &s_out)?;
    let (n1, n2) = (t1.len(), t2.len());
    for i1 in 0..n1 {
        for i2 in 0..n2 {
            if left.events[i2 * n1 + i1] != right.events[i1 * n2 + i2] {
                return Ok(false);
            }
        }
    }
    Ok(left.input == right.input && left.output == right.output)
}
