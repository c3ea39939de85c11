//! Concrete theory backends: classical, labeled-classical and GPT fragments.

mod fragment;
mod theory;

pub use fragment::GptFragment;
pub use theory::{Theory, TheoryKind};

use crate::calculus::{Event, OutcomeSet, SystemRef, Test};
use crate::error::{OptError, Result};
use crate::matrix::Matrix;

/// A finitely presented theory that decides which families of events form
/// tests.
///
/// `Theory` is the production implementation; wrappers implement it to
/// inject alternative validity predicates in tests.
pub trait Backend: Sync {
    fn theory(&self) -> &Theory;

    /// Accepts or rejects a family of events as a test of the theory.
    fn check_family(&self, input: &SystemRef, output: &SystemRef, events: &[Event]) -> Result<()>;

    /// Builds the test if the backend accepts the family.
    fn validate_test(
        &self,
        id: &str,
        input: &SystemRef,
        output: &SystemRef,
        outcomes: OutcomeSet,
        events: Vec<Event>,
    ) -> Result<Test> {
        if input.theory() != self.theory().id() || output.theory() != self.theory().id() {
            return Err(OptError::TheoryMismatch);
        }
        self.check_family(input, output, &events)?;
        Test::new(id, input.clone(), output.clone(), outcomes, events)
    }

    fn revalidate(&self, test: &Test) -> Result<()> {
        if test.theory() != self.theory().id() {
            return Err(OptError::TheoryMismatch);
        }
        self.check_family(test.input(), test.output(), test.events())
    }
}

impl Backend for Theory {
    fn theory(&self) -> &Theory {
        self
    }

    fn check_family(&self, input: &SystemRef, output: &SystemRef, events: &[Event]) -> Result<()> {
        check_classical_family(input, output, events)
    }
}

/// Classical instrument predicate: substochastic events whose sum is
/// stochastic.
pub fn check_classical_family(input: &SystemRef, output: &SystemRef, events: &[Event]) -> Result<()> {
    if events.is_empty() {
        return Err(OptError::NotAnInstrument("empty family".into()));
    }
    let shape = (output.size(), input.size());
    for e in events {
        if e.input != *input || e.output != *output {
            return Err(OptError::SystemMismatch {
                expected: format!("{input}->{output}"),
                found: format!("{}->{}", e.input, e.output),
            });
        }
        if e.matrix.shape() != shape {
            return Err(OptError::ShapeMismatch(format!(
                "event `{}` is {:?}, expected {:?}",
                e.id,
                e.matrix.shape(),
                shape
            )));
        }
        if !e.matrix.is_nonnegative() {
            return Err(OptError::NotAnInstrument(format!("event `{}` has a negative entry", e.id)));
        }
    }
    let total = Matrix::sum(events.iter().map(|e| &e.matrix))?;
    for (col, s) in total.column_sums().iter().enumerate() {
        if !num_traits::One::is_one(s) {
            return Err(OptError::NotAnInstrument(format!(
                "column {col} of the summed family sums to {}",
                crate::rational::format_rational(s)
            )));
        }
    }
    Ok(())
}

/// The unique deterministic effect of a classical system: the all-ones row.
pub fn deterministic_effect(sys: &SystemRef) -> Event {
    Event::new(
        format!("u_{}", sys.label()),
        sys.clone(),
        SystemRef::trivial(sys.theory()),
        Matrix::ones_row(sys.size()),
    )
}

/// Discard the input and prepare `state`: the rank-one map `state ∘ u`.
pub fn discard_prepare(sys_in: &SystemRef, state: &Event) -> Result<Event> {
    if !state.input.is_trivial() || !state.matrix.is_stochastic() {
        return Err(OptError::NotDeterministicState(state.id.clone()));
    }
    if state.output.theory() != sys_in.theory() {
        return Err(OptError::TheoryMismatch);
    }
    let u = deterministic_effect(sys_in);
    Ok(Event {
        id: format!("D_{}", state.id),
        input: sys_in.clone(),
        output: state.output.clone(),
        matrix: state.matrix.mul(&u.matrix)?,
        context: state.context.clone(),
    })
}

/// The null transformation `ε: a → b`.
pub fn null_transformation(a: &SystemRef, b: &SystemRef) -> Event {
    Event::new(
        format!("ε_{}→{}", a.label(), b.label()),
        a.clone(),
        b.clone(),
        Matrix::zeros(b.size(), a.size()),
    )
}

/// Point-mass state on basis point `index`.
pub fn basis_state(sys: &SystemRef, index: usize) -> Event {
    let mut v = vec![crate::rational::zero(); sys.size()];
    v[index] = crate::rational::one();
    Event::new(
        format!("δ{index}_{}", sys.label()),
        SystemRef::trivial(sys.theory()),
        sys.clone(),
        Matrix::column(v),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{compose_seq, TheoryId};
    use crate::rational::{int, ratio};

    fn two() -> (Theory, SystemRef) {
        let mut th = Theory::new(TheoryKind::Classical);
        let a = th.add_system("A", 2).unwrap();
        (th, a)
    }

    #[test]
    fn validates_classical_instruments() {
        let (th, a) = two();
        let ev = |m: Matrix| Event::new("e", a.clone(), a.clone(), m);
        let ok = th.validate_test("T", &a, &a, OutcomeSet::star(), vec![ev(Matrix::identity(2))]);
        assert!(ok.is_ok());
        let half = Matrix::identity(2).scale(&ratio(1, 2));
        let ok = th.validate_test("T", &a, &a, OutcomeSet::numbered(2), vec![ev(half.clone()), ev(half)]);
        assert!(ok.is_ok());
        let bad = th.validate_test(
            "T",
            &a,
            &a,
            OutcomeSet::numbered(2),
            vec![ev(Matrix::identity(2)), ev(Matrix::identity(2))],
        );
        assert!(matches!(bad, Err(OptError::NotAnInstrument(msg)) if msg.contains("column 0")));
        let wrong = th.validate_test("T", &a, &a, OutcomeSet::star(), vec![ev(Matrix::identity(3))]);
        assert!(matches!(wrong, Err(OptError::ShapeMismatch(_))));
    }

    #[test]
    fn deterministic_effects() {
        let mut th = Theory::new(TheoryKind::Classical);
        let c = th.add_system("C", 3).unwrap();
        assert_eq!(deterministic_effect(&c).matrix, Matrix::from_ints(&[&[1, 1, 1]]));
        let i = SystemRef::trivial(th.id());
        assert_eq!(deterministic_effect(&i).matrix, Matrix::scalar(int(1)));
        assert!(th.revalidate(&Test::singleton(deterministic_effect(&c)).unwrap()).is_ok());
    }

    #[test]
    fn discard_prepare_maps() {
        let (th, a) = two();
        let i = SystemRef::trivial(th.id());
        let s = Event::new("s", i.clone(), a.clone(), Matrix::column(vec![int(1), int(0)]));
        let d = discard_prepare(&a, &s).unwrap();
        assert_eq!(d.matrix, Matrix::from_ints(&[&[1, 1], &[0, 0]]));
        let h = Event::new("h", i.clone(), a.clone(), Matrix::column(vec![ratio(1, 2), ratio(1, 2)]));
        let dh = discard_prepare(&a, &h).unwrap();
        assert_eq!(dh.matrix, Matrix::from_ratios(&[&[(1, 2), (1, 2)], &[(1, 2), (1, 2)]]));
        // D_S ∘ D_S' = D_S
        let chain = compose_seq(&Test::singleton(dh).unwrap(), &Test::singleton(d.clone()).unwrap()).unwrap();
        assert_eq!(chain.event(0).matrix, d.matrix);
        let sub = Event::new("q", i, a.clone(), Matrix::column(vec![ratio(1, 2), int(0)]));
        assert!(matches!(discard_prepare(&a, &sub), Err(OptError::NotDeterministicState(_))));
    }

    #[test]
    fn null_transformations() {
        let (th, a) = two();
        let eps = null_transformation(&a, &a);
        assert_eq!(eps.matrix, Matrix::zeros(2, 2));
        let i = SystemRef::trivial(th.id());
        assert_eq!(null_transformation(&i, &i).matrix, Matrix::scalar(int(0)));
        let t = Test::singleton(Event::new("t", a.clone(), a.clone(), Matrix::identity(2))).unwrap();
        let c = compose_seq(&Test::singleton(eps.clone()).unwrap(), &t).unwrap();
        assert_eq!(c.event(0).matrix, eps.matrix);
        let _ = TheoryId::fresh();
    }
}
