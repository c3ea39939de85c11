//! Operational equivalence and the quotient of a labeled theory.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use crate::backend::{GptFragment, Theory, TheoryKind};
use crate::calculus::{seq_event, par_event, Event, SystemRef, Test};
use crate::error::{OptError, Result};
use crate::matrix::Matrix;
use crate::rational::Rational;

/// Operational equivalence of two events of a classical-backed theory.
///
/// Classical systems are locally tomographic, so equality of the local
/// matrices decides equivalence.
pub fn equivalent(theory: &Theory, t1: &Event, t2: &Event) -> Result<bool> {
    if !theory.is_locally_tomographic() {
        return Err(OptError::TomographyUnsupported);
    }
    if t1.input != t2.input || t1.output != t2.output {
        return Err(OptError::SystemMismatch {
            expected: format!("{}->{}", t1.input, t1.output),
            found: format!("{}->{}", t2.input, t2.output),
        });
    }
    Ok(t1.matrix == t2.matrix)
}

/// Equivalence of two state vectors of a fragment, refused without local
/// tomography.
pub fn fragment_states_equivalent(frag: &GptFragment, i: usize, j: usize) -> Result<bool> {
    if !frag.is_locally_tomographic() {
        return Err(OptError::TomographyUnsupported);
    }
    Ok(frag.states()[i] == frag.states()[j])
}

/// One equivalence class of registered source events.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EquivalenceClass {
    pub representative: String,
    pub members: Vec<String>,
}

/// The quotient of a labeled theory: the target holds one event per class.
#[derive(Clone, Debug)]
pub struct QuotientMap {
    source: Theory,
    target: Theory,
    classes: Vec<EquivalenceClass>,
    class_of: BTreeMap<String, usize>,
}

impl QuotientMap {
    pub fn source(&self) -> &Theory {
        &self.source
    }

    pub fn target(&self) -> &Theory {
        &self.target
    }

    pub fn classes(&self) -> &[EquivalenceClass] {
        &self.classes
    }

    /// Representative id of a registered source event.
    pub fn representative(&self, event_id: &str) -> Option<&str> {
        self.class_of
            .get(event_id)
            .map(|&c| self.classes[c].representative.as_str())
    }

    pub fn map_system(&self, sys: &SystemRef) -> SystemRef {
        sys.rebind(self.target.id())
    }

    /// Tag-stripped event in the target theory.
    pub fn map_event(&self, e: &Event) -> Event {
        let id = self.representative(&e.id).map(str::to_string);
        Event {
            id: match id {
                Some(r) if self.source.event(&e.id).map_or(false, |s| s == e) => r,
                _ => e.id.clone(),
            },
            input: self.map_system(&e.input),
            output: self.map_system(&e.output),
            matrix: e.matrix.clone(),
            context: None,
        }
    }

    pub fn map_test(&self, t: &Test) -> Result<Test> {
        if t.theory() != self.source.id() {
            return Err(OptError::TheoryMismatch);
        }
        let events = t.events().iter().map(|e| self.map_event(e)).collect();
        Test::new(
            t.id.clone(),
            self.map_system(t.input()),
            self.map_system(t.output()),
            t.outcomes().clone(),
            events,
        )
    }

    /// A target test viewed as an untagged test of the source.
    pub fn lift_untagged(&self, t: &Test) -> Result<Test> {
        if t.theory() != self.target.id() {
            return Err(OptError::TheoryMismatch);
        }
        Ok(t.untagged().rebind(self.source.id()))
    }
}

/// Identifies operationally equivalent events of `source`.
///
/// Congruence is verified on every pair of registered classes: all member
/// pairs must compose, sequentially and in parallel, to equivalent events.
pub fn quotient_theory(source: &Theory) -> Result<QuotientMap> {
    let mut target = Theory::new(TheoryKind::Classical);
    for a in source.atoms() {
        target.add_system(a.label.clone(), a.size)?;
    }
    let mut classes: Vec<EquivalenceClass> = Vec::new();
    let mut class_events: Vec<Event> = Vec::new();
    let mut class_of = BTreeMap::new();
    for e in source.events() {
        let found = class_events
            .iter()
            .position(|c| c.input == e.input && c.output == e.output && c.matrix == e.matrix);
        let idx = match found {
            Some(i) => {
                classes[i].members.push(e.id.clone());
                i
            }
            None => {
                classes.push(EquivalenceClass {
                    representative: e.id.clone(),
                    members: vec![e.id.clone()],
                });
                class_events.push(e.clone());
                classes.len() - 1
            }
        };
        class_of.insert(e.id.clone(), idx);
    }
    verify_congruence(source, &classes)?;
    let mut map = QuotientMap {
        source: source.clone(),
        target,
        classes,
        class_of,
    };
    for e in &class_events {
        let image = map.map_event(e);
        map.target.add_event(image)?;
    }
    for t in source.tests() {
        let image = map.map_test(t)?;
        map.target.register_test(image)?;
    }
    Ok(map)
}

fn verify_congruence(source: &Theory, classes: &[EquivalenceClass]) -> Result<()> {
    let ev = |id: &str| source.event(id);
    for c1 in classes {
        for c2 in classes {
            let r1 = ev(&c1.representative)?;
            let r2 = ev(&c2.representative)?;
            let seq_ref = if r1.output == r2.input {
                Some(seq_event(r1, r2)?.matrix)
            } else {
                None
            };
            let par_ref = par_event(r1, r2).matrix;
            for m1 in &c1.members {
                for m2 in &c2.members {
                    let (e1, e2) = (ev(m1)?, ev(m2)?);
                    if let Some(s) = &seq_ref {
                        if seq_event(e1, e2)?.matrix != *s {
                            return Err(OptError::CongruenceViolation(format!("{m2}∘{m1}")));
                        }
                    }
                    if par_event(e1, e2).matrix != par_ref {
                        return Err(OptError::CongruenceViolation(format!("{m1}⊠{m2}")));
                    }
                }
            }
        }
    }
    Ok(())
}

/// Exact rank of the span of the fragment's states.
pub fn fragment_dimension(frag: &GptFragment) -> usize {
    Matrix::from_rows(frag.states().to_vec())
        .expect("states share the fragment dimension")
        .rank()
}

/// Prepare-measure fragment of a classical theory on system `label`.
///
/// States are the registered states of the system, effects the registered
/// effects; basis states, coordinate effects and the unit are added so that
/// both lists are separating. Duplicate vectors are listed once.
pub fn fragment_from_theory(theory: &Theory, label: &str) -> Result<GptFragment> {
    let sys = theory.system(label)?;
    let n = sys.size();
    let mut states: Vec<(String, Vec<Rational>)> = Vec::new();
    let mut effects: Vec<(String, Vec<Rational>)> = Vec::new();
    let push = |list: &mut Vec<(String, Vec<Rational>)>, id: String, v: Vec<Rational>| {
        if !list.iter().any(|(_, w)| *w == v) {
            list.push((id, v));
        }
    };
    for e in theory.events() {
        if e.input.is_trivial() && e.output == sys {
            push(&mut states, e.id.clone(), e.matrix.entries().to_vec());
        } else if e.input == sys && e.output.is_trivial() {
            push(&mut effects, e.id.clone(), e.matrix.entries().to_vec());
        }
    }
    for i in 0..n {
        let v: Vec<Rational> = (0..n)
            .map(|k| if k == i { Rational::one() } else { Rational::zero() })
            .collect();
        push(&mut states, format!("δ{}", i + 1), v.clone());
        push(&mut effects, format!("π{}", i + 1), v);
    }
    let unit = vec![Rational::one(); n];
    push(&mut effects, "u".into(), unit.clone());
    let (state_labels, state_vecs): (Vec<_>, Vec<_>) = states.into_iter().unzip();
    let (effect_labels, effect_vecs): (Vec<_>, Vec<_>) = effects.into_iter().unzip();
    GptFragment::new(n, state_vecs, effect_vecs, unit)?.with_labels(state_labels, effect_labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{compose_seq, OutcomeSet};
    use crate::rational::ratio;

    fn labeled() -> Theory {
        let mut th = Theory::new(TheoryKind::LabeledClassical);
        let a = th.add_system("A", 2).unwrap();
        let m = Matrix::from_ratios(&[&[(1, 2), (0, 1)], &[(0, 1), (1, 2)]]);
        for (i, tag) in ["lab1", "lab2"].iter().enumerate() {
            let e1 = Event::new(format!("h{i}"), a.clone(), a.clone(), m.clone()).tagged(*tag);
            let e2 = Event::new(format!("g{i}"), a.clone(), a.clone(), m.clone()).tagged(format!("{tag}'"));
            th.add_event(e1).unwrap();
            th.add_event(e2).unwrap();
            th.add_test(format!("T{i}"), &a, &a, OutcomeSet::numbered(2), &[&format!("h{i}"), &format!("g{i}")])
                .unwrap();
        }
        th
    }

    #[test]
    fn tags_are_ignored_by_equivalence() {
        let th = labeled();
        let (h0, h1) = (th.event("h0").unwrap(), th.event("h1").unwrap());
        assert!(equivalent(&th, h0, h1).unwrap());
        assert_ne!(h0, h1);
        let mut other = h1.clone();
        other.matrix = Matrix::identity(2);
        assert!(!equivalent(&th, h0, &other).unwrap());
    }

    #[test]
    fn quotient_halves_tagged_copies() {
        let th = labeled();
        let q = quotient_theory(&th).unwrap();
        assert_eq!(th.events().len(), 4);
        assert_eq!(q.target().events().len(), 1);
        assert_eq!(q.classes()[0].members, vec!["h0", "g0", "h1", "g1"]);
        let t0 = q.target().test("T0").unwrap();
        let t1 = q.target().test("T1").unwrap();
        assert_eq!(t0, t1);
        assert!(t0.events().iter().all(|e| e.context.is_none()));
    }

    #[test]
    fn quotient_commutes_with_composition() {
        let th = labeled();
        let q = quotient_theory(&th).unwrap();
        let (t0, t1) = (th.test("T0").unwrap(), th.test("T1").unwrap());
        let lhs = q.map_test(&compose_seq(t0, t1).unwrap()).unwrap();
        let rhs = compose_seq(&q.map_test(t0).unwrap(), &q.map_test(t1).unwrap()).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn dimensions() {
        assert_eq!(fragment_dimension(&GptFragment::simplex(4).unwrap()), 4);
        let states = vec![
            vec![ratio(1, 1), ratio(0, 1)],
            vec![ratio(0, 1), ratio(1, 1)],
            vec![ratio(1, 2), ratio(1, 2)],
        ];
        let effects = vec![vec![ratio(1, 1), ratio(0, 1)], vec![ratio(0, 1), ratio(1, 1)]];
        let f = GptFragment::new(2, states, effects, vec![ratio(1, 1), ratio(1, 1)]).unwrap();
        assert_eq!(fragment_dimension(&f), 2);
    }

    #[test]
    fn fragment_of_a_classical_system() {
        let mut th = Theory::new(TheoryKind::Classical);
        let a = th.add_system("A", 3).unwrap();
        let i = th.trivial();
        let s = Event::new("s", i.clone(), a.clone(), Matrix::column(vec![ratio(1, 2), ratio(1, 2), ratio(0, 1)]));
        th.register_test(Test::singleton(s).unwrap().with_id("P")).unwrap();
        let f = fragment_from_theory(&th, "A").unwrap();
        assert_eq!(f.states().len(), 4);
        assert_eq!(f.effects().len(), 4);
        assert_eq!(f.state_labels()[0], "s");
        assert_eq!(fragment_dimension(&f), 3);
    }
}
