//! Conditional tests, strong causality and convex combinations.

use num_traits::{One, Signed, Zero};
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::backend::Backend;
use crate::calculus::{compose_par, identity_test, seq_event, Event, Outcome, OutcomeSet, SystemRef, Test};
use crate::coarse::{coarse_grain, Partition};
use crate::error::{OptError, Result};
use crate::matrix::Matrix;
use crate::random::{random_test, trial_rng, DEFAULT_DENOMINATOR};
use crate::rational::Rational;

/// A base test `A_X` and one branch test `B^(x)` per outcome `x`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConditionalSpec {
    base: Test,
    branches: Vec<Test>,
}

impl ConditionalSpec {
    pub fn new(base: Test, branches: Vec<Test>) -> Result<Self> {
        if branches.len() != base.len() {
            return Err(OptError::ShapeMismatch(format!(
                "{} branches for {} outcomes",
                branches.len(),
                base.len()
            )));
        }
        let output = branches[0].output().clone();
        for b in &branches {
            if b.theory() != base.theory() {
                return Err(OptError::TheoryMismatch);
            }
            if b.input() != base.output() || *b.output() != output {
                return Err(OptError::SystemMismatch {
                    expected: format!("{}->{}", base.output(), output),
                    found: format!("{}->{} (branch `{}`)", b.input(), b.output(), b.id),
                });
            }
        }
        Ok(Self { base, branches })
    }

    /// Every branch the same test.
    pub fn uniform(base: Test, branch: &Test) -> Result<Self> {
        let n = base.len();
        Self::new(base, vec![branch.clone(); n])
    }

    pub fn base(&self) -> &Test {
        &self.base
    }

    pub fn branches(&self) -> &[Test] {
        &self.branches
    }

    /// Apply `f` to the base and to every branch.
    pub fn map_tests(&self, mut f: impl FnMut(&Test) -> Result<Test>) -> Result<ConditionalSpec> {
        let base = f(&self.base)?;
        let branches = self.branches.iter().map(&mut f).collect::<Result<Vec<_>>>()?;
        ConditionalSpec::new(base, branches)
    }
}

/// `[B^(x)] ▷ A_X` without consulting a backend.
pub fn condition_unchecked(spec: &ConditionalSpec) -> Result<Test> {
    let base = spec.base();
    let mut labels = Vec::new();
    let mut events = Vec::new();
    for ((x, a), branch) in base.outcomes().labels().iter().zip(base.events()).zip(spec.branches()) {
        for (y, b) in branch.outcomes().labels().iter().zip(branch.events()) {
            labels.push(Outcome::pair(x, y));
            events.push(seq_event(a, b)?);
        }
    }
    let output = spec.branches()[0].output().clone();
    Test::new(
        format!("{}▷{}", spec.branches()[0].id, base.id),
        base.input().clone(),
        output,
        OutcomeSet::new(labels)?,
        events,
    )
}

/// `[B^(x)] ▷ A_X`, accepted only if the backend validates the family.
pub fn condition(backend: &dyn Backend, spec: &ConditionalSpec) -> Result<Test> {
    let t = condition_unchecked(spec)?;
    backend.revalidate(&t)?;
    Ok(t)
}

/// A conditional family the backend rejected.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterexample {
    pub seed: u64,
    pub trial: u64,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StrongCausalityReport {
    pub trials: u64,
    pub seed: u64,
    pub counterexamples: Vec<Counterexample>,
}

impl StrongCausalityReport {
    pub fn passed(&self) -> bool {
        self.counterexamples.is_empty()
    }
}

/// Samples conditional specs and reports every family the backend rejects.
///
/// Base and branch tests come from the registry or are synthesized with
/// entries of denominator 16 on registered systems.
pub fn check_strong_causality(backend: &dyn Backend, trials: u64, seed: u64) -> StrongCausalityReport {
    let counterexamples: Vec<Counterexample> = (0..trials)
        .into_par_iter()
        .filter_map(|trial| {
            let mut rng = trial_rng(seed, trial);
            let spec = match sample_spec(backend, &mut rng) {
                Ok(spec) => spec,
                Err(e) => {
                    return Some(Counterexample {
                        seed,
                        trial,
                        detail: format!("sampling failed: {e}"),
                    })
                }
            };
            let labels: Vec<String> = spec.branches().iter().map(|b| b.id.clone()).collect();
            condition(backend, &spec).err().map(|e| Counterexample {
                seed,
                trial,
                detail: format!("[{}] ▷ {}: {e}", labels.join(", "), spec.base().id),
            })
        })
        .collect();
    StrongCausalityReport {
        trials,
        seed,
        counterexamples,
    }
}

fn systems_of(backend: &dyn Backend) -> Vec<SystemRef> {
    let th = backend.theory();
    let mut out = th.atom_systems();
    for t in th.tests() {
        for s in [t.input(), t.output()] {
            if !out.contains(s) {
                out.push(s.clone());
            }
        }
    }
    if out.is_empty() {
        out.push(th.trivial());
    }
    out
}

/// Draws a registered test with the given systems (or any, if `None`) or
/// synthesizes one.
fn draw_test<R: Rng>(
    backend: &dyn Backend,
    rng: &mut R,
    input: Option<&SystemRef>,
    output: Option<&SystemRef>,
    id: &str,
) -> Test {
    let systems = systems_of(backend);
    let candidates: Vec<&Test> = backend
        .theory()
        .tests()
        .iter()
        .filter(|t| input.map_or(true, |s| t.input() == s) && output.map_or(true, |s| t.output() == s))
        .collect();
    if !candidates.is_empty() && rng.gen_bool(0.5) {
        return (*candidates.choose(rng).unwrap()).clone();
    }
    let input = input.cloned().unwrap_or_else(|| systems.choose(rng).unwrap().clone());
    let output = output.cloned().unwrap_or_else(|| systems.choose(rng).unwrap().clone());
    let n = rng.gen_range(1..=3);
    random_test(rng, id, &input, &output, n, DEFAULT_DENOMINATOR)
}

fn sample_spec<R: Rng>(backend: &dyn Backend, rng: &mut R) -> Result<ConditionalSpec> {
    let base = draw_test(backend, rng, None, None, "A");
    let first = draw_test(backend, rng, Some(base.output()), None, "B1");
    let out = first.output().clone();
    let mut branches = vec![first];
    for k in 1..base.len() {
        branches.push(draw_test(backend, rng, Some(base.output()), Some(&out), &format!("B{}", k + 1)));
    }
    ConditionalSpec::new(base, branches)
}

/// `Σ_x p_x D^(x)`, built as `[D^(x)] ▷ (P_X ⊠ I)` and coarse-grained over
/// `X`.
pub fn convex_combination(backend: &dyn Backend, p: &[Rational], tests: &[Test]) -> Result<Test> {
    if p.len() != tests.len() || tests.is_empty() {
        return Err(OptError::ShapeMismatch(format!(
            "{} weights for {} tests",
            p.len(),
            tests.len()
        )));
    }
    if p.iter().any(Signed::is_negative) || !p.iter().fold(Rational::zero(), |a, b| a + b).is_one() {
        return Err(OptError::WeightsNotNormalized);
    }
    let first = &tests[0];
    for t in tests {
        if t.input() != first.input() || t.output() != first.output() || t.outcomes() != first.outcomes() {
            return Err(OptError::ShapeMismatch(format!(
                "`{}` and `{}` differ in systems or outcomes",
                first.id, t.id
            )));
        }
    }
    let trivial = SystemRef::trivial(first.theory());
    let weights = p
        .iter()
        .enumerate()
        .map(|(k, w)| Event::new(format!("p{}", k + 1), trivial.clone(), trivial.clone(), Matrix::scalar(w.clone())))
        .collect();
    let dist = Test::new("P", trivial.clone(), trivial, OutcomeSet::numbered(p.len()), weights)?;
    let prepared = compose_par(&dist, &identity_test(first.input()))?;
    let spec = ConditionalSpec::new(prepared, tests.to_vec())?;
    let joint = condition(backend, &spec)?;
    let ny = first.len();
    let blocks = first
        .outcomes()
        .labels()
        .iter()
        .enumerate()
        .map(|(y, label)| ((0..p.len()).map(|x| x * ny + y).collect(), label.clone()))
        .collect();
    let part = Partition::with_labels(joint.outcomes().clone(), blocks)?;
    Ok(coarse_grain(&joint, &part)?.with_id(format!("mix({})", first.id)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::{deterministic_effect, Theory, TheoryKind};
    use crate::calculus::compose_seq;
    use crate::coarse::full_coarse_grain;
    use crate::rational::{int, ratio};

    fn setup() -> (Theory, SystemRef, SystemRef) {
        let mut th = Theory::new(TheoryKind::Classical);
        let a = th.add_system("A", 2).unwrap();
        let b = th.add_system("B", 3).unwrap();
        (th, a, b)
    }

    #[test]
    fn identity_branches_give_the_base() {
        let (th, a, b) = setup();
        let t = random_test(&mut trial_rng(0, 0), "T", &a, &b, 3, 16);
        let spec = ConditionalSpec::uniform(t.clone(), &identity_test(&b)).unwrap();
        let c = condition(&th, &spec).unwrap();
        assert_eq!(c.outcomes(), t.outcomes());
        assert!(c.same_payloads(&t));
    }

    #[test]
    fn conditional_events_are_products() {
        let (th, a, b) = setup();
        let mut rng = trial_rng(1, 0);
        let base = random_test(&mut rng, "A", &a, &b, 2, 16);
        let b1 = random_test(&mut rng, "B1", &b, &a, 2, 16);
        let b2 = random_test(&mut rng, "B2", &b, &a, 3, 16);
        let spec = ConditionalSpec::new(base.clone(), vec![b1.clone(), b2.clone()]).unwrap();
        let c = condition(&th, &spec).unwrap();
        assert_eq!(c.len(), 5);
        assert_eq!(c.event(1).matrix, b1.event(1).matrix.mul(&base.event(0).matrix).unwrap());
        assert_eq!(c.event(4).matrix, b2.event(2).matrix.mul(&base.event(1).matrix).unwrap());
        assert_eq!(c.outcomes().labels()[4].to_string(), "(2,3)");
        // marginal over the later outcomes equals post-discarding the base
        let u = Test::singleton(deterministic_effect(&a)).unwrap();
        let lhs = compose_seq(&coarse_grain(&c, &group_by_x(&c, &[2, 3])).unwrap(), &u).unwrap();
        let rhs = compose_seq(&base, &compose_seq(&full_coarse_grain(&b1).unwrap(), &u).unwrap()).unwrap();
        assert!(lhs.matrices().eq(rhs.matrices()));
    }

    fn group_by_x(c: &Test, sizes: &[usize]) -> Partition {
        let mut blocks = Vec::new();
        let mut start = 0;
        for &s in sizes {
            blocks.push((start..start + s).collect());
            start += s;
        }
        Partition::new(c.outcomes().clone(), blocks).unwrap()
    }

    #[test]
    fn singleton_base_matches_sequential_composition() {
        let (th, a, b) = setup();
        let mut rng = trial_rng(2, 0);
        let base = random_test(&mut rng, "A", &a, &b, 1, 16);
        let br = random_test(&mut rng, "B", &b, &a, 3, 16);
        let spec = ConditionalSpec::new(base.clone(), vec![br.clone()]).unwrap();
        let c = condition(&th, &spec).unwrap();
        let s = compose_seq(&base, &br).unwrap();
        assert_eq!(c, s);
    }

    #[test]
    fn classical_theory_is_strongly_causal() {
        let (mut th, a, b) = setup();
        let t = random_test(&mut trial_rng(3, 0), "T", &a, &b, 2, 16);
        th.register_test(t).unwrap();
        let r = check_strong_causality(&th, 64, 11);
        assert!(r.passed(), "{:?}", r.counterexamples);
        assert!(check_strong_causality(&th, 0, 11).counterexamples.is_empty());
    }

    struct RejectsLongFamilies(Theory);

    impl Backend for RejectsLongFamilies {
        fn theory(&self) -> &Theory {
            &self.0
        }
        fn check_family(&self, input: &SystemRef, output: &SystemRef, events: &[Event]) -> Result<()> {
            if events.len() == 6 {
                return Err(OptError::NotAnInstrument("six-outcome families are rejected".into()));
            }
            self.0.check_family(input, output, events)
        }
    }

    #[test]
    fn rejected_family_is_reported() {
        let (mut th, a, b) = setup();
        let mut rng = trial_rng(4, 0);
        th.register_test(random_test(&mut rng, "T", &a, &b, 2, 16)).unwrap();
        th.register_test(random_test(&mut rng, "U", &b, &a, 3, 16)).unwrap();
        let backend = RejectsLongFamilies(th);
        let r = check_strong_causality(&backend, 200, 5);
        assert!(!r.passed());
        assert!(r.counterexamples.iter().all(|c| c.detail.contains("six-outcome")));
        assert_eq!(r, check_strong_causality(&backend, 200, 5));
    }

    #[test]
    fn convex_combinations() {
        let (th, a, _) = setup();
        let mut rng = trial_rng(5, 0);
        let t1 = random_test(&mut rng, "T1", &a, &a, 2, 16);
        let t2 = random_test(&mut rng, "T2", &a, &a, 2, 16);
        let mix = convex_combination(&th, &[int(1), int(0)], &[t1.clone(), t2.clone()]).unwrap();
        assert_eq!(mix, t1);
        let w = [ratio(1, 3), ratio(2, 3)];
        let mix = convex_combination(&th, &w, &[t1.clone(), t2.clone()]).unwrap();
        for y in 0..2 {
            let expect = t1.event(y).matrix.scale(&w[0]).add(&t2.event(y).matrix.scale(&w[1])).unwrap();
            assert_eq!(mix.event(y).matrix, expect);
        }
        assert_eq!(mix.outcomes(), t1.outcomes());
        let same = convex_combination(&th, &w, &[t1.clone(), t1.clone()]).unwrap();
        assert_eq!(same, t1);
        assert_eq!(
            convex_combination(&th, &[ratio(1, 2), ratio(1, 3)], &[t1.clone(), t2]),
            Err(OptError::WeightsNotNormalized)
        );
    }
}
