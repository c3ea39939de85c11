//! Collapse of conditional pairs and the noncontextuality it forces.
//!
//! For two tests `T`, `T'` sharing an event `t*`, with remainders `w`, `w'`
//! and a deterministic state `S`, the conditional pair is
//! `C_T = [t*, D_S ∘ w]` and `C_T' = [t*, D_S ∘ w']`.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::backend::{basis_state, discard_prepare, Backend, Theory, TheoryKind};
use crate::calculus::{identity_test, seq_event, Event, OutcomeSet, SystemRef, Test};
use crate::coarse::merge_events;
use crate::conditioning::{condition, condition_unchecked, ConditionalSpec};
use crate::error::{OptError, Result};
use crate::matrix::Matrix;
use crate::ontmodel::{
    check_cg_preservation_on, check_cond_preservation_on, check_diagram_preservation_on,
    check_outcome_preservation_on, OntModel,
};
use crate::random::{composition, random_family, random_state, trial_rng, DEFAULT_DENOMINATOR};
use crate::rational::{ratio, zero, Rational};
use crate::report::CheckReport;

/// Two tests of the same type with one event in common.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SharedPair {
    pub t_star: Event,
    pub t: Test,
    pub t_prime: Test,
    pub star_index: usize,
    pub star_index_prime: usize,
    /// `⋎` of the events of `t` other than `t*`.
    pub w: Event,
    pub w_prime: Event,
    pub discard_state: Event,
}

fn remainder(t: &Test, index: usize) -> Result<Event> {
    let rest: Vec<&Event> = t.events().iter().enumerate().filter(|(k, _)| *k != index).map(|(_, e)| e).collect();
    if rest.is_empty() {
        return Err(OptError::TooFewOutcomes);
    }
    merge_events(&rest)
}

impl SharedPair {
    pub fn new(t: Test, star_index: usize, t_prime: Test, star_index_prime: usize, discard_state: Event) -> Result<Self> {
        if t.theory() != t_prime.theory() {
            return Err(OptError::TheoryMismatch);
        }
        if t.input() != t_prime.input() || t.output() != t_prime.output() {
            return Err(OptError::SystemMismatch {
                expected: format!("{}->{}", t.input(), t.output()),
                found: format!("{}->{}", t_prime.input(), t_prime.output()),
            });
        }
        if t.len() < 2 || t_prime.len() < 2 {
            return Err(OptError::TooFewOutcomes);
        }
        if star_index >= t.len() || star_index_prime >= t_prime.len() {
            return Err(OptError::ShapeMismatch("shared outcome index out of range".into()));
        }
        if t.event(star_index) != t_prime.event(star_index_prime) {
            return Err(OptError::ShapeMismatch(format!(
                "`{}` and `{}` do not share the marked event",
                t.id, t_prime.id
            )));
        }
        if !discard_state.input.is_trivial()
            || discard_state.output != *t.output()
            || !discard_state.matrix.is_stochastic()
        {
            return Err(OptError::NotDeterministicState(discard_state.id.clone()));
        }
        Ok(Self {
            t_star: t.event(star_index).clone(),
            w: remainder(&t, star_index)?,
            w_prime: remainder(&t_prime, star_index_prime)?,
            t,
            t_prime,
            star_index,
            star_index_prime,
            discard_state,
        })
    }

    /// `S` defaults to the first basis point of the output.
    pub fn with_default_state(t: Test, star_index: usize, t_prime: Test, star_index_prime: usize) -> Result<Self> {
        let s = basis_state(t.output(), 0);
        Self::new(t, star_index, t_prime, star_index_prime, s)
    }

    pub fn discard(&self) -> Result<Event> {
        discard_prepare(self.t.output(), &self.discard_state)
    }

    fn canonical_binary(&self, prime: bool) -> Result<Test> {
        let (t, w) = if prime { (&self.t_prime, &self.w_prime) } else { (&self.t, &self.w) };
        Test::new(
            format!("𝔅({})", t.id),
            t.input().clone(),
            t.output().clone(),
            OutcomeSet::from_atoms(&["1", "rest"])?,
            vec![self.t_star.clone(), w.clone()],
        )
    }

    /// `[I_B, D_S] ▷ 𝔅(T)`, or the same for `T'`.
    pub fn conditional_spec(&self, prime: bool) -> Result<ConditionalSpec> {
        let out = self.t.output();
        ConditionalSpec::new(
            self.canonical_binary(prime)?,
            vec![identity_test(out), Test::singleton(self.discard()?)?],
        )
    }
}

/// `(C_T, C_T')`, each validated by the backend.
pub fn build_conditional_pair(backend: &dyn Backend, p: &SharedPair) -> Result<(Test, Test)> {
    let c = condition(backend, &p.conditional_spec(false)?)?.with_id("C_T");
    let cp = condition(backend, &p.conditional_spec(true)?)?.with_id("C_T'");
    Ok((c, cp))
}

/// Verdicts of the collapse argument for one pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CollapseReport {
    /// `t* ⋎ w` and `t* ⋎ w'` are deterministic.
    pub deterministic: bool,
    /// `D_S ∘ w = D_S ∘ w'` as events.
    pub discard_equal: bool,
    /// `C_T = C_T'` as tests.
    pub conditional_equal: bool,
    /// `C_T` and `C_T'` have the same matrices.
    pub equivalent: bool,
}

impl CollapseReport {
    pub fn passed(&self) -> bool {
        self.deterministic && self.discard_equal && self.conditional_equal
    }
}

pub fn verify_collapse(backend: &dyn Backend, p: &SharedPair) -> Result<CollapseReport> {
    let full = |w: &Event| p.t_star.matrix.add(&w.matrix).map(|m| m.is_stochastic());
    let deterministic = full(&p.w)? && full(&p.w_prime)?;
    let ds = p.discard()?;
    let discard_equal = seq_event(&p.w, &ds)? == seq_event(&p.w_prime, &ds)?;
    let (c, cp) = build_conditional_pair(backend, p)?;
    Ok(CollapseReport {
        deterministic,
        discard_equal,
        conditional_equal: c == cp,
        equivalent: c.same_payloads(&cp),
    })
}

/// Checks `ξ(t*|T) = ξ(t*|T')` along the chain through `m(C_T) = m(C_T')`.
///
/// The model must first pass outcome, diagram, coarse-graining and
/// conditioning preservation on `T`, `T'` and the two conditional specs;
/// otherwise, or if the source is unquotiented, the result is
/// `AxiomPrereqFailed`.
pub fn verify_model_noncontext(p: &SharedPair, m: &OntModel, trials: u64, seed: u64) -> Result<CheckReport> {
    if !m.source().is_quotiented() {
        return Err(OptError::AxiomPrereqFailed("the source theory is not quotiented".into()));
    }
    if p.t.theory() != m.source().id() {
        return Err(OptError::TheoryMismatch);
    }
    let pool = [p.t.clone(), p.t_prime.clone()];
    let mut failed: Vec<String> = [
        check_outcome_preservation_on(m, &pool),
        check_diagram_preservation_on(m, &pool, trials, seed),
        check_cg_preservation_on(m, &pool, trials, seed),
        check_cond_preservation_on(m, &pool, trials, seed),
    ]
    .into_iter()
    .filter(|r| !r.passed())
    .map(|r| r.check)
    .collect();
    let specs = [p.conditional_spec(false)?, p.conditional_spec(true)?];
    let mut images = Vec::with_capacity(2);
    for spec in &specs {
        let lhs = condition(m.source(), spec).and_then(|c| m.map_test(&c));
        let rhs = spec.map_tests(|t| m.map_test(t)).and_then(|s| condition_unchecked(&s));
        match (lhs, rhs) {
            (Ok(a), Ok(b)) if a == b => images.push(a),
            _ => {
                if !failed.iter().any(|f| f == "cond") {
                    failed.push("cond".into());
                }
            }
        }
    }
    if !failed.is_empty() {
        return Err(OptError::AxiomPrereqFailed(format!("{} preservation fails", failed.join(", "))));
    }

    let mut r = CheckReport::new("lemma", Some(seed), trials);
    let xi = m.map_test(&p.t)?.event(p.star_index).matrix.clone();
    let xi_prime = m.map_test(&p.t_prime)?.event(p.star_index_prime).matrix.clone();
    for (img, (x, name)) in images.iter().zip([(&xi, "T"), (&xi_prime, "T'")]) {
        r.expect(
            img.event(0).matrix == *x,
            None,
            format!("m(C_{name}) first outcome"),
            format!("{:?} vs ξ(t*|{name}) = {x:?}", img.event(0).matrix),
        );
    }
    r.expect(
        images[0] == images[1],
        None,
        "m(C_T) = m(C_T')",
        format!("{:?} vs {:?}", images[0], images[1]),
    );
    r.expect(xi == xi_prime, None, "ξ(t*|T) = ξ(t*|T')", format!("{xi:?} vs {xi_prime:?}"));
    Ok(r)
}

/// `k - 1` remainder matrices whose column sums equal `target`.
fn remainder_family<R: Rng>(rng: &mut R, target: &[Rational], rows: usize, k: usize) -> Vec<Matrix> {
    let den = DEFAULT_DENOMINATOR;
    let mut family = vec![Matrix::zeros(rows, target.len()); k];
    for (c, r) in target.iter().enumerate() {
        let units = (r * Rational::from_integer(den.into())).to_integer();
        let units: u32 = units.try_into().expect("entries on the 1/16 grid");
        for (slot, u) in composition(rng, units, rows * k).into_iter().enumerate() {
            family[slot / rows].set(slot % rows, c, ratio(u as i64, den as i64));
        }
    }
    family
}

fn assemble(id: &str, sys: (&SystemRef, &SystemRef), star: &Event, rest: Vec<Matrix>, at: usize) -> Result<Test> {
    let (input, output) = sys;
    let mut events: Vec<Event> = rest
        .into_iter()
        .enumerate()
        .map(|(k, m)| Event::new(format!("{id}.{}", k + 1), input.clone(), output.clone(), m))
        .collect();
    events.insert(at, star.clone());
    let n = events.len();
    Test::new(id, input.clone(), output.clone(), OutcomeSet::numbered(n), events)
}

/// `n` random pairs `input → output` of the classical theory.
///
/// `T` is a family of 2 to 4 events whose first draw is `t*`; `T'` puts
/// `t*` next to a fresh remainder with the same column sums. Identical
/// pairs are redrawn.
pub fn generate_shared_pairs(
    theory: &Theory,
    input: &SystemRef,
    output: &SystemRef,
    n: usize,
    seed: u64,
) -> Result<Vec<SharedPair>> {
    if theory.kind() != TheoryKind::Classical {
        return Err(OptError::AxiomPrereqFailed("pairs are generated in a classical theory".into()));
    }
    if !theory.owns(input) || !theory.owns(output) {
        return Err(OptError::TheoryMismatch);
    }
    (0..n as u64)
        .map(|i| {
            let mut rng = trial_rng(seed, i);
            loop {
                let k = rng.gen_range(2..=4);
                let mut fam = random_family(&mut rng, output.size(), input.size(), k, DEFAULT_DENOMINATOR);
                let star = Event::new(format!("t*{i}"), input.clone(), output.clone(), fam.remove(0));
                let rest_sums: Vec<Rational> = Matrix::sum(&fam)?.column_sums();
                let kp = rng.gen_range(2..=4);
                let fam_prime = remainder_family(&mut rng, &rest_sums, output.size(), kp - 1);
                let (at, at_prime) = (rng.gen_range(0..k), rng.gen_range(0..kp));
                let t = assemble(&format!("T{i}"), (input, output), &star, fam, at)?;
                let tp = assemble(&format!("T'{i}"), (input, output), &star, fam_prime, at_prime)?;
                if t.same_payloads(&tp) {
                    continue;
                }
                theory.revalidate(&t)?;
                theory.revalidate(&tp)?;
                let mut s = random_state(&mut rng, output, DEFAULT_DENOMINATOR);
                s.id = format!("S{i}");
                return SharedPair::new(t, at, tp, at_prime, s);
            }
        })
        .collect()
}

/// The same pair in a labeled theory: `t*` tagged `shared`, the other
/// events of `T` tagged `a1, a2, …` and those of `T'` tagged `b1, b2, …`.
pub fn label_pair(labeled: &Theory, p: &SharedPair) -> Result<SharedPair> {
    if labeled.kind() != TheoryKind::LabeledClassical {
        return Err(OptError::TheoryMismatch);
    }
    let rebind = |s: &SystemRef| -> Result<SystemRef> {
        let labels: Vec<String> = s.components().iter().map(|a| a.label.clone()).collect();
        let r = labeled.system_from_labels(&labels)?;
        if r.size() != s.size() {
            return Err(OptError::UnknownSystem(s.label()));
        }
        Ok(r)
    };
    let (input, output) = (rebind(p.t.input())?, rebind(p.t.output())?);
    let tag = |t: &Test, star: usize, prefix: &str| -> Result<Test> {
        let mut k = 0;
        let events = t
            .events()
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let e = Event::new(e.id.clone(), input.clone(), output.clone(), e.matrix.clone());
                if i == star {
                    e.tagged("shared")
                } else {
                    k += 1;
                    e.tagged(format!("{prefix}{k}"))
                }
            })
            .collect();
        Test::new(t.id.clone(), input.clone(), output.clone(), t.outcomes().clone(), events)
    };
    let t = tag(&p.t, p.star_index, "a")?;
    let tp = tag(&p.t_prime, p.star_index_prime, "b")?;
    let s = Event::new(p.discard_state.id.clone(), labeled.trivial(), output.clone(), p.discard_state.matrix.clone())
        .tagged("S");
    SharedPair::new(t, p.star_index, tp, p.star_index_prime, s)
}

/// Every pair of registered tests sharing an event, with the default `S`.
pub fn registered_shared_pairs(theory: &Theory) -> Vec<SharedPair> {
    let tests = theory.tests();
    let mut out = Vec::new();
    for (a, t) in tests.iter().enumerate() {
        for tp in &tests[a + 1..] {
            if t.input() != tp.input() || t.output() != tp.output() || t.len() < 2 || tp.len() < 2 {
                continue;
            }
            let shared = t
                .events()
                .iter()
                .enumerate()
                .find_map(|(i, e)| tp.events().iter().position(|f| f == e).map(|j| (i, j)));
            if let Some((i, j)) = shared {
                if let Ok(p) = SharedPair::with_default_state(t.clone(), i, tp.clone(), j) {
                    out.push(p);
                }
            }
        }
    }
    out
}

/// A contextual variant of `model`: inside the image of `T`, a positive
/// amount is moved between the image of `t*` and that of another event.
/// Both images stay valid instruments; `ξ(t*|T)` changes while `ξ(t*|T')`
/// does not.
pub fn contextual_perturbation<R: Rng>(model: &OntModel, p: &SharedPair, rng: &mut R) -> Result<OntModel> {
    let img = model.map_test(&p.t)?;
    let mut matrices: Vec<Matrix> = img.matrices().cloned().collect();
    let s = p.star_index;
    let mut moves = Vec::new();
    for j in (0..matrices.len()).filter(|&j| j != s) {
        let (rows, cols) = matrices[s].shape();
        for r in 0..rows {
            for c in 0..cols {
                for (from, to) in [(s, j), (j, s)] {
                    if *matrices[from].get(r, c) > zero() {
                        moves.push((from, to, r, c));
                    }
                }
            }
        }
    }
    let &(from, to, r, c) = moves
        .choose(rng)
        .ok_or_else(|| OptError::ShapeMismatch("the image of T leaves no room to move weight".into()))?;
    let available = matrices[from].get(r, c).clone();
    let delta = available * ratio(rng.gen_range(1..=4), 4);
    let lowered = matrices[from].get(r, c) - &delta;
    matrices[from].set(r, c, lowered);
    let raised = matrices[to].get(r, c) + &delta;
    matrices[to].set(r, c, raised);
    model.clone().with_override(&p.t, matrices)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontmodel::{check_cg_preservation_on, check_cond_preservation_on};

    fn setup() -> (Theory, SystemRef, SystemRef) {
        let th = Theory::classical(&[("A", 3), ("B", 3)]).unwrap();
        let (a, b) = (th.system("A").unwrap(), th.system("B").unwrap());
        (th, a, b)
    }

    fn hand_pair(th: &Theory) -> SharedPair {
        let a = th.system("A").unwrap();
        let star = Event::new("t*", a.clone(), a.clone(), Matrix::from_ratios(&[&[(1, 2), (0, 1), (0, 1)], &[(0, 1), (1, 4), (0, 1)], &[(0, 1), (0, 1), (0, 1)]]));
        let w = Matrix::from_ratios(&[&[(1, 2), (0, 1), (1, 1)], &[(0, 1), (3, 4), (0, 1)], &[(0, 1), (0, 1), (0, 1)]]);
        let t = Test::new(
            "T",
            a.clone(),
            a.clone(),
            OutcomeSet::numbered(2),
            vec![star.clone(), Event::new("t2", a.clone(), a.clone(), w)],
        )
        .unwrap();
        let w1 = Matrix::from_ratios(&[&[(1, 4), (0, 1), (1, 2)], &[(0, 1), (0, 1), (0, 1)], &[(0, 1), (1, 2), (0, 1)]]);
        let w2 = Matrix::from_ratios(&[&[(0, 1), (0, 1), (0, 1)], &[(0, 1), (1, 4), (1, 2)], &[(1, 4), (0, 1), (0, 1)]]);
        let tp = Test::new(
            "T'",
            a.clone(),
            a.clone(),
            OutcomeSet::numbered(3),
            vec![star, Event::new("t2'", a.clone(), a.clone(), w1), Event::new("t3'", a.clone(), a.clone(), w2)],
        )
        .unwrap();
        SharedPair::with_default_state(t, 0, tp, 0).unwrap()
    }

    #[test]
    fn hand_built_pair_collapses() {
        let (th, _, _) = setup();
        let p = hand_pair(&th);
        let (c, cp) = build_conditional_pair(&th, &p).unwrap();
        // D_S ∘ w with S = δ0: all mass of each column of w moves to point 0.
        let col = w_col_sums(&p.w);
        let expected = Matrix::from_rows(vec![col, vec![zero(); 3], vec![zero(); 3]]).unwrap();
        assert_eq!(c.event(1).matrix, expected);
        assert_eq!(c, cp);
        assert_eq!(c.outcomes().labels().iter().map(|l| l.to_string()).collect::<Vec<_>>(), ["1", "rest"]);
        let r = verify_collapse(&th, &p).unwrap();
        assert!(r.passed() && r.equivalent);
    }

    fn w_col_sums(w: &Event) -> Vec<Rational> {
        w.matrix.column_sums()
    }

    #[test]
    fn identical_tests_give_identical_pairs() {
        let (th, _, _) = setup();
        let p = hand_pair(&th);
        let same = SharedPair::with_default_state(p.t.clone(), 0, p.t.clone(), 0).unwrap();
        let (c, cp) = build_conditional_pair(&th, &same).unwrap();
        assert_eq!(c, cp);
    }

    #[test]
    fn pair_validation() {
        let (th, a, b) = setup();
        let p = hand_pair(&th);
        assert!(matches!(
            SharedPair::with_default_state(p.t.clone(), 0, p.t_prime.clone(), 1),
            Err(OptError::ShapeMismatch(_))
        ));
        let single = Test::singleton(Event::new("i", a.clone(), a.clone(), Matrix::identity(3))).unwrap();
        assert_eq!(
            SharedPair::with_default_state(single.clone(), 0, single, 0).unwrap_err(),
            OptError::TooFewOutcomes
        );
        let bad_state = Event::new("s", th.trivial(), b, Matrix::column(vec![ratio(1, 2), zero(), zero()]));
        assert!(matches!(
            SharedPair::new(p.t.clone(), 0, p.t_prime.clone(), 0, bad_state),
            Err(OptError::NotDeterministicState(_))
        ));
    }

    #[test]
    fn generated_pairs_validate_and_collapse() {
        let (th, a, b) = setup();
        let pairs = generate_shared_pairs(&th, &a, &b, 30, 11).unwrap();
        assert_eq!(pairs.len(), 30);
        assert_eq!(pairs, generate_shared_pairs(&th, &a, &b, 30, 11).unwrap());
        assert!(generate_shared_pairs(&th, &a, &b, 0, 11).unwrap().is_empty());
        for p in &pairs {
            assert!(!p.t.same_payloads(&p.t_prime));
            assert!(verify_collapse(&th, p).unwrap().passed());
        }
    }

    #[test]
    fn labeled_pairs_are_equivalent_but_distinct() {
        let (th, a, b) = setup();
        let mut lab = Theory::new(TheoryKind::LabeledClassical);
        lab.add_system("A", 3).unwrap();
        lab.add_system("B", 3).unwrap();
        for p in generate_shared_pairs(&th, &a, &b, 10, 5).unwrap() {
            let lp = label_pair(&lab, &p).unwrap();
            let r = verify_collapse(&lab, &lp).unwrap();
            assert!(r.deterministic && r.equivalent);
            assert!(!r.discard_equal && !r.conditional_equal);
        }
    }

    #[test]
    fn identity_model_satisfies_the_chain() {
        let (th, a, b) = setup();
        let m = OntModel::identity(&th);
        for p in generate_shared_pairs(&th, &a, &b, 5, 2).unwrap() {
            let r = verify_model_noncontext(&p, &m, 8, 1).unwrap();
            assert!(r.passed(), "{:?}", r.findings);
            assert_eq!(r.instances, 4);
        }
    }

    #[test]
    fn perturbed_models_fail_a_prerequisite() {
        let (th, a, b) = setup();
        let m = OntModel::identity(&th);
        for (i, p) in generate_shared_pairs(&th, &a, &b, 20, 9).unwrap().iter().enumerate() {
            let mut rng = trial_rng(9, i as u64);
            let bad = contextual_perturbation(&m, p, &mut rng).unwrap();
            let pool = [p.t.clone(), p.t_prime.clone()];
            let cg = check_cg_preservation_on(&bad, &pool, 4, 0).passed();
            let cond = check_cond_preservation_on(&bad, &pool, 4, 0).passed();
            assert!(!(cg && cond));
            if p.t.len() > 2 {
                assert!(!cg);
            }
            assert!(matches!(verify_model_noncontext(p, &bad, 4, 0), Err(OptError::AxiomPrereqFailed(_))));
        }
    }

    #[test]
    fn registered_pairs_are_found() {
        let (mut th, _, _) = setup();
        let p = hand_pair(&th);
        th.register_test(p.t.clone()).unwrap();
        th.register_test(p.t_prime.clone()).unwrap();
        let found = registered_shared_pairs(&th);
        assert_eq!(found.len(), 1);
        assert_eq!((found[0].star_index, found[0].star_index_prime), (0, 0));
    }
}
