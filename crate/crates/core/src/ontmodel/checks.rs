use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use super::OntModel;
use crate::backend::{basis_state, deterministic_effect, discard_prepare, Backend};
use crate::calculus::{braiding_test, compose_par, compose_seq, identity_test, Test};
use crate::coarse::{binary_cg_at, coarse_grain, Partition};
use crate::conditioning::{condition, condition_unchecked, ConditionalSpec};
use crate::error::{OptError, Result};
use crate::matrix::Matrix;
use crate::random::{random_partition, trial_rng};
use crate::report::CheckReport;

/// The axiom checks applicable to any model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CheckName {
    Outcome,
    Diagram,
    CoarseGraining,
    Probability,
    Conditioning,
    Determinicity,
    Noncontextuality,
}

impl CheckName {
    pub const ALL: [CheckName; 7] = [
        CheckName::Outcome,
        CheckName::Diagram,
        CheckName::CoarseGraining,
        CheckName::Probability,
        CheckName::Conditioning,
        CheckName::Determinicity,
        CheckName::Noncontextuality,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CheckName::Outcome => "outcome",
            CheckName::Diagram => "diagram",
            CheckName::CoarseGraining => "cg",
            CheckName::Probability => "prob",
            CheckName::Conditioning => "cond",
            CheckName::Determinicity => "determinicity",
            CheckName::Noncontextuality => "noncontextuality",
        }
    }

    pub fn parse(s: &str) -> Option<CheckName> {
        CheckName::ALL.into_iter().find(|c| c.as_str() == s)
    }
}

/// Runs the named checks on the registered tests. Noncontextuality is
/// skipped for quotiented sources.
pub fn run_checks(m: &OntModel, names: &[CheckName], trials: u64, seed: u64) -> Vec<CheckReport> {
    names
        .iter()
        .filter_map(|n| match n {
            CheckName::Outcome => Some(check_outcome_preservation(m)),
            CheckName::Diagram => Some(check_diagram_preservation(m, trials, seed)),
            CheckName::CoarseGraining => Some(check_cg_preservation(m, trials, seed)),
            CheckName::Probability => Some(check_prob_preservation(m)),
            CheckName::Conditioning => Some(check_cond_preservation(m, trials, seed)),
            CheckName::Determinicity => Some(check_determinicity(m)),
            CheckName::Noncontextuality => check_noncontextuality(m).ok(),
        })
        .collect()
}

fn registry(m: &OntModel) -> Vec<Test> {
    m.source().tests().to_vec()
}

fn describe(r: Result<Test>) -> std::result::Result<Test, String> {
    r.map_err(|e| e.to_string())
}

/// Index of the first differing event, with its label.
fn first_difference(a: &Test, b: &Test) -> String {
    if a.outcomes() != b.outcomes() {
        return format!("outcomes {:?} vs {:?}", a.outcomes(), b.outcomes());
    }
    for (k, (x, y)) in a.events().iter().zip(b.events()).enumerate() {
        if x.matrix != y.matrix {
            return format!("outcome {}: {:?} vs {:?}", a.outcomes().labels()[k], x.matrix, y.matrix);
        }
    }
    "systems differ".into()
}

/// Compares `lhs` and `rhs`, recording the outcome in `report`.
fn compare(
    report: &mut CheckReport,
    trial: Option<u64>,
    subject: String,
    lhs: std::result::Result<Test, String>,
    rhs: std::result::Result<Test, String>,
) {
    match (lhs, rhs) {
        (Ok(l), Ok(r)) => {
            let ok = l == r;
            let detail = if ok { String::new() } else { first_difference(&l, &r) };
            report.expect(ok, trial, subject, detail);
        }
        (Err(e), _) | (_, Err(e)) => report.expect(false, trial, subject, e),
    }
}

/// Outcome preservation, plus validity of every image as a classical
/// instrument.
pub fn check_outcome_preservation(m: &OntModel) -> CheckReport {
    check_outcome_preservation_on(m, &registry(m))
}

pub fn check_outcome_preservation_on(m: &OntModel, pool: &[Test]) -> CheckReport {
    let mut r = CheckReport::new("outcome", None, 0);
    for t in pool {
        match m.map_test(t) {
            Ok(img) => {
                let same = img.outcomes() == t.outcomes();
                r.expect(
                    same,
                    None,
                    format!("test `{}`", t.id),
                    format!("outcomes {:?} map to {:?}", t.outcomes(), img.outcomes()),
                );
                if let Err(e) = m.target().revalidate(&img) {
                    r.fail(None, format!("test `{}`", t.id), format!("image is not an instrument: {e}"));
                }
            }
            Err(e) => r.expect(false, None, format!("test `{}`", t.id), e.to_string()),
        }
    }
    r
}

/// Per-trial sub-reports, run in parallel and merged in trial order.
fn trials_report(
    name: &str,
    seed: u64,
    trials: u64,
    run: impl Fn(u64, &mut CheckReport) + Sync,
) -> CheckReport {
    let mut r = CheckReport::new(name, Some(seed), trials);
    let parts: Vec<CheckReport> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut sub = CheckReport::new(name, Some(seed), 1);
            run(trial, &mut sub);
            sub
        })
        .collect();
    for p in parts {
        r.absorb(p);
    }
    r
}

/// Diagram preservation on identities, braidings and sampled composites.
pub fn check_diagram_preservation(m: &OntModel, trials: u64, seed: u64) -> CheckReport {
    check_diagram_preservation_on(m, &registry(m), trials, seed)
}

pub fn check_diagram_preservation_on(m: &OntModel, pool: &[Test], trials: u64, seed: u64) -> CheckReport {
    let src = m.source();
    let mut systems = src.atom_systems();
    systems.push(src.trivial());
    let mut fixed = CheckReport::new("diagram", Some(seed), trials);
    for s in &systems {
        let lhs = describe(m.map_test(&identity_test(s)));
        let rhs = describe(m.map_system(s).map(|o| identity_test(&o)));
        compare(&mut fixed, None, format!("identity on {s}"), lhs, rhs);
    }
    for a in &systems {
        for b in &systems {
            let lhs = describe(braiding_test(a, b).and_then(|t| m.map_test(&t)));
            let rhs = describe(m.map_system(a).and_then(|x| braiding_test(&x, &m.map_system(b)?)));
            compare(&mut fixed, None, format!("braiding {a},{b}"), lhs, rhs);
        }
    }
    let mut pool: Vec<Test> = pool.to_vec();
    if pool.is_empty() {
        pool.extend(systems.iter().map(identity_test));
    }
    let sampled = trials_report("diagram", seed, trials, |trial, rep| {
        let mut rng = trial_rng(seed, trial);
        let t1 = pool.choose(&mut rng).unwrap();
        let next: Vec<&Test> = pool.iter().filter(|t| t.input() == t1.output()).collect();
        let t2 = next
            .choose(&mut rng)
            .map(|t| (*t).clone())
            .unwrap_or_else(|| identity_test(t1.output()));
        let lhs = describe(compose_seq(t1, &t2).and_then(|c| m.map_test(&c)));
        let rhs = describe(m.map_test(t1).and_then(|a| compose_seq(&a, &m.map_test(&t2)?)));
        compare(rep, Some(trial), format!("`{}` ∘ `{}`", t2.id, t1.id), lhs, rhs);
        let t3 = pool.choose(&mut rng).unwrap();
        let lhs = describe(compose_par(t1, t3).and_then(|c| m.map_test(&c)));
        let rhs = describe(m.map_test(t1).and_then(|a| compose_par(&a, &m.map_test(t3)?)));
        compare(rep, Some(trial), format!("`{}` ⊠ `{}`", t1.id, t3.id), lhs, rhs);
    });
    fixed.absorb(sampled);
    fixed
}

fn cg_instance(m: &OntModel, t: &Test, part: &Partition, rep: &mut CheckReport, trial: Option<u64>) {
    let lhs = describe(coarse_grain(t, part).and_then(|c| m.map_test(&c)));
    let rhs = describe(m.map_test(t).and_then(|img| {
        let p = Partition::new(img.outcomes().clone(), part.blocks().to_vec())?;
        coarse_grain(&img, &p)
    }));
    compare(rep, trial, format!("`{}` under {:?}", t.id, part), lhs, rhs);
}

/// Coarse-graining preservation on every binary and full partition of the
/// pool tests and on sampled partitions.
pub fn check_cg_preservation(m: &OntModel, trials: u64, seed: u64) -> CheckReport {
    check_cg_preservation_on(m, &registry(m), trials, seed)
}

pub fn check_cg_preservation_on(m: &OntModel, pool: &[Test], trials: u64, seed: u64) -> CheckReport {
    let mut fixed = CheckReport::new("cg", Some(seed), trials);
    let multi: Vec<&Test> = pool.iter().filter(|t| t.len() >= 2).collect();
    for t in &multi {
        for i in 0..t.len() {
            if let Ok(p) = Partition::binary(t.outcomes().clone(), i) {
                cg_instance(m, t, &p, &mut fixed, None);
            }
        }
        cg_instance(m, t, &Partition::full(t.outcomes().clone()), &mut fixed, None);
    }
    if multi.is_empty() {
        return fixed;
    }
    let sampled = trials_report("cg", seed, trials, |trial, rep| {
        let mut rng = trial_rng(seed, trial);
        let t = multi.choose(&mut rng).unwrap();
        let p = random_partition(&mut rng, t.outcomes());
        cg_instance(m, t, &p, rep, Some(trial));
    });
    fixed.absorb(sampled);
    fixed
}

/// `[I_B, D_S] ▷ 𝔅(T)` with `S` the first basis state of the output.
pub fn conditional_pair_spec(t: &Test) -> Result<ConditionalSpec> {
    pair_spec_at(t, 0)
}

fn pair_spec_at(t: &Test, index: usize) -> Result<ConditionalSpec> {
    let b = binary_cg_at(t, index)?;
    let out = t.output();
    let ds = discard_prepare(out, &basis_state(out, 0))?;
    ConditionalSpec::new(b, vec![identity_test(out), Test::singleton(ds)?])
}

fn cond_instance(m: &OntModel, spec: &ConditionalSpec, rep: &mut CheckReport, trial: Option<u64>) {
    let subject = format!(
        "[{}] ▷ `{}`",
        spec.branches().iter().map(|b| b.id.as_str()).collect::<Vec<_>>().join(", "),
        spec.base().id
    );
    let lhs = describe(condition(m.source(), spec).and_then(|c| m.map_test(&c)));
    let rhs = describe(spec.map_tests(|t| m.map_test(t)).and_then(|s| condition_unchecked(&s)));
    compare(rep, trial, subject, lhs, rhs);
}

/// Conditioning preservation on the `C_T` specs of the pool tests and on
/// sampled specs.
pub fn check_cond_preservation(m: &OntModel, trials: u64, seed: u64) -> CheckReport {
    check_cond_preservation_on(m, &registry(m), trials, seed)
}

pub fn check_cond_preservation_on(m: &OntModel, pool: &[Test], trials: u64, seed: u64) -> CheckReport {
    let mut fixed = CheckReport::new("cond", Some(seed), trials);
    for t in pool.iter().filter(|t| t.len() >= 2) {
        for i in 0..t.len() {
            match pair_spec_at(t, i) {
                Ok(s) => cond_instance(m, &s, &mut fixed, None),
                Err(e) => fixed.expect(false, None, format!("C_T for `{}`", t.id), e.to_string()),
            }
        }
    }
    if pool.is_empty() {
        return fixed;
    }
    let sampled = trials_report("cond", seed, trials, |trial, rep| {
        let mut rng = trial_rng(seed, trial);
        let base = pool.choose(&mut rng).unwrap();
        let next: Vec<&Test> = pool.iter().filter(|t| t.input() == base.output()).collect();
        let first = next
            .choose(&mut rng)
            .map(|t| (*t).clone())
            .unwrap_or_else(|| identity_test(base.output()));
        let same_out: Vec<&&Test> = next.iter().filter(|t| t.output() == first.output()).collect();
        let mut branches = vec![first.clone()];
        for _ in 1..base.len() {
            let b = if rng.gen_bool(0.25) {
                first.clone()
            } else {
                same_out.choose(&mut rng).map(|t| (**t).clone()).unwrap_or_else(|| first.clone())
            };
            branches.push(b);
        }
        match ConditionalSpec::new(base.clone(), branches) {
            Ok(spec) => cond_instance(m, &spec, rep, Some(trial)),
            Err(e) => rep.expect(false, Some(trial), format!("spec on `{}`", base.id), e.to_string()),
        }
    });
    fixed.absorb(sampled);
    fixed
}

/// Scalar tests map to themselves, and so do prepare-measure composites.
pub fn check_prob_preservation(m: &OntModel) -> CheckReport {
    check_prob_preservation_on(m, &registry(m))
}

pub fn check_prob_preservation_on(m: &OntModel, pool: &[Test]) -> CheckReport {
    let mut r = CheckReport::new("prob", None, 0);
    let same_values = |img: &Test, t: &Test| img.len() == t.len() && img.matrices().eq(t.matrices());
    for t in pool.iter().filter(|t| t.input().is_trivial() && t.output().is_trivial()) {
        match m.map_test(t) {
            Ok(img) => r.expect(same_values(&img, t), None, format!("scalar test `{}`", t.id), first_difference(&img, &t.rebind(img.theory()).untagged())),
            Err(e) => r.expect(false, None, format!("scalar test `{}`", t.id), e.to_string()),
        }
    }
    for p in pool.iter().filter(|t| t.input().is_trivial() && !t.output().is_trivial()) {
        for q in pool.iter().filter(|t| t.input() == p.output() && t.output().is_trivial()) {
            let subject = format!("`{}` then `{}`", p.id, q.id);
            let joint = match compose_seq(p, q) {
                Ok(j) => j,
                Err(e) => {
                    r.expect(false, None, subject, e.to_string());
                    continue;
                }
            };
            match m.map_test(&joint) {
                Ok(img) => r.expect(same_values(&img, &joint), None, subject.clone(), "image of the composite changes probabilities"),
                Err(e) => r.expect(false, None, subject.clone(), e.to_string()),
            }
            match m.map_test(p).and_then(|a| compose_seq(&a, &m.map_test(q)?)) {
                Ok(img) => r.expect(same_values(&img, &joint), None, subject, "composed images change probabilities"),
                Err(e) => r.expect(false, None, subject, e.to_string()),
            }
        }
    }
    r
}

/// Singleton tests map to stochastic singletons; every discard effect maps
/// to the all-ones row.
pub fn check_determinicity(m: &OntModel) -> CheckReport {
    check_determinicity_on(m, &registry(m))
}

pub fn check_determinicity_on(m: &OntModel, pool: &[Test]) -> CheckReport {
    let mut r = CheckReport::new("determinicity", None, 0);
    for t in pool.iter().filter(|t| t.is_singleton()) {
        match m.map_test(t) {
            Ok(img) => r.expect(
                img.is_singleton() && img.event(0).matrix.is_stochastic(),
                None,
                format!("singleton `{}`", t.id),
                "image is not a deterministic transformation",
            ),
            Err(e) => r.expect(false, None, format!("singleton `{}`", t.id), e.to_string()),
        }
    }
    let src = m.source();
    for a in src.atom_systems() {
        let u = deterministic_effect(&a);
        let mut class: Vec<Test> = vec![Test::singleton(u.clone()).expect("valid singleton")];
        for e in src.events() {
            if e.input == a && e.output.is_trivial() && e.matrix == u.matrix {
                class.push(Test::singleton(e.clone()).expect("valid singleton"));
            }
        }
        let ones = m.map_system(&a).map(|o| Matrix::ones_row(o.size()));
        for c in class {
            let subject = format!("discard `{}` on {a}", c.event(0).id);
            match (m.map_test(&c), &ones) {
                (Ok(img), Ok(ones)) => r.expect(
                    img.is_singleton() && img.event(0).matrix == *ones,
                    None,
                    subject,
                    "image is not the all-ones row",
                ),
                (Err(e), _) => r.expect(false, None, subject, e.to_string()),
                (_, Err(e)) => r.expect(false, None, subject, e.to_string()),
            }
        }
    }
    r
}

/// Every pair of equivalent events, in any tests of the pool, must have
/// equal images.
pub fn check_noncontextuality(m: &OntModel) -> Result<CheckReport> {
    check_noncontextuality_on(m, &registry(m))
}

pub fn check_noncontextuality_on(m: &OntModel, pool: &[Test]) -> Result<CheckReport> {
    if m.source().is_quotiented() {
        return Err(OptError::SourceIsQuotiented);
    }
    let mut r = CheckReport::new("noncontextuality", None, 0);
    // (source event, image matrix, "(t|T)")
    let mut seen: Vec<(crate::calculus::Event, Matrix, String)> = Vec::new();
    for t in pool {
        let img = match m.map_test(t) {
            Ok(i) => i,
            Err(e) => {
                r.expect(false, None, format!("test `{}`", t.id), e.to_string());
                continue;
            }
        };
        for (k, e) in t.events().iter().enumerate() {
            let name = format!("({}|{})", e.id, t.id);
            let Some(image) = img.events().get(k).map(|x| x.matrix.clone()) else {
                r.expect(false, None, name, "no image");
                continue;
            };
            let rep = seen
                .iter()
                .find(|(s, _, _)| s.input == e.input && s.output == e.output && s.matrix == e.matrix);
            match rep {
                Some((_, first, first_name)) => r.expect(
                    *first == image,
                    None,
                    format!("{first_name} vs {name}"),
                    format!("{first:?} vs {image:?}"),
                ),
                None => seen.push((e.clone(), image, name)),
            }
        }
    }
    Ok(r)
}
