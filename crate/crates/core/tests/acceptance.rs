//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Every comparison is exact over the rationals; the only float tolerance
//! is the search's fitting phase, pinned at 1e-9.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use optkit::backend::{Backend, GptFragment};
use optkit::coarse::cg_compat_check;
use optkit::conditioning::{condition, ConditionalSpec};
use optkit::lemma::{contextual_perturbation, generate_shared_pairs, label_pair, verify_collapse};
use optkit::ncsearch::{lift_to_theory_model, pad, search_nc_model, verify_certificate, NcProblem, SearchOutcome};
use optkit::ontmodel::{
    check_cg_preservation_on, check_cond_preservation_on, check_convex_linearity, check_diagram_preservation_on,
    check_noncontextuality, check_outcome_preservation_on, check_prob_preservation, check_scalar_function,
    factor_through_quotient, pullback, run_checks, verify_factorization, CheckName, OntModel, ScalarClass,
};
use optkit::quotient::{fragment_from_theory, quotient_theory};
use optkit::random::{random_partition, random_test, trial_rng, DEFAULT_DENOMINATOR};
use optkit::rational::{ratio, zero};
use optkit::{
    compose_par, compose_seq, identity_test, interchange_check, sliding_check, Rational, SystemRef, Test, Theory,
    TheoryKind,
};
use rand::Rng;

const SEED: u64 = 20_240_601;
const FLOAT_TOLERANCE: f64 = 1e-9;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

/// Tallies exact comparisons and remembers the first failure.
#[derive(Default)]
struct Tally {
    checked: u64,
    failed: u64,
    first: Option<String>,
}

impl Tally {
    fn expect(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.failed += 1;
            if self.first.is_none() {
                self.first = Some(what());
            }
        }
    }

    fn finish(self, what: &str) -> Outcome {
        let mut detail = format!("{} {what}, {} failed", self.checked, self.failed);
        if let Some(f) = self.first {
            detail.push_str(&format!("; first: {f}"));
        }
        outcome(self.failed == 0 && self.checked > 0, detail)
    }
}

fn eq(a: optkit::Result<Test>, b: optkit::Result<Test>) -> bool {
    matches!((a, b), (Ok(x), Ok(y)) if x == y)
}

fn calculus_laws() -> Outcome {
    let mut tally = Tally::default();
    for trial in 0..500u64 {
        let mut rng = trial_rng(SEED, trial);
        let mut th = Theory::new(TheoryKind::Classical);
        let sys: Vec<SystemRef> = (0..4)
            .map(|k| th.add_system(format!("S{k}"), rng.gen_range(1..=4)).unwrap())
            .collect();
        let test = |rng: &mut rand_chacha::ChaCha8Rng, id: &str, a: usize, b: usize| {
            let n = rng.gen_range(1..=4);
            random_test(rng, id, &sys[a], &sys[b], n, DEFAULT_DENOMINATOR)
        };
        let t1 = test(&mut rng, "t1", 0, 1);
        let t2 = test(&mut rng, "t2", 1, 2);
        let t3 = test(&mut rng, "t3", 2, 3);
        let t4 = test(&mut rng, "t4", 3, 0);
        let ctx = || format!("trial {trial}");

        let seq_l = compose_seq(&t1, &t2).and_then(|x| compose_seq(&x, &t3));
        let seq_r = compose_seq(&t2, &t3).and_then(|x| compose_seq(&t1, &x));
        tally.expect(eq(seq_l, seq_r), || format!("{}: sequential associativity", ctx()));
        let par_l = compose_par(&t1, &t2).and_then(|x| compose_par(&x, &t3));
        let par_r = compose_par(&t2, &t3).and_then(|x| compose_par(&t1, &x));
        tally.expect(eq(par_l, par_r), || format!("{}: parallel associativity", ctx()));

        let unit = identity_test(&th.trivial());
        tally.expect(eq(compose_seq(&identity_test(&sys[0]), &t1), Ok(t1.clone())), || format!("{}: left unit", ctx()));
        tally.expect(eq(compose_seq(&t1, &identity_test(&sys[1])), Ok(t1.clone())), || format!("{}: right unit", ctx()));
        tally.expect(eq(compose_par(&unit, &t1), Ok(t1.clone())), || format!("{}: parallel unit", ctx()));

        // (t2 ∘ t1) ⊠ (t4 ∘ t3) against (t2 ⊠ t4) ∘ (t1 ⊠ t3).
        tally.expect(interchange_check(&t2, &t1, &t4, &t3).unwrap_or(false), || format!("{}: interchange", ctx()));
        tally.expect(sliding_check(&t1, &t3).unwrap_or(false), || format!("{}: braiding sliding", ctx()));

        let pk = random_partition(&mut rng, t1.outcomes());
        let pl = random_partition(&mut rng, t2.outcomes());
        tally.expect(cg_compat_check(&t1, &t2, &pk, &pl).unwrap_or(false), || format!("{}: coarse-graining", ctx()));
    }
    tally.finish("exact law comparisons on 500 trials")
}

fn quotient_congruence() -> Outcome {
    let mut tally = Tally::default();
    for trial in 0..200u64 {
        let th = common::labeled_instance(SEED, trial);
        let q = quotient_theory(&th).unwrap();
        let t = |id: &str| th.test(id).unwrap().clone();
        let qt = |x: &Test| q.map_test(x);
        let (t1, t1c, t2, t3) = (t("T1"), t("T1c"), t("T2"), t("T3"));
        let ctx = |law: &str| format!("instance {trial}: {law}");

        for a in [&t1, &t1c] {
            let lhs = compose_seq(a, &t2).and_then(|c| qt(&c));
            let rhs = compose_seq(&qt(a).unwrap(), &qt(&t2).unwrap());
            tally.expect(eq(lhs, rhs), || ctx("sequential"));
            let lhs = compose_par(a, &t3).and_then(|c| qt(&c));
            let rhs = compose_par(&qt(a).unwrap(), &qt(&t3).unwrap());
            tally.expect(eq(lhs, rhs), || ctx("parallel"));
        }
        let mut rng = trial_rng(SEED ^ 1, trial);
        let part = random_partition(&mut rng, t1.outcomes());
        let lhs = optkit::coarse::coarse_grain(&t1, &part).and_then(|c| qt(&c));
        let rhs = optkit::coarse::coarse_grain(&qt(&t1).unwrap(), &part);
        tally.expect(eq(lhs, rhs), || ctx("coarse-graining"));

        let branches: Vec<Test> = (0..t3.len()).map(|k| if k % 2 == 0 { t1.clone() } else { t1c.clone() }).collect();
        let spec = ConditionalSpec::new(t3.clone(), branches.clone()).unwrap();
        let lhs = condition(&th as &dyn Backend, &spec).and_then(|c| qt(&c));
        let qspec = ConditionalSpec::new(qt(&t3).unwrap(), branches.iter().map(|b| qt(b).unwrap()).collect()).unwrap();
        let rhs = condition(q.target() as &dyn Backend, &qspec);
        tally.expect(eq(lhs, rhs), || ctx("conditioning"));
    }
    tally.finish("commutation checks on 200 instances")
}

fn lemma_collapse() -> Outcome {
    let th = Theory::classical(&[("A", 3)]).unwrap();
    let a = th.system("A").unwrap();
    let mut lab = Theory::new(TheoryKind::LabeledClassical);
    lab.add_system("A", 3).unwrap();
    let pairs = generate_shared_pairs(&th, &a, &a, 200, SEED).unwrap();
    let mut tally = Tally::default();
    for (k, p) in pairs.iter().enumerate() {
        let r = verify_collapse(&th, p).unwrap();
        tally.expect(r.deterministic && r.discard_equal && r.conditional_equal, || format!("pair {k}: {r:?}"));
        let lp = label_pair(&lab, p).unwrap();
        let r = verify_collapse(&lab, &lp).unwrap();
        tally.expect(r.deterministic && r.equivalent && !r.conditional_equal, || format!("labeled pair {k}: {r:?}"));
    }
    tally.finish("pair verdict sets (200 classical, 200 labeled)")
}

fn no_contextual_survivor() -> Outcome {
    let th = Theory::classical(&[("A", 3)]).unwrap();
    let a = th.system("A").unwrap();
    let m = OntModel::identity(&th);
    let pairs = generate_shared_pairs(&th, &a, &a, 100, SEED ^ 4).unwrap();
    let mut tally = Tally::default();
    let mut survivors = 0;
    for (k, p) in pairs.iter().enumerate() {
        let bad = contextual_perturbation(&m, p, &mut trial_rng(SEED ^ 4, k as u64)).unwrap();
        let pool = [p.t.clone(), p.t_prime.clone()];
        let valid = check_outcome_preservation_on(&bad, &pool).passed();
        let star = |t: &Test, i: usize| bad.map_test(t).map(|img| img.event(i).matrix.clone()).ok();
        let contextual = star(&p.t, p.star_index) != star(&p.t_prime, p.star_index_prime);
        tally.expect(valid && contextual, || format!("perturbation {k} is not a valid contextual model"));
        let cond = check_cond_preservation_on(&bad, &pool, 8, k as u64).passed();
        let cg = check_cg_preservation_on(&bad, &pool, 8, k as u64).passed();
        let diagram = check_diagram_preservation_on(&bad, &pool, 8, k as u64).passed();
        if cond && cg && diagram {
            survivors += 1;
        }
        tally.expect(!(cond && cg && diagram), || format!("perturbation {k} survives"));
    }
    let mut o = tally.finish("checks on 100 perturbations");
    o.detail = format!("{survivors} survivors; {}", o.detail);
    o
}

fn factorization() -> Outcome {
    let mut tally = Tally::default();
    for trial in 0..50u64 {
        let th = common::labeled_instance(SEED ^ 5, trial);
        let q = quotient_theory(&th).unwrap();
        let mut rng = trial_rng(SEED ^ 5, trial);
        let ctx = |what: &str| format!("instance {trial}: {what}");
        let models = [
            OntModel::identity(&th),
            OntModel::permuted(&th, common::random_permutations(&th, &mut rng)).unwrap(),
        ];
        for m in &models {
            let all = run_checks(m, &CheckName::ALL, 6, trial);
            let passes = all.len() == CheckName::ALL.len() && all.iter().all(|r| r.passed());
            tally.expect(passes, || ctx("model fails an axiom"));
            let ok = factor_through_quotient(m, &q)
                .map(|mt| verify_factorization(m, &mt, &q, 10, trial).passed())
                .unwrap_or(false);
            tally.expect(ok, || ctx("factorization"));
        }
        let quotient_models = [
            OntModel::identity(q.target()),
            OntModel::permuted(q.target(), common::random_permutations(q.target(), &mut rng)).unwrap(),
        ];
        for mt in &quotient_models {
            let ok = pullback(mt, &q)
                .and_then(|pb| check_noncontextuality(&pb))
                .map(|r| r.passed() && r.instances > 0)
                .unwrap_or(false);
            tally.expect(ok, || ctx("pullback is contextual"));
        }
        // A model that sees the tags of T1 must not factor.
        let t1 = th.test("T1").unwrap();
        let mut swapped: Vec<_> = t1.matrices().cloned().collect();
        swapped.reverse();
        if swapped != t1.matrices().cloned().collect::<Vec<_>>() {
            let bad = OntModel::identity(&th).with_override(t1, swapped).unwrap();
            let nc = check_noncontextuality(&bad).map(|r| r.passed()).unwrap_or(true);
            tally.expect(!nc && factor_through_quotient(&bad, &q).is_err(), || ctx("contextual model factors"));
        }
    }
    tally.finish("factorization checks on 50 instances")
}

fn appendix_a() -> Outcome {
    let th = Theory::classical(&[("A", 2), ("B", 3)]).unwrap();
    let r = check_convex_linearity(&OntModel::identity(&th), 100, SEED);
    let control = check_convex_linearity(&common::affine_model(&th), 100, SEED);
    outcome(
        r.passed() && r.instances == 300 && !control.passed(),
        format!(
            "identity: {} blocks, {} failed; affine control: {} failed",
            r.instances,
            r.findings.len(),
            control.findings.len()
        ),
    )
}

fn appendix_b() -> Outcome {
    let depth = 10;
    let mut tally = Tally::default();
    let class = |f: &dyn Fn(&Rational) -> optkit::Result<Rational>| check_scalar_function(f, depth);
    tally.expect(matches!(class(&|x| Ok(x.clone())), Ok(ScalarClass::Identity)), || "id".into());
    tally.expect(matches!(class(&|_| Ok(zero())), Ok(ScalarClass::Zero)), || "zero".into());
    tally.expect(matches!(class(&|x| Ok(x * x)), Ok(ScalarClass::ViolatesAdditivity { .. })), || "p^2".into());
    // x -> c x is additive on the grid; it is multiplicative iff c is 0 or 1.
    let size = 1i64 << depth;
    for k in 0..=size {
        let c = ratio(k, size);
        let got = class(&|x| Ok(x * &c));
        let agrees = match k {
            0 => matches!(got, Ok(ScalarClass::Zero)),
            _ if k == size => matches!(got, Ok(ScalarClass::Identity)),
            _ => matches!(got, Ok(ScalarClass::ViolatesMultiplicativity { .. })),
        };
        tally.expect(agrees, || format!("c = {k}/{size}: {got:?}"));
    }
    tally.finish("classifications on the 2^-10 grid")
}

fn empirical_adequacy() -> Outcome {
    let mut tally = Tally::default();
    for trial in 0..10u64 {
        let th = common::labeled_instance(SEED ^ 8, trial);
        let q = quotient_theory(&th).unwrap();
        let frag = fragment_from_theory(q.target(), "A").unwrap();
        let prob = NcProblem::new(frag.clone(), frag.dim() + 2).unwrap().with_tolerance(FLOAT_TOLERANCE);
        let ok = match search_nc_model(&prob, SEED) {
            Ok(SearchOutcome::Found(cert)) => lift_to_theory_model(&cert, &frag, q.target(), "A")
                .map(|m| {
                    let r = check_prob_preservation(&m);
                    r.passed() && r.instances > 0
                })
                .unwrap_or(false),
            _ => false,
        };
        tally.expect(ok, || format!("instance {trial}"));
    }
    tally.finish("lifted certificates")
}

fn nc_search() -> Outcome {
    let mut tally = Tally::default();
    let mut slowest = Duration::ZERO;
    for n in 2..=5 {
        let start = Instant::now();
        let prob = NcProblem::new(common::simplex(n), n + 2).unwrap().with_tolerance(FLOAT_TOLERANCE);
        let found = search_nc_model(&prob, SEED);
        let took = start.elapsed();
        slowest = slowest.max(took);
        let ok = match &found {
            Ok(SearchOutcome::Found(c)) => {
                c.ontic_size == n
                    && c.residual == zero()
                    && verify_certificate(&prob, c).unwrap_or(false)
                    && verify_certificate(&prob, &pad(c, 1)).unwrap_or(false)
            }
            _ => false,
        };
        tally.expect(ok && took < Duration::from_secs(10), || format!("simplex {n}: {found:?} in {took:?}"));
    }
    let square: GptFragment = common::square();
    tally.expect(!common::cone_factorization_exists(&square), || "oracle embeds the square".into());
    let prob = NcProblem::new(square, 8).unwrap().with_tolerance(FLOAT_TOLERANCE);
    let got = search_nc_model(&prob, SEED);
    tally.expect(matches!(got, Ok(SearchOutcome::Infeasible { bound: 8 })), || format!("square: {got:?}"));
    let mut o = tally.finish("search checks");
    o.detail = format!("{}; slowest simplex {:.2} s", o.detail, slowest.as_secs_f64());
    o
}

fn main() -> ExitCode {
    let criteria: [(&str, u64, fn() -> Outcome); 9] = [
        ("calculus laws", 30, calculus_laws),
        ("quotient congruence", 30, quotient_congruence),
        ("shared-event collapse", 60, lemma_collapse),
        ("no contextual model survives", 120, no_contextual_survivor),
        ("factorization through the quotient", 60, factorization),
        ("convex-linearity", 30, appendix_a),
        ("scalar maps", 10, appendix_b),
        ("empirical adequacy", 10, empirical_adequacy),
        ("noncontextual model search", 60, nc_search),
    ];
    let mut failures = 0;
    for (k, (name, budget, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        let secs = start.elapsed().as_secs_f64();
        let passed = o.passed && secs < *budget as f64;
        if !passed {
            failures += 1;
        }
        println!(
            "criterion {} {:<36} {} ({}; {secs:.2} s of {budget} s)",
            k + 1,
            name,
            if passed { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
