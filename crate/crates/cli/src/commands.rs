use std::fs;
use std::path::Path;

use optkit::format::{
    certificate_to_json, parse_document, parse_fragment, parse_model, parse_theory, quotient_to_json, same_theory,
    Document,
};
use optkit::lemma::{
    generate_shared_pairs, label_pair, registered_shared_pairs, verify_collapse, verify_model_noncontext, SharedPair,
};
use optkit::ncsearch::{search_nc_model, verify_certificate, NcProblem, SearchOutcome};
use optkit::ontmodel::{check_convex_linearity, check_scalar_function, run_checks, scalar_action, CheckName, OntModel, ScalarClass};
use optkit::quotient::quotient_theory;
use optkit::conditioning::check_strong_causality;
use optkit::{Backend, OptError, Theory, TheoryKind};

use crate::report::Report;
use crate::Command;

/// Depth of the dyadic grid for the scalar map.
const SCALAR_DEPTH: u32 = 10;

type Outcome = std::result::Result<Report, String>;

fn read(path: &Path) -> std::result::Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn at<T>(path: &Path, r: optkit::Result<T>) -> std::result::Result<T, String> {
    r.map_err(|e| format!("{}: {e}", path.display()))
}

fn theory(path: &Path) -> std::result::Result<Theory, String> {
    at(path, parse_theory(&read(path)?))
}

fn model(path: &Path, th: &Theory) -> std::result::Result<OntModel, String> {
    at(path, parse_model(&read(path)?, th))
}

fn show(p: &Path) -> String {
    p.display().to_string()
}

pub fn run(cmd: &Command) -> Outcome {
    match cmd {
        Command::Validate { file } => validate(file),
        Command::Quotient { file, output } => quotient(file, output),
        Command::CheckStrongCausality { theory: path, sampling } => {
            let th = theory(path)?;
            let mut report = Report::new("check-strong-causality", &[&show(path)], Some(sampling.seed));
            let r = check_strong_causality(&th, sampling.trials, sampling.seed);
            report.verdict("strong-causality", r.passed(), r.trials, "");
            for c in &r.counterexamples {
                report.counterexample("strong-causality", Some(c.trial), "conditional test", c.detail.clone());
            }
            Ok(report)
        }
        Command::CheckModel {
            theory: tpath,
            model: mpath,
            checks,
            sampling,
        } => {
            let th = theory(tpath)?;
            let m = model(mpath, &th)?;
            let names = check_names(checks)?;
            let mut report = Report::new("check-model", &[&show(tpath), &show(mpath)], Some(sampling.seed));
            for r in run_checks(&m, &names, sampling.trials, sampling.seed) {
                report.absorb(&r);
            }
            Ok(report)
        }
        Command::FindNcModel {
            fragment,
            max_ontic,
            tol,
            starts,
            seed,
            denominator_cap,
            output,
        } => {
            let frag = at(fragment, parse_fragment(&read(fragment)?))?;
            let prob = NcProblem::new(frag.clone(), *max_ontic)
                .map_err(|e| e.to_string())?
                .with_tolerance(*tol)
                .with_starts(*starts)
                .with_denominator_cap(*denominator_cap);
            let mut report = Report::new("find-nc-model", &[&show(fragment)], Some(*seed));
            match search_nc_model(&prob, *seed) {
                Ok(SearchOutcome::Found(cert)) => {
                    let exact = verify_certificate(&prob, &cert).map_err(|e| e.to_string())?;
                    report.verdict("embedding", exact, 1, format!("ontic size {}", cert.ontic_size));
                    let text = certificate_to_json(&cert, &frag);
                    if let Some(out) = output {
                        fs::write(out, &text).map_err(|e| format!("{}: {e}", out.display()))?;
                    }
                    report.certificate = Some(serde_json::from_str(&text).expect("certificate is valid JSON"));
                }
                Ok(SearchOutcome::Infeasible { bound }) => report.verdict(
                    "embedding",
                    false,
                    0,
                    format!("no certificate found up to ontic size {bound} (search failure, not a proof)"),
                ),
                Err(e @ OptError::BudgetExceeded(_)) => report.verdict("embedding", false, 0, e.to_string()),
                Err(e) => return Err(e.to_string()),
            }
            Ok(report)
        }
        Command::VerifyLemma {
            theory: tpath,
            model: mpath,
            sampling,
        } => {
            let th = theory(tpath)?;
            match mpath {
                Some(mpath) => {
                    let m = model(mpath, &th)?;
                    let mut report = Report::new("verify-lemma", &[&show(tpath), &show(mpath)], Some(sampling.seed));
                    model_lemma(&mut report, &th, &m, sampling.trials, sampling.seed)?;
                    Ok(report)
                }
                None => {
                    let mut report = Report::new("verify-lemma", &[&show(tpath)], Some(sampling.seed));
                    collapse(&mut report, &th, sampling.trials, sampling.seed)?;
                    Ok(report)
                }
            }
        }
        Command::CheckAppendix {
            theory: tpath,
            model: mpath,
            sampling,
        } => {
            let th = theory(tpath)?;
            let (m, inputs) = match mpath {
                Some(p) => (model(p, &th)?, vec![show(tpath), show(p)]),
                None => (OntModel::identity(&th), vec![show(tpath)]),
            };
            let inputs: Vec<&str> = inputs.iter().map(String::as_str).collect();
            let mut report = Report::new("check-appendix", &inputs, Some(sampling.seed));
            report.absorb(&check_convex_linearity(&m, sampling.trials, sampling.seed));
            let points = (1u64 << SCALAR_DEPTH) + 1;
            match check_scalar_function(scalar_action(&m), SCALAR_DEPTH) {
                Ok(c @ (ScalarClass::Identity | ScalarClass::Zero)) => report.verdict("scalar-map", true, points, c.to_string()),
                Ok(c) => {
                    report.verdict("scalar-map", false, points, c.to_string());
                    report.counterexample("scalar-map", None, "p -> m(p)", c.to_string());
                }
                Err(e) => {
                    report.verdict("scalar-map", false, points, e.to_string());
                    report.counterexample("scalar-map", None, "p -> m(p)", e.to_string());
                }
            }
            Ok(report)
        }
    }
}

fn check_names(spec: &str) -> std::result::Result<Vec<CheckName>, String> {
    if spec == "all" {
        return Ok(CheckName::ALL.to_vec());
    }
    spec.split(',')
        .map(|s| CheckName::parse(s.trim()).ok_or_else(|| format!("unknown check `{}`", s.trim())))
        .collect()
}

fn validate(path: &Path) -> Outcome {
    let mut report = Report::new("validate", &[&show(path)], None);
    match at(path, parse_document(&read(path)?))? {
        Document::Theory(th) => {
            let bad: Vec<_> = th
                .tests()
                .iter()
                .filter_map(|t| th.revalidate(t).err().map(|e| (t.id.clone(), e)))
                .collect();
            report.verdict("tests", bad.is_empty(), th.tests().len() as u64, th.kind().name());
            for (id, e) in bad {
                report.counterexample("tests", None, id, e.to_string());
            }
        }
        Document::Fragment(frag) => {
            let n = (frag.states().len() + frag.effects().len()) as u64;
            report.verdict("fragment", true, n, format!("dimension {}", frag.dim()));
        }
    }
    Ok(report)
}

fn quotient(path: &Path, output: &Path) -> Outcome {
    let th = theory(path)?;
    let q = at(path, quotient_theory(&th))?;
    let text = quotient_to_json(&q);
    fs::write(output, &text).map_err(|e| format!("{}: {e}", output.display()))?;
    let mut report = Report::new("quotient", &[&show(path)], None);
    report.verdict("quotient", true, q.classes().len() as u64, format!("written to {}", output.display()));
    let again = parse_theory(&text).map(|t| same_theory(q.target(), &t));
    report.verdict("round-trip", matches!(again, Ok(true)), 1, "");
    Ok(report)
}

/// Pairs `A -> A` on the first system: generated in a classical theory and,
/// for a labeled source, carried over with fresh tags.
fn generated_pairs(th: &Theory, n: u64, seed: u64) -> std::result::Result<Vec<SharedPair>, String> {
    let a = th
        .atom_systems()
        .into_iter()
        .next()
        .ok_or("the theory has no systems to generate pairs on")?;
    let err = |e: OptError| e.to_string();
    match th.kind() {
        TheoryKind::Classical => generate_shared_pairs(th, &a, &a, n as usize, seed).map_err(err),
        TheoryKind::LabeledClassical => {
            let sizes: Vec<(&str, usize)> = th.atoms().iter().map(|x| (x.label.as_str(), x.size)).collect();
            let mirror = Theory::classical(&sizes).map_err(err)?;
            let ma = mirror.system(&a.label()).map_err(err)?;
            generate_shared_pairs(&mirror, &ma, &ma, n as usize, seed)
                .map_err(err)?
                .iter()
                .map(|p| label_pair(th, p).map_err(err))
                .collect()
        }
    }
}

fn pair_name(p: &SharedPair) -> String {
    format!("({}, {})", p.t.id, p.t_prime.id)
}

fn collapse(report: &mut Report, th: &Theory, trials: u64, seed: u64) -> std::result::Result<(), String> {
    let labeled = !th.is_quotiented();
    let name = if labeled { "collapse-up-to-equivalence" } else { "collapse" };
    let sets = [
        (format!("{name}-registered"), registered_shared_pairs(th)),
        (name.to_string(), generated_pairs(th, trials, seed)?),
    ];
    for (verdict, pairs) in sets {
        if pairs.is_empty() {
            continue;
        }
        let mut failures = 0;
        let mut distinct = 0;
        for (k, p) in pairs.iter().enumerate() {
            let r = verify_collapse(th as &dyn Backend, p).map_err(|e| e.to_string())?;
            let ok = if labeled { r.deterministic && r.equivalent } else { r.passed() };
            if !r.conditional_equal {
                distinct += 1;
            }
            if !ok {
                failures += 1;
                report.counterexample(&verdict, Some(k as u64), pair_name(p), format!("{r:?}"));
            }
        }
        let detail = if labeled {
            format!("{distinct} of {} conditional pairs differ as tests", pairs.len())
        } else {
            String::new()
        };
        report.verdict(&verdict, failures == 0, pairs.len() as u64, detail);
    }
    Ok(())
}

fn model_lemma(report: &mut Report, th: &Theory, m: &OntModel, trials: u64, seed: u64) -> std::result::Result<(), String> {
    let pairs = registered_shared_pairs(th);
    if pairs.is_empty() {
        return Err("no two registered tests share an event".into());
    }
    let mut failures = 0;
    let mut instances = 0;
    for (k, p) in pairs.iter().enumerate() {
        match verify_model_noncontext(p, m, trials, seed) {
            Ok(r) => {
                instances += r.instances;
                for f in &r.findings {
                    failures += 1;
                    report.counterexample("noncontextual-representation", Some(k as u64), f.subject.clone(), f.detail.clone());
                }
            }
            Err(e @ OptError::AxiomPrereqFailed(_)) => {
                failures += 1;
                report.counterexample("noncontextual-representation", Some(k as u64), pair_name(p), e.to_string());
            }
            Err(e) => return Err(e.to_string()),
        }
    }
    report.verdict("noncontextual-representation", failures == 0, instances, "");
    Ok(())
}
