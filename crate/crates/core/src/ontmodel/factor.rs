use std::sync::Arc;

use rand::seq::SliceRandom;

use super::{BaseRule, OntModel};
use crate::calculus::{compose_par, compose_seq, identity_test, Test};
use crate::coarse::coarse_grain;
use crate::error::{OptError, Result};
use crate::quotient::QuotientMap;
use crate::random::{random_partition, trial_rng};
use crate::report::CheckReport;

fn sizes_of(m: &OntModel) -> std::collections::BTreeMap<String, usize> {
    m.system_map().into_iter().collect()
}

/// The model `m̃` on the quotient with `m = m̃ ∘ q`.
///
/// Registered tests keep the images `m` gives them; two registered tests
/// with the same quotient image but different images under `m` make the
/// factorization impossible.
pub fn factor_through_quotient(m: &OntModel, q: &QuotientMap) -> Result<OntModel> {
    if m.source().id() != q.source().id() {
        return Err(OptError::TheoryMismatch);
    }
    let lifted = m.clone();
    let qm = q.clone();
    let base: super::TestMap = Arc::new(move |t: &Test| {
        let img = lifted.map_test(&qm.lift_untagged(t)?)?;
        Ok(img.matrices().cloned().collect())
    });
    let mut out = OntModel::new(q.target(), &sizes_of(m), BaseRule::Custom(base))?.with_target(m.target())?;
    let mut seen: Vec<(Test, Test)> = Vec::new();
    for t in m.source().tests() {
        let key = q.map_test(t)?;
        let img = m.map_test(t)?;
        if let Some((_, prev)) = seen
            .iter()
            .find(|(k, _)| k.input() == key.input() && k.output() == key.output() && k.events() == key.events()) {
            if !prev.matrices().eq(img.matrices()) {
                return Err(OptError::CongruenceViolation(format!(
                    "`{}` has images depending on the representative",
                    t.id
                )));
            }
            continue;
        }
        out = out.with_labeled_override(&key, img.outcomes().clone(), img.matrices().cloned().collect())?;
        seen.push((key, img));
    }
    Ok(out)
}

/// `m̃ ∘ q`: a model of the source that cannot see context tags.
pub fn pullback(m_tilde: &OntModel, q: &QuotientMap) -> Result<OntModel> {
    if m_tilde.source().id() != q.target().id() {
        return Err(OptError::TheoryMismatch);
    }
    let inner = m_tilde.clone();
    let qm = q.clone();
    let base: super::TestMap = Arc::new(move |t: &Test| {
        let img = inner.map_test(&qm.map_test(t)?)?;
        Ok(img.matrices().cloned().collect())
    });
    OntModel::new(q.source(), &sizes_of(m_tilde), BaseRule::Custom(base))?.with_target(m_tilde.target())
}

/// Checks `m(T) = m̃(q(T))` on registered tests and on sampled composites,
/// coarse-grainings and identities.
pub fn verify_factorization(m: &OntModel, m_tilde: &OntModel, q: &QuotientMap, trials: u64, seed: u64) -> CheckReport {
    let mut r = CheckReport::new("factorization", Some(seed), trials);
    let check = |r: &mut CheckReport, t: &Test, trial: Option<u64>| {
        let lhs = m.map_test(t);
        let rhs = q.map_test(t).and_then(|k| m_tilde.map_test(&k));
        match (lhs, rhs) {
            (Ok(a), Ok(b)) => r.expect(a == b, trial, format!("test `{}`", t.id), format!("{a:?} vs {b:?}")),
            (Err(e), _) | (_, Err(e)) => r.expect(false, trial, format!("test `{}`", t.id), e.to_string()),
        }
    };
    let pool = m.source().tests();
    for t in pool {
        check(&mut r, t, None);
    }
    for s in m.source().atom_systems() {
        check(&mut r, &identity_test(&s), None);
    }
    if pool.is_empty() {
        return r;
    }
    for trial in 0..trials {
        let mut rng = trial_rng(seed, trial);
        let t1 = pool.choose(&mut rng).unwrap();
        let t2 = pool.choose(&mut rng).unwrap();
        if let Ok(c) = compose_par(t1, t2) {
            check(&mut r, &c, Some(trial));
        }
        let next: Vec<&Test> = pool.iter().filter(|t| t.input() == t1.output()).collect();
        if let Some(t3) = next.choose(&mut rng) {
            if let Ok(c) = compose_seq(t1, t3) {
                check(&mut r, &c, Some(trial));
            }
        }
        let part = random_partition(&mut rng, t1.outcomes());
        if let Ok(c) = coarse_grain(t1, &part) {
            check(&mut r, &c, Some(trial));
        }
    }
    r
}
