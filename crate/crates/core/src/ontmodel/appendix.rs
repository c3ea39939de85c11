use std::fmt;

use num_traits::Zero;
use rand::seq::SliceRandom;

use super::OntModel;
use crate::backend::Theory;
use crate::calculus::{compose_par, identity_test, Event, OutcomeSet, Test};
use crate::coarse::{coarse_grain, Partition};
use crate::conditioning::{condition, ConditionalSpec};
use crate::error::{OptError, Result};
use crate::matrix::Matrix;
use crate::random::{random_probability, random_test, trial_rng, DEFAULT_DENOMINATOR};
use crate::rational::{format_rational, in_unit_interval, one, ratio, Rational};
use crate::report::CheckReport;

fn probability_test(theory: &Theory, p: &Rational) -> Result<Test> {
    let i = theory.trivial();
    let events = vec![
        Event::new("p", i.clone(), i.clone(), Matrix::scalar(p.clone())),
        Event::new("1-p", i.clone(), i.clone(), Matrix::scalar(one() - p)),
    ];
    Test::new("P", i.clone(), i, OutcomeSet::numbered(2), events)
}

/// `C_P = [p t1, p t2, (1-p) t'1, (1-p) t'2]` and the partition
/// `{{1,3},{2},{4}}` of its outcomes.
pub fn convex_linearity_instance(
    theory: &Theory,
    p: &Rational,
    t: &Test,
    t_prime: &Test,
) -> Result<(Test, Partition)> {
    if t.len() != 2 || t_prime.len() != 2 {
        return Err(OptError::ShapeMismatch("both tests need two outcomes".into()));
    }
    if !in_unit_interval(p) {
        return Err(OptError::WeightsNotNormalized);
    }
    let prepared = compose_par(&probability_test(theory, p)?, &identity_test(t.input()))?;
    let spec = ConditionalSpec::new(prepared, vec![t.clone(), t_prime.clone()])?;
    let c = condition(theory, &spec)?;
    let part = Partition::new(c.outcomes().clone(), vec![vec![0, 2], vec![1], vec![3]])?;
    Ok((c, part))
}

/// Convex-linearity of the model on sampled `(T, T', p)`.
///
/// Every block of `𝔠_K(C_P)` is compared with the weighted images of the
/// merged events.
pub fn check_convex_linearity(m: &OntModel, trials: u64, seed: u64) -> CheckReport {
    let src = m.source();
    let mut systems = src.atom_systems();
    if systems.is_empty() {
        systems.push(src.trivial());
    }
    let mut report = CheckReport::new("convex-linearity", Some(seed), trials);
    for trial in 0..trials {
        let mut rng = trial_rng(seed, trial);
        let a = systems.choose(&mut rng).unwrap().clone();
        let b = systems.choose(&mut rng).unwrap().clone();
        let t = random_test(&mut rng, "T", &a, &b, 2, DEFAULT_DENOMINATOR);
        let tp = random_test(&mut rng, "T'", &a, &b, 2, DEFAULT_DENOMINATOR);
        let p = if trial == 0 { one() } else { random_probability(&mut rng, DEFAULT_DENOMINATOR) };
        check_instance(m, &p, &t, &tp, trial, &mut report);
    }
    report
}

fn check_instance(m: &OntModel, p: &Rational, t: &Test, tp: &Test, trial: u64, report: &mut CheckReport) {
    let subject = format!("p = {}", format_rational(p));
    let run = || -> Result<Vec<(bool, &'static str)>> {
        let (c, part) = convex_linearity_instance(m.source(), p, t, tp)?;
        let lhs = m.map_test(&coarse_grain(&c, &part)?)?;
        let (xi, xip) = (m.map_test(t)?, m.map_test(tp)?);
        let q = one() - p;
        let mix = xi.event(0).matrix.scale(p).add(&xip.event(0).matrix.scale(&q))?;
        let blocks = [
            (mix, "merged block {1,3}"),
            (xi.event(1).matrix.scale(p), "block {2}"),
            (xip.event(1).matrix.scale(&q), "block {4}"),
        ];
        if lhs.len() != 3 {
            return Ok(vec![(false, "image has the wrong number of outcomes")]);
        }
        Ok(blocks
            .into_iter()
            .enumerate()
            .map(|(k, (expected, name))| (lhs.event(k).matrix == expected, name))
            .collect())
    };
    match run() {
        Ok(results) => {
            for (ok, name) in results {
                report.expect(ok, Some(trial), subject.clone(), name);
            }
        }
        Err(e) => report.expect(false, Some(trial), subject, e.to_string()),
    }
}

/// Classification of a map on `[0,1]` restricted to a dyadic grid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ScalarClass {
    Identity,
    Zero,
    ViolatesMultiplicativity { a: Rational, b: Rational },
    ViolatesAdditivity { a: Rational, b: Rational },
}

impl fmt::Display for ScalarClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarClass::Identity => write!(f, "identity"),
            ScalarClass::Zero => write!(f, "zero"),
            ScalarClass::ViolatesMultiplicativity { a, b } => write!(
                f,
                "violates-multiplicativity at ({}, {})",
                format_rational(a),
                format_rational(b)
            ),
            ScalarClass::ViolatesAdditivity { a, b } => write!(
                f,
                "violates-additivity at ({}, {})",
                format_rational(a),
                format_rational(b)
            ),
        }
    }
}

/// Classifies `f` on the grid `m/2^n`, `n <= depth`.
///
/// Multiplicativity is checked on every grid pair whose product stays on
/// the grid. Additivity on the grid is equivalent to `f(0) = 0` together
/// with `f((k+1)/2^l) = f(k/2^l) + f(1/2^l)` at every level `l`, which is
/// what is checked, level by level.
pub fn check_scalar_function<F>(f: F, depth: u32) -> Result<ScalarClass>
where
    F: Fn(&Rational) -> Result<Rational>,
{
    if !(3..=20).contains(&depth) {
        return Err(OptError::ShapeMismatch(format!("grid depth {depth} outside 3..=20")));
    }
    let size: u64 = 1 << depth;
    let point = |i: u64| ratio(i as i64, size as i64);
    let mut values = Vec::with_capacity(size as usize + 1);
    for i in 0..=size {
        let x = point(i);
        let y = f(&x)?;
        if !in_unit_interval(&y) {
            return Err(OptError::NonProbabilityOutput(format!(
                "f({}) = {}",
                format_rational(&x),
                format_rational(&y)
            )));
        }
        values.push(y);
    }
    let v = |i: u64| &values[i as usize];
    for i in (0..=size).rev() {
        let step = if i == 0 { 1 } else { size >> i.trailing_zeros().min(depth) };
        let mut j = 0;
        while j <= i {
            if *v(i * j / size) != v(i) * v(j) {
                return Ok(ScalarClass::ViolatesMultiplicativity { a: point(i), b: point(j) });
            }
            j += step;
        }
    }
    if !v(0).is_zero() {
        return Ok(ScalarClass::ViolatesAdditivity { a: point(0), b: point(0) });
    }
    for level in 1..=depth {
        let stride = size >> level;
        for k in 1..(1u64 << level) {
            let (a, d) = (k * stride, stride);
            if *v(a + d) != v(a) + v(d) {
                return Ok(ScalarClass::ViolatesAdditivity { a: point(a), b: point(d) });
            }
        }
    }
    if values.iter().all(Zero::is_zero) {
        return Ok(ScalarClass::Zero);
    }
    if (0..=size).all(|i| *v(i) == point(i)) {
        return Ok(ScalarClass::Identity);
    }
    // f(1) is idempotent and additivity forces f(x) = f(1) x on the grid.
    Err(OptError::AxiomPrereqFailed(format!(
        "additive and multiplicative on the grid with f(1) = {}",
        format_rational(v(size))
    )))
}

/// `p ↦ ξ([p, 1-p])_1`, the model's action on probabilities.
pub fn scalar_action(m: &OntModel) -> impl Fn(&Rational) -> Result<Rational> + '_ {
    move |p: &Rational| {
        let t = probability_test(m.source(), p)?;
        let img = m.map_test(&t)?;
        if img.output().size() != 1 || img.input().size() != 1 {
            return Err(OptError::ShapeMismatch("scalar image is not a scalar".into()));
        }
        Ok(img.event(0).matrix.get(0, 0).clone())
    }
}
