#![allow(dead_code)]

use std::collections::BTreeMap;
use std::sync::Arc;

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use optkit::backend::GptFragment;
use optkit::ontmodel::{BaseRule, OntModel, TestMap};
use optkit::random::{random_tagged_test, trial_rng, DEFAULT_DENOMINATOR};
use optkit::rational::{int, ratio, to_f64};
use optkit::{Event, Rational, Test, Theory, TheoryKind};
use rand::Rng;

pub fn fixture(name: &str) -> String {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// A tagged copy of `t` with fresh event ids and tags.
pub fn retag(t: &Test, id: &str, prefix: &str) -> Test {
    let events = t
        .events()
        .iter()
        .enumerate()
        .map(|(k, e)| {
            Event::new(format!("{id}.{}", k + 1), e.input.clone(), e.output.clone(), e.matrix.clone())
                .tagged(format!("{prefix}{}", k + 1))
        })
        .collect();
    Test::new(id, t.input().clone(), t.output().clone(), t.outcomes().clone(), events).unwrap()
}

/// A random labeled theory on systems `A` and `B`: a state, an effect
/// family, tests `A -> B`, `B -> A`, `A -> A`, and a retagged copy of the
/// first so some classes have two members.
pub fn labeled_instance(seed: u64, trial: u64) -> Theory {
    let mut rng = trial_rng(seed, trial);
    let mut th = Theory::new(TheoryKind::LabeledClassical);
    let a = th.add_system("A", rng.gen_range(2..=3)).unwrap();
    let b = th.add_system("B", rng.gen_range(1..=3)).unwrap();
    let i = th.trivial();
    let den = DEFAULT_DENOMINATOR;
    let mut n = || rng.gen_range(2..=3);
    let (n1, n2, n3, n4) = (n(), n(), n(), n());
    let mut rng = trial_rng(seed, trial ^ (1 << 40));
    let t1 = random_tagged_test(&mut rng, "T1", &a, &b, n1, den, "a");
    let t2 = random_tagged_test(&mut rng, "T2", &b, &a, n2, den, "b");
    let t3 = random_tagged_test(&mut rng, "T3", &a, &a, n3, den, "d");
    let p = random_tagged_test(&mut rng, "P", &i, &a, 1, den, "p");
    let m = random_tagged_test(&mut rng, "M", &a, &i, n4, den, "m");
    let copy = retag(&t1, "T1c", "c");
    for t in [t1, copy, t2, t3, p, m] {
        th.register_test(t).unwrap();
    }
    th
}

pub fn sizes(th: &Theory) -> BTreeMap<String, usize> {
    th.atoms().iter().map(|a| (a.label.clone(), a.size)).collect()
}

/// A random permutation of every system of `th`.
pub fn random_permutations<R: Rng>(th: &Theory, rng: &mut R) -> BTreeMap<String, Vec<usize>> {
    use rand::seq::SliceRandom;
    th.atoms()
        .iter()
        .map(|a| {
            let mut p: Vec<usize> = (0..a.size).collect();
            p.shuffle(rng);
            (a.label.clone(), p)
        })
        .collect()
}

/// Adds `1/64` to the top-left entry of every image.
pub fn affine_model(th: &Theory) -> OntModel {
    let shift: TestMap = Arc::new(|t: &Test| {
        Ok(t.matrices()
            .map(|m| {
                let mut m = m.clone();
                let v = m.get(0, 0) + ratio(1, 64);
                m.set(0, 0, v);
                m
            })
            .collect())
    });
    OntModel::new(th, &sizes(th), BaseRule::Custom(shift)).unwrap()
}

/// Unit vectors and the uniform-weight effect of the `n`-simplex.
pub fn simplex(n: usize) -> GptFragment {
    GptFragment::simplex(n).unwrap()
}

/// The square bit in the representation `(1, x, y)`: states at
/// `(±1, ±1)`, effects `(1 ± x)/2`, `(1 ± y)/2`. It has no simplex
/// embedding.
pub fn square() -> GptFragment {
    let v = |xs: [Rational; 3]| xs.to_vec();
    let h = ratio(1, 2);
    let states = vec![
        v([int(1), int(1), int(1)]),
        v([int(1), int(1), int(-1)]),
        v([int(1), int(-1), int(1)]),
        v([int(1), int(-1), int(-1)]),
    ];
    let effects = vec![
        v([h.clone(), h.clone(), int(0)]),
        v([h.clone(), -h.clone(), int(0)]),
        v([h.clone(), int(0), h.clone()]),
        v([h.clone(), int(0), -h]),
    ];
    GptFragment::new(3, states, effects, vec![int(1), int(0), int(0)]).unwrap()
}

type V3 = [f64; 3];

fn cross(a: V3, b: V3) -> V3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn dot(a: V3, b: V3) -> f64 {
    a.iter().zip(&b).map(|(x, y)| x * y).sum()
}

fn v3(v: &[Rational]) -> V3 {
    [to_f64(&v[0]), to_f64(&v[1]), to_f64(&v[2])]
}

/// Extreme rays of the dual of the cone generated by `gens` in three
/// dimensions: facet normals, found as cross products of generator pairs
/// that are nonnegative on every generator.
fn dual_rays(gens: &[V3]) -> Vec<V3> {
    let mut rays: Vec<V3> = Vec::new();
    for (i, &a) in gens.iter().enumerate() {
        for &b in &gens[i + 1..] {
            let c = cross(a, b);
            if dot(c, c) < 1e-18 {
                continue;
            }
            for n in [c, [-c[0], -c[1], -c[2]]] {
                if gens.iter().all(|&g| dot(n, g) >= -1e-12) {
                    let len = dot(n, n).sqrt();
                    let n = [n[0] / len, n[1] / len, n[2] / len];
                    if !rays.iter().any(|r| (0..3).all(|k| (r[k] - n[k]).abs() < 1e-9)) {
                        rays.push(n);
                    }
                }
            }
        }
    }
    rays
}

/// True if the identity on R^3 is a nonnegative combination of `f gᵀ` with
/// `f` an extreme ray of the effect dual and `g` one of the state dual;
/// this holds iff a simplex embedding exists for some ontic size.
pub fn cone_factorization_exists(frag: &GptFragment) -> bool {
    assert_eq!(frag.dim(), 3);
    let states: Vec<V3> = frag.states().iter().map(|s| v3(s)).collect();
    let mut effects: Vec<V3> = frag.effects().iter().map(|e| v3(e)).collect();
    effects.push(v3(frag.unit_effect()));
    let (fs, gs) = (dual_rays(&effects), dual_rays(&states));
    let mut pr = Problem::new(OptimizationDirection::Minimize);
    let mut terms = Vec::new();
    for f in &fs {
        for g in &gs {
            terms.push((pr.add_var(0.0, (0.0, f64::INFINITY)), *f, *g));
        }
    }
    for i in 0..3 {
        for j in 0..3 {
            let expr: minilp::LinearExpr = terms.iter().map(|(v, f, g)| (*v, f[i] * g[j])).collect();
            pr.add_constraint(expr, ComparisonOp::Eq, if i == j { 1.0 } else { 0.0 });
        }
    }
    pr.solve().is_ok()
}
