//! Seeded generators for randomized checks.
//!
//! Every trial draws from `ChaCha8Rng` seeded with the run seed and with the
//! stream set to the trial index, so trial `i` is reproducible on its own
//! and independent of how trials are scheduled.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::calculus::{Event, OutcomeSet, SystemRef, Test};
use crate::coarse::Partition;
use crate::matrix::Matrix;
use crate::rational::{ratio, Rational};

/// Default denominator of synthesized entries.
pub const DEFAULT_DENOMINATOR: u32 = 16;

pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Splits `total` units into `parts` nonnegative integers uniformly over
/// compositions (stars and bars).
pub(crate) fn composition<R: Rng>(rng: &mut R, total: u32, parts: usize) -> Vec<u32> {
    if parts == 1 {
        return vec![total];
    }
    let slots = total as usize + parts - 1;
    let mut bars: Vec<usize> = rand::seq::index::sample(rng, slots, parts - 1).into_vec();
    bars.sort_unstable();
    let mut out = Vec::with_capacity(parts);
    let mut prev = 0usize;
    for (k, &b) in bars.iter().enumerate() {
        let start = if k == 0 { 0 } else { prev + 1 };
        out.push((b - start) as u32);
        prev = b;
    }
    let start = if bars.is_empty() { 0 } else { prev + 1 };
    out.push((slots - start) as u32);
    out
}

/// `n` matrices of shape `rows × cols` with entries `k/den` whose sum is
/// stochastic.
pub fn random_family<R: Rng>(rng: &mut R, rows: usize, cols: usize, n: usize, den: u32) -> Vec<Matrix> {
    let mut family = vec![Matrix::zeros(rows, cols); n];
    for c in 0..cols {
        let parts = composition(rng, den, rows * n);
        for (k, units) in parts.into_iter().enumerate() {
            let (which, r) = (k / rows, k % rows);
            family[which].set(r, c, ratio(units as i64, den as i64));
        }
    }
    family
}

pub fn random_stochastic<R: Rng>(rng: &mut R, rows: usize, cols: usize, den: u32) -> Matrix {
    random_family(rng, rows, cols, 1, den).pop().unwrap()
}

/// A substochastic matrix: one member of a random two-element family.
pub fn random_substochastic<R: Rng>(rng: &mut R, rows: usize, cols: usize, den: u32) -> Matrix {
    random_family(rng, rows, cols, 2, den).swap_remove(0)
}

/// A normalized state on `sys` with entries `k/den`.
pub fn random_state<R: Rng>(rng: &mut R, sys: &SystemRef, den: u32) -> Event {
    let m = random_stochastic(rng, sys.size(), 1, den);
    Event::new("s", SystemRef::trivial(sys.theory()), sys.clone(), m)
}

/// A classical test with `n` outcomes labeled `1..n` and events `{id}.{k}`.
pub fn random_test<R: Rng>(
    rng: &mut R,
    id: &str,
    input: &SystemRef,
    output: &SystemRef,
    n: usize,
    den: u32,
) -> Test {
    let events = random_family(rng, output.size(), input.size(), n, den)
        .into_iter()
        .enumerate()
        .map(|(k, m)| Event::new(format!("{id}.{}", k + 1), input.clone(), output.clone(), m))
        .collect();
    Test::new(id, input.clone(), output.clone(), OutcomeSet::numbered(n), events)
        .expect("consistent by construction")
}

/// Same as `random_test` with every event tagged `{tag_prefix}{k}`.
pub fn random_tagged_test<R: Rng>(
    rng: &mut R,
    id: &str,
    input: &SystemRef,
    output: &SystemRef,
    n: usize,
    den: u32,
    tag_prefix: &str,
) -> Test {
    let t = random_test(rng, id, input, output, n, den);
    let events = t
        .events()
        .iter()
        .enumerate()
        .map(|(k, e)| e.clone().tagged(format!("{tag_prefix}{}", k + 1)))
        .collect();
    Test::new(id, input.clone(), output.clone(), t.outcomes().clone(), events).expect("same shape")
}

/// A random set partition of `base` with between 1 and `|base|` blocks.
pub fn random_partition<R: Rng>(rng: &mut R, base: &OutcomeSet) -> Partition {
    let n = base.len();
    let k = rng.gen_range(1..=n);
    let mut assignment: Vec<usize> = (0..n).map(|i| if i < k { i } else { rng.gen_range(0..k) }).collect();
    assignment.shuffle(rng);
    let mut blocks: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, b) in assignment.into_iter().enumerate() {
        blocks[b].push(i);
    }
    Partition::new(base.clone(), blocks).expect("covers the base")
}

/// A random probability `k/den`.
pub fn random_probability<R: Rng>(rng: &mut R, den: u32) -> Rational {
    ratio(rng.gen_range(0..=den) as i64, den as i64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::{Theory, TheoryKind};
    use crate::Backend;

    #[test]
    fn families_are_valid_tests() {
        let mut th = Theory::new(TheoryKind::Classical);
        let a = th.add_system("A", 3).unwrap();
        let b = th.add_system("B", 2).unwrap();
        for trial in 0..50 {
            let mut rng = trial_rng(9, trial);
            let t = random_test(&mut rng, "T", &a, &b, 1 + trial as usize % 4, 16);
            assert!(th.revalidate(&t).is_ok());
        }
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let draw = |s, t| trial_rng(s, t).gen::<u64>();
        assert_eq!(draw(1, 5), draw(1, 5));
        assert_ne!(draw(1, 5), draw(1, 6));
        assert_ne!(draw(1, 5), draw(2, 5));
    }

    #[test]
    fn compositions_sum_to_total() {
        let mut rng = trial_rng(0, 0);
        for parts in 1..6 {
            let c = composition(&mut rng, 16, parts);
            assert_eq!(c.len(), parts);
            assert_eq!(c.iter().sum::<u32>(), 16);
        }
    }

    #[test]
    fn partitions_cover_the_base() {
        let base = OutcomeSet::numbered(5);
        for trial in 0..20 {
            let p = random_partition(&mut trial_rng(3, trial), &base);
            let mut all: Vec<usize> = p.blocks().iter().flatten().copied().collect();
            all.sort();
            assert_eq!(all, vec![0, 1, 2, 3, 4]);
        }
    }
}
