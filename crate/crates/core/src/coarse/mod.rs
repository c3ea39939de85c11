//! Partitions of outcome sets and the coarse-graining map.

use std::fmt;

use crate::calculus::{compose_par, compose_seq, Context, Event, Outcome, OutcomeSet, Test};
use crate::error::{OptError, Result};
use crate::matrix::Matrix;

/// A partition of an outcome set into labeled blocks.
///
/// Blocks hold indices into the base, sorted, and are ordered by their least
/// member. A singleton block is labeled by its member; larger blocks by the
/// brace-joined member labels unless explicit labels are supplied.
#[derive(Clone, PartialEq, Eq)]
pub struct Partition {
    base: OutcomeSet,
    blocks: Vec<Vec<usize>>,
    labels: OutcomeSet,
}

impl Partition {
    pub fn new(base: OutcomeSet, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let blocks = Self::canonical_blocks(&base, blocks)?;
        let labels = OutcomeSet::new(
            blocks
                .iter()
                .map(|b| {
                    if b.len() == 1 {
                        base.labels()[b[0]].clone()
                    } else {
                        Outcome::Block(b.iter().map(|&i| base.labels()[i].clone()).collect())
                    }
                })
                .collect(),
        )?;
        Ok(Self { base, blocks, labels })
    }

    /// Blocks with caller-chosen labels, given in the caller's block order
    /// and reordered with the blocks.
    pub fn with_labels(base: OutcomeSet, blocks: Vec<(Vec<usize>, Outcome)>) -> Result<Self> {
        let mut blocks: Vec<(Vec<usize>, Outcome)> = blocks
            .into_iter()
            .map(|(mut b, l)| {
                b.sort_unstable();
                (b, l)
            })
            .collect();
        blocks.sort_by_key(|(b, _)| b.first().copied());
        let (blocks, labels): (Vec<_>, Vec<_>) = blocks.into_iter().unzip();
        let blocks = Self::canonical_blocks(&base, blocks)?;
        let labels = OutcomeSet::new(labels)?;
        Ok(Self { base, blocks, labels })
    }

    fn canonical_blocks(base: &OutcomeSet, mut blocks: Vec<Vec<usize>>) -> Result<Vec<Vec<usize>>> {
        let mut seen = vec![false; base.len()];
        for b in &mut blocks {
            if b.is_empty() {
                return Err(OptError::PartitionMismatch("empty block".into()));
            }
            b.sort_unstable();
            for &i in b.iter() {
                if i >= base.len() {
                    return Err(OptError::PartitionMismatch(format!("index {i} outside the base")));
                }
                if seen[i] {
                    return Err(OptError::PartitionMismatch(format!(
                        "outcome {} appears twice",
                        base.labels()[i]
                    )));
                }
                seen[i] = true;
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(OptError::PartitionMismatch(format!(
                "outcome {} is not covered",
                base.labels()[i]
            )));
        }
        blocks.sort_by_key(|b| b[0]);
        Ok(blocks)
    }

    /// Partition given by lists of outcome labels (as displayed).
    pub fn from_labels<S: AsRef<str>>(base: OutcomeSet, blocks: &[Vec<S>]) -> Result<Self> {
        let idx = blocks
            .iter()
            .map(|b| {
                b.iter()
                    .map(|l| {
                        base.position_str(l.as_ref())
                            .ok_or_else(|| OptError::PartitionMismatch(format!("unknown outcome {}", l.as_ref())))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(base, idx)
    }

    pub fn singletons(base: OutcomeSet) -> Self {
        let blocks = (0..base.len()).map(|i| vec![i]).collect();
        Self::new(base, blocks).expect("singletons partition any base")
    }

    /// The one-block partition.
    pub fn full(base: OutcomeSet) -> Self {
        let blocks = vec![(0..base.len()).collect()];
        Self::new(base, blocks).expect("one block partitions any base")
    }

    /// `{{index}, rest}`.
    pub fn binary(base: OutcomeSet, index: usize) -> Result<Self> {
        if base.len() < 2 {
            return Err(OptError::TooFewOutcomes);
        }
        if index >= base.len() {
            return Err(OptError::PartitionMismatch(format!("index {index} outside the base")));
        }
        let rest = (0..base.len()).filter(|&i| i != index).collect();
        Self::new(base, vec![vec![index], rest])
    }

    pub fn base(&self) -> &OutcomeSet {
        &self.base
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn labels(&self) -> &OutcomeSet {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn is_singletons(&self) -> bool {
        self.blocks.len() == self.base.len()
    }

    /// Block containing base index `i`.
    pub fn block_of(&self, i: usize) -> usize {
        self.blocks
            .iter()
            .position(|b| b.contains(&i))
            .expect("partition covers the base")
    }

    /// Member labels of every block, as displayed.
    pub fn label_lists(&self) -> Vec<Vec<String>> {
        self.blocks
            .iter()
            .map(|b| b.iter().map(|&i| self.base.labels()[i].to_string()).collect())
            .collect()
    }
}

impl fmt::Debug for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.label_lists()).finish()
    }
}

/// How the events of a block are merged into one event (`⋎`).
pub trait MergeRule: Sync {
    fn merge(&self, events: &[&Event]) -> Result<Event>;
}

/// Matrix sum with formally merged context tags.
#[derive(Clone, Copy, Debug, Default)]
pub struct SumRule;

impl MergeRule for SumRule {
    fn merge(&self, events: &[&Event]) -> Result<Event> {
        merge_events(events)
    }
}

/// `⋎` of a nonempty family of events with common systems.
pub fn merge_events(events: &[&Event]) -> Result<Event> {
    let first = events
        .first()
        .ok_or_else(|| OptError::PartitionMismatch("empty block".into()))?;
    if events.len() == 1 {
        return Ok((*first).clone());
    }
    for e in events {
        if e.input != first.input || e.output != first.output {
            return Err(OptError::SystemMismatch {
                expected: format!("{}->{}", first.input, first.output),
                found: format!("{}->{}", e.input, e.output),
            });
        }
    }
    let ids: Vec<&str> = events.iter().map(|e| e.id.as_str()).collect();
    Ok(Event {
        id: ids.join("⋎"),
        input: first.input.clone(),
        output: first.output.clone(),
        matrix: Matrix::sum(events.iter().map(|e| &e.matrix))?,
        context: Context::merge_opt(events.iter().map(|e| e.context.as_ref())),
    })
}

/// `𝔠_K(T)`.
pub fn coarse_grain(test: &Test, part: &Partition) -> Result<Test> {
    coarse_grain_with(&SumRule, test, part)
}

pub fn coarse_grain_with(rule: &dyn MergeRule, test: &Test, part: &Partition) -> Result<Test> {
    if part.base() != test.outcomes() {
        return Err(OptError::PartitionMismatch(format!(
            "partition base {:?} differs from the outcomes {:?} of `{}`",
            part.base(),
            test.outcomes(),
            test.id
        )));
    }
    let events = part
        .blocks()
        .iter()
        .map(|b| {
            let members: Vec<&Event> = b.iter().map(|&i| test.event(i)).collect();
            rule.merge(&members)
        })
        .collect::<Result<Vec<_>>>()?;
    Test::new(
        test.id.clone(),
        test.input().clone(),
        test.output().clone(),
        part.labels().clone(),
        events,
    )
}

/// Full coarse-graining: the singleton of the merged family.
pub fn full_coarse_grain(test: &Test) -> Result<Test> {
    coarse_grain(test, &Partition::full(test.outcomes().clone()))
}

/// Product partition `KL(X×Y)`; the block `(k,l)` is labeled by the pair of
/// block labels.
pub fn induced_partition(pk: &Partition, pl: &Partition) -> Result<Partition> {
    let base = pk.base().product(pl.base())?;
    let ny = pl.base().len();
    let mut blocks = Vec::with_capacity(pk.len() * pl.len());
    for (bk, lk) in pk.blocks().iter().zip(pk.labels().labels()) {
        for (bl, ll) in pl.blocks().iter().zip(pl.labels().labels()) {
            let members = bk.iter().flat_map(|&x| bl.iter().map(move |&y| x * ny + y)).collect();
            blocks.push((members, Outcome::pair(lk, ll)));
        }
    }
    Partition::with_labels(base, blocks)
}

/// `𝔅(T) = [t_1, t_2 ⋎ … ⋎ t_m]`.
pub fn binary_cg(test: &Test) -> Result<Test> {
    binary_cg_at(test, 0)
}

/// `[t_i, ⋎ of the others]`, blocks in canonical order.
pub fn binary_cg_at(test: &Test, index: usize) -> Result<Test> {
    let part = Partition::binary(test.outcomes().clone(), index)?;
    coarse_grain(test, &part)
}

/// Checks `𝔠_{KL}(B∘A) = 𝔠_L(B)∘𝔠_K(A)` and `𝔠_{KL}(A⊠B) = 𝔠_K(A)⊠𝔠_L(B)`.
pub fn cg_compat_check(a: &Test, b: &Test, pk: &Partition, pl: &Partition) -> Result<bool> {
    cg_compat_check_with(&SumRule, a, b, pk, pl)
}

pub fn cg_compat_check_with(
    rule: &dyn MergeRule,
    a: &Test,
    b: &Test,
    pk: &Partition,
    pl: &Partition,
) -> Result<bool> {
    let kl = induced_partition(pk, pl)?;
    let ca = coarse_grain_with(rule, a, pk)?;
    let cb = coarse_grain_with(rule, b, pl)?;
    let seq_lhs = coarse_grain_with(rule, &compose_seq(a, b)?, &kl)?;
    let seq_rhs = compose_seq(&ca, &cb)?;
    if seq_lhs != seq_rhs {
        return Ok(false);
    }
    let par_lhs = coarse_grain_with(rule, &compose_par(a, b)?, &kl)?;
    let par_rhs = compose_par(&ca, &cb)?;
    Ok(par_lhs == par_rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::{Theory, TheoryKind};
    use crate::calculus::{identity_test, SystemRef};
    use crate::random::{random_partition, random_test, trial_rng};
    use crate::rational::ratio;

    fn prob_test(th: &Theory, ps: &[(i64, i64)]) -> Test {
        let i = SystemRef::trivial(th.id());
        let events = ps
            .iter()
            .enumerate()
            .map(|(k, &(p, q))| Event::new(format!("p{k}"), i.clone(), i.clone(), Matrix::scalar(ratio(p, q))))
            .collect();
        Test::new("P", i.clone(), i, OutcomeSet::numbered(ps.len()), events).unwrap()
    }

    #[test]
    fn partition_validation() {
        let base = OutcomeSet::numbered(3);
        assert!(Partition::new(base.clone(), vec![vec![0, 1]]).is_err());
        assert!(Partition::new(base.clone(), vec![vec![0, 1], vec![1, 2]]).is_err());
        assert!(Partition::new(base.clone(), vec![vec![0, 1, 2], vec![]]).is_err());
        let p = Partition::new(base, vec![vec![2, 0], vec![1]]).unwrap();
        assert_eq!(p.blocks(), &[vec![0, 2], vec![1]]);
        assert_eq!(p.labels().labels()[0].to_string(), "{1,3}");
        assert_eq!(p.labels().labels()[1].to_string(), "2");
    }

    #[test]
    fn sums_probabilities() {
        let th = Theory::new(TheoryKind::Classical);
        let t = prob_test(&th, &[(1, 4), (1, 4), (1, 2)]);
        let p = Partition::from_labels(t.outcomes().clone(), &[vec!["1", "2"], vec!["3"]]).unwrap();
        let c = coarse_grain(&t, &p).unwrap();
        let got: Vec<_> = c.matrices().map(|m| m.get(0, 0).clone()).collect();
        assert_eq!(got, vec![ratio(1, 2), ratio(1, 2)]);
        let b = binary_cg(&prob_test(&th, &[(1, 6), (1, 3), (1, 2)])).unwrap();
        let got: Vec<_> = b.matrices().map(|m| m.get(0, 0).clone()).collect();
        assert_eq!(got, vec![ratio(1, 6), ratio(5, 6)]);
    }

    #[test]
    fn singletons_and_binary_identities() {
        let mut th = Theory::new(TheoryKind::Classical);
        let a = th.add_system("A", 2).unwrap();
        let t = random_test(&mut trial_rng(1, 0), "T", &a, &a, 2, 16);
        assert_eq!(coarse_grain(&t, &Partition::singletons(t.outcomes().clone())).unwrap(), t);
        assert_eq!(binary_cg(&t).unwrap(), t);
        let s = Test::singleton(t.event(0).clone()).unwrap();
        assert_eq!(binary_cg(&s), Err(OptError::TooFewOutcomes));
    }

    #[test]
    fn induced_partition_blocks() {
        let k = Partition::full(OutcomeSet::numbered(2));
        let l = Partition::singletons(OutcomeSet::from_atoms(&["a", "b"]).unwrap());
        let kl = induced_partition(&k, &l).unwrap();
        assert_eq!(
            kl.label_lists(),
            vec![vec!["(1,a)", "(2,a)"], vec!["(1,b)", "(2,b)"]]
        );
    }

    #[test]
    fn merged_event_is_independent_of_enclosing_partition() {
        let mut th = Theory::new(TheoryKind::Classical);
        let a = th.add_system("A", 2).unwrap();
        let t = random_test(&mut trial_rng(2, 0), "T", &a, &a, 4, 16);
        let p1 = Partition::new(t.outcomes().clone(), vec![vec![0, 2], vec![1], vec![3]]).unwrap();
        let p2 = Partition::new(t.outcomes().clone(), vec![vec![0, 2], vec![1, 3]]).unwrap();
        assert_eq!(coarse_grain(&t, &p1).unwrap().event(0), coarse_grain(&t, &p2).unwrap().event(0));
    }

    #[test]
    fn compatibility_with_composition() {
        let mut th = Theory::new(TheoryKind::Classical);
        let a = th.add_system("A", 2).unwrap();
        let b = th.add_system("B", 3).unwrap();
        let id = identity_test(&a);
        let s = Partition::singletons(OutcomeSet::star());
        assert!(cg_compat_check(&id, &id, &s, &s).unwrap());
        for trial in 0..30 {
            let mut rng = trial_rng(5, trial);
            let t1 = random_test(&mut rng, "T1", &a, &b, 3, 16);
            let t2 = random_test(&mut rng, "T2", &b, &a, 2, 16);
            let pk = random_partition(&mut rng, t1.outcomes());
            let pl = random_partition(&mut rng, t2.outcomes());
            assert!(cg_compat_check(&t1, &t2, &pk, &pl).unwrap());
        }
    }

    struct SquaringRule;

    impl MergeRule for SquaringRule {
        fn merge(&self, events: &[&Event]) -> Result<Event> {
            let mut e = merge_events(events)?;
            if events.len() > 1 {
                e.matrix = e.matrix.mul(&e.matrix.transpose())?;
            }
            Ok(e)
        }
    }

    #[test]
    fn non_additive_rule_breaks_compatibility() {
        let mut th = Theory::new(TheoryKind::Classical);
        let a = th.add_system("A", 2).unwrap();
        let mut failures = 0;
        for trial in 0..20 {
            let mut rng = trial_rng(6, trial);
            let t1 = random_test(&mut rng, "T1", &a, &a, 2, 16);
            let t2 = random_test(&mut rng, "T2", &a, &a, 2, 16);
            let full1 = Partition::full(t1.outcomes().clone());
            let full2 = Partition::full(t2.outcomes().clone());
            if !cg_compat_check_with(&SquaringRule, &t1, &t2, &full1, &full2).unwrap() {
                failures += 1;
            }
        }
        assert!(failures > 0);
    }
}
