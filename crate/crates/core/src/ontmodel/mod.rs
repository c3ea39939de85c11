//! Ontological models: maps from a source theory into classical theory.

mod appendix;
mod checks;
mod factor;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

pub use appendix::{
    check_convex_linearity, check_scalar_function, convex_linearity_instance, scalar_action, ScalarClass,
};
pub use checks::{
    check_cg_preservation, check_cg_preservation_on, check_cond_preservation, check_cond_preservation_on,
    check_determinicity, check_determinicity_on, check_diagram_preservation, check_diagram_preservation_on,
    check_noncontextuality, check_noncontextuality_on, check_outcome_preservation, check_outcome_preservation_on,
    check_prob_preservation, check_prob_preservation_on, conditional_pair_spec, run_checks, CheckName,
};
pub use factor::{factor_through_quotient, pullback, verify_factorization};

use crate::backend::{Theory, TheoryKind};
use crate::calculus::{Atom, Event, OutcomeSet, SystemRef, Test};
use crate::error::{OptError, Result};
use crate::matrix::Matrix;
use crate::rational::one;

/// Event-payload map used by [`BaseRule::Custom`]: receives the source test
/// and returns one image matrix per event.
pub type TestMap = Arc<dyn Fn(&Test) -> Result<Vec<Matrix>> + Send + Sync>;

/// How a model maps tests that have no explicit image.
#[derive(Clone)]
pub enum BaseRule {
    /// Same matrices, tags dropped. Needs ontic sizes equal to system sizes.
    ForgetTags,
    /// Only explicitly listed tests are mapped.
    Undefined,
    /// Relabels the ontic points of each elementary system by a permutation
    /// (`perm[i]` is the image of point `i`).
    Permute(BTreeMap<String, Vec<usize>>),
    Custom(TestMap),
}

impl BaseRule {
    pub fn name(&self) -> &'static str {
        match self {
            BaseRule::ForgetTags => "forget-tags",
            BaseRule::Undefined => "undefined",
            BaseRule::Permute(_) => "permute",
            BaseRule::Custom(_) => "custom",
        }
    }
}

impl fmt::Debug for BaseRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BaseRule::Permute(p) => f.debug_tuple("Permute").field(p).finish(),
            other => f.write_str(other.name()),
        }
    }
}

/// An explicit image of one source test.
#[derive(Clone, Debug)]
pub struct Override {
    pub key: Test,
    /// Image labels; `None` reuses the labels of the test being mapped.
    pub outcomes: Option<OutcomeSet>,
    pub matrices: Vec<Matrix>,
}

/// A test-level ontological model.
///
/// Tests structurally equal to an override key (same systems and events,
/// outcome labels aside) map to the override image; all other tests go
/// through the base rule.
#[derive(Clone, Debug)]
pub struct OntModel {
    source: Theory,
    target: Theory,
    overrides: Vec<Override>,
    base: BaseRule,
}

impl OntModel {
    /// `system_map` gives the ontic size of every elementary source system.
    pub fn new(source: &Theory, system_map: &BTreeMap<String, usize>, base: BaseRule) -> Result<Self> {
        let mut target = Theory::new(TheoryKind::Classical);
        for a in source.atoms() {
            let size = *system_map
                .get(&a.label)
                .ok_or_else(|| OptError::UnknownSystem(a.label.clone()))?;
            target.add_system(a.label.clone(), size)?;
        }
        if let Some(extra) = system_map.keys().find(|k| !source.atoms().iter().any(|a| &a.label == *k)) {
            return Err(OptError::UnknownSystem(extra.clone()));
        }
        if let BaseRule::Permute(perms) = &base {
            for a in source.atoms() {
                if let Some(p) = perms.get(&a.label) {
                    let mut seen = vec![false; a.size];
                    if p.len() != a.size || p.iter().any(|&i| i >= a.size || std::mem::replace(&mut seen[i], true)) {
                        return Err(OptError::ShapeMismatch(format!("`{}` is not a permutation", a.label)));
                    }
                }
            }
        }
        Ok(Self {
            source: source.clone(),
            target,
            overrides: Vec::new(),
            base,
        })
    }

    /// The tag-forgetting model: every event maps to its own matrix.
    pub fn identity(source: &Theory) -> Self {
        let sizes = source.atoms().iter().map(|a| (a.label.clone(), a.size)).collect();
        Self::new(source, &sizes, BaseRule::ForgetTags).expect("sizes taken from the source")
    }

    pub fn permuted(source: &Theory, perms: BTreeMap<String, Vec<usize>>) -> Result<Self> {
        let sizes = source.atoms().iter().map(|a| (a.label.clone(), a.size)).collect();
        Self::new(source, &sizes, BaseRule::Permute(perms))
    }

    /// Same model into an existing ontic theory (sizes must agree).
    pub fn with_target(mut self, target: &Theory) -> Result<Self> {
        if target.atoms() != self.target.atoms() {
            return Err(OptError::TheoryMismatch);
        }
        self.target = target.clone();
        Ok(self)
    }

    pub fn with_override(mut self, key: &Test, matrices: Vec<Matrix>) -> Result<Self> {
        self.push_override(key, None, matrices)?;
        Ok(self)
    }

    pub fn with_labeled_override(mut self, key: &Test, outcomes: OutcomeSet, matrices: Vec<Matrix>) -> Result<Self> {
        self.push_override(key, Some(outcomes), matrices)?;
        Ok(self)
    }

    fn push_override(&mut self, key: &Test, outcomes: Option<OutcomeSet>, matrices: Vec<Matrix>) -> Result<()> {
        if key.theory() != self.source.id() {
            return Err(OptError::TheoryMismatch);
        }
        if let Some(o) = &outcomes {
            if o.len() != matrices.len() {
                return Err(OptError::ShapeMismatch(format!(
                    "{} labels for {} matrices",
                    o.len(),
                    matrices.len()
                )));
            }
        }
        if matrices.is_empty() {
            return Err(OptError::ShapeMismatch("empty image".into()));
        }
        self.overrides.retain(|o| !same_family(&o.key, key));
        self.overrides.push(Override {
            key: key.clone(),
            outcomes,
            matrices,
        });
        Ok(())
    }

    pub fn source(&self) -> &Theory {
        &self.source
    }

    pub fn target(&self) -> &Theory {
        &self.target
    }

    pub fn base(&self) -> &BaseRule {
        &self.base
    }

    pub fn overrides(&self) -> &[Override] {
        &self.overrides
    }

    /// Ontic size per elementary source system, in declaration order.
    pub fn system_map(&self) -> Vec<(String, usize)> {
        self.target.atoms().iter().map(|a| (a.label.clone(), a.size)).collect()
    }

    pub fn map_system(&self, sys: &SystemRef) -> Result<SystemRef> {
        if sys.theory() != self.source.id() {
            return Err(OptError::TheoryMismatch);
        }
        let components = sys
            .components()
            .iter()
            .map(|c| {
                self.target
                    .atoms()
                    .iter()
                    .find(|a| a.label == c.label)
                    .cloned()
                    .ok_or_else(|| OptError::UnknownSystem(c.label.clone()))
            })
            .collect::<Result<Vec<Atom>>>()?;
        Ok(SystemRef::from_components(self.target.id(), components))
    }

    fn find_override(&self, t: &Test) -> Option<&Override> {
        self.overrides.iter().find(|o| same_family(&o.key, t))
    }

    /// The image `ξ(T)` in the ontic theory.
    pub fn map_test(&self, t: &Test) -> Result<Test> {
        if t.theory() != self.source.id() {
            return Err(OptError::TheoryMismatch);
        }
        let (outcomes, matrices) = match self.find_override(t) {
            Some(o) => {
                let outcomes = match &o.outcomes {
                    Some(l) => l.clone(),
                    None if o.matrices.len() == t.len() => t.outcomes().clone(),
                    None => OutcomeSet::numbered(o.matrices.len()),
                };
                (outcomes, o.matrices.clone())
            }
            None => (t.outcomes().clone(), self.base_matrices(t)?),
        };
        let input = self.map_system(t.input())?;
        let output = self.map_system(t.output())?;
        let events = matrices
            .into_iter()
            .enumerate()
            .map(|(k, m)| {
                let id = t.events().get(k).map_or_else(|| format!("{}.{}", t.id, k + 1), |e| e.id.clone());
                Event::new(id, input.clone(), output.clone(), m)
            })
            .collect();
        Test::new(t.id.clone(), input, output, outcomes, events)
    }

    fn base_matrices(&self, t: &Test) -> Result<Vec<Matrix>> {
        match &self.base {
            BaseRule::ForgetTags => {
                for sys in [t.input(), t.output()] {
                    if self.map_system(sys)?.size() != sys.size() {
                        return Err(OptError::ShapeMismatch(format!(
                            "ontic size of {sys} differs from its size"
                        )));
                    }
                }
                Ok(t.matrices().cloned().collect())
            }
            BaseRule::Undefined => Err(OptError::Unmapped(t.id.clone())),
            BaseRule::Permute(perms) => {
                let p_in = permutation_matrix(t.input(), perms);
                let p_out = permutation_matrix(t.output(), perms);
                t.matrices()
                    .map(|m| p_out.mul(m)?.mul(&p_in.transpose()))
                    .collect()
            }
            BaseRule::Custom(f) => f(t),
        }
    }

    /// Image of event `index` of test `t`: `ξ(t_index | T)`.
    pub fn map_event_in(&self, t: &Test, index: usize) -> Result<Event> {
        let img = self.map_test(t)?;
        img.events()
            .get(index)
            .cloned()
            .ok_or_else(|| OptError::ShapeMismatch(format!("image of `{}` has no event {}", t.id, index + 1)))
    }
}

/// Same systems and the same events in order; labels are not compared.
fn same_family(a: &Test, b: &Test) -> bool {
    a.input() == b.input() && a.output() == b.output() && a.events() == b.events()
}

fn permutation_matrix(sys: &SystemRef, perms: &BTreeMap<String, Vec<usize>>) -> Matrix {
    sys.components().iter().fold(Matrix::scalar(one()), |acc, a| {
        let mut p = Matrix::zeros(a.size, a.size);
        for i in 0..a.size {
            let j = perms.get(&a.label).map_or(i, |perm| perm[i]);
            p.set(j, i, one());
        }
        acc.kron(&p)
    })
}
