use num_traits::{One, Zero};

use crate::error::{OptError, Result};
use crate::matrix::Matrix;
use crate::rational::{format_rational, in_unit_interval, Rational};

/// A finite prepare-measure fragment of a GPT: states and effects as exact
/// rational vectors in `R^d` plus the unit effect.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GptFragment {
    dim: usize,
    states: Vec<Vec<Rational>>,
    effects: Vec<Vec<Rational>>,
    unit_effect: Vec<Rational>,
    transformations: Vec<Matrix>,
    state_labels: Vec<String>,
    effect_labels: Vec<String>,
    locally_tomographic: bool,
    convex_closed: bool,
}

fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).fold(Rational::zero(), |acc, (x, y)| acc + x * y)
}

impl GptFragment {
    /// Builds and validates a fragment. Labels default to `s1..`, `e1..`.
    pub fn new(
        dim: usize,
        states: Vec<Vec<Rational>>,
        effects: Vec<Vec<Rational>>,
        unit_effect: Vec<Rational>,
    ) -> Result<Self> {
        let state_labels = (1..=states.len()).map(|i| format!("s{i}")).collect();
        let effect_labels = (1..=effects.len()).map(|i| format!("e{i}")).collect();
        let frag = Self {
            dim,
            states,
            effects,
            unit_effect,
            transformations: Vec::new(),
            state_labels,
            effect_labels,
            locally_tomographic: true,
            convex_closed: false,
        };
        frag.validate()?;
        Ok(frag)
    }

    pub fn with_labels(mut self, states: Vec<String>, effects: Vec<String>) -> Result<Self> {
        if states.len() != self.states.len() || effects.len() != self.effects.len() {
            return Err(OptError::InvalidFragment("label count differs from vector count".into()));
        }
        for labels in [&states, &effects] {
            for (i, l) in labels.iter().enumerate() {
                if labels[..i].contains(l) {
                    return Err(OptError::DuplicateLabel(l.clone()));
                }
            }
        }
        self.state_labels = states;
        self.effect_labels = effects;
        Ok(self)
    }

    pub fn with_transformations(mut self, transformations: Vec<Matrix>) -> Result<Self> {
        for t in &transformations {
            if t.cols() != self.dim {
                return Err(OptError::ShapeMismatch(format!(
                    "transformation has {} columns, fragment dimension is {}",
                    t.cols(),
                    self.dim
                )));
            }
        }
        self.transformations = transformations;
        Ok(self)
    }

    pub fn with_local_tomography(mut self, flag: bool) -> Self {
        self.locally_tomographic = flag;
        self
    }

    pub fn with_convex_closure(mut self, flag: bool) -> Self {
        self.convex_closed = flag;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(OptError::InvalidFragment("dimension 0".into()));
        }
        if self.states.is_empty() || self.effects.is_empty() {
            return Err(OptError::InvalidFragment("needs at least one state and one effect".into()));
        }
        let check_len = |v: &Vec<Rational>, what: &str| {
            if v.len() == self.dim {
                Ok(())
            } else {
                Err(OptError::ShapeMismatch(format!(
                    "{what} has length {}, expected {}",
                    v.len(),
                    self.dim
                )))
            }
        };
        check_len(&self.unit_effect, "unit effect")?;
        for (i, s) in self.states.iter().enumerate() {
            check_len(s, &format!("state {}", i + 1))?;
            let norm = dot(&self.unit_effect, s);
            if !in_unit_interval(&norm) {
                return Err(OptError::InvalidFragment(format!(
                    "state {} has norm {}",
                    i + 1,
                    format_rational(&norm)
                )));
            }
        }
        for (j, e) in self.effects.iter().enumerate() {
            check_len(e, &format!("effect {}", j + 1))?;
            for (i, s) in self.states.iter().enumerate() {
                let p = dot(e, s);
                if !in_unit_interval(&p) {
                    return Err(OptError::InvalidFragment(format!(
                        "effect {} on state {} gives {}",
                        j + 1,
                        i + 1,
                        format_rational(&p)
                    )));
                }
            }
        }
        let table = self.probability_table();
        let rows = table.to_rows();
        for i in 0..self.states.len() {
            for k in 0..i {
                if self.states[i] != self.states[k] && rows[i] == rows[k] {
                    return Err(OptError::InvalidFragment(format!(
                        "states {} and {} are not separated by the effects",
                        k + 1,
                        i + 1
                    )));
                }
            }
        }
        let cols = table.transpose().to_rows();
        for j in 0..self.effects.len() {
            for k in 0..j {
                if self.effects[j] != self.effects[k] && cols[j] == cols[k] {
                    return Err(OptError::InvalidFragment(format!(
                        "effects {} and {} are not separated by the states",
                        k + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn states(&self) -> &[Vec<Rational>] {
        &self.states
    }

    pub fn effects(&self) -> &[Vec<Rational>] {
        &self.effects
    }

    pub fn unit_effect(&self) -> &[Rational] {
        &self.unit_effect
    }

    pub fn transformations(&self) -> &[Matrix] {
        &self.transformations
    }

    pub fn state_labels(&self) -> &[String] {
        &self.state_labels
    }

    pub fn effect_labels(&self) -> &[String] {
        &self.effect_labels
    }

    pub fn is_locally_tomographic(&self) -> bool {
        self.locally_tomographic
    }

    pub fn is_convex_closed(&self) -> bool {
        self.convex_closed
    }

    /// Index of the unit effect among the listed effects, if present.
    pub fn unit_index(&self) -> Option<usize> {
        self.effects.iter().position(|e| *e == self.unit_effect)
    }

    pub fn includes_unit(&self) -> bool {
        self.unit_index().is_some()
    }

    /// `u · s` for every state.
    pub fn norms(&self) -> Vec<Rational> {
        self.states.iter().map(|s| dot(&self.unit_effect, s)).collect()
    }

    /// `P[i][j] = e_j · s_i`, states by effects.
    pub fn probability_table(&self) -> Matrix {
        let rows = self
            .states
            .iter()
            .map(|s| self.effects.iter().map(|e| dot(e, s)).collect())
            .collect();
        Matrix::from_rows(rows).expect("rectangular by construction")
    }

    /// The deterministic effect `u`.
    pub fn deterministic_effect(&self) -> Result<Vec<Rational>> {
        if self.unit_effect.iter().all(Zero::is_zero) {
            return Err(OptError::NotCausal);
        }
        Ok(self.unit_effect.clone())
    }

    /// Causality predicate for a family of transformations: the summed
    /// transformation preserves `u` on every listed state.
    pub fn validate_transformation_family(&self, family: &[Matrix]) -> Result<()> {
        if family.is_empty() {
            return Err(OptError::NotAnInstrument("empty family".into()));
        }
        for t in family {
            if t.shape() != (self.dim, self.dim) {
                return Err(OptError::ShapeMismatch(format!(
                    "transformation is {:?}, expected {:?}",
                    t.shape(),
                    (self.dim, self.dim)
                )));
            }
        }
        let total = Matrix::sum(family.iter())?;
        let u = Matrix::row(self.unit_effect.clone());
        for (i, s) in self.states.iter().enumerate() {
            let image = total.mul(&Matrix::column(s.clone()))?;
            let lhs = u.mul(&image)?;
            if *lhs.get(0, 0) != dot(&self.unit_effect, s) {
                return Err(OptError::NotAnInstrument(format!(
                    "summed family changes the norm of state {}",
                    self.state_labels[i]
                )));
            }
        }
        Ok(())
    }

    /// The simplex fragment on `n` vertices: basis states, coordinate
    /// effects and the all-ones unit.
    pub fn simplex(n: usize) -> Result<Self> {
        let basis = |i: usize| -> Vec<Rational> {
            (0..n)
                .map(|k| if k == i { Rational::one() } else { Rational::zero() })
                .collect()
        };
        let states = (0..n).map(basis).collect();
        let mut effects: Vec<Vec<Rational>> = (0..n).map(basis).collect();
        let unit = vec![Rational::one(); n];
        if n > 1 {
            effects.push(unit.clone());
        }
        Self::new(n, states, effects, unit)
    }
}
