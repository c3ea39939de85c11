use std::collections::BTreeMap;
use std::sync::Arc;

use super::NcCertificate;
use crate::backend::{GptFragment, Theory};
use crate::calculus::Test;
use crate::error::{OptError, Result};
use crate::matrix::Matrix;
use crate::ontmodel::{BaseRule, OntModel, TestMap};

/// The model of a quotiented classical theory given by a certificate for
/// its prepare-measure fragment on `system`.
///
/// States of `system` map to columns of the state table, effects to rows
/// of the effect table and scalars to themselves. Other tests are
/// unmapped.
pub fn lift_to_theory_model(
    cert: &NcCertificate,
    fragment: &GptFragment,
    theory: &Theory,
    system: &str,
) -> Result<OntModel> {
    if !theory.is_quotiented() {
        return Err(OptError::FragmentMismatch("the theory is not quotiented".into()));
    }
    let sys = theory.system(system)?;
    if sys.size() != fragment.dim() {
        return Err(OptError::FragmentMismatch(format!(
            "{system} has size {}, the fragment dimension {}",
            sys.size(),
            fragment.dim()
        )));
    }
    let lam = cert.ontic_size;
    if cert.state_table.shape() != (fragment.states().len(), lam)
        || cert.effect_table.shape() != (fragment.effects().len(), lam)
    {
        return Err(OptError::FragmentMismatch("tables do not fit the fragment".into()));
    }
    let mut sizes: BTreeMap<String, usize> = theory.atoms().iter().map(|a| (a.label.clone(), a.size)).collect();
    sizes.insert(sys.label(), lam);

    let frag = fragment.clone();
    let mu = cert.state_table.clone();
    let xi = cert.effect_table.clone();
    let map: TestMap = Arc::new(move |t: &Test| {
        let (input, output) = (t.input(), t.output());
        if input.is_trivial() && output.is_trivial() {
            return Ok(t.matrices().cloned().collect());
        }
        if input.is_trivial() && *output == sys {
            return t
                .events()
                .iter()
                .map(|e| {
                    let i = frag
                        .states()
                        .iter()
                        .position(|s| s.as_slice() == e.matrix.entries())
                        .ok_or_else(|| OptError::FragmentMismatch(format!("state `{}` is not in the fragment", e.id)))?;
                    Ok(Matrix::column(mu.row_vec(i)))
                })
                .collect();
        }
        if *input == sys && output.is_trivial() {
            return t
                .events()
                .iter()
                .map(|e| {
                    if let Some(j) = frag.effects().iter().position(|f| f.as_slice() == e.matrix.entries()) {
                        Ok(Matrix::row(xi.row_vec(j)))
                    } else if frag.unit_effect() == e.matrix.entries() {
                        Ok(Matrix::ones_row(lam))
                    } else {
                        Err(OptError::FragmentMismatch(format!("effect `{}` is not in the fragment", e.id)))
                    }
                })
                .collect();
        }
        Err(OptError::Unmapped(t.id.clone()))
    });
    OntModel::new(theory, &sizes, BaseRule::Custom(map))
}
